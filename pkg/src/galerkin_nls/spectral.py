"""Discrete geometries as eigen-systems of a strictly positive auxiliary operator.

Every geometry carries an orthonormal eigenbasis ``h_m`` of ``L^2``, the
eigenvalues of the auxiliary operator ``S`` (used to define the dyadic
projectors) and of the dynamical operator ``A`` (the Laplacian, or a
fractional power of it), and a padded quadrature grid on which pointwise
products are evaluated.

Coefficient arrays may carry leading batch dimensions: the mode axis is
always the last one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre

PAD_FACTOR = 2


class GeometryKind(str, enum.Enum):
    TORUS1D = "torus1d"
    INTERVAL_DIRICHLET = "interval_dirichlet"
    INTERVAL_NEUMANN = "interval_neumann"
    SPHERE_ZONAL = "sphere_zonal"

    @property
    def dim(self) -> int:
        return 2 if self is GeometryKind.SPHERE_ZONAL else 1


def torus_wavenumbers(N: int) -> np.ndarray:
    """Wavenumbers in the order 0, 1, -1, 2, -2, ..."""
    i = np.arange(N)
    mag = (i + 1) // 2
    return np.where(i % 2 == 1, mag, -mag)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    kind: GeometryKind
    N: int
    beta: float
    eps_shift: float
    wavenumbers: np.ndarray
    lambda_lap: np.ndarray
    lambda_S: np.ndarray
    lambda_A: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    _synth_matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.kind.dim

    @property
    def n_grid(self) -> int:
        return self.nodes.size

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def max_level(self) -> int:
        """Largest dyadic level ``n`` with ``2**(n+1) <= max(lambda_S)``."""
        return int(np.floor(np.log2(self.lambda_S.max()))) - 1

    # -- transforms -------------------------------------------------------

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} coefficients, got {coeffs.shape[-1]}")
        coeffs = coeffs.astype(complex, copy=False)
        batch = coeffs.shape[:-1]
        ng = self.n_grid
        if self.kind is GeometryKind.TORUS1D:
            a = np.zeros(batch + (ng,), dtype=complex)
            a[..., self.wavenumbers % ng] = coeffs
            return sfft.ifft(a, axis=-1) * (ng / np.sqrt(2 * np.pi))
        if self.kind is GeometryKind.INTERVAL_NEUMANN:
            a = np.zeros(batch + (ng,), dtype=complex)
            a[..., : self.N] = coeffs * _neumann_norm(self.N)
            a[..., 1:] *= 0.5
            return sfft.dct(a, type=3, axis=-1)
        if self.kind is GeometryKind.INTERVAL_DIRICHLET:
            a = np.zeros(batch + (ng,), dtype=complex)
            a[..., : self.N] = coeffs * (0.5 * np.sqrt(2 / np.pi))
            return sfft.dst(a, type=3, axis=-1)
        return coeffs @ self._synth_matrix.T

    def analyze(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples)
        if samples.shape[-1] != self.n_grid:
            raise ValueError(f"expected {self.n_grid} grid samples, got {samples.shape[-1]}")
        samples = samples.astype(complex, copy=False)
        ng = self.n_grid
        if self.kind is GeometryKind.TORUS1D:
            a = sfft.fft(samples, axis=-1)
            return a[..., self.wavenumbers % ng] * (np.sqrt(2 * np.pi) / ng)
        if self.kind is GeometryKind.INTERVAL_NEUMANN:
            a = sfft.dct(samples, type=2, axis=-1)[..., : self.N]
            return a * (0.5 * np.pi / ng) * _neumann_norm(self.N)
        if self.kind is GeometryKind.INTERVAL_DIRICHLET:
            a = sfft.dst(samples, type=2, axis=-1)[..., : self.N]
            return a * (0.5 * np.pi / ng * np.sqrt(2 / np.pi))
        return (samples * self.weights) @ self._synth_matrix

    def eigenfunction(self, j: int) -> np.ndarray:
        """Samples of ``h_j`` on the grid, from closed forms."""
        x = self.nodes
        k = self.wavenumbers[j]
        if self.kind is GeometryKind.TORUS1D:
            return np.exp(1j * k * x) / np.sqrt(2 * np.pi)
        if self.kind is GeometryKind.INTERVAL_DIRICHLET:
            return np.sqrt(2 / np.pi) * np.sin(k * x) + 0j
        if self.kind is GeometryKind.INTERVAL_NEUMANN:
            c = 1 / np.sqrt(np.pi) if k == 0 else np.sqrt(2 / np.pi)
            return c * np.cos(k * x) + 0j
        return np.sqrt((2 * k + 1) / (4 * np.pi)) * eval_legendre(k, x) + 0j

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature of grid values over the last axis."""
        return np.asarray(values) @ self.weights


def _neumann_norm(N: int) -> np.ndarray:
    c = np.full(N, np.sqrt(2 / np.pi))
    c[0] = 1 / np.sqrt(np.pi)
    return c


def build_basis(
    kind: GeometryKind | str,
    N: int,
    beta: float = 1.0,
    eps_shift: float = 1.0,
) -> SpectralBasis:
    try:
        kind = GeometryKind(kind)
    except ValueError:
        raise ValueError(f"unknown geometry kind {kind!r}") from None
    N = int(N)
    if N < 2:
        raise ValueError(f"N={N} is too small to hold a dyadic block (need N >= 2)")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if eps_shift <= 0:
        raise ValueError("eps_shift must be positive")

    ng = PAD_FACTOR * N
    synth = None
    if kind is GeometryKind.TORUS1D:
        k = torus_wavenumbers(N)
        lap = k.astype(float) ** 2
        lam_S = 1.0 + lap
        nodes = 2 * np.pi * np.arange(ng) / ng
        weights = np.full(ng, 2 * np.pi / ng)
    elif kind is GeometryKind.INTERVAL_DIRICHLET:
        k = np.arange(1, N + 1)
        lap = k.astype(float) ** 2
        lam_S = lap.copy()
        nodes = np.pi * (np.arange(ng) + 0.5) / ng
        weights = np.full(ng, np.pi / ng)
    elif kind is GeometryKind.INTERVAL_NEUMANN:
        k = np.arange(N)
        lap = k.astype(float) ** 2
        lam_S = eps_shift + lap
        nodes = np.pi * (np.arange(ng) + 0.5) / ng
        weights = np.full(ng, np.pi / ng)
    else:
        k = np.arange(N)
        lap = (k * (k + 1)).astype(float)
        lam_S = 1.0 + lap
        x, w = leggauss(ng)
        nodes, weights = x, 2 * np.pi * w
        synth = eval_legendre(k[None, :], x[:, None]) * np.sqrt((2 * k + 1) / (4 * np.pi))

    lam_A = lap**beta
    for arr in (k, lap, lam_S, lam_A, nodes, weights):
        arr.setflags(write=False)
    if synth is not None:
        synth.setflags(write=False)
    return SpectralBasis(
        kind=kind,
        N=N,
        beta=float(beta),
        eps_shift=float(eps_shift),
        wavenumbers=k,
        lambda_lap=lap,
        lambda_S=lam_S,
        lambda_A=lam_A,
        nodes=nodes,
        weights=weights,
        _synth_matrix=synth,
    )


@dataclass(frozen=True, eq=False)
class Field:
    """A state given by its coefficients in the eigenbasis of ``basis``.

    ``coeffs`` has the mode axis last; extra leading axes describe a batch
    of fields (for example one per Monte-Carlo path).
    """

    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape[-1:] != (self.basis.N,):
            raise ValueError(f"expected {self.basis.N} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, basis: SpectralBasis, batch: tuple[int, ...] = ()) -> Field:
        return cls(basis, np.zeros(batch + (basis.N,), dtype=complex))

    @classmethod
    def mode(cls, basis: SpectralBasis, j: int, amplitude: complex = 1.0) -> Field:
        c = np.zeros(basis.N, dtype=complex)
        c[j] = amplitude
        return cls(basis, c)

    @classmethod
    def from_samples(cls, basis: SpectralBasis, samples: np.ndarray) -> Field:
        return cls(basis, basis.analyze(samples))

    @cached_property
    def samples(self) -> np.ndarray:
        return self.basis.synthesize(self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> Field:
        return Field(self.basis, coeffs)

    def __add__(self, other: Field) -> Field:
        return Field(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: Field) -> Field:
        return Field(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> Field:
        return Field(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return Field(self.basis, -self.coeffs)


def synthesize(f: Field) -> np.ndarray:
    return f.samples


def analyze(samples: np.ndarray, basis: SpectralBasis) -> Field:
    return Field.from_samples(basis, samples)


def inner(f: Field, g: Field) -> np.ndarray:
    """``<f, g>_H``, linear in the first slot."""
    return np.sum(f.coeffs * np.conj(g.coeffs), axis=-1)


def _eigenvalues(basis: SpectralBasis, which: str) -> np.ndarray:
    if which == "A":
        return basis.lambda_A
    if which == "S":
        return basis.lambda_S
    raise ValueError(f"operator must be 'A' or 'S', got {which!r}")


def apply_operator_power(f: Field, which: str, power: float) -> Field:
    lam = _eigenvalues(f.basis, which)
    if power < 0 and np.any(lam <= 0):
        raise ValueError(f"{which} has a zero eigenvalue; negative power {power} undefined")
    return f.with_coeffs(f.coeffs * lam**power)


def norm(f: Field, which: str = "H", p: float | None = None) -> np.ndarray:
    """Norm of ``f`` in ``H``, ``E_A``, ``E_A_dual`` or ``Lp`` (pass ``p``)."""
    c2 = np.abs(f.coeffs) ** 2
    if which == "H":
        return np.sqrt(c2.sum(axis=-1))
    if which == "E_A":
        return np.sqrt((c2 * (1.0 + f.basis.lambda_A)).sum(axis=-1))
    if which == "E_A_dual":
        return np.sqrt((c2 / (1.0 + f.basis.lambda_A)).sum(axis=-1))
    if which == "Lp":
        if p is None or p < 1:
            raise ValueError(f"Lp norm needs p >= 1, got {p}")
        return lp_norm(f.basis, f.samples, p)
    raise ValueError(f"unknown norm {which!r}")


def lp_norm(basis: SpectralBasis, samples: np.ndarray, p: float) -> np.ndarray:
    if p < 1:
        raise ValueError(f"Lp norm needs p >= 1, got {p}")
    a = np.abs(samples)
    if np.isinf(p):
        return a.max(axis=-1)
    return basis.integrate(a**p) ** (1.0 / p)

"""Multiplicative noise ``B_m u = e_m u``, the Wiener driver and the correction terms."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import eval_legendre

from .littlewood_paley import ProjectorKind, projector_weights
from .spectral import Field, GeometryKind, SpectralBasis, inner

PROFILES = ("basis", "cos", "legendre", "constant")


def _profile_values(basis: SpectralBasis, profile: str, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``phi_m`` and of ``|grad phi_m|^2`` on the grid."""
    x = basis.nodes
    if profile == "basis":
        profile = "legendre" if basis.kind is GeometryKind.SPHERE_ZONAL else "cos"
    if profile == "constant":
        return np.ones_like(x), np.zeros_like(x)
    if profile == "cos":
        if basis.kind is GeometryKind.SPHERE_ZONAL:
            raise ValueError("cos profile is not defined on sphere_zonal; use legendre")
        return np.cos(m * x), (m * np.sin(m * x)) ** 2
    if profile == "legendre":
        if basis.kind is not GeometryKind.SPHERE_ZONAL:
            raise ValueError("legendre profile requires sphere_zonal")
        p = eval_legendre(m, x)
        dp = m * (x * p - eval_legendre(m - 1, x)) / (x**2 - 1)
        return p, (1 - x**2) * dp**2
    raise ValueError(f"unknown noise profile {profile!r}; expected one of {PROFILES}")


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Real coefficient functions ``e_m = gamma m^{-s_dec} phi_m``, ``m = 1..M``."""

    basis: SpectralBasis
    M: int = 16
    gamma: float = 0.5
    s_dec: float = 2.0
    profile: str = "basis"
    e: np.ndarray = field(init=False, repr=False)
    grad_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        amp = self.amplitudes
        e = np.zeros((self.M, self.basis.n_grid))
        g = np.zeros_like(e)
        for i in range(self.M):
            phi, dphi = _profile_values(self.basis, self.profile, i + 1)
            e[i] = amp[i] * phi
            g[i] = amp[i] ** 2 * dphi
        e.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "grad_sq", g)

    @cached_property
    def amplitudes(self) -> np.ndarray:
        return self.gamma * np.arange(1, self.M + 1, dtype=float) ** (-self.s_dec)

    @property
    def is_zero(self) -> bool:
        return self.M == 0 or self.gamma == 0

    def h1_norms_sq(self) -> np.ndarray:
        """``||e_m||_{H^1}^2`` for ``m = 1..M``."""
        return self.basis.integrate(self.e**2 + self.grad_sq)

    def summability(self) -> np.ndarray:
        """Partial sums of ``||e_m||_{H^1}^2``; must settle as ``M`` grows."""
        return np.cumsum(self.h1_norms_sq())

    def lp_opnorm_sum(self) -> float:
        """``sum_m ||B_m||^2_{L(L^p)} = sum_m ||e_m||_inf^2`` (same for every ``p``)."""
        return float(np.sum(np.abs(self.e).max(axis=1) ** 2)) if self.M else 0.0

    def sup_norms(self) -> np.ndarray:
        return np.abs(self.e).max(axis=1) if self.M else np.zeros(0)

    def combined(self, dbeta: np.ndarray) -> np.ndarray:
        """Grid samples of ``sum_m dbeta_m e_m``; ``dbeta`` has shape ``(..., M)``."""
        return np.asarray(dbeta) @ self.e


def _multiply(f: Field, values: np.ndarray) -> Field:
    return f.with_coeffs(f.basis.analyze(values * f.samples))


def apply_Bm(f: Field, m: int, noise: NoiseModel) -> Field:
    if not 1 <= m <= noise.M:
        raise ValueError(f"mode m={m} outside 1..{noise.M}")
    return _multiply(f, noise.e[m - 1])


def apply_SBS(f: Field, m: int, n: int, noise: NoiseModel) -> Field:
    """``S_n B_m S_n f``."""
    w = projector_weights(f.basis, ProjectorKind.smooth(n))
    g = apply_Bm(f.with_coeffs(f.coeffs * w), m, noise)
    return g.with_coeffs(g.coeffs * w)


def _modes(noise: NoiseModel, modes) -> range | list:
    return range(1, noise.M + 1) if modes is None else list(modes)


def mu(f: Field, noise: NoiseModel, modes=None) -> Field:
    acc = np.zeros_like(f.coeffs)
    for m in _modes(noise, modes):
        acc += apply_Bm(apply_Bm(f, m, noise), m, noise).coeffs
    return f.with_coeffs(-0.5 * acc)


def mu_n(f: Field, n: int, noise: NoiseModel, modes=None) -> Field:
    acc = np.zeros_like(f.coeffs)
    for m in _modes(noise, modes):
        acc += apply_SBS(apply_SBS(f, m, n, noise), m, n, noise).coeffs
    return f.with_coeffs(-0.5 * acc)


def noise_drift_cancellation(f: Field, n: int, noise: NoiseModel, modes=None) -> np.ndarray:
    """``2 Re<f, mu_n f> + sum_m ||S_n B_m S_n f||^2``; zero by selfadjointness."""
    total = 2 * inner(f, mu_n(f, n, noise, modes)).real
    for m in _modes(noise, modes):
        total = total + np.sum(np.abs(apply_SBS(f, m, n, noise).coeffs) ** 2, axis=-1)
    return total


def _normals(raw: np.ndarray, M: int) -> np.ndarray:
    """Box-Muller on pairs of keyed 64-bit words; mode ``m`` only depends on its own pair."""
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    u1, u2 = u[..., 0::2], u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.stack([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)], axis=-1)
    return z.reshape(raw.shape[:-1] + (-1,))[..., :M]


@dataclass(frozen=True)
class WienerDriver:
    """Increments ``dbeta_m^{(j)} ~ N(0, dt)`` keyed by (seed, path, step, mode).

    Nothing is stateful: the same key always yields the same number, so
    runs at different Galerkin levels see identical noise.
    """

    seed: int
    path: int = 0
    dt: float = 1e-3

    def standard_normals(self, step: int, M: int) -> np.ndarray:
        return keyed_normals(self.seed, [self.path], step, M)[0]

    def increments(self, step: int, M: int) -> np.ndarray:
        return np.sqrt(self.dt) * self.standard_normals(step, M)


def keyed_normals(seed: int, paths, step: int, M: int) -> np.ndarray:
    """Standard normals of shape ``(len(paths), M)`` for one time step."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    n_raw = 2 * ((M + 1) // 2)
    raw = np.empty((len(paths), n_raw), dtype=np.uint64)
    for i, path in enumerate(paths):
        bg = np.random.Philox(key=int(seed) | (int(path) << 64), counter=[0, int(step), 0, 0])
        raw[i] = bg.random_raw(n_raw)
    return _normals(raw, M)

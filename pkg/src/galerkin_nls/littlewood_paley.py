"""Dyadic partition of unity and the two Galerkin projector families.

``sharp`` is the spectral cut-off ``1_{(0, 2^{n+1})}(S)``; ``smooth`` is the
Littlewood-Paley sum ``sum_{j<=n} rho_j(S)``, which telescopes to the single
multiplier ``psi(2^{-n} S)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Field, SpectralBasis, lp_norm


def _mollifier(s: np.ndarray) -> np.ndarray:
    pos = s > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, s, 1.0)), 0.0)


def _check_positive(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("argument must be strictly positive")
    return t


def psi(t):
    """Smooth step: 1 on (0, 1], 0 on [2, inf)."""
    t = _check_positive(t)
    a = _mollifier(2.0 - t)
    b = _mollifier(t - 1.0)
    out = a / (a + b)
    return out if out.ndim else float(out)


def rho_dot(t):
    """Dyadic bump ``psi(t) - psi(2t)``, supported in [1/2, 2]."""
    t = _check_positive(t)
    return psi(t) - psi(2.0 * t)


def rho_m(m: int, t):
    if m < 0:
        raise ValueError("m must be nonnegative")
    t = _check_positive(t)
    if m == 0:
        return psi(t)
    return rho_dot(t * 2.0**-m)


class DyadicPartition:
    """Stateless evaluator of ``psi``, ``rho_dot`` and the family ``rho_m``."""

    psi = staticmethod(psi)
    rho_dot = staticmethod(rho_dot)
    rho_m = staticmethod(rho_m)

    @staticmethod
    def partial_sum(M: int, t):
        """``sum_{m=0}^{M} rho_m(t)`` evaluated term by term."""
        t = _check_positive(t)
        return sum(rho_m(m, t) for m in range(M + 1))


class Kind(str, enum.Enum):
    SHARP = "sharp"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class ProjectorKind:
    kind: Kind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n < 0:
            raise ValueError(f"level n must be nonnegative, got {self.n}")

    @classmethod
    def sharp(cls, n: int) -> ProjectorKind:
        return cls(Kind.SHARP, n)

    @classmethod
    def smooth(cls, n: int) -> ProjectorKind:
        return cls(Kind.SMOOTH, n)


@lru_cache(maxsize=256)
def projector_weights(basis: SpectralBasis, proj: ProjectorKind) -> np.ndarray:
    lam = basis.lambda_S
    if proj.kind is Kind.SHARP:
        w = (lam < 2.0 ** (proj.n + 1)).astype(float)
    else:
        w = np.asarray(psi(lam * 2.0**-proj.n), dtype=float)
        # psi is exactly 0 from 2 on, but keep the cut bitwise
        w[lam >= 2.0 ** (proj.n + 1)] = 0.0
    w.setflags(write=False)
    return w


def band_mask(basis: SpectralBasis, n: int) -> np.ndarray:
    """Modes spanning ``H_n``."""
    return basis.lambda_S < 2.0 ** (n + 1)


def apply_projector(f: Field, proj: ProjectorKind) -> Field:
    return f.with_coeffs(f.coeffs * projector_weights(f.basis, proj))


def _phase_power(y: np.ndarray, e: float) -> np.ndarray:
    a = np.abs(y)
    return np.where(a > 0, np.where(a > 0, a, 1.0) ** (e - 2) * y, 0.0)


def _ratios(basis: SpectralBasis, c: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    num = lp_norm(basis, basis.synthesize(c * w), p)
    den = lp_norm(basis, basis.synthesize(c), p)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _power_refine(basis, c, w, p, n_iter):
    """Nonlinear power iteration for ``||T||_{p->p}`` restricted to the band.

    Alternates the duality maps of ``L^p`` and ``L^{p'}`` around the
    selfadjoint multiplier ``T``; every iterate is projected back onto the
    band so the returned ratios are genuine lower bounds.
    """
    q = p / (p - 1)
    best = _ratios(basis, c, w, p)
    for _ in range(n_iter):
        y = basis.synthesize(c * w)
        v = basis.synthesize(basis.analyze(_phase_power(y, p)) * w)
        c = basis.analyze(_phase_power(v, q))
        scale = np.abs(c).max(axis=-1, keepdims=True)
        c = c / np.where(scale > 0, scale, 1.0)
        best = np.maximum(best, _ratios(basis, c, w, p))
    return best


def _kernel_candidates(basis: SpectralBasis, centers: np.ndarray, scales) -> np.ndarray:
    """Band-limited bumps concentrated at grid nodes (tapered reproducing kernels)."""
    idx = np.eye(basis.n_grid)[centers]
    kern = basis.analyze(idx) / basis.weights[centers][:, None]
    rows = [kern * np.asarray(psi(basis.lambda_S / s)) for s in scales]
    return np.concatenate(rows, axis=0)


def opnorm_lower_bound(
    proj: ProjectorKind,
    p: float,
    basis: SpectralBasis,
    trials: int = 8,
    seed: int = 0,
    n_iter: int = 30,
) -> float:
    """Randomized lower bound on ``||proj||_{L^p -> L^p}`` over band-limited inputs."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    w = projector_weights(basis, proj)
    cut = 2.0 ** (proj.n + 1)

    decay = rng.uniform(0.0, 1.0, size=(trials, 1))
    starts = (rng.standard_normal((trials, basis.N)) + 1j * rng.standard_normal((trials, basis.N)))
    starts = starts * basis.lambda_S ** (-decay)

    stride = max(1, basis.n_grid // 32)
    centers = np.unique(np.r_[np.arange(0, basis.n_grid, stride), basis.n_grid - 1])
    kernels = _kernel_candidates(basis, centers, [cut / 2, cut, 2 * cut])
    best = _ratios(basis, kernels, w, p).max()

    # refine the extreme nodes (boundary/poles) and the random starts
    ends = _kernel_candidates(basis, np.array([0, basis.n_grid // 2, basis.n_grid - 1]), [cut])
    refined = _power_refine(basis, np.concatenate([starts, ends]), w, p, n_iter)
    return float(max(best, refined.max()))

"""Ensemble statistics: energy moments, grid-sampled Aldous modulus, interpolation ratios."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..physics import gn_exponents
from ..spectral import SpectralBasis, lp_norm


def sub_seed(master: int, purpose: str) -> int:
    """Stable 64-bit seed derived from ``master`` and a purpose string."""
    h = hashlib.sha256(f"{int(master)}:{purpose}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def jackknife(values: np.ndarray) -> tuple[float, float]:
    """Mean and leave-one-out jackknife standard error."""
    v = np.asarray(values, dtype=float)
    P = v.size
    if P < 2:
        raise ValueError("need at least 2 samples")
    loo = (v.sum() - v) / (P - 1)
    se = np.sqrt((P - 1) / P * np.sum((loo - loo.mean()) ** 2))
    return float(v.mean()), float(se)


@dataclass
class EnsembleSummary:
    times: np.ndarray
    mean_mass: np.ndarray
    mean_energy: np.ndarray
    mean_norm_EA: np.ndarray
    sup_EA: np.ndarray
    max_mass_drift: np.ndarray

    @classmethod
    def from_trajectories(cls, trajectories) -> EnsembleSummary:
        if not trajectories:
            raise ValueError("empty ensemble")
        stack = lambda name: np.stack([getattr(t, name) for t in trajectories])
        return cls(
            times=trajectories[0].times,
            mean_mass=stack("mass").mean(axis=0),
            mean_energy=stack("energy").mean(axis=0),
            mean_norm_EA=stack("norm_EA").mean(axis=0),
            sup_EA=stack("norm_EA").max(axis=1),
            max_mass_drift=np.array([t.max_mass_drift() for t in trajectories]),
        )


def moment_sup_EA(trajectories, q: float = 1.0) -> tuple[float, float]:
    """Monte-Carlo estimate of ``E[(sup_t ||u(t)||_{E_A})^{2q}]`` with jackknife error."""
    if len(trajectories) < 2:
        raise ValueError("moment estimate needs at least 2 trajectories")
    if q <= 0:
        raise ValueError("q must be positive")
    sup = np.array([np.max(t.norm_EA) for t in trajectories])
    return jackknife(sup ** (2 * q))


def aldous_statistic(trajectories, theta_list, eta: float) -> dict[float, float]:
    """Grid-sampled modulus: fraction of (path, tau) with ``||u(tau+theta) - u(tau)||_{E_A^*} >= eta``.

    ``tau`` runs over every recorded time, which is the exact average over
    a uniformly drawn grid time; ``tau + theta`` is rounded up to the grid
    and capped at ``T``.
    """
    if not trajectories:
        raise ValueError("empty ensemble")
    times = trajectories[0].times
    if any(t.times.shape != times.shape or np.any(t.times != times) for t in trajectories):
        raise ValueError("trajectories must share a time grid")
    T = times[-1]
    lam = trajectories[0].basis.lambda_A
    coeffs = np.stack([t.coeffs for t in trajectories])
    out = {}
    for theta in theta_list:
        if theta >= T:
            raise ValueError(f"theta={theta} must be smaller than T={T}")
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        target = np.searchsorted(times, times + theta - 1e-12 * max(T, 1.0), side="left")
        target = np.minimum(target, times.size - 1)
        diff = coeffs[:, target] - coeffs
        dist = np.sqrt(np.sum(np.abs(diff) ** 2 / (1 + lam), axis=-1))
        out[float(theta)] = float(np.mean(dist >= eta)) if theta > 0 else 0.0
    return out


def random_bandlimited(basis: SpectralBasis, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random coefficient vectors with random bandwidth and spectral slope.

    Half of the draws are generic (independent complex Gaussian modes); the
    other half are coherent bumps centred at a random grid node, whose
    modes share the phase of the reproducing kernel there and carry a
    random amount of multiplicative noise.
    """
    N = basis.N
    band = np.exp(rng.uniform(0.0, np.log(N), size=count)).astype(int)
    band = np.clip(band, 1, N)
    slope = rng.uniform(0.0, 1.5, size=(count, 1))
    g = rng.standard_normal((count, N)) + 1j * rng.standard_normal((count, N))
    coherent = rng.random(count) < 0.5
    node = rng.integers(0, basis.n_grid, size=count)
    level = rng.uniform(0.0, 1.0, size=(count, 1))
    kern = basis.analyze(np.eye(basis.n_grid)[node]) / basis.weights[node][:, None]
    bump = kern * (1.0 + level * g.real)
    c = np.where(coherent[:, None], bump, g) * basis.lambda_S ** (-slope)
    c[np.arange(N)[None, :] >= band[:, None]] = 0.0
    return c


def gn_ratios(basis: SpectralBasis, alpha: float, coeffs: np.ndarray) -> np.ndarray:
    b1, b2 = gn_exponents(basis, alpha)
    p = alpha + 1
    c2 = np.abs(coeffs) ** 2
    h = np.sqrt(c2.sum(axis=-1))
    ea = np.sqrt((c2 * (1 + basis.lambda_A)).sum(axis=-1))
    lp = lp_norm(basis, basis.synthesize(coeffs), p)
    return lp**p / (h**b1 * ea**b2)


def gn_ratio_scan(basis: SpectralBasis, alpha: float, trials: int, seed: int, chunk: int = 1000) -> float:
    """Largest ``||u||_{L^{a+1}}^{a+1} / (||u||_H^{b1} ||u||_{E_A}^{b2})`` over random fields.

    Draws are made in fixed-size chunks so a longer scan with the same seed
    extends a shorter one.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gn_exponents(basis, alpha)
    rng = np.random.default_rng(seed)
    best = 0.0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        c = random_bandlimited(basis, chunk, rng)[:k]
        best = max(best, float(gn_ratios(basis, alpha, c).max()))
        done += k
    return best

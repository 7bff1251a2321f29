"""Power nonlinearity ``F(u) = ±|u|^{alpha-1} u``, its antiderivative and the energy."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .littlewood_paley import ProjectorKind, apply_projector
from .spectral import Field, SpectralBasis, lp_norm


class Sign(str, enum.Enum):
    DEFOCUSING = "defocusing"
    FOCUSING = "focusing"

    @property
    def factor(self) -> float:
        return 1.0 if self is Sign.DEFOCUSING else -1.0


class AdmissibilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PowerNonlinearity:
    alpha: float
    sign: Sign = Sign.DEFOCUSING

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign(self.sign))
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")

    def admissible_range(self, dim: int) -> tuple[float, float]:
        if self.sign is Sign.FOCUSING:
            return 1.0, 1.0 + 4.0 / dim
        return 1.0, (np.inf if dim <= 2 else 1.0 + 4.0 / (dim - 2))

    def check_admissible(self, dim: int) -> bool:
        """Warn (never raise) when alpha leaves the subcritical range for ``dim``."""
        lo, hi = self.admissible_range(dim)
        ok = lo < self.alpha < hi
        if not ok:
            warnings.warn(
                f"{self.sign.value} alpha={self.alpha} outside ({lo}, {hi}) for d={dim}",
                AdmissibilityWarning,
                stacklevel=2,
            )
        return ok


def eval_F(u: np.ndarray, nl: PowerNonlinearity) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if nl.alpha == 3.0:
        return nl.sign.factor * (u.real**2 + u.imag**2) * u
    a = np.abs(u)
    safe = np.where(a > 0, a, 1.0)
    return np.where(a > 0, nl.sign.factor * safe ** (nl.alpha - 1) * u, 0.0)


def phase_rate(u: np.ndarray, nl: PowerNonlinearity) -> np.ndarray:
    """Real rate ``±|u|^{alpha-1}`` with ``F(u) = rate * u``."""
    a = np.abs(u)
    return nl.sign.factor * a ** (nl.alpha - 1)


def eval_Fhat(f: Field, nl: PowerNonlinearity) -> np.ndarray:
    p = nl.alpha + 1
    return nl.sign.factor * lp_norm(f.basis, f.samples, p) ** p / p


def energy(f: Field, nl: PowerNonlinearity | None) -> np.ndarray:
    kinetic = 0.5 * np.sum(f.basis.lambda_A * np.abs(f.coeffs) ** 2, axis=-1)
    if nl is None:
        return kinetic
    return kinetic + eval_Fhat(f, nl)


def galerkin_F(f: Field, n: int, nl: PowerNonlinearity) -> Field:
    """``P_n F(u)`` evaluated on the padded grid."""
    g = Field(f.basis, f.basis.analyze(eval_F(f.samples, nl)))
    return apply_projector(g, ProjectorKind.sharp(n))


def gn_exponents(basis: SpectralBasis, alpha: float) -> tuple[float, float]:
    """Exponents ``(b1, b2)`` of ``||u||_{L^{a+1}}^{a+1} <~ ||u||_H^{b1} ||u||_{E_A}^{b2}``.

    ``b2 = d (alpha - 1) / (2 beta)`` by Sobolev scaling; the bound is only
    meaningful for ``0 < b2 < 2``.
    """
    b2 = basis.dim * (alpha - 1) / (2 * basis.beta)
    if not 0 < b2 < 2:
        raise ValueError(
            f"no interpolation exponents for alpha={alpha} on {basis.kind.value} "
            f"(beta={basis.beta}): need 0 < d(alpha-1)/(2 beta) < 2"
        )
    return alpha + 1 - b2, b2

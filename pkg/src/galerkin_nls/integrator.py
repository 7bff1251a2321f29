"""Time stepping for the Galerkin SDE on ``H_n``.

Two schemes are provided:

``split_midpoint``
    Lie (or Strang) splitting of the Stratonovich equation into the linear
    flow, the projected nonlinearity and the noise. Every sub-step is an
    exact phase rotation or an implicit-midpoint (Cayley) map of a
    skew-Hermitian operator, so the ``H``-norm is conserved to solver
    tolerance.
``euler_maruyama``
    Explicit Euler-Maruyama on the Ito form, whose drift carries the
    correction ``mu_n``. Used as a consistency cross-check.

All steppers act on coefficient arrays of shape ``(paths, N)``; paths never
interact, and the noise for path ``p`` at step ``j`` is keyed by
``(seed, p, j, m)`` only.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .littlewood_paley import ProjectorKind, band_mask, projector_weights
from .noise import NoiseModel, WienerDriver, keyed_normals
from .physics import PowerNonlinearity, energy, eval_F, phase_rate
from .spectral import Field, SpectralBasis, lp_norm

log = logging.getLogger(__name__)

SCHEMES = ("split_midpoint", "euler_maruyama")
DUMP_MAGIC = b"GSNLS1\x00\x00"
CSV_HEADER = ("t", "mass", "energy", "norm_EA", "norm_Lalpha1")


class ConvergenceError(RuntimeError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, msg: str, step: int):
        super().__init__(msg)
        self.step = step


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "split_midpoint"
    dt: float = 1e-3
    T: float = 1.0
    n: int = 5
    fixed_point_tol: float = 1e-12
    fixed_point_max_iter: int = 50
    record_every: int = 1
    strang: bool = False
    nonlinear_substep: str = "midpoint"
    blowup_factor: float = 1e6
    max_halvings: int = 8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < 0 or (self.T > 0 and self.T < self.dt):
            raise ValueError("need T = 0 or T >= dt")
        if self.n < 0:
            raise ValueError("level n must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.nonlinear_substep not in ("midpoint", "phase"):
            raise ValueError("nonlinear_substep must be 'midpoint' or 'phase'")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class Trajectory:
    basis: SpectralBasis
    n: int
    path: int
    times: np.ndarray
    coeffs: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    norm_EA: np.ndarray
    norm_Lalpha1: np.ndarray
    step_mass_change: np.ndarray = field(repr=False)

    def field(self, k: int) -> Field:
        return Field(self.basis, self.coeffs[k])

    @property
    def fields(self) -> Field:
        """All recorded states as one batched Field (time axis first)."""
        return Field(self.basis, self.coeffs)

    def max_mass_drift(self) -> float:
        m0 = self.mass[0]
        return float(np.max(np.abs(self.mass - m0)) / m0) if m0 > 0 else 0.0

    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))


class _Stepper:
    """Precomputed multipliers for one (basis, config, nonlinearity, noise)."""

    def __init__(self, basis, cfg: SchemeConfig, nl, noise):
        self.basis = basis
        self.cfg = cfg
        self.nl = nl
        self.noise = noise
        self.band = band_mask(basis, cfg.n)
        self.P = self.band.astype(float)
        self.S = projector_weights(basis, ProjectorKind.smooth(cfg.n))
        lam = basis.lambda_A
        self.rot = np.exp(-1j * lam * cfg.dt)
        self.rot_half = np.exp(-0.5j * lam * cfg.dt)
        self.active_noise = noise is not None and not noise.is_zero

    # -- building blocks on coefficient arrays -------------------------------

    def PF(self, c):
        b = self.basis
        return b.analyze(eval_F(b.synthesize(c), self.nl)) * self.P

    def G(self, c, E):
        """``sum_m dbeta_m S_n B_m S_n c`` with ``E = sum_m dbeta_m e_m`` on the grid."""
        b = self.basis
        return b.analyze(E * b.synthesize(c * self.S)) * self.S

    @cached_property
    def _mu_band(self):
        # mu_n only couples modes of H_n, so it is assembled once on the band
        idx = np.flatnonzero(self.band)
        basis_rows = np.eye(self.basis.N, dtype=complex)[idx]
        acc = np.zeros((idx.size, idx.size), dtype=complex)
        for em in self.noise.e:
            g = self.G(basis_rows, em)[:, idx].T
            acc += g @ g
        return idx, -0.5 * acc

    def mu_n(self, c):
        idx, mat = self._mu_band
        out = np.zeros_like(c)
        out[:, idx] = c[:, idx] @ mat.T
        return out

    def _midpoint(self, c, op):
        """Solve ``x = c - i op((x + c)/2)`` row by row; rows freeze once converged."""
        cfg = self.cfg
        x = c.copy()
        scale = np.maximum(np.linalg.norm(c, axis=-1), np.finfo(float).tiny)
        todo = np.arange(c.shape[0])
        for _ in range(cfg.fixed_point_max_iter):
            rows = todo
            new = c[rows] - 1j * op(0.5 * (x[rows] + c[rows]), rows)
            delta = np.linalg.norm(new - x[rows], axis=-1) / scale[rows]
            x[rows] = new
            if not np.all(np.isfinite(delta)):
                break
            todo = rows[delta > cfg.fixed_point_tol]
            if todo.size == 0:
                return x, todo
        return x, todo

    def nonlinear(self, c, dt):
        if self.nl is None:
            return c
        if self.cfg.nonlinear_substep == "phase":
            b = self.basis
            u = b.synthesize(c)
            u = u * np.exp(-1j * dt * phase_rate(u, self.nl))
            return b.analyze(u) * self.P
        x, failed = self._midpoint(c, lambda v, rows: dt * self.PF(v))
        if failed.size:
            raise ConvergenceError(f"nonlinear midpoint did not converge for {failed.size} path(s)")
        return x

    def noise_step(self, c, E, depth=0):
        x, failed = self._midpoint(c, lambda v, rows: self.G(v, E[rows]))
        if failed.size:
            if depth >= self.cfg.max_halvings:
                raise ConvergenceError("noise midpoint did not converge after halving")
            half = 0.5 * E[failed]
            y = self.noise_step(c[failed], half, depth + 1)
            x[failed] = self.noise_step(y, half, depth + 1)
        return x

    # -- full steps -----------------------------------------------------------

    def split_midpoint(self, c, dbeta):
        cfg = self.cfg
        if cfg.strang:
            c = c * self.rot_half
            c = self.nonlinear(c, cfg.dt)
            if self.active_noise:
                c = self.noise_step(c, self.noise.combined(dbeta))
            return c * self.rot_half
        c = c * self.rot
        c = self.nonlinear(c, cfg.dt)
        if self.active_noise:
            c = self.noise_step(c, self.noise.combined(dbeta))
        return c

    def euler_maruyama(self, c, dbeta):
        dt = self.cfg.dt
        drift = -1j * self.basis.lambda_A * c
        if self.nl is not None:
            drift = drift - 1j * self.PF(c)
        out = c + dt * drift
        if self.active_noise:
            out = out + dt * self.mu_n(c) - 1j * self.G(c, self.noise.combined(dbeta))
        return out


def _as_rows(u0: Field) -> np.ndarray:
    c = np.asarray(u0.coeffs)
    return c[None, :] if c.ndim == 1 else c


def _diagnostics(basis, c, nl):
    f = Field(basis, c)
    mass = np.sum(np.abs(c) ** 2, axis=-1)
    ea = np.sqrt(np.sum((1 + basis.lambda_A) * np.abs(c) ** 2, axis=-1))
    en = energy(f, nl)
    if nl is None:
        lq = np.full(mass.shape, np.nan)
    else:
        lq = lp_norm(basis, f.samples, nl.alpha + 1)
    return mass, en, ea, lq


def integrate(
    u0: Field,
    cfg: SchemeConfig,
    nl: PowerNonlinearity | None,
    noise: NoiseModel | None,
    seed: int,
    paths,
) -> list[Trajectory]:
    """Advance every path in ``paths`` from ``P_n u0`` to ``T``.

    ``u0`` is either one field (shared initial state) or a batch with one
    row per path.
    """
    basis = u0.basis
    paths = [int(p) for p in paths]
    st = _Stepper(basis, cfg, nl, noise)
    c = _as_rows(u0) * st.P
    if c.shape[0] == 1 and len(paths) > 1:
        c = np.repeat(c, len(paths), axis=0)
    if c.shape[0] != len(paths):
        raise ValueError("initial batch size does not match number of paths")

    step = st.split_midpoint if cfg.scheme == "split_midpoint" else st.euler_maruyama
    M = noise.M if st.active_noise else 0
    sqdt = np.sqrt(cfg.dt)

    n_steps = cfg.n_steps
    rec_steps = sorted(set(range(0, n_steps + 1, cfg.record_every)) | {n_steps})
    K = len(rec_steps)
    P = len(paths)
    coeffs = np.empty((K, P, basis.N), dtype=complex)
    diag = np.empty((4, K, P))
    coeffs[0] = c
    diag[:, 0] = _diagnostics(basis, c, nl)
    ea0 = diag[2, 0].copy()
    mass_prev = diag[0, 0].copy()
    dmass = np.zeros((n_steps, P))
    k = 1
    for j in range(n_steps):
        dbeta = sqdt * keyed_normals(seed, paths, j, M) if M else None
        c = step(c, dbeta)
        mass = np.sum(np.abs(c) ** 2, axis=-1)
        if not np.all(np.isfinite(mass)):
            raise FloatingPointError(f"non-finite state at step {j}")
        dmass[j] = np.abs(mass - mass_prev) / np.where(mass_prev > 0, mass_prev, 1.0)
        mass_prev = mass
        if k < K and rec_steps[k] == j + 1:
            coeffs[k] = c
            diag[:, k] = _diagnostics(basis, c, nl)
            if np.any(diag[2, k] > cfg.blowup_factor * np.maximum(ea0, 1e-300)):
                raise BlowUpError(f"E_A norm exceeded {cfg.blowup_factor:g} x initial at step {j}", j)
            k += 1

    times = np.array(rec_steps, dtype=float) * cfg.dt
    return [
        Trajectory(
            basis=basis,
            n=cfg.n,
            path=p,
            times=times,
            coeffs=coeffs[:, i].copy(),
            mass=diag[0, :, i].copy(),
            energy=diag[1, :, i].copy(),
            norm_EA=diag[2, :, i].copy(),
            norm_Lalpha1=diag[3, :, i].copy(),
            step_mass_change=dmass[:, i].copy(),
        )
        for i, p in enumerate(paths)
    ]


def _single(state: Field, drv: WienerDriver, j: int, cfg, nl, noise, scheme: str) -> Field:
    if drv.dt != cfg.dt:
        raise ValueError("driver dt does not match scheme dt")
    st = _Stepper(state.basis, cfg, nl, noise)
    c = _as_rows(state)
    dbeta = None
    if st.active_noise:
        dbeta = drv.increments(j, noise.M)[None, :].repeat(c.shape[0], axis=0)
    out = st.split_midpoint(c, dbeta) if scheme == "split_midpoint" else st.euler_maruyama(c, dbeta)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"non-finite state at step {j}")
    return state.with_coeffs(out.reshape(np.shape(state.coeffs)))


def step_split_midpoint(state: Field, drv: WienerDriver, j: int, cfg, nl, noise) -> Field:
    return _single(state, drv, j, cfg, nl, noise, "split_midpoint")


def step_euler_maruyama(state: Field, drv: WienerDriver, j: int, cfg, nl, noise) -> Field:
    return _single(state, drv, j, cfg, nl, noise, "euler_maruyama")


def run_path(u0: Field, cfg: SchemeConfig, nl, noise, drv: WienerDriver) -> Trajectory:
    if drv.dt != cfg.dt:
        raise ValueError("driver dt does not match scheme dt")
    return integrate(u0, cfg, nl, noise, drv.seed, [drv.path])[0]


def run_ensemble(u0: Field, cfg: SchemeConfig, nl, noise, seed: int, paths: int, batch: int = 64):
    """``paths`` independent trajectories, stepped in vectorized batches."""
    out: list[Trajectory] = []
    for start in range(0, paths, batch):
        ids = range(start, min(paths, start + batch))
        out.extend(integrate(u0, cfg, nl, noise, seed, ids))
    return out


@dataclass
class CoupledRuns:
    levels: list[int]
    trajectories: dict[int, list[Trajectory]]

    def gap(self, n: int, n_ref: int) -> np.ndarray:
        """``||u_n(t) - u_ref(t)||_{E_A^*}`` with shape ``(paths, times)``."""
        a = np.stack([t.coeffs for t in self.trajectories[n]])
        b = np.stack([t.coeffs for t in self.trajectories[n_ref]])
        lam = self.trajectories[n][0].basis.lambda_A
        return np.sqrt(np.sum(np.abs(a - b) ** 2 / (1 + lam), axis=-1))

    def sup_gap(self, n: int, n_ref: int) -> np.ndarray:
        return self.gap(n, n_ref).max(axis=-1)


def coupled_runs(u0: Field, n_levels, cfg: SchemeConfig, nl, noise, seed: int, paths: int = 1) -> CoupledRuns:
    """Runs at several levels driven by identical Wiener increments."""
    levels = list(n_levels)
    if levels != sorted(levels):
        raise ValueError("n_levels must be ascending")
    trajs = {}
    for n in dict.fromkeys(levels):
        c = SchemeConfig(**{**cfg.__dict__, "n": n})
        trajs[n] = run_ensemble(u0, c, nl, noise, seed, paths)
    return CoupledRuns(levels, trajs)


# -- serialization ------------------------------------------------------------


def write_trajectory_csv(traj: Trajectory, path) -> None:
    rows = np.column_stack([traj.times, traj.mass, traj.energy, traj.norm_EA, traj.norm_Lalpha1])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\r\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) for v in r) + "\r\n")


def write_coeff_dump(traj: Trajectory, path) -> None:
    """Frames as little-endian float64 re/im pairs behind a 16-byte header."""
    K, N = traj.coeffs.shape
    body = np.empty((K, N, 2), dtype="<f8")
    body[..., 0] = traj.coeffs.real
    body[..., 1] = traj.coeffs.imag
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC + struct.pack("<II", N, K))
        fh.write(body.tobytes())


def read_coeff_dump(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != DUMP_MAGIC:
        raise ValueError("not a coefficient dump (bad magic)")
    N, K = struct.unpack("<II", data[8:16])
    body = np.frombuffer(data, dtype="<f8", offset=16)
    if body.size != K * N * 2:
        raise ValueError("truncated coefficient dump")
    body = body.reshape(K, N, 2)
    return body[..., 0] + 1j * body[..., 1]

"""Experiment configuration: INI-style key/value blocks or the equivalent JSON.

Grammar of the text format (parsed with :mod:`configparser`)::

    [geometry]
    kind = torus1d          ; torus1d | interval_dirichlet | interval_neumann | sphere_zonal
    N = 256
    beta = 1.0
    eps_shift = 1.0

    [nonlinearity]
    alpha = 3.0
    sign = defocusing       ; defocusing | focusing
    enabled = true

    [noise]
    M = 16
    gamma = 0.5
    s_dec = 2.0
    profile = basis         ; basis | cos | legendre | constant

    [initial]
    profile = spectral      ; spectral | mode
    amplitude = 2.5
    decay = 1.5
    mode = 1

    [scheme]
    scheme = split_midpoint ; split_midpoint | euler_maruyama
    dt = 1e-3
    T = 1.0
    n = 7
    n_levels = 4, 5, 6, 7
    fixed_point_tol = 1e-12
    fixed_point_max_iter = 50
    strang = false
    nonlinear_substep = midpoint

    [ensemble]
    paths = 64
    seed = 20240101

    [output]
    directory = results
    stride = 10
    formats = csv           ; comma list of csv, bin

    [opnorm]
    kind = sphere_zonal
    N = 64
    p = 2, 6
    levels = 3, 4, 5, 6, 7, 8
    trials = 8

    [ito]
    paths = 256
    n = 4
    dt = 1e-3

Sections and keys may be omitted; defaults are shown above. Lists are
comma separated. The JSON form is an object with the same section names.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import typing
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..littlewood_paley import ProjectorKind, apply_projector
from ..noise import NoiseModel
from ..physics import AdmissibilityWarning, PowerNonlinearity
from ..spectral import Field, GeometryKind, SpectralBasis, build_basis


@dataclass
class GeometryBlock:
    kind: str = "torus1d"
    N: int = 256
    beta: float = 1.0
    eps_shift: float = 1.0


@dataclass
class NonlinearityBlock:
    alpha: float = 3.0
    sign: str = "defocusing"
    enabled: bool = True


@dataclass
class NoiseBlock:
    M: int = 16
    gamma: float = 0.5
    s_dec: float = 2.0
    profile: str = "basis"


@dataclass
class InitialBlock:
    profile: str = "spectral"
    amplitude: float = 2.5
    decay: float = 1.5
    mode: int = 1


@dataclass
class SchemeBlock:
    scheme: str = "split_midpoint"
    dt: float = 1e-3
    T: float = 1.0
    n: int = 7
    n_levels: list = field(default_factory=lambda: [4, 5, 6, 7])
    fixed_point_tol: float = 1e-12
    fixed_point_max_iter: int = 50
    strang: bool = False
    nonlinear_substep: str = "midpoint"


@dataclass
class EnsembleBlock:
    paths: int = 64
    seed: int = 20240101


@dataclass
class OutputBlock:
    directory: str = "results"
    stride: int = 10
    formats: list = field(default_factory=lambda: ["csv"])


@dataclass
class OpnormBlock:
    kind: str = "sphere_zonal"
    N: int = 64
    p: list = field(default_factory=lambda: [2.0, 6.0])
    levels: list = field(default_factory=lambda: [3, 4, 5, 6, 7, 8])
    trials: int = 8


@dataclass
class ItoBlock:
    paths: int = 256
    n: int = 4
    dt: float = 1e-3


@dataclass
class ExperimentConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    nonlinearity: NonlinearityBlock = field(default_factory=NonlinearityBlock)
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    scheme: SchemeBlock = field(default_factory=SchemeBlock)
    ensemble: EnsembleBlock = field(default_factory=EnsembleBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    opnorm: OpnormBlock = field(default_factory=OpnormBlock)
    ito: ItoBlock = field(default_factory=ItoBlock)

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        cfg = cls()
        hints = typing.get_type_hints(cls)
        for section, values in data.items():
            if section not in hints:
                raise ValueError(f"unknown config section [{section}]")
            block = getattr(cfg, section)
            types = {f.name: f for f in dataclasses.fields(block)}
            for key, raw in values.items():
                if key not in types:
                    raise ValueError(f"unknown key {key!r} in [{section}]")
                setattr(block, key, _coerce(raw, getattr(block, key)))
        return cfg

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json" or text.lstrip().startswith("{"):
            return cls.from_dict(json.loads(text))
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str
        parser.read_string(text)
        return cls.from_dict({s: dict(parser[s]) for s in parser.sections()})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- derived objects ------------------------------------------------------

    def basis(self) -> SpectralBasis:
        g = self.geometry
        return build_basis(g.kind, g.N, g.beta, g.eps_shift)

    def nonlinearity_model(self) -> PowerNonlinearity | None:
        nl = self.nonlinearity
        return PowerNonlinearity(nl.alpha, nl.sign) if nl.enabled else None

    def noise_model(self, basis: SpectralBasis) -> NoiseModel:
        z = self.noise
        return NoiseModel(basis, z.M, z.gamma, z.s_dec, z.profile)

    def initial_field(self, basis: SpectralBasis) -> Field:
        return initial_field(basis, self.initial)


def _coerce(raw, default):
    if isinstance(default, bool):
        if isinstance(raw, str):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return bool(raw)
    if isinstance(default, list):
        items = raw if isinstance(raw, list) else [s for s in str(raw).split(",") if s.strip()]
        proto = default[0] if default else ""
        return [_coerce(v, proto) for v in items]
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return str(raw).strip()


def initial_field(basis: SpectralBasis, block: InitialBlock) -> Field:
    """Deterministic smooth initial state.

    ``spectral``: coefficients ``amplitude * lambda_S^{-decay}`` with phases
    from the golden-ratio sequence. ``mode``: a single eigenmode.
    """
    if block.profile == "mode":
        return Field.mode(basis, block.mode, block.amplitude)
    if block.profile != "spectral":
        raise ValueError(f"unknown initial profile {block.profile!r}")
    j = np.arange(basis.N)
    phase = 2 * np.pi * ((j * 0.6180339887498949) % 1.0)
    c = block.amplitude * basis.lambda_S ** (-block.decay) * np.exp(1j * phase)
    return Field(basis, c)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(cfg: ExperimentConfig) -> ValidationReport:
    """Cross-check a config against the structural hypotheses of the model."""
    rep = ValidationReport()
    try:
        basis = cfg.basis()
    except ValueError as exc:
        rep.errors.append(str(exc))
        return rep

    levels = sorted(set(cfg.scheme.n_levels) | {cfg.scheme.n})
    top = basis.max_level()
    for n in levels:
        if n < 0 or n > top:
            rep.errors.append(f"level n={n} outside 0..{top} (need 2^(n+1) <= max lambda_S)")
    if cfg.ito.n > top:
        rep.errors.append(f"ito level n={cfg.ito.n} exceeds {top}")
    if cfg.scheme.dt <= 0 or cfg.scheme.T < cfg.scheme.dt:
        rep.errors.append("scheme needs dt > 0 and T >= dt")
    if cfg.ensemble.paths < 1:
        rep.errors.append("ensemble.paths must be >= 1")
    if cfg.scheme.scheme not in ("split_midpoint", "euler_maruyama"):
        rep.errors.append(f"unknown scheme {cfg.scheme.scheme!r}")

    nl = None
    try:
        nl = cfg.nonlinearity_model()
    except ValueError as exc:
        rep.errors.append(str(exc))
    if nl is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AdmissibilityWarning)
            nl.check_admissible(basis.dim)
        rep.warnings.extend(str(w.message) for w in caught)

    try:
        noise = cfg.noise_model(basis)
    except ValueError as exc:
        rep.errors.append(str(exc))
        return rep
    if noise.M and not noise.is_zero:
        # ||e_m||_{H^1} grows like m * amplitude, so sum m^2 m^{-2 s} needs s > 3/2
        s_needed = 1.5 if cfg.noise.profile != "constant" else 0.5
        if cfg.noise.s_dec <= s_needed:
            rep.errors.append(
                f"noise decay s_dec={cfg.noise.s_dec} too slow: sum ||e_m||_H1^2 diverges (need > {s_needed})"
            )
    try:
        initial_field(basis, cfg.initial)
    except (ValueError, IndexError) as exc:
        rep.errors.append(f"initial state: {exc}")
    return rep


def projected_initial(cfg: ExperimentConfig, basis: SpectralBasis, n: int) -> Field:
    return apply_projector(cfg.initial_field(basis), ProjectorKind.sharp(n))


GEOMETRIES = [k.value for k in GeometryKind]

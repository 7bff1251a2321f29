"""Command line entry point: ``galerkin-nls <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import integrator as itg
from .config import ExperimentConfig, validate
from .diagnostics import sub_seed
from .experiments import THRESHOLDS, Criterion, ExperimentResult, _jsonable, run_experiment

log = logging.getLogger("galerkin_nls")


def _levels(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI or JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--paths", type=int, help="number of Monte-Carlo paths")
    common.add_argument("--levels", type=_levels, help="comma separated Galerkin levels, e.g. 4,5,6,7")
    common.add_argument("--quiet", action="store_true", help="only print failures")

    p = argparse.ArgumentParser(prog="galerkin-nls", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate a single path")
    ens = sub.add_parser("ensemble", parents=[common], help="ensemble experiments (mass/energy or Ito/Stratonovich)")
    ens.add_argument("--experiment", choices=("mass_energy", "ito_strat"), default="mass_energy")
    sub.add_parser("converge", parents=[common], help="coupled multi-level Galerkin runs")
    sub.add_parser("opnorm", parents=[common], help="L^p operator-norm probe of the projectors")
    sub.add_parser("validate-config", parents=[common], help="check a config and exit")
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise SystemExit("--seed must be an unsigned 64-bit integer")
        cfg.ensemble.seed = args.seed
    if args.out is not None:
        cfg.output.directory = str(args.out)
    if args.paths is not None:
        cfg.ensemble.paths = args.paths
        cfg.ito.paths = args.paths
    if args.levels:
        cfg.scheme.n_levels = args.levels
        if args.command == "opnorm":
            cfg.opnorm.levels = args.levels
    return cfg


def run_single(cfg: ExperimentConfig) -> ExperimentResult:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    basis = cfg.basis()
    s = cfg.scheme
    sc = itg.SchemeConfig(
        scheme=s.scheme, dt=s.dt, T=s.T, n=s.n, fixed_point_tol=s.fixed_point_tol,
        fixed_point_max_iter=s.fixed_point_max_iter, record_every=cfg.output.stride,
        strang=s.strang, nonlinear_substep=s.nonlinear_substep,
    )
    drv = itg.WienerDriver(sub_seed(cfg.ensemble.seed, "paths"), 0, s.dt)
    tr = itg.run_path(cfg.initial_field(basis), sc, cfg.nonlinearity_model(), cfg.noise_model(basis), drv)
    itg.write_trajectory_csv(tr, out / "trajectory.csv")
    if "bin" in cfg.output.formats:
        itg.write_coeff_dump(tr, out / "trajectory.bin")
    res = ExperimentResult("run", cfg.digest(), cfg.ensemble.seed)
    drift = tr.max_mass_drift()
    res.metrics.update(max_mass_drift=drift, max_energy_drift=tr.max_energy_drift(), final_time=float(tr.times[-1]))
    if s.scheme == "split_midpoint":
        lim = THRESHOLDS["mass_conservation"]
        res.criteria.append(Criterion("mass_conservation", drift, lim, drift < lim))
    (out / "run_summary.json").write_text(json.dumps(_jsonable(res.to_json()), indent=2, sort_keys=True))
    return res


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        rep = validate(cfg)
        for w in rep.warnings:
            print(f"warning: {w}")
        for e in rep.errors:
            print(f"error: {e}")
        if rep.ok and not args.quiet:
            print(f"config ok ({cfg.digest()})")
        return 0 if rep.ok else 1

    name = {"ensemble": getattr(args, "experiment", None), "converge": "converge_n", "opnorm": "opnorms"}.get(args.command)
    try:
        res = run_single(cfg) if args.command == "run" else run_experiment(name, cfg)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for c in res.criteria:
        if not (args.quiet and c.passed):
            print(c.line())
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())

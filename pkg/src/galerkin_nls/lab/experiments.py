"""The four standard experiments. Each writes CSV tables plus a JSON summary.

Every pass/fail flag uses the thresholds in :data:`THRESHOLDS`; experiments
are pure functions of (config, seed), so reruns reproduce the CSV bodies
bit for bit.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import integrator as itg
from ..littlewood_paley import DyadicPartition, ProjectorKind, apply_projector, opnorm_lower_bound
from ..noise import NoiseModel, noise_drift_cancellation
from ..physics import gn_exponents
from ..spectral import Field, build_basis, inner, norm
from .config import ExperimentConfig, validate
from .diagnostics import EnsembleSummary, aldous_statistic, gn_ratio_scan, moment_sup_EA, sub_seed

log = logging.getLogger(__name__)

EXPERIMENTS = ("mass_energy", "converge_n", "opnorms", "ito_strat")

THRESHOLDS = {
    "mass_conservation": 1e-10,
    "drift_cancellation": 1e-11,
    "partition_of_unity": 1e-12,
    "contraction": 1e-10,
    "projector_residual": 1e-12,
    "sharp_growth_step": 1.02,
    "smooth_total_variation": 1.5,
    "ito_ratio": (1.6, 2.6),
    "ito_sigmas": 3.0,
    "moment_ratio": 2.0,
    "galerkin_monotone_fraction": 0.9,
    "gn_saturation": 0.10,
    "energy_ratio_lie": (1.6, 2.6),
    "energy_ratio_strang": (3.2, 4.8),
}

ALDOUS_THETAS = (0.1, 0.05, 0.01)
ALDOUS_ETA = 0.01


@dataclass
class Criterion:
    name: str
    value: object
    threshold: object
    passed: bool

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: value={self.value} threshold={self.threshold}"


@dataclass
class ExperimentResult:
    experiment: str
    config_hash: str
    seed: int
    metrics: dict = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "headline": self.metrics,
            "criteria": {c.name: {"value": c.value, "threshold": c.threshold, "pass": c.passed} for c in self.criteria},
            "pass": self.passed,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _scheme(cfg: ExperimentConfig, **over) -> itg.SchemeConfig:
    s = cfg.scheme
    kw = dict(
        scheme=s.scheme,
        dt=s.dt,
        T=s.T,
        n=s.n,
        fixed_point_tol=s.fixed_point_tol,
        fixed_point_max_iter=s.fixed_point_max_iter,
        record_every=cfg.output.stride,
        strang=s.strang,
        nonlinear_substep=s.nonlinear_substep,
    )
    kw.update(over)
    return itg.SchemeConfig(**kw)


# -- mass_energy ------------------------------------------------------------------


def monotone_blowup(est) -> bool:
    """True when moments rise with ``n`` without the increments shrinking.

    A saturating sequence (growing by less at every refinement) is the
    expected picture for a uniform bound and does not count.
    """
    d = np.diff(np.asarray(est, dtype=float))
    if d.size < 2:
        return False
    return bool(np.all(d > 0) and d[-1] >= d[0])


def mass_energy(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    seed = cfg.ensemble.seed
    res = ExperimentResult("mass_energy", cfg.digest(), seed)
    basis = cfg.basis()
    nl = cfg.nonlinearity_model()
    noise = cfg.noise_model(basis)
    u0 = cfg.initial_field(basis)
    path_seed = sub_seed(seed, "paths")

    rows, moments, drifts = [], {}, []
    for n in sorted(set(cfg.scheme.n_levels)):
        sc = _scheme(cfg, scheme="split_midpoint", n=n)
        trajs = itg.run_ensemble(u0, sc, nl, noise, path_seed, cfg.ensemble.paths)
        summ = EnsembleSummary.from_trajectories(trajs)
        est, se = moment_sup_EA(trajs, 1.0)
        moments[n] = (est, se)
        drift = float(summ.max_mass_drift.max())
        step_change = max(float(t.step_mass_change.max(initial=0.0)) for t in trajs)
        drifts.append(drift)
        rows.append((n, len(trajs), drift, step_change, est, se, float(summ.mean_energy[-1])))
        write_csv(
            out / f"mass_energy_n{n}.csv",
            ("t", "mean_mass", "mean_energy", "mean_norm_EA"),
            zip(summ.times, summ.mean_mass, summ.mean_energy, summ.mean_norm_EA),
        )
        if "csv" in cfg.output.formats:
            itg.write_trajectory_csv(trajs[0], out / f"trajectory_n{n}_path0.csv")
        if "bin" in cfg.output.formats:
            itg.write_coeff_dump(trajs[0], out / f"trajectory_n{n}_path0.bin")
        log.info("mass_energy n=%d: max drift %.3e, moment %.4g +- %.2g", n, drift, est, se)
    write_csv(
        out / "mass_energy_levels.csv",
        ("n", "paths", "max_mass_drift", "max_step_mass_change", "moment_sup_EA_q1", "stderr", "mean_energy_T"),
        rows,
    )

    max_drift = max(drifts)
    res.criteria.append(Criterion("mass_conservation", max_drift, THRESHOLDS["mass_conservation"], max_drift < THRESHOLDS["mass_conservation"]))
    est = np.array([moments[n][0] for n in sorted(moments)])
    ratio = float(est.max() / est.min())
    blowup = monotone_blowup(est)
    res.criteria.append(
        Criterion("uniform_energy_moments", ratio, THRESHOLDS["moment_ratio"], ratio < THRESHOLDS["moment_ratio"] and not blowup)
    )
    res.metrics["moments"] = {n: list(v) for n, v in moments.items()}
    res.metrics["moments_monotone_increasing"] = bool(len(est) > 1 and np.all(np.diff(est) > 0))
    res.metrics["moments_monotone_blowup"] = blowup

    # deterministic energy behaviour
    erows, ratios = [], {}
    det_mass = 0.0
    for variant, strang in (("lie", False), ("strang", True)):
        d = []
        for dt in (cfg.scheme.dt, cfg.scheme.dt / 2):
            sc = _scheme(cfg, scheme="split_midpoint", dt=dt, strang=strang, record_every=1)
            tr = itg.run_path(u0, sc, nl, None, itg.WienerDriver(path_seed, 0, dt))
            d.append(tr.max_energy_drift())
            det_mass = max(det_mass, tr.max_mass_drift())
            erows.append((variant, dt, d[-1], tr.max_mass_drift()))
        ratios[variant] = d[0] / d[1] if d[1] > 0 else float("inf")
    write_csv(out / "energy_dt.csv", ("variant", "dt", "max_energy_drift", "max_mass_drift"), erows)
    lo, hi = THRESHOLDS["energy_ratio_lie"]
    res.criteria.append(Criterion("energy_order_lie", ratios["lie"], [lo, hi], lo <= ratios["lie"] <= hi))
    lo, hi = THRESHOLDS["energy_ratio_strang"]
    res.criteria.append(Criterion("energy_order_strang", ratios["strang"], [lo, hi], lo <= ratios["strang"] <= hi))
    res.metrics["deterministic_max_mass_drift"] = det_mass

    # interpolation inequality witness, where exponents exist
    try:
        gn_exponents(basis, cfg.nonlinearity.alpha)
    except ValueError:
        res.metrics["gn_scan"] = "not applicable"
    else:
        gseed = sub_seed(seed, "gn")
        g3 = gn_ratio_scan(basis, cfg.nonlinearity.alpha, 1000, gseed)
        g4 = gn_ratio_scan(basis, cfg.nonlinearity.alpha, 10000, gseed)
        change = (g4 - g3) / g3
        res.metrics["gn_max_1e3"], res.metrics["gn_max_1e4"] = g3, g4
        res.criteria.append(Criterion("interpolation_saturation", change, THRESHOLDS["gn_saturation"], change < THRESHOLDS["gn_saturation"]))

    res.metrics["max_mass_drift"] = max_drift
    res.metrics["summability_partial_sums"] = noise.summability().tolist()
    res.metrics["lp_opnorm_sum"] = noise.lp_opnorm_sum()
    return res


# -- converge_n ----------------------------------------------------------------------


def monotone_fraction(sup_gaps: np.ndarray) -> float:
    """Fraction of rows (paths) whose entries strictly decrease left to right."""
    if sup_gaps.shape[1] < 2:
        return 1.0
    return float(np.mean(np.all(np.diff(sup_gaps, axis=1) < 0, axis=1)))


def converge_n(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    seed = cfg.ensemble.seed
    res = ExperimentResult("converge_n", cfg.digest(), seed)
    basis = cfg.basis()
    nl = cfg.nonlinearity_model()
    noise = cfg.noise_model(basis)
    u0 = cfg.initial_field(basis)
    listed = list(cfg.scheme.n_levels)
    n_ref = max(listed) + 1
    runs = itg.coupled_runs(
        u0, sorted(listed + [n_ref]), _scheme(cfg, scheme="split_midpoint"), nl, noise,
        sub_seed(seed, "paths"), cfg.ensemble.paths,
    )

    distinct = sorted(set(listed))
    sup = np.stack([runs.sup_gap(n, n_ref) for n in distinct], axis=1)
    write_csv(
        out / "converge_gaps.csv",
        ("path", "n", "n_ref", "sup_gap_EA_dual"),
        [(p, n, n_ref, sup[p, i]) for p in range(sup.shape[0]) for i, n in enumerate(distinct)],
    )
    pair_rows = []
    times = runs.trajectories[n_ref][0].times
    for a, b in zip(listed, listed[1:]):
        g = runs.gap(a, b)
        pair_rows += [(a, b, t, g[:, k].mean(), g[:, k].max()) for k, t in enumerate(times)]
    write_csv(out / "converge_pairs.csv", ("n_a", "n_b", "t", "mean_gap", "max_gap"), pair_rows)

    frac = monotone_fraction(sup)
    res.criteria.append(
        Criterion("galerkin_pathwise_convergence", frac, THRESHOLDS["galerkin_monotone_fraction"],
                  frac >= THRESHOLDS["galerkin_monotone_fraction"])
    )
    res.metrics["mean_sup_gap"] = {n: float(sup[:, i].mean()) for i, n in enumerate(distinct)}
    res.metrics["n_ref"] = n_ref

    arows, table = [], {}
    thetas = [th for th in ALDOUS_THETAS if th < times[-1]]
    res.metrics["aldous_thetas_skipped"] = [th for th in ALDOUS_THETAS if th >= times[-1]]
    for n in distinct:
        stat = aldous_statistic(runs.trajectories[n], thetas, ALDOUS_ETA)
        table[n] = stat
        arows += [(n, th, ALDOUS_ETA, pr) for th, pr in stat.items()]
    write_csv(out / "aldous.csv", ("n", "theta", "eta", "probability"), arows)
    res.metrics["aldous_grid_sampled_modulus"] = table
    res.metrics["aldous_monotone"] = all(
        all(a >= b for a, b in zip(list(s.values()), list(s.values())[1:])) for s in table.values()
    )
    return res


# -- opnorms -----------------------------------------------------------------------


def partition_residual(count: int = 10_000) -> float:
    t = np.logspace(-3, 6, count)
    M = int(np.ceil(np.log2(t.max())))
    worst = 0.0
    for Mt in range(0, M + 1):
        sel = (t * 2.0**-Mt <= 1) & ((Mt == 0) | (t * 2.0 ** -(Mt - 1) > 1))
        if np.any(sel):
            s = DyadicPartition.partial_sum(Mt, t[sel])
            worst = max(worst, float(np.max(np.abs(s - 1))))
    return worst


def projector_checks(basis, levels, trials: int, seed: int) -> dict:
    """Randomized contraction bounds plus idempotence/selfadjointness residuals."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((trials, basis.N)) + 1j * rng.standard_normal((trials, basis.N))
    d = rng.standard_normal((trials, basis.N)) + 1j * rng.standard_normal((trials, basis.N))
    # low eigenmodes sit inside every band and attain the bound 1
    c[: min(4, trials)] = np.eye(basis.N)[: min(4, trials)]
    f, g = Field(basis, c), Field(basis, d)
    out = {"L2": 0.0, "E_A": 0.0, "idempotence": 0.0, "selfadjoint": 0.0}
    for n in levels:
        for proj in (ProjectorKind.sharp(n), ProjectorKind.smooth(n)):
            pf, pg = apply_projector(f, proj), apply_projector(g, proj)
            for key, which in (("L2", "H"), ("E_A", "E_A")):
                out[key] = max(out[key], float(np.max(norm(pf, which) / norm(f, which))))
            sa = np.abs(inner(pf, g) - inner(f, pg)) / (norm(f, "H") * norm(g, "H"))
            out["selfadjoint"] = max(out["selfadjoint"], float(sa.max()))
        sharp = ProjectorKind.sharp(n)
        pf = apply_projector(f, sharp)
        idem = np.max(np.abs(apply_projector(pf, sharp).coeffs - pf.coeffs))
        out["idempotence"] = max(out["idempotence"], float(idem))
    return out


def opnorms(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    seed = cfg.ensemble.seed
    res = ExperimentResult("opnorms", cfg.digest(), seed)
    ob = cfg.opnorm
    basis = build_basis(ob.kind, ob.N)
    rows, bounds = [], {}
    for p in ob.p:
        for kind in ("sharp", "smooth"):
            for n in ob.levels:
                lb = opnorm_lower_bound(ProjectorKind(kind, n), p, basis, ob.trials, sub_seed(seed, f"opnorm:{kind}:{n}:{p}"))
                bounds[(kind, n, p)] = lb
                rows.append((kind, n, p, ob.trials, lb))
    write_csv(out / "opnorms.csv", ("kind", "n", "p", "trials", "lower_bound"), rows)

    for p in ob.p:
        if p == 2:
            worst = max(bounds[(k, n, 2.0)] for k in ("sharp", "smooth") for n in ob.levels)
            res.criteria.append(Criterion("L2_opnorm_le_1", worst, 1 + THRESHOLDS["contraction"], worst <= 1 + THRESHOLDS["contraction"]))
    p_gap = max(ob.p)
    if p_gap > 4:
        sharp = np.array([bounds[("sharp", n, p_gap)] for n in ob.levels])
        smooth = np.array([bounds[("smooth", n, p_gap)] for n in ob.levels])
        steps = sharp[1:] / sharp[:-1]
        var = float(smooth.max() / smooth.min())
        res.criteria.append(Criterion("sharp_growth", float(steps.min()), THRESHOLDS["sharp_growth_step"], bool(np.all(steps >= THRESHOLDS["sharp_growth_step"]))))
        res.criteria.append(Criterion("smooth_bounded", var, THRESHOLDS["smooth_total_variation"], var < THRESHOLDS["smooth_total_variation"]))
        res.metrics["sharp_bounds"] = sharp.tolist()
        res.metrics["smooth_bounds"] = smooth.tolist()

    checks = projector_checks(basis, ob.levels, 64, sub_seed(seed, "projector-checks"))
    res.criteria.append(Criterion("contraction_L2", checks["L2"], 1 + THRESHOLDS["contraction"], checks["L2"] <= 1 + THRESHOLDS["contraction"]))
    res.criteria.append(Criterion("contraction_E_A", checks["E_A"], 1 + THRESHOLDS["contraction"], checks["E_A"] <= 1 + THRESHOLDS["contraction"]))
    for key in ("idempotence", "selfadjoint"):
        res.criteria.append(Criterion(key, checks[key], THRESHOLDS["projector_residual"], checks[key] < THRESHOLDS["projector_residual"]))
    pr = partition_residual()
    res.criteria.append(Criterion("partition_of_unity", pr, THRESHOLDS["partition_of_unity"], pr < THRESHOLDS["partition_of_unity"]))
    return res


# -- ito_strat ----------------------------------------------------------------------


def cancellation_residuals(basis, noise: NoiseModel, levels, count: int, seed: int) -> float:
    """Worst ``|residual| / ||f||^2`` over random (f, n, m) triples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.choice(levels))
        m = int(rng.integers(1, noise.M + 1))
        c = (rng.standard_normal(basis.N) + 1j * rng.standard_normal(basis.N)) * basis.lambda_S ** -rng.uniform(0, 1)
        f = Field(basis, c)
        r = abs(float(noise_drift_cancellation(f, n, noise, modes=[m])))
        worst = max(worst, r / float(norm(f, "H") ** 2))
    return worst


def ito_strat(cfg: ExperimentConfig, out: Path) -> ExperimentResult:
    seed = cfg.ensemble.seed
    res = ExperimentResult("ito_strat", cfg.digest(), seed)
    basis = cfg.basis()
    nl = cfg.nonlinearity_model()
    noise = cfg.noise_model(basis)
    u0 = cfg.initial_field(basis)
    rows, means = [], []
    for dt in (cfg.ito.dt, cfg.ito.dt / 2):
        sc = _scheme(cfg, scheme="euler_maruyama", dt=dt, n=cfg.ito.n, record_every=10**9)
        trajs = itg.run_ensemble(u0, sc, nl, noise, sub_seed(seed, f"ito:{dt!r}"), cfg.ito.paths, batch=256)
        drift = np.array([(t.mass[-1] - t.mass[0]) / t.mass[0] for t in trajs])
        m, se = float(drift.mean()), float(drift.std(ddof=1) / np.sqrt(drift.size))
        means.append((m, se))
        rows.append((dt, len(trajs), m, se))
        log.info("ito_strat dt=%g: mean mass drift %.4e +- %.1e", dt, m, se)
    write_csv(out / "ito_strat.csv", ("dt", "paths", "mean_mass_drift", "stderr"), rows)

    (m1, s1), (m2, s2) = means
    ratio = m1 / m2
    ratio_se = abs(ratio) * np.hypot(s1 / m1, s2 / m2)
    sig = THRESHOLDS["ito_sigmas"]
    resolved = abs(m1) > sig * s1 and abs(m2) > sig * s2
    lo, hi = THRESHOLDS["ito_ratio"]
    res.criteria.append(Criterion("ito_stratonovich_ratio", ratio, [lo, hi], bool(resolved and lo <= ratio <= hi)))
    res.metrics.update(ratio=ratio, ratio_stderr=float(ratio_se), drifts_resolved=bool(resolved))

    levels = list(range(0, basis.max_level() + 1))
    worst = cancellation_residuals(basis, noise, levels, 1000, sub_seed(seed, "cancellation")) if noise.M else 0.0
    res.criteria.append(Criterion("drift_cancellation", worst, THRESHOLDS["drift_cancellation"], worst < THRESHOLDS["drift_cancellation"]))
    return res


# -- driver ------------------------------------------------------------------------


RUNNERS = {"mass_energy": mass_energy, "converge_n": converge_n, "opnorms": opnorms, "ito_strat": ito_strat}


def run_experiment(name: str, cfg: ExperimentConfig, out=None) -> ExperimentResult:
    if name not in RUNNERS:
        raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    rep = validate(cfg)
    if not rep.ok:
        raise ValueError("invalid config: " + "; ".join(rep.errors))
    out = Path(out if out is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = RUNNERS[name](cfg, out)
    res.metrics["runtime_s"] = round(time.perf_counter() - t0, 3)
    summary = out / f"{name}_summary.json"
    summary.write_text(json.dumps(_jsonable(res.to_json()), indent=2, sort_keys=True))
    res.files = sorted(str(p) for p in out.iterdir())
    return res

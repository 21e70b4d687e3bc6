"""
Command-line front end: synthesize, benchmark, simulate, verify, plot-data.
"""

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from .artifact import SynthesisArtifact, load_artifact, save_artifact
from .config import HORIZON_FACTOR, LOG_LEVEL, WORKERS, RunConfig, load_config
from .exceptions import ConfigurationError, SelfTriggerError, SuiteFailure
from .isochron import (
    IsochronEngine,
    RegionPartition,
    auto_time_grid,
    build_time_grid,
    coverage_report,
    in_cone,
    mu,
    tau_down,
)
from .models import PlantModel, TriggerSpec, make_plant
from .oracles import mu_root_bisect
from .schedulers import make_policy, make_trigger
from .setsynth import (
    DeltaCoefficients,
    build_sets,
    inflation_ratio,
    make_box,
    pick_radius,
    synthesize_deltas,
    verify_delta,
)
from .simulate import (
    DisturbanceSignal,
    PiecewiseConstantSignal,
    SimResult,
    benchmark_disturbance,
    closed_loop_run,
    di_intersample_oracle,
    etc_intersample_time,
    integrate_held,
    random_piecewise_signal,
    uniform_ball,
)

logger = logging.getLogger(__name__)

SCHEMES = ("region-stc", "baseline-stc", "etc")
SAFETY_SLACK = 1e-6
DOMINANCE_SLACK = 1e-6
SCALING_TOLERANCE = 1e-3
SCALING_POOL = 8
PLOT_ROWS = 5000


def _banner(title: str) -> None:
    print("=" * 50)
    print(title)
    print("=" * 50)


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def _progress(iterable, **kwargs):
    return tqdm(iterable, disable=not sys.stderr.isatty(), **kwargs)


# Shared setup ----------------------------------------------------------------------


def build_models(config: RunConfig):
    plant = make_plant(config.model.name, config.model.params, config.model.alpha)
    trigger = make_trigger(config.trigger.kind, config.trigger.params, plant.n, config.trigger.theta)
    return plant, trigger


def build_signal(config: RunConfig, plant: PlantModel) -> DisturbanceSignal:
    dist = config.disturbance
    if dist.kind == "benchmark":
        if plant.n != 2 or plant.m_d != 3:
            raise ConfigurationError("the benchmark disturbance needs a plant with n = 2 and three disturbances")
        return benchmark_disturbance(plant.box.hi[0])
    if dist.kind == "constant":
        return PiecewiseConstantSignal.constant(dist.value, plant.box)
    return PiecewiseConstantSignal(dist.grid, dist.values, plant.box)


def _check_z(config: RunConfig, plant: PlantModel):
    if len(config.sets.z_lo) != plant.n:
        raise ConfigurationError(f"sets.Z has {len(config.sets.z_lo)} components, plant has {plant.n}")
    Z = make_box(config.sets.z_lo, config.sets.z_hi, "Z")
    W = make_box([config.sets.W[0]], [config.sets.W[1]], "W")
    return Z, W


def initial_conditions(config: RunConfig, n: int) -> np.ndarray:
    bench = config.benchmark
    if bench.x0 is not None:
        if len(bench.x0) != n:
            raise ConfigurationError(f"benchmark.x0 has {len(bench.x0)} components, plant has {n}")
        return np.asarray([bench.x0], dtype=float)
    return uniform_ball(np.random.default_rng(bench.seed), bench.runs, n, bench.ball_radius)


@dataclass
class Context:
    """Everything a command needs after loading config and artifact."""

    config: RunConfig
    plant: PlantModel
    trigger: TriggerSpec
    artifact: SynthesisArtifact
    partition: RegionPartition
    signal: DisturbanceSignal
    workers: int

    @property
    def engine(self) -> IsochronEngine:
        return self.partition.engine

    @property
    def h(self) -> float:
        return self.config.integrator.h

    @property
    def tol(self) -> float:
        return self.config.integrator.event_tol

    @property
    def t_max(self) -> float:
        return HORIZON_FACTOR * self.partition.grid.tau_q


def load_context(config: RunConfig, artifact_path=None, workers: int = WORKERS) -> Context:
    plant, trigger = build_models(config)
    artifact = load_artifact(artifact_path or config.output.artifact_path, config.model_hash())
    return Context(config, plant, trigger, artifact, artifact.partition(trigger), build_signal(config, plant),
                   workers)


# synthesize ----------------------------------------------------------------------------


def cmd_synthesize(config: RunConfig, workers: int = WORKERS) -> SynthesisArtifact:
    """Build sets, fit and verify the coefficients, pick r and the grid, write the artifact."""
    _banner("Synthesis")
    plant, trigger = build_models(config)
    Z, W = _check_z(config, plant)
    syn = config.synthesis

    r = syn.radius if syn.radius is not None else pick_radius(Z, W, syn.radius_safety)

    print("\n[1/5] Building working sets...")
    sets = build_sets(trigger, Z, W, config.sets.inflation, config.sets.domain, seed=syn.seed, radius=r)
    print(f"  ✓ Phi = {list(sets.phi.lo)} .. {list(sets.phi.hi)}")

    print("\n[2/5] Fitting comparison coefficients...")
    if syn.delta_override is not None:
        coeffs = DeltaCoefficients(syn.delta_override["delta0"], syn.delta_override["delta1"], syn.eps_delta,
                                   source="override")
        report = verify_delta(plant, trigger, sets, plant.box, coeffs, syn.n_verify, syn.seed + 1, workers,
                              raise_on_failure=False)
        coeffs = replace(coeffs, margin=report.min_margin, boundary_margin=report.boundary_margin,
                         n_verify=report.n_points)
        print(f"  {_mark(report.passed)} injected coefficients, margin m* = {report.min_margin:.6g}")
        if not report.passed:
            logger.warning("injected coefficients fail on the %s domain at %s", sets.domain, report.worst_point)
    else:
        coeffs, report = synthesize_deltas(plant, trigger, sets, plant.box, syn, workers)
        print(f"  ✓ verified after {coeffs.refits} refits, margin m* = {coeffs.margin:.6g}")
    print(f"  ✓ delta0 = {coeffs.delta0:.6g}, delta1 = {coeffs.delta1:.6g}")

    print("\n[3/5] Building the engine on D_r...")
    engine = IsochronEngine(coeffs.delta0, coeffs.delta1, r, plant.alpha, trigger.theta, trigger, W.lo[0],
                            Z.inradius)
    print(f"  ✓ r = {r:.6g}")

    print("\n[4/5] Building the time grid...")
    if config.grid.auto:
        grid = auto_time_grid(engine, config.grid.radius, config.grid.ratio, seed=syn.seed)
    else:
        grid = build_time_grid(config.grid.tau1, config.grid.ratio, config.grid.q)
    partition = RegionPartition(engine, grid)
    tau_center = tau_down(engine, np.zeros(plant.n), 1.0)
    print(f"  ✓ tau1 = {grid.tau1:.6g}, tau_q = {grid.tau_q:.6g}, q = {grid.q}")
    print(f"  ✓ tau_down((0, 1)) = {tau_center:.6g}")

    print("\n[5/5] Coverage...")
    coverage = coverage_report(partition, config.benchmark.ball_radius, seed=syn.seed).to_dict()
    print(f"  ✓ B1 radius = {math.sqrt(coverage['b1_radius2']):.6g}")
    print(f"  {_mark(coverage['b_fraction'] == 1.0)} covered fraction of the radius-"
          f"{config.benchmark.ball_radius:g} ball: {coverage['b_fraction']:.4f}")

    ratio = inflation_ratio(plant, trigger, sets, plant.box, min(syn.n_rows, 20000), syn.seed + 2)
    artifact = SynthesisArtifact(
        model_hash=config.model_hash(),
        model={"name": config.model.name, "params": dict(plant.params), "alpha": plant.alpha},
        trigger={"kind": config.trigger.kind, "params": dict(trigger.params), "theta": trigger.theta},
        sets={b.label: b.to_dict() for b in (sets.Z, sets.W, sets.phi, sets.error, sets.xi, sets.phi_raw)},
        inflation=sets.inflation,
        domain=sets.domain,
        delta0=coeffs.delta0,
        delta1=coeffs.delta1,
        eps_delta=coeffs.eps_delta,
        margin=coeffs.margin,
        boundary_margin=coeffs.boundary_margin,
        delta_source=coeffs.source,
        refits=coeffs.refits,
        r=r,
        w_lower=W.lo[0],
        w_upper=W.hi[0],
        alpha=plant.alpha,
        theta=trigger.theta,
        tau1=grid.tau1,
        ratio=grid.ratio,
        q=grid.q,
        coverage=coverage,
        report={"verification": report.to_dict(), "inflation_ratio": ratio, "tau_down_center": tau_center,
                "degenerate_ties": coeffs.degenerate_ties, "n_rows": coeffs.n_rows},
    )
    path = save_artifact(artifact, config.output.artifact_path)
    print(f"\n✓ Artifact written to {path}")
    return artifact


# benchmark / simulate / plot-data -------------------------------------------------------


def _policy(ctx: Context, scheme: str):
    return make_policy(scheme, ctx.partition, ctx.tol)


def _run_one(ctx: Context, run_id: int, x0: np.ndarray, scheme: str) -> Dict[str, Any]:
    started = time.perf_counter()
    row = {"run": run_id, "x0": x0.tolist(), "scheme": scheme}
    try:
        res = closed_loop_run(ctx.plant, ctx.trigger, _policy(ctx, scheme), x0, ctx.signal,
                              ctx.config.benchmark.horizon, ctx.h, ctx.tol, record=False)
        row.update(samplings=res.n_samplings, min_dwell=res.min_dwell, max_phi=res.max_phi,
                   status=f"aborted:{res.metadata['abort_which']}" if res.aborted else "ok")
    except SelfTriggerError as e:
        logger.warning("run %d (%s) failed: %s", run_id, scheme, e)
        row.update(samplings=-1, min_dwell=math.nan, max_phi=math.nan, status=f"error:{type(e).__name__}")
    row["wall_time"] = time.perf_counter() - started
    return row


def _summarize(rows: List[Dict[str, Any]], ctx: Context) -> Dict[str, Any]:
    summary = {"schemes": {}, "etc_tolerance": ctx.tol, "h": ctx.h, "horizon": ctx.config.benchmark.horizon,
               "tau1": ctx.partition.grid.tau1, "artifact_flagged": ctx.artifact.flagged,
               "note": f"ETC crossings located by bisection to {ctx.tol:g} s",
               "timing_csv": "benchmark_timing.csv"}
    for scheme in SCHEMES:
        ok = [r for r in rows if r["scheme"] == scheme and r["status"] == "ok"]
        failed = [r for r in rows if r["scheme"] == scheme and r["status"] != "ok"]
        summary["schemes"][scheme] = {
            "runs": len(ok) + len(failed),
            "ok": len(ok),
            "failed": len(failed),
            "mean_samplings": float(np.mean([r["samplings"] for r in ok])) if ok else math.nan,
            "min_dwell": min((r["min_dwell"] for r in ok), default=math.inf),
            "max_phi": max((r["max_phi"] for r in ok), default=-math.inf),
        }
    return summary


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def cmd_benchmark(ctx: Context) -> Dict[str, Any]:
    """Region-based, baseline and event-triggered runs from seeded initial conditions."""
    _banner("Benchmark")
    x0s = initial_conditions(ctx.config, ctx.plant.n)
    jobs = [(i, x0, scheme) for i, x0 in enumerate(x0s) for scheme in SCHEMES]
    print(f"\nRunning {len(x0s)} initial conditions x {len(SCHEMES)} schemes on {ctx.workers} workers...")
    rows = Parallel(n_jobs=ctx.workers)(
        delayed(_run_one)(ctx, i, x0, scheme) for i, x0, scheme in _progress(jobs, desc="runs")
    )
    rows = sorted(rows, key=lambda r: (r["run"], SCHEMES.index(r["scheme"])))

    out = Path(ctx.config.output.dir)
    n = ctx.plant.n
    _write_csv(
        out / "benchmark.csv",
        ["run"] + [f"x0_{k + 1}" for k in range(n)] + ["scheme", "samplings", "min_dwell", "max_phi", "status"],
        [[r["run"]] + [repr(v) for v in r["x0"]] + [r["scheme"], r["samplings"], repr(r["min_dwell"]),
                                                   repr(r["max_phi"]), r["status"]] for r in rows],
    )
    _write_csv(out / "benchmark_timing.csv", ["run", "scheme", "wall_time"],
               [[r["run"], r["scheme"], f"{r['wall_time']:.6f}"] for r in rows])
    summary = _summarize(rows, ctx)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")

    print("\n" + "=" * 50)
    print("BENCHMARK SUMMARY")
    print("=" * 50)
    for scheme, stats in summary["schemes"].items():
        print(f"{_mark(stats['failed'] == 0)} {scheme}: mean samplings {stats['mean_samplings']:.2f} "
              f"({stats['ok']}/{stats['runs']} runs ok)")
    print(f"  {summary['note']}")
    return summary


def _single_x0(ctx: Context, x0: Optional[Sequence[float]]) -> np.ndarray:
    if x0 is not None:
        return np.asarray(x0, dtype=float)
    return initial_conditions(ctx.config, ctx.plant.n)[0]


def cmd_simulate(ctx: Context, scheme: str = "region-stc", x0: Optional[Sequence[float]] = None) -> SimResult:
    """One closed-loop run; writes the sampling instants and dwells."""
    _banner(f"Simulation ({scheme})")
    x0 = _single_x0(ctx, x0)
    res = closed_loop_run(ctx.plant, ctx.trigger, _policy(ctx, scheme), x0, ctx.signal,
                          ctx.config.benchmark.horizon, ctx.h, ctx.tol)
    dwells = list(res.dwell_times) + [math.nan] * (res.n_samplings - res.dwell_times.size)
    _write_csv(Path(ctx.config.output.dir) / f"simulate_{scheme}.csv", ["t", "dwell"],
               [[repr(float(t)), repr(float(d))] for t, d in zip(res.sampling_times, dwells)])
    print(f"  {_mark(not res.aborted)} samplings: {res.n_samplings}")
    print(f"  ✓ min dwell: {res.min_dwell:.6g} s")
    print(f"  {_mark(res.max_phi <= SAFETY_SLACK)} max phi: {res.max_phi:.3g}")
    return res


def cmd_plot_data(ctx: Context, x0: Optional[Sequence[float]] = None) -> List[Path]:
    """(t, zeta) and (t, dwell) series for the region-based and baseline samplers."""
    _banner("Plot data")
    x0 = _single_x0(ctx, x0)
    out = Path(ctx.config.output.dir)
    written = []
    for scheme in ("region-stc", "baseline-stc"):
        res = closed_loop_run(ctx.plant, ctx.trigger, _policy(ctx, scheme), x0, ctx.signal,
                              ctx.config.benchmark.horizon, ctx.h, ctx.tol)
        traj = res.trajectory
        stride = max(1, len(traj.times) // PLOT_ROWS)
        n = ctx.plant.n
        written.append(_write_csv(
            out / f"trajectory_{scheme}.csv",
            ["t"] + [f"zeta_{k + 1}" for k in range(n)],
            [[repr(float(t))] + [repr(float(v)) for v in s[:n]]
             for t, s in zip(traj.times[::stride], traj.states[::stride])],
        ))
        written.append(_write_csv(
            out / f"dwell_{scheme}.csv", ["t", "dwell"],
            [[repr(float(t)), repr(float(d))] for t, d in zip(res.sampling_times, res.dwell_times)],
        ))
        print(f"  ✓ {scheme}: {res.n_samplings} samplings")
    return written


# verify ---------------------------------------------------------------------------------------


def _covered_states(ctx: Context, count: int, rng: np.random.Generator) -> np.ndarray:
    radius = ctx.config.benchmark.ball_radius
    picked = []
    while sum(len(p) for p in picked) < count:
        X = uniform_ball(rng, 4 * count, ctx.plant.n, radius)
        picked.append(X[ctx.partition.covered(X)])
    return np.vstack(picked)[:count]


def _outer_states(ctx: Context, count: int, rng: np.random.Generator) -> np.ndarray:
    """The `count` largest-norm states of a covered sample."""
    X = _covered_states(ctx, SCALING_POOL * count, rng)
    return X[np.argsort(-np.linalg.norm(X, axis=1), kind="stable")][:count]


def _scaling_pair(ctx: Context, x, w, lam, seed):
    plant, trigger, alpha = ctx.plant, ctx.trigger, ctx.plant.alpha
    cfg = ctx.config.verify
    horizon = (cfg.scaling_horizon or ctx.t_max) * w ** -alpha
    factor = lam ** -alpha
    signal = random_piecewise_signal(plant.box, horizon, 4, np.random.default_rng(seed))
    base = etc_intersample_time(plant.at_level(w), trigger.at_level(w), x, signal, cfg.scaling_h, ctx.tol, horizon)
    scaled = etc_intersample_time(plant.at_level(lam * w), trigger.at_level(lam * w), lam * np.asarray(x),
                                  signal.rescaled(lam ** alpha), cfg.scaling_h * factor, ctx.tol, horizon * factor)
    return base, scaled


def suite_scaling(ctx: Context) -> Dict[str, Any]:
    """tau from lam (x, w) under d(lam^alpha t) equals lam^-alpha tau from (x, w) under d.

    Pairs with no crossing on either side are counted, not scored; a crossing on
    one side only scores as an infinite error.
    """
    cfg = ctx.config.verify
    rng = np.random.default_rng(cfg.seed)
    X = _outer_states(ctx, cfg.scaling_points, rng)
    W = rng.uniform(0.5, 1.5, size=len(X))
    jobs = [(x * w, w, lam, cfg.seed + i) for i, (x, w) in enumerate(zip(X, W)) for lam in cfg.scaling_lambdas]
    pairs = Parallel(n_jobs=ctx.workers)(delayed(_scaling_pair)(ctx, *job) for job in _progress(jobs))
    errors, silent = [], 0
    for (base, scaled), (_, _, lam, _) in zip(pairs, jobs):
        expected = lam ** -ctx.plant.alpha * base
        if math.isinf(base) and math.isinf(scaled):
            silent += 1
        elif math.isinf(base) or math.isinf(scaled):
            errors.append(math.inf)
        else:
            errors.append(abs(scaled - expected) / expected)
    worst = max(errors, default=math.inf)
    if silent:
        logger.info("scaling: %d of %d pairs never triggered", silent, len(jobs))
    return {"passed": bool(errors) and worst <= SCALING_TOLERANCE, "max_relative_error": worst,
            "cases": len(jobs), "scored": len(errors), "no_crossing": silent}


def _dominance_point(ctx: Context, x, w, seed):
    cfg = ctx.config.verify
    alpha = ctx.plant.alpha
    rng = np.random.default_rng(seed)
    tau1 = float(tau_down(ctx.engine, x, 1.0))
    tau = tau1 * w ** -alpha
    h = min(ctx.h, tau1 / 10.0) * w ** -alpha
    plant, trigger = ctx.plant.at_level(w), ctx.trigger.at_level(w)
    xw = np.asarray(x) * w
    worst = math.inf
    for _ in range(cfg.dominance_realizations):
        signal = random_piecewise_signal(ctx.plant.box, tau, cfg.emulation_switches, rng)
        traj = integrate_held(plant, np.concatenate([xw, np.zeros_like(xw)]), signal, h, tau, trigger)
        bound = mu(ctx.engine, np.broadcast_to(xw, (len(traj.times), len(xw))), np.full(len(traj.times), w),
                   traj.times)
        worst = min(worst, float(np.min(bound - traj.phi)))
    return worst


def suite_dominance(ctx: Context) -> Dict[str, Any]:
    """mu((x, w), t) >= phi~(xi(t), w) on [0, tau_down] for random (x, w) in C n B and realizations."""
    cfg = ctx.config.verify
    rng = np.random.default_rng(cfg.seed + 1)
    X = _covered_states(ctx, cfg.dominance_points, rng)
    w_lower, w_upper = ctx.config.sets.W
    W = rng.uniform(w_lower, w_upper, size=len(X))
    points = list(zip(X, W))
    gaps = Parallel(n_jobs=ctx.workers)(
        delayed(_dominance_point)(ctx, x, w, cfg.seed + 1000 + i) for i, (x, w) in enumerate(_progress(points))
    )
    worst = float(np.min(gaps))
    return {"passed": worst >= -DOMINANCE_SLACK, "min_gap": worst, "points": len(X),
            "w_range": [float(W.min()), float(W.max())]}


def suite_roots(ctx: Context) -> Dict[str, Any]:
    """Closed-form tau_down against bisection on the matrix-exponential form of mu."""
    cfg = ctx.config.verify
    rng = np.random.default_rng(cfg.seed + 2)
    X = uniform_ball(rng, cfg.root_points, ctx.plant.n, ctx.config.benchmark.ball_radius)
    W = rng.uniform(0.1, 2.0, size=len(X))
    worst = 0.0
    checked = 0
    for x, w in zip(X, W):
        if not in_cone(ctx.engine, x, w):
            continue
        closed = float(tau_down(ctx.engine, x, w))
        worst = max(worst, abs(closed - mu_root_bisect(ctx.engine, x, w, 2.0 * closed)) / (1.0 + closed))
        checked += 1
    return {"passed": worst <= 1e-9, "max_scaled_error": worst, "points": checked}


def suite_safety(ctx: Context) -> Dict[str, Any]:
    """Region-based runs keep phi <= slack and never dwell below tau1."""
    cfg = ctx.config.verify
    x0s = initial_conditions(ctx.config, ctx.plant.n)[: cfg.safety_runs]
    rows = Parallel(n_jobs=ctx.workers)(delayed(_run_one)(ctx, i, x0, "region-stc") for i, x0 in enumerate(x0s))
    ok = [r for r in rows if r["status"] == "ok"]
    max_phi = max((r["max_phi"] for r in ok), default=-math.inf)
    min_dwell = min((r["min_dwell"] for r in ok), default=math.inf)
    passed = len(ok) == len(rows) and max_phi <= SAFETY_SLACK and min_dwell >= ctx.partition.grid.tau1
    return {"passed": passed, "max_phi": max_phi, "min_dwell": min_dwell, "runs": len(rows), "ok": len(ok)}


def suite_margin(ctx: Context) -> Dict[str, Any]:
    """Coefficient inequality on a fresh dense sample of the synthesis domain.

    The full Phi x E x W box is checked too and reported with its witness; it
    does not decide the suite.
    """
    a, cfg = ctx.artifact, ctx.config
    Z, W = _check_z(cfg, ctx.plant)
    sets = build_sets(ctx.trigger, Z, W, cfg.sets.inflation, a.domain, seed=cfg.synthesis.seed, radius=a.r)
    coeffs = DeltaCoefficients(a.delta0, a.delta1, a.eps_delta)
    report = verify_delta(ctx.plant, ctx.trigger, sets, ctx.plant.box, coeffs, cfg.verify.n_fine,
                          cfg.verify.seed + 3, ctx.workers, raise_on_failure=False)
    result = {"passed": report.passed, "domain": sets.domain, **report.to_dict()}
    if sets.domain != "box":
        full = verify_delta(ctx.plant, ctx.trigger, sets, ctx.plant.box, coeffs, cfg.verify.n_fine,
                            cfg.verify.seed + 3, ctx.workers, domain="box", raise_on_failure=False)
        result["box"] = full.to_dict()
        if not full.passed:
            logger.info("coefficients do not hold on the full box: margin %.6g at %s", full.min_margin,
                        full.worst_point)
    return result


def _emulation_point(ctx: Context, x, seed):
    cfg = ctx.config.verify
    lower = float(tau_down(ctx.engine, x, 1.0))
    oracle = di_intersample_oracle(ctx.plant, ctx.trigger, x, ctx.plant.box, cfg.emulation_realizations,
                                   cfg.emulation_switches, ctx.h, ctx.tol, seed, t_max=ctx.t_max)
    return lower, oracle


def suite_emulation(ctx: Context) -> Dict[str, Any]:
    """tau_down((x, 1)) never exceeds the worst realized inter-sampling time."""
    cfg = ctx.config.verify
    rng = np.random.default_rng(cfg.seed + 4)
    X = _covered_states(ctx, cfg.emulation_points, rng)
    pairs = Parallel(n_jobs=ctx.workers)(
        delayed(_emulation_point)(ctx, x, cfg.seed + 2000 + i) for i, x in enumerate(_progress(X))
    )
    violations = sum(1 for lower, oracle in pairs if lower > oracle)
    slack = min(oracle - lower for lower, oracle in pairs)
    return {"passed": violations == 0, "violations": violations, "min_slack": slack, "points": len(X)}


SUITES = {
    "margin": suite_margin,
    "roots": suite_roots,
    "scaling": suite_scaling,
    "dominance": suite_dominance,
    "safety": suite_safety,
    "emulation": suite_emulation,
}


def cmd_verify(ctx: Context, suites: Optional[Sequence[str]] = None) -> Dict[str, Any]:
    """Run the property suites, write verify_report.json and fail on any violation."""
    _banner("Verification")
    names = list(suites or SUITES)
    unknown = sorted(set(names) - set(SUITES))
    if unknown:
        raise ConfigurationError(f"unknown verify suites {unknown}")
    report = {"artifact_flagged": ctx.artifact.flagged, "suites": {}}
    for i, name in enumerate(names, 1):
        print(f"\n[{i}/{len(names)}] {name}...")
        result = SUITES[name](ctx)
        report["suites"][name] = result
        print(f"  {_mark(result['passed'])} {name}")
    out = Path(ctx.config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.json").write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    failed = [n for n, r in report["suites"].items() if not r["passed"]]
    if failed:
        raise SuiteFailure(failed)
    return report


# entry point ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selftrig", description="Region-based self-triggered sampling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synthesize", "benchmark", "simulate", "verify", "plot-data"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--artifact", help="synthesis artifact path (default: <out>/artifact.json)")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=WORKERS, help="parallel workers")
        p.add_argument("--h", type=float, help="integrator step in seconds")
        if name == "simulate":
            p.add_argument("--scheme", choices=SCHEMES, default="region-stc")
        if name == "verify":
            p.add_argument("--suite", action="append", choices=sorted(SUITES), help="run only this suite")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.workers < 1:
            raise ConfigurationError(f"--workers must be >= 1, got {args.workers}")
        config = load_config(args.config).with_overrides(seed=args.seed, out=args.out, h=args.h)
        if args.command == "synthesize":
            if args.artifact:
                config = replace(config, output=replace(config.output, artifact=args.artifact))
            cmd_synthesize(config, args.workers)
        else:
            ctx = load_context(config, args.artifact, args.workers)
            if args.command == "benchmark":
                cmd_benchmark(ctx)
            elif args.command == "simulate":
                cmd_simulate(ctx, args.scheme)
            elif args.command == "verify":
                cmd_verify(ctx, args.suite)
            else:
                cmd_plot_data(ctx)
    except SelfTriggerError as e:
        print(f"\n✗ {type(e).__name__}: {e}")
        return e.exit_code
    print("\nDone.")
    return 0

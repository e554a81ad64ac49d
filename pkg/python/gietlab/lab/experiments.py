"""The experiment pipelines E1..E8.

Each experiment takes an :class:`ExperimentContext`, writes its CSV and JSON
artifacts through it and returns named pass/fail checks plus the measured
constants. :func:`run_experiment` adds the directory layout
``<output_dir>/<experiment>/<label>/``, the config copy and ``summary.json``.

Example usage:

    from gietlab.lab.config import load_config
    from gietlab.lab.experiments import run_experiment

    result = run_experiment("E2", load_config(overrides=["system.preset=\\"golden\\""]))
    print(result.passed, result.measured["c0"])
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import linregress

from gietlab import io
from gietlab.affine import (
    AffineChart,
    constraint_invariance_error,
    derivative_block_check,
    expected_unstable_dimension,
    fixed_aiet,
    intersection_matrix_from_partition,
    slope_cocycle_error,
    spectrum,
)
from gietlab.combinatorics import RauzyLoop, enumerate_loops, is_admissible_fixed_point
from gietlab.dataframes import (
    TraceDataFrames,
    convergence_frame,
    fine_grid_frame,
    partitions_frame,
    reports_frame,
    shadowing_frame,
)
from gietlab.estimates import (
    BoundReport,
    c2_check,
    c3_check,
    eta_derivative_composition,
    eta_lipschitz_estimate,
    profile_c1_check,
    second_derivative_composition,
    tower_distortion_check,
)
from gietlab.exceptions import ConfigError, GietLabError
from gietlab.giet import Giet, distance
from gietlab.lab.config import ExperimentConfig, resolve_system
from gietlab.monotone import MonotoneMap, bump, compose, moebius
from gietlab.renorm import (
    DynamicalPartition,
    dynamical_partition,
    heights,
    orbit_eval,
    renormalization_trace,
    renormalize,
)
from gietlab.shadowing import (
    ShadowingProblem,
    ShadowingResult,
    ShadowingSystem,
    build_system,
    cone_check,
    convergence_diagnostics,
    moebius_fit,
    shoot,
)

logger = logging.getLogger(__name__)

Checks = dict[str, bool]
Measured = dict[str, Any]


@dataclass
class ExperimentResult:
    """Summary of one run, written as ``summary.json``."""

    experiment: str
    system: str
    label: str
    checks: Checks = field(default_factory=dict)
    measured: Measured = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    error: dict[str, Any] | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.checks.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "system": self.system,
            "label": self.label,
            "pass": self.passed,
            "checks": self.checks,
            "measured": self.measured,
            "artifacts": sorted(self.artifacts),
            "error": self.error,
        }


@dataclass
class ExperimentContext:
    """Config, loop, output directory and the seeded generator of one run."""

    config: ExperimentConfig
    loop: RauzyLoop
    directory: Path
    artifacts: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rng = np.random.default_rng(self.config.seed)

    @property
    def grid_size(self) -> int:
        return self.config.budgets.grid_size

    @cached_property
    def T0(self) -> Giet:
        return fixed_aiet(self.loop, self.grid_size)

    @cached_property
    def system(self) -> ShadowingSystem:
        return build_system(self.loop, self.grid_size)

    def csv(self, name: str, rows: Any) -> None:
        io.write_csv(self.directory / name, rows)
        self.artifacts.append(name)

    def jsonl(self, name: str, records: Any) -> None:
        io.write_jsonl(self.directory / name, records)
        self.artifacts.append(name)

    def json(self, name: str, obj: Any) -> None:
        io.write_json(self.directory / name, obj)
        self.artifacts.append(name)

    def map(self, fn: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
        """Apply ``fn`` over the worker pool, preserving order."""
        workers = self.config.budgets.workers
        if workers <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))

    def bump_profiles(self, amplitude: float) -> tuple[MonotoneMap, ...]:
        """One ∫η = 0 bump per branch with random coefficients of size ``amplitude``."""
        return tuple(
            bump(amplitude * self.rng.uniform(-1.0, 1.0, 2), grid=self.grid_size)
            for _ in range(self.loop.d)
        )

    def partitions(self, T: Giet, levels: Sequence[int]) -> list[DynamicalPartition]:
        """Partitions at ``levels`` that fit the floor budget."""
        budget = self.config.budgets.partition_floors
        trace = renormalization_trace(T, self.loop, max(levels))
        out = []
        for n in levels:
            if n > trace.depth or sum(heights(self.loop, n)) > budget:
                break
            out.append(dynamical_partition(T, self.loop, n, trace=trace, budget=budget))
        return out


def _fit_ratio(levels: Sequence[float], values: Sequence[float]) -> tuple[float | None, float | None]:
    pairs = [(k, v) for k, v in zip(levels, values) if v > 0.0 and math.isfinite(v)]
    if len(pairs) < 3:
        return None, None
    ks, vs = zip(*pairs)
    fit = linregress(ks, np.log(vs))
    return float(np.exp(fit.slope)), float(fit.rvalue**2)


# =============================================================================
# E1: combinatorial admissibility
# =============================================================================


def admissibility(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    loop = ctx.loop
    rows = []
    found = 0
    for candidate in enumerate_loops(loop.base, ctx.config.system.max_len):
        report = is_admissible_fixed_point(candidate, ctx.config.tolerances.hyperbolicity)
        ok = report.accepted if report.genus >= 2 else report.usable
        found += ok
        rows.append({
            "loop": candidate.code,
            "length": len(candidate),
            "positive_power": report.positive_power,
            "hyperbolic": report.hyperbolic,
            "genus": report.genus,
            "marked_points": report.marked_points,
            "perron_value": report.perron_value,
            "admissible": ok,
            "flags": "; ".join(report.flags),
        })
    ctx.csv("loops.csv", rows)

    spec = spectrum(loop.matrix, ctx.config.tolerances.hyperbolicity)
    selected = is_admissible_fixed_point(loop, ctx.config.tolerances.hyperbolicity)
    counted = intersection_matrix_from_partition(ctx.T0, loop)
    perron_error = float(np.max(np.abs(spec.perron_vector - ctx.T0.lengths)))
    ctx.json("spectrum.json", spec)
    measured = {
        "loops": len(rows),
        "admissible_loops": found,
        "loop": str(loop),
        "genus": selected.genus,
        "marked_points": selected.marked_points,
        "positive_power": selected.positive_power,
        "determinant": loop.matrix.determinant(),
        "perron_value": spec.perron_value,
        "perron_vector_error": perron_error,
        "reciprocal_pairing_error": spec.reciprocal_pairing_error,
        "constraint_invariance_error": constraint_invariance_error(loop.matrix, ctx.T0.lengths),
    }
    checks = {
        "admissible_loop_found": found > 0,
        "geometric_count": counted == loop.matrix,
        "unimodular": abs(loop.matrix.determinant()) == 1,
        "perron_vector": perron_error <= 1e-10,
        "reciprocal_spectrum": spec.reciprocal_pairing_error <= ctx.config.tolerances.reciprocal,
        "positive_power": selected.positive_power is not None,
    }
    return checks, measured


# =============================================================================
# E2: fixed point and splitting
# =============================================================================


def fixed_point(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    tol = ctx.config.tolerances
    T0 = ctx.T0
    image = renormalize(T0, ctx.loop, tol.connection)
    c0, c1 = distance(image, T0, r=0), distance(image, T0, r=1)
    blocks = derivative_block_check(T0, ctx.loop)
    unstable = int(np.sum(blocks.moduli > 1.0 + tol.unit_gap))
    stable = int(np.sum(blocks.moduli < 1.0 - tol.unit_gap))
    expected = expected_unstable_dimension(ctx.loop)
    ctx.json("fixed_point.json", T0)
    ctx.csv(
        "jacobian.csv",
        [
            {"index": k, "modulus": m, "predicted": p}
            for k, (m, p) in enumerate(zip(blocks.moduli, blocks.predicted_moduli))
        ],
    )
    ctx.csv("sweep.csv", [{"step": h, "difference": v} for h, v in blocks.sweep])
    measured = {
        "c0": c0,
        "c1": c1,
        "unstable": unstable,
        "stable": stable,
        "expected_unstable": expected,
        "cross_block_norm": blocks.cross_block_norm,
        "length_expansion": blocks.length_expansion,
        "prediction_error": blocks.prediction_error,
        "fd_step": blocks.step,
    }
    checks = {
        "fixed_point_c0": c0 <= tol.fixed_point_c0,
        "fixed_point_c1": c1 <= tol.fixed_point_c1,
        "unstable_dimension": unstable == expected,
        "hyperbolic": unstable + stable == blocks.moduli.size,
    }
    return checks, measured


# =============================================================================
# E3: slope cocycle
# =============================================================================


def slope_cocycle(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    chart = AffineChart(ctx.T0.lengths)
    radius = ctx.config.shadowing.radius
    points = [ctx.rng.uniform(-radius, radius, chart.dim) for _ in range(ctx.config.budgets.samples)]

    def error(xi: np.ndarray) -> float:
        T = Giet.from_aiet(chart.to_aiet(xi, ctx.loop.base), ctx.grid_size)
        return slope_cocycle_error(T, ctx.loop)

    errors = ctx.map(error, points)
    ctx.csv("cocycle.csv", [{"sample": k, "error": e} for k, e in enumerate(errors)])
    worst = max(errors)
    return {"cocycle": worst <= ctx.config.tolerances.cocycle}, {
        "samples": len(errors),
        "max_error": worst,
    }


# =============================================================================
# E4: estimate battery
# =============================================================================


def estimate_battery(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    amplitude = ctx.config.shadowing.bump_amplitude
    depth = ctx.config.budgets.depth
    profiles = ctx.bump_profiles(amplitude)
    T = Giet(ctx.T0.affine, profiles)
    trace = renormalization_trace(T, ctx.loop, depth)
    ctx.jsonl("trace.jsonl", [lvl.to_record() for lvl in trace.levels])
    ctx.csv("levels.csv", TraceDataFrames(trace).levels)

    reports: list[BoundReport] = []
    partition = ctx.partitions(T, [2])[0]
    reports.extend(tower_distortion_check(T, partition, j) for j in range(ctx.loop.d))
    reports.append(profile_c1_check(T, ctx.loop, trace.depth, trace))
    reports.append(c2_check(T, ctx.loop, trace.depth, trace))

    coefficients = ctx.rng.uniform(-1.0, 1.0, 2)

    def family(eps: float) -> Giet:
        bumps = tuple(bump(eps * coefficients, grid=ctx.grid_size) for _ in range(ctx.loop.d))
        return Giet(ctx.T0.affine, bumps)

    reports.append(c3_check(family, ctx.loop, min(depth, 4)))
    ctx.csv("estimates.csv", reports_frame(reports, system=ctx.config.system.name))

    backend_error = 0.0
    for n in range(1, min(trace.depth, 5) + 1):
        level = trace.levels[n].giet
        for j in range(ctx.loop.d):
            x = level.affine.top_starts[j] + level.lengths[j] * np.linspace(0.01, 0.99, 100)
            direct = orbit_eval(T, ctx.loop, n, j, x, trace=trace)
            backend_error = max(backend_error, float(np.max(np.abs(direct - level.eval(x)))))

    phis = trace.levels[1].giet.profiles
    second = second_derivative_composition(phis)
    eta = eta_derivative_composition(phis)
    measured = {
        "depth": trace.depth,
        "margins": {f"{r.name}_{k}": r.margin for k, r in enumerate(reports)},
        "measured_M": max(reports[ctx.loop.d].values, default=0.0),
        "second_derivative_composition_error": second.max_error,
        "eta_composition_error": eta.max_error,
        "backend_error": backend_error,
    }
    checks = {f"{r.name}_{k}": r.passed for k, r in enumerate(reports)}
    checks["infinitely_renormalisable"] = trace.infinitely_renormalisable
    checks["composition_formulas"] = max(second.max_error, eta.max_error) <= 1e-6
    checks["backend_agreement"] = backend_error <= 1e-7
    return checks, measured


# =============================================================================
# Shooting helpers
# =============================================================================


def shadowing_problems(ctx: ExperimentContext, count: int) -> list[ShadowingProblem]:
    """``count`` random (s, h) in the ∫η = 0 slice, drawn before any work is distributed."""
    cfg = ctx.config.shadowing
    system = ctx.system
    problems = []
    for _ in range(count):
        s = ctx.rng.uniform(-cfg.radius, cfg.radius, system.dim_stable)
        problems.append(
            ShadowingProblem(
                system=system,
                s=s,
                profiles=ctx.bump_profiles(cfg.bump_amplitude),
                n_max=ctx.config.depth,
                epsilon=cfg.epsilon,
                method=cfg.method,
                workers=ctx.config.budgets.workers,
                seed=ctx.config.seed,
            )
        )
    return problems


def _shoot(problem: ShadowingProblem) -> ShadowingResult:
    """Best effort shot; callers judge the reached depth."""
    return shoot(problem, require_depth=0)


# =============================================================================
# E5: Δₙ decay
# =============================================================================


def partition_decay(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    levels = list(range(1, 11))
    theta = spectrum(ctx.loop.matrix).perron_value
    fixed_parts = ctx.partitions(ctx.T0, levels)
    problem = shadowing_problems(ctx, 1)[0]
    result = _shoot(problem)
    T = problem.giet(result.u_star)
    shoot_parts = ctx.partitions(T, [k for k in levels if k <= result.depth])
    ctx.csv("fixed_partitions.csv", partitions_frame(fixed_parts))
    ctx.csv("shoot_partitions.csv", partitions_frame(shoot_parts))

    def ratios(parts: list[DynamicalPartition]) -> list[float]:
        return [b.delta / a.delta for a, b in zip(parts[:-1], parts[1:])]

    rate, r2 = _fit_ratio([p.level for p in fixed_parts], [p.delta for p in fixed_parts])
    fixed_ratios, shoot_ratios = ratios(fixed_parts), ratios(shoot_parts)
    measured = {
        "inverse_perron": 1.0 / theta,
        "fixed_rate": rate,
        "fixed_r_squared": r2,
        "fixed_max_ratio": max(fixed_ratios, default=math.nan),
        "shoot_depth": result.depth,
        "shoot_max_ratio": max(shoot_ratios, default=math.nan),
    }
    checks = {
        "fixed_rate": rate is not None
        and abs(rate * theta - 1.0) <= ctx.config.tolerances.delta_ratio,
        "fixed_contracting": bool(fixed_ratios) and max(fixed_ratios) < 1.0,
        "shoot_contracting": bool(shoot_ratios) and max(shoot_ratios) < 1.0,
    }
    return checks, measured


# =============================================================================
# E6: convergence to Moebius GIETs
# =============================================================================


def moebius_convergence(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    from gietlab.giet import profile_distance

    a, b = 1.3, 0.8
    product = compose(moebius(a, ctx.grid_size), moebius(b, ctx.grid_size))
    group_error = profile_distance(product, moebius(a * b, ctx.grid_size), r=1)
    fit = moebius_fit(moebius(a, ctx.grid_size))

    problem = shadowing_problems(ctx, 1)[0]
    result = _shoot(problem)
    T = problem.giet(result.u_star)
    diagnostics = convergence_diagnostics(
        T, ctx.loop, result.depth, T0=ctx.T0, partition_budget=ctx.config.budgets.partition_floors
    )
    ctx.csv("convergence.csv", convergence_frame(diagnostics))
    series = diagnostics.series("moebius")
    measured = {
        "group_error": group_error,
        "fit_parameter": fit.parameter,
        "fit_residual": fit.residual,
        "depth": result.depth,
        "rates": diagnostics.rates,
        "r_squared": diagnostics.r_squared,
    }
    rate = diagnostics.rates.get("moebius")
    checks = {
        "moebius_group": group_error <= 1e-7,
        "moebius_fit": fit.residual <= 1e-8 and abs(fit.parameter - a) <= 1e-8,
        "moebius_decay": series[-1] < series[1] and rate is not None and rate < 1.0,
    }
    return checks, measured


# =============================================================================
# E7: shadowing and convergence to T₀
# =============================================================================

LIPSCHITZ_LEVELS = ((1e-2, 1.1), (1e-3, 1.02))


def shadowing(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    cfg = ctx.config.shadowing
    problems = shadowing_problems(ctx, cfg.samples)
    results = ctx.map(_shoot, problems)
    rows = []
    for k, result in enumerate(results):
        later = result.correction_ratios()[1:]
        _, r2 = _fit_ratio([d.level for d in result.distances], [d.c1 for d in result.distances])
        rows.append({
            "sample": k,
            "depth": result.depth,
            "method": result.method,
            "succeeded": result.succeeded,
            "c1_rate": result.c1_rate,
            "c1_r_squared": r2,
            "max_correction_ratio": max(later, default=math.nan),
        })
    ctx.csv("shoot.csv", rows)
    ctx.csv("shadow_orbit.csv", shadowing_frame(results[0]))
    ctx.jsonl("results.jsonl", results)

    base = problems[0].giet(results[0].u_star)
    pushed = results[0].u_star + cfg.radius * np.eye(ctx.system.dim_unstable)[0]
    cone = cone_check(
        problems[0].giet(pushed), base, ctx.system.splitting, cfg.cone_delta, loop=ctx.loop
    )

    lipschitz: dict[str, float] = {}
    lipschitz_ok = True
    for radius, bound in LIPSCHITZ_LEVELS:
        worst = 0.0
        for _ in range(cfg.lipschitz_pairs):
            T1 = Giet(ctx.T0.affine, ctx.bump_profiles(radius))
            T2 = Giet(ctx.T0.affine, ctx.bump_profiles(radius))
            estimate = eta_lipschitz_estimate(T1, T2, ctx.loop)
            if estimate.defined:
                worst = max(worst, float(estimate.ratio or 0.0))
        lipschitz[f"{radius:g}"] = worst
        lipschitz_ok = lipschitz_ok and worst <= bound

    later_ratios = [r["max_correction_ratio"] for r in rows if math.isfinite(r["max_correction_ratio"])]
    measured = {
        "samples": len(results),
        "required_depth": cfg.min_depth,
        "depths": [r.depth for r in results],
        "expansion": list(results[0].expansion),
        "max_correction_ratio": max(later_ratios, default=math.nan),
        "c1_rates": [r.c1_rate for r in results],
        "cone": {
            "in_cone": cone.in_cone,
            "expansion": cone.expansion,
            "image_ratio": cone.image_ratio,
        },
        "lipschitz": lipschitz,
    }
    checks = {
        "shadowed": all(r.succeeded and r.depth >= cfg.min_depth for r in results),
        "corrections_contract": all(v <= 0.9 for v in later_ratios),
        "c1_decay": all(r["c1_rate"] is not None and r["c1_rate"] < 1.0 for r in rows),
        "c1_fit": all(
            r["c1_r_squared"] is not None
            and r["c1_r_squared"] >= ctx.config.tolerances.shadow_r_squared
            for r in rows
        ),
        "cone_expands": cone.in_cone and (cone.expansion or 0.0) > 1.0,
        "eta_lipschitz": lipschitz_ok,
    }
    return checks, measured


# =============================================================================
# E8: cohomology, conjugacy and the ratio test
# =============================================================================


def cohomology(ctx: ExperimentContext) -> tuple[Checks, Measured]:
    from gietlab.cohomology import (
        InducedSums,
        birkhoff_bound,
        birkhoff_sums,
        direct_birkhoff_bound,
        dissipative_aiet,
        fine_grid_ratio_test,
        invariant_density_and_conjugacy,
        log_derivative,
        minimal_breakpoint_gap,
        pushforward_check,
        salem_map,
        solve_cohomological,
        special_log_derivative,
    )
    from gietlab.exceptions import BoundednessError

    cfg = ctx.config.cohomology
    tol = ctx.config.tolerances
    solver = {
        "orbit_length": cfg.orbit_length,
        "x0": cfg.x0,
        "grid_size": cfg.grid_size,
        "growth_threshold": cfg.growth_threshold,
    }
    problem = shadowing_problems(ctx, 1)[0]
    result = _shoot(problem)
    T = problem.giet(result.u_star)

    solution = solve_cohomological(T, log_derivative(T), **solver)
    density, conjugacy = invariant_density_and_conjugacy(T, ctx.T0, **solver)
    ctx.csv(
        "density.csv",
        {"x": density.grid, "density": density.values, "u": density.solution.values},
    )

    k = min(3, result.depth)
    n = heights(ctx.loop, k)[0]
    log_sums = InducedSums.log_derivative(T, ctx.loop, k)
    special = special_log_derivative(T, ctx.loop, n, cfg.x0, k, log_sums.trace)
    direct = float(birkhoff_sums(T, log_derivative(T), n, [cfg.x0])[-1, 0])
    special_bound = birkhoff_bound(
        T, ctx.loop, log_derivative(T), n, k=k, times=range(1, n + 1), sums=log_sums
    )
    direct_bound = direct_birkhoff_bound(T, log_derivative(T), n)

    control = dissipative_aiet()
    try:
        solve_cohomological(control, log_derivative(control), **solver)
        control_raised = False
    except BoundednessError:
        control_raised = True

    levels = list(range(1, cfg.ratio_levels + 1))
    parts = ctx.partitions(ctx.T0, levels)
    ratio = fine_grid_ratio_test(conjugacy, parts)
    identity = fine_grid_ratio_test(lambda x: np.asarray(x, dtype=float), parts)
    singular = fine_grid_ratio_test(salem_map(), parts)
    pushforward = pushforward_check(density, conjugacy, [p for p in parts if p.level <= 6])
    ctx.csv("ratio_test.csv", fine_grid_frame(ratio))
    ctx.csv("salem_ratio_test.csv", fine_grid_frame(singular))

    measured = {
        "depth": result.depth,
        "birkhoff_growth": solution.growth,
        "birkhoff_bound": solution.bound,
        "cohomological_residual": solution.residual,
        "conjugacy_residual": conjugacy.residual,
        "conjugacy_c1_distance": conjugacy.c1_distance,
        "breakpoint_error": conjugacy.breakpoint_error,
        "special_sum_error": abs(special - direct),
        "special_bound": special_bound,
        "direct_bound": direct_bound,
        "pushforward_error": pushforward.max_error,
        "fine_grid_failures": ratio.failures,
        "breakpoint_gap": minimal_breakpoint_gap(T, 1000),
        "ratio_rate": ratio.rate,
        "ratio_r_squared": ratio.r_squared,
        "ratio_delta": ratio.delta,
        "refinement": max(ratio.refinement, default=0),
        "adjacency": max(ratio.adjacency, default=math.nan),
        "salem_discrepancies": singular.discrepancies,
    }
    checks = {
        "bounded_sums": solution.growth <= 1.0 + tol.growth,
        "cohomological_residual": solution.residual <= tol.residual,
        "conjugacy": conjugacy.residual <= tol.conjugacy,
        "special_sums": abs(special - direct) <= 1e-8,
        "special_bound": abs(special_bound - direct_bound) <= 1e-8 * max(1.0, direct_bound),
        "pushforward": pushforward.passed,
        "negative_control": control_raised,
        "fine_grid": ratio.grid_ok,
        "ratio_decay": ratio.r_squared is not None and ratio.r_squared >= tol.r_squared,
        "identity_control": max(identity.discrepancies, default=0.0) == 0.0,
    }
    return checks, measured


# =============================================================================
# Runner
# =============================================================================

Experiment = Callable[[ExperimentContext], "tuple[Checks, Measured]"]

EXPERIMENTS: dict[str, Experiment] = {
    "E1": admissibility,
    "E2": fixed_point,
    "E3": slope_cocycle,
    "E4": estimate_battery,
    "E5": partition_decay,
    "E6": moebius_convergence,
    "E7": shadowing,
    "E8": cohomology,
}


def _error_record(exc: GietLabError) -> dict[str, Any]:
    record = {"type": type(exc).__name__, "message": str(exc)}
    record.update({k: io.to_jsonable(v) for k, v in vars(exc).items()})
    return record


def artifact_directory(
    experiment: str, config: ExperimentConfig, output_dir: str | Path | None = None
) -> Path:
    """<output_dir>/<experiment>/<label>."""
    return Path(output_dir or config.output_dir) / experiment.upper() / config.run_label


def run_experiment(
    experiment: str,
    config: ExperimentConfig,
    output_dir: str | Path | None = None,
    loop: RauzyLoop | None = None,
) -> ExperimentResult:
    """Run one experiment and write its artifacts.

    Module errors are recorded in the summary instead of raised; config
    errors raise before anything is written.

    Raises:
        ConfigError: For an unknown experiment or an invalid system selector.
    """
    key = experiment.upper()
    if key not in EXPERIMENTS:
        raise ConfigError(f"Unknown experiment {experiment!r}", key="experiment", value=experiment)
    loop = resolve_system(config.system) if loop is None else loop
    directory = artifact_directory(key, config, output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    ctx = ExperimentContext(config=config, loop=loop, directory=directory)
    ctx.json("config.json", config.to_dict())
    result = ExperimentResult(experiment=key, system=str(loop), label=config.run_label)
    logger.info("experiment=%s system=%s dir=%s", key, loop, directory)
    try:
        result.checks, result.measured = EXPERIMENTS[key](ctx)
    except GietLabError as exc:
        logger.error("experiment=%s error=%s message=%s", key, type(exc).__name__, exc)
        result.error = _error_record(exc)
    result.artifacts = list(ctx.artifacts) + ["summary.json"]
    io.write_json(directory / "summary.json", result)
    logger.info("experiment=%s pass=%s", key, result.passed)
    return result

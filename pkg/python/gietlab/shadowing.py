"""Shooting for GIETs whose renormalisations stay near the fixed IET.

Given stable coordinates ``s`` and branch profiles ``h``, :func:`shoot`
searches the unstable coordinate ``u`` of the AIET part for which the orbit
Rᵏ(s, u, h) stays in the ε-ball around T₀ up to depth ``n_max``. The primary
scheme corrects ``u`` level by level with a damped Newton solve of
π_U(Rⁿ(s, u, h)) = 0; one-dimensional problems use bisection on the escape
side; a shrinking-box search is the fallback of both.

Example usage:

    from gietlab.shadowing import ShadowingProblem, build_system, shoot

    system = build_system(loop)
    result = shoot(ShadowingProblem(system, s=[0.0], profiles=bumps, n_max=10))
    print(result.depth, result.u_star)
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.stats import linregress

from gietlab.affine import (
    AffineChart,
    Splitting,
    derivative_block_check,
    fixed_aiet,
    splitting,
)
from gietlab.combinatorics import RauzyLoop
from gietlab.estimates import product_eta_distance
from gietlab.exceptions import (
    BudgetError,
    ConnectionError,
    NoShadowError,
    NotInDomainError,
    RenormalizationError,
    ShadowingError,
)
from gietlab.giet import Giet, cr_norm, distance, profile_distance
from gietlab.monotone import DEFAULT_GRID_SIZE, FloatArray, MonotoneMap, moebius, moebius_parameter
from gietlab.renorm import dynamical_partition, renormalization_trace, renormalize

logger = logging.getLogger(__name__)

ESCAPE_RADIUS = 1e-2
CONE_DELTA = 0.5
SLICE_TOLERANCE = 1e-10
NEWTON_MAX_ITER = 8
NEWTON_DAMPING_STEPS = 6
BISECTION_MAX_ITER = 200
BOX_ROUNDS = 30
BOX_CANDIDATES = 24


# =============================================================================
# System and problem
# =============================================================================


@dataclass(frozen=True, eq=False)
class ShadowingSystem:
    """The fixed IET of a loop with its splitting.

    Attributes:
        loop: The renormalisation loop.
        T0: The fixed IET.
        splitting: Unstable/stable splitting in chart coordinates.
        jacobian: Finite-difference Jacobian of R in the chart at T₀.
    """

    loop: RauzyLoop
    T0: Giet
    splitting: Splitting
    jacobian: FloatArray

    @property
    def chart(self) -> AffineChart:
        return self.splitting.chart

    @property
    def dim_unstable(self) -> int:
        return self.splitting.dim_unstable

    @property
    def dim_stable(self) -> int:
        return self.splitting.dim_stable

    def expansion(self) -> tuple[float, float]:
        """(λ₁, λ₂): smallest and largest unstable eigenvalue moduli of the Jacobian."""
        moduli = np.abs(np.linalg.eigvals(self.jacobian))
        unstable = moduli[moduli > 1.0]
        return float(unstable.min()), float(unstable.max())

    def giet(self, u: ArrayLike, s: ArrayLike, profiles: Sequence[MonotoneMap]) -> Giet:
        xi = self.splitting.point(u, s)
        return Giet(self.chart.to_aiet(xi, self.loop.base), tuple(profiles))

    def unstable_coordinates(self, T: Giet) -> FloatArray:
        return self.splitting.project_unstable(self.chart.from_aiet(T.affine))


def build_system(loop: RauzyLoop, n: int = DEFAULT_GRID_SIZE) -> ShadowingSystem:
    """Fixed IET, finite-difference Jacobian and splitting of ``loop``."""
    T0 = fixed_aiet(loop, n)
    blocks = derivative_block_check(T0, loop)
    split = splitting(loop.matrix, T0.lengths, jacobian=blocks.jacobian)
    logger.info(
        "system loop=%s unstable=%d stable=%d", loop, split.dim_unstable, split.dim_stable
    )
    return ShadowingSystem(loop=loop, T0=T0, splitting=split, jacobian=blocks.jacobian)


@dataclass(frozen=True, eq=False)
class ShadowingProblem:
    """Inputs of one shooting run.

    Attributes:
        system: Loop, T₀ and splitting.
        s: Stable coordinates of the AIET part.
        profiles: Branch profiles h (identity profiles when None).
        n_max: Target depth.
        epsilon: Escape radius (C¹ distance to T₀).
        slice_only: Require ∫η = 0 for the assembled GIET.
        method: "auto", "newton", "bisection" or "box".
        workers: Threads for candidate evaluation in the box search.
        seed: Seed of the box search.
    """

    system: ShadowingSystem
    s: FloatArray
    profiles: tuple[MonotoneMap, ...] | None = None
    n_max: int = 10
    epsilon: float = ESCAPE_RADIUS
    slice_only: bool = True
    method: str = "auto"
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        object.__setattr__(self, "s", s)
        if s.size != self.system.dim_stable:
            raise ShadowingError(
                f"Expected {self.system.dim_stable} stable coordinates, got {s.size}"
            )
        if self.profiles is None:
            n = self.system.T0.profiles[0].size
            object.__setattr__(
                self, "profiles", tuple(MonotoneMap.identity(n) for _ in range(self.system.T0.d))
            )
        if self.method not in ("auto", "newton", "bisection", "box"):
            raise ShadowingError(f"Unknown search method {self.method!r}")
        if self.slice_only:
            total = sum(p.eta_integral() for p in self.profiles or ())
            if abs(total) > SLICE_TOLERANCE:
                raise ShadowingError(f"Profiles leave the ∫η = 0 slice (∫η = {total:.3e})")

    def giet(self, u: ArrayLike) -> Giet:
        assert self.profiles is not None
        return self.system.giet(u, self.s, self.profiles)


@dataclass(frozen=True)
class LevelDistances:
    """Distances of RᵏT to T₀."""

    level: int
    c0: float
    c1: float
    eta: float


@dataclass
class ShadowingResult:
    """Output of :func:`shoot`.

    Attributes:
        u_star: Unstable coordinates found.
        depth: Deepest level whose whole orbit stayed in the ε-ball.
        n_max: Requested depth.
        method: The search that produced ``u_star``.
        distances: Per-level distances to T₀ along the orbit of ``u_star``.
        corrections: ‖v_n‖ = ‖u_n - u_{n-1}‖ of the nested correction scheme.
        search_path: (u, depth) pairs visited by bisection or the box search.
        c1_rate: Fitted geometric decay of the C¹ distances (None if undefined).
        expansion: (λ₁, λ₂) of the system.
    """

    u_star: FloatArray
    depth: int
    n_max: int
    method: str
    distances: list[LevelDistances] = field(default_factory=list)
    corrections: list[float] = field(default_factory=list)
    search_path: list[tuple[Any, int]] = field(default_factory=list)
    c1_rate: float | None = None
    expansion: tuple[float, float] = (math.nan, math.nan)

    @property
    def succeeded(self) -> bool:
        return self.depth >= self.n_max

    def correction_ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.corrections[:-1], self.corrections[1:]) if a > 0.0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "u_star": np.asarray(self.u_star).tolist(),
            "depth": self.depth,
            "n_max": self.n_max,
            "method": self.method,
            "succeeded": self.succeeded,
            "distances": [vars(d) for d in self.distances],
            "corrections": self.corrections,
            "correction_ratios": self.correction_ratios(),
            "c1_rate": self.c1_rate,
            "expansion": list(self.expansion),
        }


# =============================================================================
# Orbits
# =============================================================================


def escape_depth(problem: ShadowingProblem, u: ArrayLike) -> int:
    """Number of levels k <= n_max with R⁰..Rᵏ all within ε of T₀."""
    system = problem.system
    try:
        T = problem.giet(u)
    except RenormalizationError:
        return -1
    if distance(T, system.T0, r=1) > problem.epsilon:
        return -1
    trace = renormalization_trace(
        T, system.loop, problem.n_max, radius=problem.epsilon, reference=system.T0
    )
    return trace.depth - 1 if trace.exit_reason == "radius" else trace.depth


def unstable_image(problem: ShadowingProblem, u: ArrayLike, n: int) -> FloatArray | None:
    """π_U(Rⁿ(s, u, h)), or None when the orbit leaves the domain of R."""
    try:
        T = problem.giet(u)
        for _ in range(n):
            T = renormalize(T, problem.system.loop)
    except (ConnectionError, NotInDomainError, RenormalizationError):
        return None
    return problem.system.unstable_coordinates(T)


def escape_side(problem: ShadowingProblem, u: float) -> tuple[int, int]:
    """(sign of the unstable coordinate at escape, depth); sign 0 when no escape."""
    system = problem.system
    T = problem.giet([u])
    for k in range(1, problem.n_max + 1):
        try:
            T = renormalize(T, system.loop)
        except (ConnectionError, NotInDomainError):
            return (1 if u > 0 else -1), k - 1
        if distance(T, system.T0, r=1) > problem.epsilon:
            sign = float(system.unstable_coordinates(T)[0])
            return (1 if sign > 0 else -1), k - 1
    return 0, problem.n_max


def level_distances(problem: ShadowingProblem, u: ArrayLike) -> list[LevelDistances]:
    system = problem.system
    trace = renormalization_trace(problem.giet(u), system.loop, problem.n_max)
    return [
        LevelDistances(
            level=lvl.level,
            c0=distance(lvl.giet, system.T0, r=0),
            c1=distance(lvl.giet, system.T0, r=1),
            eta=product_eta_distance(lvl.giet, system.T0),
        )
        for lvl in trace.levels
    ]


# =============================================================================
# Searches
# =============================================================================


def _newton(problem: ShadowingProblem) -> tuple[FloatArray, int, list[float]]:
    """Nested damped Newton on π_U(Rⁿ) = 0 for n = 1..n_max."""
    dim = problem.system.dim_unstable
    u = np.zeros(dim)
    corrections: list[float] = []
    jac_norm = 1.0
    tolerance = 1e-3 * problem.epsilon
    depth = 0
    for n in range(1, problem.n_max + 1):
        previous = u.copy()
        g = unstable_image(problem, u, n)
        if g is None:
            break
        for _ in range(NEWTON_MAX_ITER):
            if np.linalg.norm(g) <= tolerance:
                break
            h = 1e-3 * problem.epsilon / jac_norm
            columns = []
            for k in range(dim):
                e = np.zeros(dim)
                e[k] = h
                plus = unstable_image(problem, u + e, n)
                minus = unstable_image(problem, u - e, n)
                if plus is None or minus is None:
                    columns = []
                    break
                columns.append((plus - minus) / (2.0 * h))
            if not columns:
                break
            J = np.column_stack(columns)
            jac_norm = max(float(np.linalg.norm(J, 2)), 1.0)
            step = np.linalg.lstsq(J, -g, rcond=None)[0]
            for damping in range(NEWTON_DAMPING_STEPS):
                trial = u + step / 2**damping
                g_trial = unstable_image(problem, trial, n)
                if g_trial is not None and np.linalg.norm(g_trial) < np.linalg.norm(g):
                    u, g = trial, g_trial
                    break
            else:
                break
        if np.linalg.norm(g) > tolerance:
            logger.info("newton stalled level=%d residual=%.3e", n, float(np.linalg.norm(g)))
            break
        corrections.append(float(np.linalg.norm(u - previous)))
        depth = n
        logger.info(
            "newton level=%d correction=%.3e residual=%.3e",
            n,
            corrections[-1],
            float(np.linalg.norm(g)),
        )
    return u, depth, corrections


def _bisection(problem: ShadowingProblem) -> tuple[FloatArray, int, list[tuple[Any, int]]]:
    lo, hi = -problem.epsilon, problem.epsilon
    side_lo, _ = escape_side(problem, lo)
    side_hi, _ = escape_side(problem, hi)
    path: list[tuple[Any, int]] = []
    best_u, best_depth = 0.0, -1
    if side_lo == side_hi and side_lo != 0:
        return np.array([best_u]), best_depth, path
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        side, depth = escape_side(problem, mid)
        path.append((mid, depth))
        if depth > best_depth:
            best_u, best_depth = mid, depth
        if side == 0:
            break
        if side == side_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300):
            break
    logger.info("bisection u=%.17g depth=%d steps=%d", best_u, best_depth, len(path))
    return np.array([best_u]), best_depth, path


def _box(problem: ShadowingProblem, start: FloatArray) -> tuple[FloatArray, int, list[tuple[Any, int]]]:
    rng = np.random.default_rng(problem.seed)
    dim = problem.system.dim_unstable
    center = np.asarray(start, dtype=float)
    best_depth = escape_depth(problem, center)
    radius = problem.epsilon
    path: list[tuple[Any, int]] = [(center.tolist(), best_depth)]
    for _ in range(BOX_ROUNDS):
        if best_depth >= problem.n_max:
            break
        candidates = center + radius * rng.uniform(-1.0, 1.0, size=(BOX_CANDIDATES, dim))
        if problem.workers > 1:
            with ThreadPoolExecutor(max_workers=problem.workers) as pool:
                depths = list(pool.map(lambda c: escape_depth(problem, c), candidates))
        else:
            depths = [escape_depth(problem, c) for c in candidates]
        path.extend((c.tolist(), dep) for c, dep in zip(candidates, depths))
        k = int(np.argmax(depths))
        if depths[k] >= best_depth:
            center, best_depth = candidates[k], depths[k]
        radius *= 0.5
    logger.info("box search depth=%d radius=%.3e", best_depth, radius)
    return center, best_depth, path


def _fit_rate(levels: Sequence[int], values: Sequence[float]) -> tuple[float | None, float | None]:
    """exp(slope) and r² of a least-squares fit of log(value) against level."""
    pairs = [(k, v) for k, v in zip(levels, values) if k >= 1 and v > 0.0 and np.isfinite(v)]
    if len(pairs) < 3:
        return None, None
    ks, vs = zip(*pairs)
    fit = linregress(ks, np.log(vs))
    return float(np.exp(fit.slope)), float(fit.rvalue**2)


def shoot(problem: ShadowingProblem, require_depth: int | None = None) -> ShadowingResult:
    """Find u keeping the orbit of (s, u, h) in the ε-ball up to depth n_max.

    Args:
        problem: The shooting problem.
        require_depth: Minimum acceptable depth (defaults to ``n_max``).

    Raises:
        NoShadowError: If no candidate reaches ``require_depth``.
    """
    required = problem.n_max if require_depth is None else require_depth
    dim = problem.system.dim_unstable
    method = problem.method
    if method == "auto":
        method = "bisection" if dim == 1 else "newton"
    corrections: list[float] = []
    path: list[tuple[Any, int]] = []
    if method == "newton":
        u, _, corrections = _newton(problem)
    elif method == "bisection":
        u, _, path = _bisection(problem)
    else:
        u = np.zeros(dim)
    depth = escape_depth(problem, u)
    if depth < required and problem.method in ("auto", "box"):
        logger.info("falling back to box search from depth=%d", depth)
        u_box, depth_box, box_path = _box(problem, u)
        path.extend(box_path)
        if depth_box > depth:
            u, depth, method = u_box, depth_box, "box"
    if depth < required:
        raise NoShadowError(
            f"No unstable coordinate keeps the orbit in the ball beyond depth {depth}",
            best_depth=max(depth, 0),
            u_best=u,
        )
    distances = level_distances(problem, u)
    rate, _ = _fit_rate([d.level for d in distances], [d.c1 for d in distances])
    result = ShadowingResult(
        u_star=u,
        depth=depth,
        n_max=problem.n_max,
        method=method,
        distances=distances,
        corrections=corrections,
        search_path=path,
        c1_rate=rate,
        expansion=problem.system.expansion(),
    )
    logger.info("shoot method=%s depth=%d rate=%s", method, depth, rate)
    return result


# =============================================================================
# Cones
# =============================================================================


@dataclass(frozen=True)
class ConeReport:
    """Cone membership of a GIET around a base point.

    Attributes:
        in_cone: ‖s‖ <= δ‖u‖ and d_η <= δ‖u‖.
        unstable_norm: ‖u‖ in the adapted norm.
        stable_ratio: ‖s‖ / ‖u‖.
        eta_ratio: d_η / ‖u‖.
        expansion: ‖u(R x) - u(R base)‖ / ‖u(x) - u(base)‖ (None when not computed).
        image_ratio: max(stable_ratio, eta_ratio) of the image pair.
    """

    in_cone: bool
    unstable_norm: float
    stable_ratio: float
    eta_ratio: float
    expansion: float | None = None
    image_ratio: float | None = None

    @property
    def ratio(self) -> float:
        return max(self.stable_ratio, self.eta_ratio)


def _cone_coordinates(split: Splitting, x: Giet, base: Giet) -> tuple[float, float, float]:
    chart = split.chart
    u, s = split.coordinates(chart.from_aiet(x.affine) - chart.from_aiet(base.affine))
    return float(np.linalg.norm(u)), float(np.linalg.norm(s)), product_eta_distance(x, base)


def cone_check(
    x: Giet,
    base: Giet,
    split: Splitting,
    delta: float = CONE_DELTA,
    loop: RauzyLoop | None = None,
) -> ConeReport:
    """Membership of x in the δ-cone at ``base``; with ``loop``, also measure R on the pair."""
    u, s, eta = _cone_coordinates(split, x, base)
    if u == 0.0:
        return ConeReport(False, 0.0, math.inf, math.inf)
    stable_ratio, eta_ratio = s / u, eta / u
    inside = stable_ratio <= delta and eta_ratio <= delta
    expansion = image_ratio = None
    if loop is not None:
        rx, rbase = renormalize(x, loop), renormalize(base, loop)
        u2, s2, eta2 = _cone_coordinates(split, rx, rbase)
        expansion = u2 / u
        image_ratio = max(s2, eta2) / u2 if u2 > 0.0 else math.inf
    return ConeReport(inside, u, stable_ratio, eta_ratio, expansion, image_ratio)


# =============================================================================
# Convergence diagnostics
# =============================================================================


@dataclass(frozen=True)
class MoebiusFit:
    """Moebius map with the same ∫η as f, and the C¹ residual."""

    parameter: float
    moebius: MonotoneMap
    residual: float


def moebius_fit(f: MonotoneMap) -> MoebiusFit:
    a = moebius_parameter(f)
    m = moebius(a, grid=f.size)
    return MoebiusFit(parameter=a, moebius=m, residual=profile_distance(f, m, r=1))


@dataclass
class ConvergenceDiagnostics:
    """Per-level distances along RⁿT and their fitted geometric rates.

    Attributes:
        records: One dict per level with delta, moebius, affine and fixed distances.
        rates: Fitted rate per sequence (None when undefined).
        r_squared: r² of each fit.
    """

    records: list[dict[str, float]]
    rates: dict[str, float | None]
    r_squared: dict[str, float | None]

    def series(self, key: str) -> list[float]:
        return [r[key] for r in self.records]


def convergence_diagnostics(
    T: Giet,
    loop: RauzyLoop,
    n_max: int,
    T0: Giet | None = None,
    partition_budget: int = 2_000_000,
) -> ConvergenceDiagnostics:
    """Δₙ, distances to the Moebius GIETs, to the AIETs and to T₀, per level."""
    trace = renormalization_trace(T, loop, n_max)
    if trace.depth < n_max:
        raise RenormalizationError(
            f"Not renormalisable {n_max} times ({trace.exit_reason})", step_index=trace.exit_step
        )
    T0 = fixed_aiet(loop, T.profiles[0].size) if T0 is None else T0
    records = []
    for lvl in trace.levels:
        try:
            delta = dynamical_partition(T, loop, lvl.level, trace=trace, budget=partition_budget).delta
        except BudgetError:
            delta = math.nan
        records.append(
            {
                "level": float(lvl.level),
                "delta": delta,
                "moebius": max(moebius_fit(p).residual for p in lvl.giet.profiles),
                "affine": cr_norm(lvl.giet, 1),
                "fixed": distance(lvl.giet, T0, r=1),
            }
        )
    rates: dict[str, float | None] = {}
    r_squared: dict[str, float | None] = {}
    levels = [int(r["level"]) for r in records]
    for key in ("delta", "moebius", "affine", "fixed"):
        rates[key], r_squared[key] = _fit_rate(levels, [r[key] for r in records])
    logger.info("diagnostics depth=%d rates=%s", n_max, rates)
    return ConvergenceDiagnostics(records=records, rates=rates, r_squared=r_squared)

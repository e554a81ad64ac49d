"""Birkhoff sums, the cohomological equation and the C¹ conjugacy.

The solver follows a single long orbit: u(Tⁿx₀) = Sₙf(x₀) solves
u∘T - u = f on the orbit, and u is extended to [0, 1] by linear
interpolation between orbit neighbours. The residual sup |u∘T - u - f| on
a uniform sample, not the construction, certifies the solution.

Long Birkhoff sums are read off the renormalisation: Tⁿ(x) climbs through
first returns to [0, X_1], .., [0, X_k] and then descends greedily, with
at most M returns per level, M the longest return time of one loop.

Example usage:

    from gietlab.cohomology import invariant_density_and_conjugacy

    density, conjugacy = invariant_density_and_conjugacy(T, T0)
    print(conjugacy.residual, conjugacy.c1_distance)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence, Union

import numpy as np
from numpy.polynomial import Chebyshev
from numpy.typing import ArrayLike
from scipy.integrate import cumulative_simpson, simpson
from scipy.stats import linregress

from gietlab.combinatorics import Permutation, RauzyLoop
from gietlab.estimates import BoundReport
from gietlab.exceptions import (
    BoundednessError,
    BudgetError,
    DegenerateDensityError,
    DomainError,
    RenormalizationError,
)
from gietlab.giet import Aiet, Giet
from gietlab.monotone import FloatArray, MonotoneMap, compose, invert, uniform_grid
from gietlab.renorm import (
    DynamicalPartition,
    RenormLevel,
    RenormTrace,
    heights,
    renormalization_trace,
)

logger = logging.getLogger(__name__)

ORBIT_BASE_POINT = 1e-7
ORBIT_LENGTH = 100_000
SOLUTION_GRID_SIZE = 4097
# Sups of a coboundary settle; the negative control must at least double from N to 4N.
GROWTH_THRESHOLD = 2.0
DENSITY_FLOOR = 1e-6
BREAKPOINT_MARGIN = 1e-6
HOLDER_MAX_PAIRS = 2_000_000
INDUCED_DEGREE = 32
BOUND_TIME_SAMPLES = 64
MAX_SPECIAL_DEPTH = 64
PUSHFORWARD_TOLERANCE = 1e-4
PUSHFORWARD_NODES = 17
FINE_GRID_MAX_ADJACENCY = 100.0
FINE_GRID_MAX_REFINEMENT = 64
NESTING_TOLERANCE = 1e-9

Observable = Callable[[FloatArray], FloatArray]
HomeomorphismLike = Union[MonotoneMap, Callable[[FloatArray], FloatArray]]
LevelSum = Callable[[float], float]


def log_derivative(T: Giet) -> Observable:
    """x ↦ log DT(x)."""
    return lambda x: np.log(np.asarray(T.deriv(x)))


# =============================================================================
# Special Birkhoff sums
# =============================================================================


def _require_trace(T: Giet, loop: RauzyLoop, k: int, trace: RenormTrace | None) -> RenormTrace:
    if trace is None or trace.depth < k:
        trace = renormalization_trace(T, loop, k)
    if trace.depth < k:
        raise RenormalizationError(
            f"Not renormalisable {k} times (stopped at level {trace.depth}, {trace.exit_reason})",
            step_index=trace.exit_step,
        )
    return trace


def _return_sum(T: Giet, f: Observable, height: int) -> Observable:
    def induced(z: FloatArray) -> FloatArray:
        z = np.asarray(z, dtype=float)
        total = np.zeros_like(z)
        for _ in range(height):
            total = total + np.asarray(f(z))
            z = np.asarray(T.eval(z))
        return total

    return induced


def _floor_index(lvl: RenormLevel, y: float) -> int:
    return int(lvl.giet.branch_of(y / lvl.scale)[0])


def _tabulated_level(
    T: Giet, f: Observable, lvl: RenormLevel, level_heights: Sequence[int], degree: int
) -> LevelSum:
    starts = lvl.scale * lvl.giet.affine.top_starts
    ends = starts + lvl.scale * lvl.giet.lengths
    pieces = [
        Chebyshev.interpolate(_return_sum(T, f, h), degree, domain=[a, b])
        for a, b, h in zip(starts, ends, level_heights)
    ]
    return lambda y: float(pieces[_floor_index(lvl, y)](y))


def _log_derivative_level(lvl: RenormLevel) -> LevelSum:
    return lambda y: math.log(float(lvl.giet.deriv(y / lvl.scale)))


def _observable_level(f: Observable) -> LevelSum:
    return lambda y: float(np.asarray(f(np.array([y])))[0])


@dataclass(frozen=True, eq=False)
class InducedSums:
    """Sums of an observable over one first return to [0, X_ℓ], for ℓ = 0..k.

    Level 0 is the observable itself. Above it the sum on the j-th floor of
    RˡT runs over l^j_ℓ iterates of T; ``tabulate`` stores it as one
    Chebyshev interpolant per floor, sampled at interior nodes only.

    Attributes:
        trace: Renormalisation trace supplying X_ℓ and the floors.
        levels: Per level, y ↦ S_{l^j_ℓ} f(y) for y on the j-th floor.
    """

    trace: RenormTrace
    levels: tuple[LevelSum, ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def __call__(self, level: int, y: float) -> float:
        return self.levels[level](y)

    @classmethod
    def tabulate(
        cls,
        T: Giet,
        loop: RauzyLoop,
        f: Observable,
        k: int,
        degree: int = INDUCED_DEGREE,
        trace: RenormTrace | None = None,
    ) -> InducedSums:
        """Interpolate the induced sums of f on every floor of levels 1..k.

        Raises:
            RenormalizationError: If T is not renormalisable k times.
        """
        trace = _require_trace(T, loop, k, trace)
        levels = [_observable_level(f)]
        for level in range(1, k + 1):
            levels.append(_tabulated_level(T, f, trace.levels[level], heights(loop, level), degree))
        logger.info("induced sums depth=%d degree=%d", k, degree)
        return cls(trace=trace, levels=tuple(levels))

    @classmethod
    def log_derivative(
        cls, T: Giet, loop: RauzyLoop, k: int, trace: RenormTrace | None = None
    ) -> InducedSums:
        """Induced sums of log DT, exact: log-derivatives of the renormalised maps."""
        trace = _require_trace(T, loop, k, trace)
        return cls(
            trace=trace,
            levels=tuple(_log_derivative_level(trace.levels[level]) for level in range(k + 1)),
        )


@dataclass(frozen=True)
class _Walk:
    word: tuple[int, ...]
    starts: tuple[float, ...]
    times: tuple[int, ...]
    points: tuple[float, ...]
    ascent: tuple[int, ...]
    descent: tuple[int, ...]


def _walk(trace: RenormTrace, loop: RauzyLoop, n: int, x: float, k: int) -> _Walk:
    level_heights = [heights(loop, level) for level in range(k + 1)]
    ascent = [0] * (k + 1)
    descent = [0] * k
    word: list[int] = []
    starts: list[float] = []
    times: list[int] = []
    points: list[float] = []
    remaining, y = n, float(x)

    def advance(level: int) -> bool:
        nonlocal remaining, y
        lvl = trace.levels[level]
        image, branch = lvl.giet.eval_with_branch(y / lvl.scale)
        time = level_heights[level][branch]
        if time > remaining:
            return False
        word.append(level)
        starts.append(y)
        y = lvl.scale * image
        remaining -= time
        times.append(n - remaining)
        points.append(y)
        return True

    # Climb: at most M - 1 returns to [0, X_ℓ] before entering [0, X_{ℓ+1}].
    top, stalled = 0, False
    while top < k and not stalled:
        while y >= trace.levels[top + 1].scale:
            if not advance(top):
                stalled = True
                break
            ascent[top] += 1
        else:
            top += 1
    if not stalled:
        while remaining > 0 and advance(k):
            ascent[k] += 1
    # Descend: greedy, each level stops inside one return of the level above.
    for level in range(top - 1, -1, -1):
        while remaining > 0 and advance(level):
            descent[level] += 1
    return _Walk(
        word=tuple(word),
        starts=tuple(starts),
        times=tuple(times),
        points=tuple(points),
        ascent=tuple(ascent),
        descent=tuple(descent),
    )


@dataclass(frozen=True)
class SpecialDecomposition:
    """Tⁿ(x) as first returns to [0, X_ℓ], climbing to level k then descending.

    With T_ℓ the first return of T to [0, X_ℓ]:

        Tⁿ = T_0^{b_0} ∘ .. ∘ T_{k-1}^{b_{k-1}} ∘ T_k^{a_k} ∘ .. ∘ T_0^{a_0}

    Attributes:
        n: The iterate.
        x: The starting point.
        coefficients: a_0..a_k, returns used on the way up and at level k.
        descent: b_0..b_{k-1}, returns used on the way down.
        bound: M, the longest return time of one loop.
        word: The level of every return, in order.
        times: The iterate of T reached after every return.
        points: The point after every return.
        end: Tⁿ(x).
        log_derivative: log DTⁿ(x) accumulated from the renormalised maps.
        partial_sums: S_t f(x) for t in ``times``, when induced sums were given.
    """

    n: int
    x: float
    coefficients: tuple[int, ...]
    descent: tuple[int, ...]
    bound: int
    word: tuple[int, ...]
    times: tuple[int, ...]
    points: tuple[float, ...]
    end: float
    log_derivative: float
    partial_sums: tuple[float, ...] = ()

    @property
    def within_bound(self) -> bool:
        return max(self.coefficients + self.descent, default=0) <= self.bound

    @property
    def returns(self) -> int:
        return len(self.word)


def special_birkhoff_decomposition(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    x: float,
    k: int,
    trace: RenormTrace | None = None,
    sums: InducedSums | None = None,
) -> SpecialDecomposition:
    """Split n into first-return times of levels 0..k along the orbit of x.

    At level ℓ the return map of T to [0, X_ℓ] is y ↦ X_ℓ (RˡT)(y / X_ℓ)
    with return time l^j_ℓ on the j-th floor. From x the walk climbs one
    level at a time until it enters [0, X_k], then spends the remaining
    time greedily from level k down to level 0.

    Raises:
        BudgetError: If n exceeds the longest return time of level k.
        RenormalizationError: If T is not renormalisable k times.
    """
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}", value=n, domain="n >= 0")
    budget = max(heights(loop, k))
    if n > budget:
        raise BudgetError(
            f"n = {n} exceeds the level-{k} return time budget {budget}",
            required=n,
            budget=budget,
        )
    if sums is not None:
        if sums.depth < k:
            raise DomainError(
                f"Induced sums reach level {sums.depth}, need {k}",
                value=sums.depth,
                domain=f">= {k}",
            )
        trace = sums.trace
    trace = _require_trace(T, loop, k, trace)
    walk = _walk(trace, loop, n, float(x), k)
    exact = InducedSums.log_derivative(T, loop, k, trace)
    log_d = math.fsum(exact(level, y) for level, y in zip(walk.word, walk.starts))
    partial: tuple[float, ...] = ()
    if sums is not None:
        partial = tuple(
            np.cumsum([sums(level, y) for level, y in zip(walk.word, walk.starts)]).tolist()
        )
    logger.debug(
        "special n=%d x=%.6g ascent=%s descent=%s", n, x, walk.ascent, walk.descent
    )
    return SpecialDecomposition(
        n=n,
        x=float(x),
        coefficients=walk.ascent,
        descent=walk.descent,
        bound=max(heights(loop, 1)),
        word=walk.word,
        times=walk.times,
        points=walk.points,
        end=walk.points[-1] if walk.points else float(x),
        log_derivative=log_d,
        partial_sums=partial,
    )


def special_log_derivative(
    T: Giet, loop: RauzyLoop, n: int, x: float, k: int, trace: RenormTrace | None = None
) -> float:
    """Sₙ log DT(x) from the derivatives of the renormalised maps."""
    return special_birkhoff_decomposition(T, loop, n, x, k, trace).log_derivative


def special_depth(loop: RauzyLoop, N: int) -> int:
    """Smallest k whose longest return time reaches N."""
    for k in range(MAX_SPECIAL_DEPTH + 1):
        if max(heights(loop, k)) >= N:
            return k
    raise BudgetError(
        f"N = {N} needs more than {MAX_SPECIAL_DEPTH} levels",
        required=N,
        budget=max(heights(loop, MAX_SPECIAL_DEPTH)),
    )


def birkhoff_sums(T: Giet, f: Observable, n: int, points: ArrayLike) -> FloatArray:
    """S_1 f .. S_n f at every point, shape (n, len(points))."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    sums = np.empty((n, x.size))
    total = np.zeros_like(x)
    for k in range(n):
        total = total + np.asarray(f(x))
        sums[k] = total
        x = np.asarray(T.eval(x))
    return sums


def _default_points() -> FloatArray:
    return np.linspace(ORBIT_BASE_POINT, 1.0 - ORBIT_BASE_POINT, 16)


def _sample_times(N: int, count: int = BOUND_TIME_SAMPLES) -> FloatArray:
    if N < 1:
        return np.empty(0, dtype=int)
    return np.unique(np.rint(np.linspace(1, N, min(N, count))).astype(int))


def direct_birkhoff_bound(
    T: Giet, f: Observable, N: int, points: ArrayLike | None = None
) -> float:
    """sup over n <= N and the sample points of |Sₙ f|, by iterating T."""
    if points is None:
        points = _default_points()
    if N < 1:
        return 0.0
    return float(np.max(np.abs(birkhoff_sums(T, f, N, points))))


def birkhoff_bound(
    T: Giet,
    loop: RauzyLoop,
    f: Observable,
    N: int,
    points: ArrayLike | None = None,
    *,
    k: int | None = None,
    times: Iterable[int] | None = None,
    sums: InducedSums | None = None,
    trace: RenormTrace | None = None,
) -> float:
    """sup |Sₙ f(x)| over the sample points and the special times up to N.

    Each sampled n <= N is split into first returns and Sₙ f accumulates
    the induced sums at O(k·M) cost per point. Every intermediate time a
    split visits counts towards the sup, so ``times=range(1, N + 1)``
    reproduces ``direct_birkhoff_bound``.

    Raises:
        RenormalizationError: If T is not renormalisable to the depth N needs.
    """
    if points is None:
        points = _default_points()
    if k is None:
        k = special_depth(loop, N) if sums is None else sums.depth
    if sums is None:
        sums = InducedSums.tabulate(T, loop, f, k, trace=trace)
    sampled = _sample_times(N) if times is None else [n for n in times if 1 <= n <= N]
    best = 0.0
    for x in np.atleast_1d(np.asarray(points, dtype=float)):
        for n in sampled:
            decomposition = special_birkhoff_decomposition(
                T, loop, int(n), float(x), k, sums=sums
            )
            if decomposition.partial_sums:
                best = max(best, max(abs(s) for s in decomposition.partial_sums))
    logger.info("birkhoff bound N=%d k=%d times=%d sup=%.6e", N, k, len(sampled), best)
    return best


def minimal_breakpoint_gap(T: Giet, n: int) -> float:
    """min distance from Tᵏ(break point), 1 <= k <= n, to a break point."""
    breaks = T.affine.top_starts[1:]
    if breaks.size == 0:
        return math.inf
    y = breaks.copy()
    gap = math.inf
    for _ in range(n):
        y = np.asarray(T.eval(y))
        gap = min(gap, float(np.min(np.abs(y[:, None] - breaks[None, :]))))
    logger.info("breakpoint gap n=%d gap=%.3e", n, gap)
    return gap


# =============================================================================
# Cohomological equation
# =============================================================================


@dataclass(frozen=True, eq=False)
class CohomSolution:
    """Sampled solution of u∘T - u = f.

    Attributes:
        grid: Sample abscissae.
        values: u on the grid, with u(0) = 0.
        residual: sup |u∘T - u - f| on interior samples.
        bound: sup |Sₙ f(x₀)| along the orbit.
        growth: Ratio of the sups over the full orbit and its first quarter.
        orbit_length: Number of orbit points used.
        x0: Base point of the orbit.
    """

    grid: FloatArray
    values: FloatArray
    residual: float
    bound: float
    growth: float
    orbit_length: int
    x0: float

    def __call__(self, x: ArrayLike) -> FloatArray:
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "residual": self.residual,
            "bound": self.bound,
            "growth": self.growth,
            "orbit_length": self.orbit_length,
            "x0": self.x0,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
        }


def _orbit(T: Giet, x0: float, length: int) -> FloatArray:
    points = np.empty(length)
    x = float(x0)
    for k in range(length):
        points[k] = x
        x = float(T.eval(x))
    return points


def _interior_samples(T: Giet, count: int) -> FloatArray:
    x = uniform_grid(count)[1:-1]
    breaks = T.affine.top_starts[1:]
    if breaks.size:
        near = np.min(np.abs(x[:, None] - breaks[None, :]), axis=1) < BREAKPOINT_MARGIN
        x = x[~near]
    return x


def solve_cohomological(
    T: Giet,
    f: Observable,
    orbit_length: int = ORBIT_LENGTH,
    x0: float = ORBIT_BASE_POINT,
    grid_size: int = SOLUTION_GRID_SIZE,
    growth_threshold: float = GROWTH_THRESHOLD,
) -> CohomSolution:
    """Solve u∘T - u = f along the orbit of x₀.

    The growth is the sup of |Sₙ f(x₀)| over the whole orbit divided by the
    sup over its first quarter, so N against 4N.

    Raises:
        BoundednessError: If that growth exceeds ``growth_threshold``.
    """
    orbit = _orbit(T, x0, orbit_length)
    sums = np.concatenate([[0.0], np.cumsum(np.asarray(f(orbit[:-1])))])
    quarter = max(orbit_length // 4, 1)
    sup_short = float(np.max(np.abs(sums[:quarter])))
    sup_long = float(np.max(np.abs(sums)))
    growth = sup_long / sup_short if sup_short > 0.0 else (1.0 if sup_long == 0.0 else math.inf)
    logger.info(
        "birkhoff orbit=%d sup_short=%.6e sup_long=%.6e growth=%.4f",
        orbit_length,
        sup_short,
        sup_long,
        growth,
    )
    if growth > growth_threshold:
        raise BoundednessError(
            f"Birkhoff sums grow by {growth:.3f} along the orbit",
            sup_short=sup_short,
            sup_long=sup_long,
            growth=growth,
        )
    order = np.argsort(orbit)
    grid = uniform_grid(grid_size)
    values = np.interp(grid, orbit[order], sums[order])
    values = values - values[0]
    x = _interior_samples(T, grid_size)
    u = lambda z: np.interp(z, grid, values)  # noqa: E731
    residual = float(np.max(np.abs(u(np.asarray(T.eval(x))) - u(x) - np.asarray(f(x)))))
    logger.info("cohomological residual=%.3e", residual)
    return CohomSolution(
        grid=grid,
        values=values,
        residual=residual,
        bound=sup_long,
        growth=growth,
        orbit_length=orbit_length,
        x0=x0,
    )


# =============================================================================
# Invariant density and conjugacy
# =============================================================================


@dataclass(frozen=True, eq=False)
class ConjugacyMap:
    """h with T∘h = h∘T₀.

    Attributes:
        h: The conjugacy, h = H⁻¹ with H the distribution function of μ.
        residual: sup |h∘T₀ - T∘h| on samples away from break points.
        c1_distance: ‖h - Id‖_{C¹}.
        breakpoint_error: max |h(break point of T₀) - break point of T|.
        holder: Hölder seminorm estimate of h' (None until computed).
    """

    h: MonotoneMap
    residual: float
    c1_distance: float
    breakpoint_error: float
    holder: float | None = None


@dataclass(frozen=True, eq=False)
class InvariantDensity:
    """μ on a grid, normalised to ∫μ = 1."""

    grid: FloatArray
    values: FloatArray
    solution: CohomSolution

    def __call__(self, x: ArrayLike) -> FloatArray:
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    def measure(self, a: ArrayLike, b: ArrayLike) -> FloatArray:
        """μ([a, b]) by Simpson's rule on each interval."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        s = np.linspace(0.0, 1.0, PUSHFORWARD_NODES)
        x = a[:, None] + (b - a)[:, None] * s[None, :]
        return simpson(self(x), x=x, axis=1)


def invariant_density(T: Giet, **solver_options: Any) -> InvariantDensity:
    """μ = exp(u) / ∫exp(u) for u solving u∘T - u = -log DT.

    Raises:
        DegenerateDensityError: If μ comes within 1e-6 of zero.
    """
    solution = solve_cohomological(
        T, lambda x: -np.log(np.asarray(T.deriv(x))), **solver_options
    )
    raw = np.exp(solution.values)
    mu = raw / float(simpson(raw, x=solution.grid))
    if float(mu.min()) < DENSITY_FLOOR:
        raise DegenerateDensityError(
            f"Invariant density reaches {mu.min():.3e}", min_density=float(mu.min())
        )
    return InvariantDensity(grid=solution.grid, values=mu, solution=solution)


def _distribution_map(density: InvariantDensity) -> MonotoneMap:
    grid, mu = density.grid, density.values
    H = cumulative_simpson(mu, x=grid, initial=0.0)
    total = H[-1]
    d2 = np.gradient(mu, grid)
    d3 = np.gradient(d2, grid)
    return MonotoneMap.from_hermite(grid, H / total, mu / total, d2 / total, d3 / total)


def invariant_density_and_conjugacy(
    T: Giet, T0: Giet, **solver_options: Any
) -> tuple[InvariantDensity, ConjugacyMap]:
    """Invariant density of T and the conjugacy h = H⁻¹ from T₀ to T."""
    density = invariant_density(T, **solver_options)
    H = _distribution_map(density)
    h = invert(H)
    x = _interior_samples(T0, 2049)
    lhs = np.asarray(h.eval(np.asarray(T0.eval(x))))
    rhs = np.asarray(T.eval(np.asarray(h.eval(x))))
    residual = float(np.max(np.abs(lhs - rhs)))
    breaks = float(
        np.max(np.abs(np.asarray(h.eval(T0.affine.top_starts)) - T.affine.top_starts))
    )
    conjugacy = ConjugacyMap(
        h=h, residual=residual, c1_distance=h.cr_norm(1), breakpoint_error=breaks
    )
    logger.info(
        "conjugacy residual=%.3e c1=%.3e breakpoints=%.3e",
        residual,
        conjugacy.c1_distance,
        breaks,
    )
    return density, conjugacy


@dataclass(frozen=True)
class PushforwardReport:
    """h_*(Lebesgue) against the T-invariant measure on tower intervals.

    Attributes:
        levels: Partition levels of T₀ that were checked.
        errors: Per level, max |Leb(I) - μ(h(I))| over the tower intervals I.
        tolerance: Accepted error.
    """

    levels: tuple[int, ...]
    errors: tuple[float, ...]
    tolerance: float = PUSHFORWARD_TOLERANCE

    @property
    def max_error(self) -> float:
        return max(self.errors, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def pushforward_check(
    density: InvariantDensity,
    h: HomeomorphismLike | ConjugacyMap,
    partitions: Sequence[DynamicalPartition],
    tolerance: float = PUSHFORWARD_TOLERANCE,
) -> PushforwardReport:
    """Compare |I| with μ(h(I)) for every tower interval I of T₀'s partitions."""
    levels, errors = [], []
    for partition in partitions:
        atoms = partition.intervals()
        lower = _evaluate(h, atoms[:, 0])
        upper = _evaluate(h, atoms[:, 1])
        error = np.abs((atoms[:, 1] - atoms[:, 0]) - density.measure(lower, upper))
        levels.append(partition.level)
        errors.append(float(np.max(error)))
    report = PushforwardReport(levels=tuple(levels), errors=tuple(errors), tolerance=tolerance)
    logger.info("pushforward levels=%s max_error=%.3e", report.levels, report.max_error)
    return report


def conjugate_giet(T0: Giet, h: MonotoneMap) -> Giet:
    """h∘T₀∘h⁻¹, a GIET C¹-conjugate to T₀ with known conjugacy h."""
    affine = T0.affine
    top = affine.top_starts
    top_ends = np.minimum(top + affine.lengths, 1.0)
    bottom = affine.bottom_starts
    bottom_ends = np.minimum(bottom + affine.bottom_lengths, 1.0)
    image = lambda points: np.asarray(h.eval(points))  # noqa: E731
    conjugated = Aiet.from_lengths(
        image(top_ends) - image(top), image(bottom_ends) - image(bottom), affine.permutation
    )
    profiles = []
    for i, profile in enumerate(T0.profiles):
        inner = compose(profile, invert(h.restrict(top[i], top_ends[i])))
        profiles.append(compose(h.restrict(bottom[i], bottom_ends[i]), inner))
    return Giet(conjugated, tuple(profiles))

# =============================================================================
# Fine grids and the ratio test
# =============================================================================


@dataclass(frozen=True)
class FineGridAxioms:
    """Whether a sequence of partitions qualifies as a fine grid.

    Attributes:
        nested: Every atom is a union of atoms of the next partition.
        tiling: Every partition tiles [0, 1] without gaps or overlaps.
        adjacency: Per level, the largest ratio of adjacent atom lengths.
        refinement: Per consecutive pair, the most next-level atoms in one atom.
        adjacency_bound: Accepted bound on c.
        refinement_bound: Accepted bound on a.
    """

    nested: bool
    tiling: bool
    adjacency: tuple[float, ...]
    refinement: tuple[int, ...]
    adjacency_bound: float = FINE_GRID_MAX_ADJACENCY
    refinement_bound: int = FINE_GRID_MAX_REFINEMENT

    @property
    def c(self) -> float:
        """Adjacency constant: neighbours differ in length by at most this factor."""
        return max(self.adjacency, default=1.0)

    @property
    def a(self) -> int:
        """Refinement constant: each atom is a union of at most this many finer atoms."""
        return max(self.refinement, default=1)

    @property
    def failures(self) -> list[str]:
        failed = []
        if not self.nested:
            failed.append("not nested")
        if not self.tiling:
            failed.append("not a tiling")
        if not (math.isfinite(self.c) and self.c <= self.adjacency_bound):
            failed.append(f"adjacency {self.c:.3g} above {self.adjacency_bound:.3g}")
        if self.a > self.refinement_bound:
            failed.append(f"refinement {self.a} above {self.refinement_bound}")
        return failed

    @property
    def ok(self) -> bool:
        return not self.failures


def _endpoint_gap(coarse: FloatArray, fine: FloatArray) -> float:
    ends = np.unique(fine.ravel())
    targets = np.unique(coarse.ravel())
    pos = np.clip(np.searchsorted(ends, targets), 1, ends.size - 1)
    gaps = np.minimum(np.abs(targets - ends[pos - 1]), np.abs(targets - ends[pos]))
    return float(np.max(gaps))


def _tiles(atoms: FloatArray, tolerance: float) -> bool:
    return bool(
        abs(atoms[0, 0]) <= tolerance
        and abs(atoms[-1, 1] - 1.0) <= tolerance
        and np.all(np.abs(atoms[1:, 0] - atoms[:-1, 1]) <= tolerance)
    )


def fine_grid_axioms(
    partitions: Sequence[DynamicalPartition],
    adjacency_bound: float = FINE_GRID_MAX_ADJACENCY,
    refinement_bound: int = FINE_GRID_MAX_REFINEMENT,
    tolerance: float = NESTING_TOLERANCE,
) -> FineGridAxioms:
    """Check nesting, tiling and the constants c and a along the partitions."""
    nested, tiling = True, True
    adjacency: list[float] = []
    refinement: list[int] = []
    previous: FloatArray | None = None
    for partition in partitions:
        atoms = partition.intervals()
        lengths = atoms[:, 1] - atoms[:, 0]
        tiling = tiling and _tiles(atoms, tolerance)
        if np.any(lengths <= 0.0):
            adjacency.append(math.inf)
        else:
            ratios = lengths[:-1] / lengths[1:]
            adjacency.append(float(np.max(np.maximum(ratios, 1.0 / ratios), initial=1.0)))
        if previous is not None:
            nested = nested and _endpoint_gap(previous, atoms) <= tolerance
            mids = 0.5 * (atoms[:, 0] + atoms[:, 1])
            idx = np.clip(np.searchsorted(previous[:, 0], mids, side="right") - 1, 0, None)
            refinement.append(int(np.max(np.bincount(idx))))
        previous = atoms
    axioms = FineGridAxioms(
        nested=nested,
        tiling=tiling,
        adjacency=tuple(adjacency),
        refinement=tuple(refinement),
        adjacency_bound=adjacency_bound,
        refinement_bound=refinement_bound,
    )
    if not axioms.ok:
        logger.warning("fine grid rejected: %s", ", ".join(axioms.failures))
    return axioms


@dataclass
class FineGridReport:
    """Ratio test of a homeomorphism along nested partitions.

    Attributes:
        levels: Partition levels.
        adjacency: Per level, the largest ratio of adjacent atom lengths (c).
        refinement: Per level, the largest number of next-level atoms in one atom (a).
        discrepancies: Per level, max |I/J - h(I)/h(J)| over adjacent atoms.
        rate: Fitted geometric decay of the discrepancies.
        r_squared: r² of that fit.
        delta: log(rate) / log(atom decay), the fitted Hölder exponent.
        grid_ok: Whether the partitions satisfy the fine-grid axioms.
        skipped: The fit was skipped because the grid failed the axioms.
        failures: The axioms that failed.
    """

    levels: list[int]
    adjacency: list[float]
    refinement: list[int] = field(default_factory=list)
    discrepancies: list[float] = field(default_factory=list)
    rate: float | None = None
    r_squared: float | None = None
    delta: float | None = None
    grid_ok: bool = True
    skipped: bool = False
    failures: list[str] = field(default_factory=list)


def _evaluate(h: HomeomorphismLike | ConjugacyMap, x: FloatArray) -> FloatArray:
    if isinstance(h, ConjugacyMap):
        h = h.h
    if isinstance(h, MonotoneMap):
        return np.asarray(h.eval(x))
    return np.asarray(h(x))


def fine_grid_ratio_test(
    h: HomeomorphismLike | ConjugacyMap,
    partitions: Sequence[DynamicalPartition],
    adjacency_bound: float = FINE_GRID_MAX_ADJACENCY,
    refinement_bound: int = FINE_GRID_MAX_REFINEMENT,
) -> FineGridReport:
    """Discrepancy of adjacent length ratios under h, level by level.

    The discrepancies are always reported; the decay fit only runs on a
    grid that passes ``fine_grid_axioms``.
    """
    axioms = fine_grid_axioms(partitions, adjacency_bound, refinement_bound)
    levels, discrepancies, deltas = [], [], []
    for partition in partitions:
        atoms = partition.intervals()
        lengths = atoms[:, 1] - atoms[:, 0]
        images = _evaluate(h, atoms[:, 1]) - _evaluate(h, atoms[:, 0])
        ratios = lengths[:-1] / lengths[1:]
        image_ratios = images[:-1] / images[1:]
        levels.append(partition.level)
        discrepancies.append(float(np.max(np.abs(ratios - image_ratios))))
        deltas.append(float(np.max(lengths)))
    report = FineGridReport(
        levels=levels,
        adjacency=list(axioms.adjacency),
        refinement=list(axioms.refinement),
        discrepancies=discrepancies,
        grid_ok=axioms.ok,
        failures=axioms.failures,
    )
    if not axioms.ok:
        report.skipped = True
        logger.info("ratio test levels=%s skipped", levels)
        return report
    pairs = [(k, v) for k, v in zip(levels, discrepancies) if v > 0.0]
    if len(pairs) >= 3:
        ks, vs = zip(*pairs)
        fit = linregress(ks, np.log(vs))
        report.rate, report.r_squared = float(np.exp(fit.slope)), float(fit.rvalue**2)
        atom_fit = linregress(levels, np.log(deltas))
        if atom_fit.slope < 0.0:
            report.delta = float(fit.slope / atom_fit.slope)
    logger.info("ratio test levels=%s rate=%s r2=%s", levels, report.rate, report.r_squared)
    return report


def salem_map(q: float = 0.3, depth: int = 16) -> Callable[[FloatArray], FloatArray]:
    """A singular increasing homeomorphism: F splits every dyadic interval's mass q : 1 - q."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}", value=q, domain="(0, 1)")
    values = np.array([0.0, 1.0])
    for _ in range(depth):
        mids = values[:-1] + q * np.diff(values)
        merged = np.empty(2 * values.size - 1)
        merged[0::2] = values
        merged[1::2] = mids
        values = merged
    grid = np.linspace(0.0, 1.0, values.size)
    return lambda x: np.interp(np.asarray(x, dtype=float), grid, values)


def dissipative_aiet() -> Giet:
    """An AIET whose middle interval is contracted into itself; log DT has growing sums."""
    affine = Aiet(
        lengths=[0.3, 0.4, 0.3],
        slopes=[4.0 / 3.0, 0.5, 4.0 / 3.0],
        permutation=Permutation((3, 2, 1)),
    )
    return Giet.from_aiet(affine)


# =============================================================================
# Hölder utilities
# =============================================================================


def holder_seminorm(
    x: ArrayLike,
    u: ArrayLike,
    delta: float,
    max_pairs: int = HOLDER_MAX_PAIRS,
    seed: int = 0,
) -> float:
    """max |u(x) - u(y)| / |x - y|^δ over all pairs, or a random subsample of pairs."""
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"δ must lie in (0, 1], got {delta}", value=delta, domain="(0, 1]")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x.size
    if n * (n - 1) // 2 <= max_pairs:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, max_pairs)
        j = rng.integers(0, n, max_pairs)
    dx = np.abs(x[i] - x[j])
    keep = dx > 0.0
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(u[i] - u[j])[keep] / dx[keep] ** delta))


def holder_norm(x: ArrayLike, u: ArrayLike, delta: float, **options: Any) -> float:
    """sup |u| + [u]_δ."""
    return float(np.max(np.abs(np.asarray(u)))) + holder_seminorm(x, u, delta, **options)


def holder_product_check(x: ArrayLike, u: ArrayLike, v: ArrayLike, delta: float) -> BoundReport:
    """[uv]_δ against ‖u‖₀ [v]_δ + ‖v‖₀ [u]_δ."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    lhs = holder_seminorm(x, u * v, delta)
    rhs = float(np.max(np.abs(u))) * holder_seminorm(x, v, delta) + float(
        np.max(np.abs(v))
    ) * holder_seminorm(x, u, delta)
    return BoundReport("holder_product", lhs, rhs, tolerance=1e-12 * max(rhs, 1.0))

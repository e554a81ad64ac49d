"""Renormalisation of GIETs along a Rauzy loop.

One elementary step induces T on [0, 1 - min(λ_d, β_j)], where d is the last
top interval and j the label of the last bottom interval, and rescales top
and bottom lengths to sum 1. New branch profiles are built from restrictions
and compositions of the old ones and resampled onto the grid of the input,
so the cost of a step does not depend on the level.

Example usage:

    from gietlab.renorm import renormalize, renormalization_trace

    RT = renormalize(T, loop)
    trace = renormalization_trace(T, loop, 10)
    print(trace.depth, trace.infinitely_renormalisable)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike

from gietlab.combinatorics import RauzyLoop, StepKind, rauzy_step
from gietlab.exceptions import (
    BudgetError,
    ConnectionError,
    DomainError,
    NotInDomainError,
    RenormalizationError,
)
from gietlab.giet import Aiet, Giet, cr_norm, distance
from gietlab.monotone import FloatArray, compose

logger = logging.getLogger(__name__)

CONNECTION_TOLERANCE = 1e-12
DEFAULT_FLOOR_BUDGET = 2_000_000
DEFAULT_ORBIT_BUDGET = 10_000_000


# =============================================================================
# Elementary step
# =============================================================================


def step_kind_of(T: Giet | Aiet) -> StepKind:
    """The step the lengths select (Top when the last top interval is longer)."""
    affine = T.affine if isinstance(T, Giet) else T
    d = affine.d
    j = affine.permutation.inverse(d) - 1
    return StepKind.TOP if affine.lengths[d - 1] > affine.bottom_lengths[j] else StepKind.BOTTOM


def rauzy_step_giet(
    T: Giet,
    kind: StepKind | None = None,
    tolerance: float = CONNECTION_TOLERANCE,
    step_index: int | None = None,
) -> tuple[Giet, float]:
    """Apply one elementary step to T.

    Args:
        T: The GIET.
        kind: The prescribed step; None lets the lengths decide.
        tolerance: Connection tolerance on |λ_d - β_j|.
        step_index: Position along a loop, reported in errors.

    Returns:
        The induced, rescaled GIET and the length of the inducing interval.

    Raises:
        ConnectionError: If the winner and loser lengths are too close.
        NotInDomainError: If the lengths select a step other than ``kind``.
    """
    d = T.d
    pi = T.permutation
    j = pi.inverse(d) - 1
    last = d - 1
    lam = np.array(T.lengths)
    beta = np.array(T.bottom_lengths)
    gap = lam[last] - beta[j]
    if abs(gap) < tolerance:
        raise ConnectionError(
            f"Connection at step {step_index}: |λ_d - β_j| = {abs(gap):.3e}",
            step_index=step_index,
            gap=abs(gap),
        )
    actual = StepKind.TOP if gap > 0 else StepKind.BOTTOM
    if kind is not None and StepKind(kind) is not actual:
        raise NotInDomainError(
            f"Step {step_index} prescribes {StepKind(kind).name} but lengths select {actual.name}",
            step_index=step_index,
            expected=StepKind(kind).value,
            actual=actual.value,
        )
    new_pi, _ = rauzy_step(pi, actual)
    n = T.profiles[0].size
    profiles = list(T.profiles)
    phi_j, phi_d = profiles[j], profiles[last]

    if actual is StepKind.TOP:
        shrink = 1.0 - beta[j]
        s = 1.0 - beta[j] / lam[last]
        fs = float(phi_d.eval(s))
        profiles[j] = compose(phi_d.restrict(s, 1.0, grid=n), phi_j, grid=n)
        profiles[last] = phi_d.restrict(0.0, s, grid=n)
        lam[last] -= beta[j]
        beta[j] = beta[last] * (1.0 - fs)
        beta[last] *= fs
        new_lam, new_beta, new_profiles = lam, beta, profiles
    else:
        shrink = 1.0 - lam[last]
        v = 1.0 - lam[last] / beta[j]
        t_star = float(phi_j.solve(v))
        if not 0.0 < t_star < 1.0:
            raise ConnectionError(
                f"Degenerate split at step {step_index}: t* = {t_star!r}",
                step_index=step_index,
                gap=min(t_star, 1.0 - t_star),
            )
        head = phi_j.restrict(0.0, t_star, grid=n)
        tail = compose(phi_d, phi_j.restrict(t_star, 1.0, grid=n), grid=n)
        piece_lam = lam[j] * (1.0 - t_star)
        piece_beta = beta[last]
        lam[j] = lam[j] * t_star
        beta[j] = beta[j] * v
        profiles[j] = head
        # relabel: top order 1..j, piece, j+1..d-1
        order = list(range(j + 1)) + [last] + list(range(j + 1, last))
        lam[last], beta[last], profiles[last] = piece_lam, piece_beta, tail
        new_lam = lam[order]
        new_beta = beta[order]
        new_profiles = [profiles[k] for k in order]

    affine = Aiet(
        lengths=new_lam / new_lam.sum(),
        slopes=(new_beta / new_beta.sum()) / (new_lam / new_lam.sum()),
        permutation=new_pi,
    )
    logger.debug(
        "rauzy step index=%s kind=%s gap=%.3e shrink=%.12f", step_index, actual.value, gap, shrink
    )
    return Giet(affine, tuple(new_profiles)), float(shrink)


def renormalize_with_scale(
    T: Giet, loop: RauzyLoop, tolerance: float = CONNECTION_TOLERANCE
) -> tuple[Giet, float]:
    """R(T) and X(T), the length of the interval R induces on."""
    if T.permutation != loop.base:
        raise NotInDomainError(
            f"GIET permutation {T.permutation} differs from loop base {loop.base}",
            step_index=0,
        )
    scale = 1.0
    current = T
    for index, kind in enumerate(loop.steps):
        current, shrink = rauzy_step_giet(current, kind, tolerance, step_index=index)
        scale *= shrink
    return current, scale


def renormalize(T: Giet, loop: RauzyLoop, tolerance: float = CONNECTION_TOLERANCE) -> Giet:
    """R(T): the first return map of T on [0, X(T)], rescaled."""
    return renormalize_with_scale(T, loop, tolerance)[0]


# =============================================================================
# Traces
# =============================================================================


@dataclass(frozen=True, eq=False)
class RenormLevel:
    """One level of a renormalisation trace.

    Attributes:
        level: n.
        giet: RⁿT.
        x: Length X(R^{n-1}T) of the interval the last application induced on.
        scale: X_n = x_1 ⋯ x_n, the length of [0, X_n] in T's coordinates.
        c1_norm: max_i ‖φ_i - id‖_{C¹}.
        c2_norm: max_i ‖φ_i - id‖_{C²}.
        total_nonlinearity: ∫ η of RⁿT.
    """

    level: int
    giet: Giet
    x: float
    scale: float
    c1_norm: float
    c2_norm: float
    total_nonlinearity: float

    def to_record(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "x": self.x,
            "scale": self.scale,
            "c1_norm": self.c1_norm,
            "c2_norm": self.c2_norm,
            "total_nonlinearity": self.total_nonlinearity,
            "lengths": self.giet.lengths.tolist(),
            "slopes": self.giet.slopes.tolist(),
        }


def _level(n: int, giet: Giet, x: float, scale: float) -> RenormLevel:
    return RenormLevel(
        level=n,
        giet=giet,
        x=x,
        scale=scale,
        c1_norm=cr_norm(giet, 1),
        c2_norm=cr_norm(giet, 2),
        total_nonlinearity=giet.total_nonlinearity(),
    )


@dataclass
class RenormTrace:
    """Consecutive renormalisations of a GIET along a fixed loop.

    Attributes:
        loop: The loop R iterates.
        levels: Snapshots for k = 0..depth.
        requested: The requested number of levels.
        exit_reason: Why the trace stopped early (None when it did not).
        exit_step: The elementary step at which it stopped.
    """

    loop: RauzyLoop
    levels: list[RenormLevel] = field(default_factory=list)
    requested: int = 0
    exit_reason: str | None = None
    exit_step: int | None = None

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def infinitely_renormalisable(self) -> bool:
        """True when every requested level was reached."""
        return self.depth >= self.requested and self.exit_reason is None

    def giet(self, n: int) -> Giet:
        return self.levels[n].giet

    def scales(self) -> FloatArray:
        return np.array([lvl.scale for lvl in self.levels])

    def __iter__(self) -> Iterator[RenormLevel]:
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)


def renormalization_trace(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    tolerance: float = CONNECTION_TOLERANCE,
    radius: float | None = None,
    reference: Giet | None = None,
) -> RenormTrace:
    """Renormalise T up to ``n`` times, recording every level.

    Leaving the renormalisable set ends the trace with ``exit_reason`` set
    instead of raising. With ``radius`` and ``reference`` the trace also stops
    once a level is farther than ``radius`` from the reference (C¹).
    """
    trace = RenormTrace(loop=loop, requested=n)
    trace.levels.append(_level(0, T, 1.0, 1.0))
    current, scale = T, 1.0
    for k in range(1, n + 1):
        try:
            current, x = renormalize_with_scale(current, loop, tolerance)
        except (ConnectionError, NotInDomainError) as e:
            trace.exit_reason = type(e).__name__
            trace.exit_step = e.step_index
            logger.info("trace exit level=%d reason=%s step=%s", k, trace.exit_reason, e.step_index)
            break
        scale *= x
        level = _level(k, current, x, scale)
        trace.levels.append(level)
        logger.info(
            "trace level=%d x=%.12f scale=%.6e c1=%.3e", k, x, scale, level.c1_norm
        )
        if radius is not None and reference is not None:
            gap = distance(current, reference, r=1)
            if gap > radius:
                trace.exit_reason = "radius"
                logger.info("trace exit level=%d reason=radius distance=%.3e", k, gap)
                break
    return trace


# =============================================================================
# Dynamical partitions
# =============================================================================


def heights(loop: RauzyLoop, n: int) -> tuple[int, ...]:
    """Return times l^j_n: row sums of Aⁿ."""
    return (loop.matrix**n).row_sums()


@dataclass(frozen=True, eq=False)
class DynamicalPartition:
    """The towers of level n.

    Attributes:
        level: n.
        scale: X_n; the floors tile [0, X_n].
        floors: Floor intervals as rows (left, right), one per branch.
        heights: l^j_n, exact integers.
        towers: Per branch, the array of shape (l^j_n, 2) of T^k(floor).
        branches: Per branch, the branch of T used on each tower interval.
    """

    level: int
    scale: float
    floors: FloatArray
    heights: tuple[int, ...]
    towers: tuple[FloatArray, ...]
    branches: tuple[np.ndarray, ...]

    @property
    def delta(self) -> float:
        """Δ_n, the largest tower interval."""
        return float(max(np.max(t[:, 1] - t[:, 0]) for t in self.towers))

    @property
    def total_measure(self) -> float:
        return float(sum(np.sum(t[:, 1] - t[:, 0]) for t in self.towers))

    def intervals(self) -> FloatArray:
        """All tower intervals, sorted by left end."""
        stacked = np.vstack(self.towers)
        return stacked[np.argsort(stacked[:, 0])]

    def visit_counts(self, base: Giet) -> np.ndarray:
        """Counts a_ij of tower-i intervals lying in the continuity interval j of ``base``."""
        counts = np.zeros((len(self.towers), base.d), dtype=np.int64)
        for i, branches in enumerate(self.branches):
            counts[i] = np.bincount(branches, minlength=base.d)
        return counts


def _iterate_towers(
    T: Giet, floors: FloatArray, floor_heights: Sequence[int]
) -> tuple[tuple[FloatArray, ...], tuple[np.ndarray, ...]]:
    count = len(floor_heights)
    height_max = max(floor_heights)
    left = floors[:, 0].copy()
    right = floors[:, 1].copy()
    towers = [np.empty((h, 2)) for h in floor_heights]
    branches = [np.empty(h, dtype=np.int64) for h in floor_heights]
    for k in range(height_max):
        alive = np.array([k < floor_heights[i] for i in range(count)])
        mid = 0.5 * (left + right)
        idx = np.asarray(T.branch_of(mid))
        for i in np.flatnonzero(alive):
            towers[i][k] = (left[i], right[i])
            branches[i][k] = idx[i]
        new_left = np.empty_like(left)
        new_right = np.empty_like(right)
        for b in range(T.d):
            mask = idx == b
            if np.any(mask):
                new_left[mask] = T.eval_branch(b, left[mask])
                new_right[mask] = T.eval_branch(b, right[mask])
        left, right = new_left, new_right
    return tuple(towers), tuple(branches)


def dynamical_partition(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    trace: RenormTrace | None = None,
    budget: int = DEFAULT_FLOOR_BUDGET,
) -> DynamicalPartition:
    """The level-n partition of [0, 1] into towers over the floors of RⁿT.

    Raises:
        BudgetError: If the towers hold more than ``budget`` intervals.
        RenormalizationError: If T is not renormalisable n times.
    """
    if n < 0:
        raise DomainError(f"Level must be non-negative, got {n}", value=n, domain="n >= 0")
    hs = heights(loop, n)
    required = sum(hs)
    if required > budget:
        raise BudgetError(
            f"Level {n} partition needs {required} intervals, budget is {budget}",
            required=required,
            budget=budget,
        )
    if trace is None or trace.depth < n:
        trace = renormalization_trace(T, loop, n)
        if trace.depth < n:
            raise RenormalizationError(
                f"Not renormalisable {n} times ({trace.exit_reason})", step_index=trace.exit_step
            )
    level = trace.levels[n]
    starts = level.giet.affine.top_starts
    floors = level.scale * np.column_stack([starts, starts + level.giet.lengths])
    towers, branches = _iterate_towers(T, floors, hs)
    partition = DynamicalPartition(
        level=n, scale=level.scale, floors=floors, heights=hs, towers=towers, branches=branches
    )
    logger.info("partition level=%d intervals=%d delta=%.3e", n, required, partition.delta)
    return partition


def orbit_eval(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    j: int,
    x: ArrayLike,
    trace: RenormTrace | None = None,
    budget: int = DEFAULT_ORBIT_BUDGET,
) -> FloatArray:
    """(RⁿT)_j(x) by iterating T itself l^j_n times on X_n x.

    Raises:
        BudgetError: If l^j_n times the number of points exceeds ``budget``.
    """
    points = np.atleast_1d(np.asarray(x, dtype=float))
    l_j = heights(loop, n)[j]
    if l_j * points.size > budget:
        raise BudgetError(
            f"orbit_eval needs {l_j * points.size} evaluations, budget is {budget}",
            required=l_j * points.size,
            budget=budget,
        )
    if n == 0:
        return np.asarray(T.eval(points))
    if trace is None or trace.depth < n:
        trace = renormalization_trace(T, loop, n)
        if trace.depth < n:
            raise RenormalizationError(f"Not renormalisable {n} times ({trace.exit_reason})")
    scale = trace.levels[n].scale
    y = scale * points
    for _ in range(l_j):
        y = np.asarray(T.eval(y))
    return y / scale

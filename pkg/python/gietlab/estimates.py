"""Executable checkers for the distortion and profile estimates.

Failed inequalities come back as a :class:`BoundReport` with ``passed`` set to
False; only a violated hypothesis raises :class:`HypothesisError`. Constants
that are proved to exist but never given a value (M, M′, K) are measured and
compared against configurable baselines.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from gietlab.combinatorics import RauzyLoop
from gietlab.exceptions import HypothesisError, RenormalizationError
from gietlab.giet import Giet, cr_norm
from gietlab.monotone import FloatArray, MonotoneMap, compose, eta_distance
from gietlab.renorm import (
    DynamicalPartition,
    RenormTrace,
    renormalization_trace,
    renormalize,
)

logger = logging.getLogger(__name__)

REPORT_TOLERANCE = 1e-12
BASELINE_M = 25.0
BASELINE_M_PRIME = 25.0
DEFAULT_AMPLITUDES = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one inequality check.

    Attributes:
        name: Which inequality.
        lhs: Measured left-hand side.
        rhs: Right-hand side.
        witnesses: Where the maximum was attained.
        values: Per-level or per-amplitude series behind ``lhs``.
        tolerance: Reporting tolerance on the margin.
    """

    name: str
    lhs: float
    rhs: float
    witnesses: tuple[Any, ...] = ()
    values: tuple[float, ...] = ()
    tolerance: float = REPORT_TOLERANCE

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def to_record(self) -> dict[str, Any]:
        return {
            "check": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "passed": self.passed,
        }


def _log_report(report: BoundReport) -> BoundReport:
    logger.info(
        "bound check=%s lhs=%.6e rhs=%.6e margin=%.3e passed=%s",
        report.name,
        report.lhs,
        report.rhs,
        report.margin,
        report.passed,
    )
    return report


# =============================================================================
# Distortion
# =============================================================================


def iterate_interval(T: Giet, interval: tuple[float, float], n: int) -> tuple[FloatArray, np.ndarray]:
    """J, T(J), ..., Tⁿ(J) as rows (left, right), with the branch used on each."""
    left, right = interval
    rows = np.empty((n + 1, 2))
    branches = np.empty(n + 1, dtype=np.int64)
    for k in range(n + 1):
        rows[k] = (left, right)
        b = int(T.branch_of(0.5 * (left + right))[0])
        branches[k] = b
        if k < n:
            left = float(T.eval_branch(b, left))
            right = float(T.eval_branch(b, right))
    return rows, branches


def verify_distortion_hypotheses(T: Giet, intervals: FloatArray) -> None:
    """Raise unless the intervals are pairwise disjoint and free of break points."""
    breaks = T.affine.top_starts[1:]
    for k, (left, right) in enumerate(intervals):
        inside = (breaks > left + REPORT_TOLERANCE) & (breaks < right - REPORT_TOLERANCE)
        if np.any(inside):
            raise HypothesisError(
                f"Iterate {k} contains the break point {breaks[inside][0]:.12g}",
                iterate=k,
                reason="break point",
            )
    order = np.argsort(intervals[:, 0])
    sorted_rows = intervals[order]
    overlap = sorted_rows[1:, 0] < sorted_rows[:-1, 1] - REPORT_TOLERANCE
    if np.any(overlap):
        k = int(order[np.argmax(overlap) + 1])
        raise HypothesisError(f"Iterate {k} overlaps another iterate", iterate=k, reason="overlap")


def distortion_check(
    T: Giet, interval: tuple[float, float], n: int, samples: int = 65
) -> BoundReport:
    """max DTⁿ(x)/DTⁿ(y) over x, y ∈ J against exp(∫|η_T|).

    Raises:
        HypothesisError: If J, ..., Tⁿ(J) overlap or contain break points.
    """
    rows, branches = iterate_interval(T, interval, n)
    verify_distortion_hypotheses(T, rows)
    x = np.linspace(interval[0], interval[1], samples)
    log_derivative = np.zeros_like(x)
    for k in range(n):
        b = int(branches[k])
        lam = T.lengths[b]
        s = np.clip((x - T.affine.top_starts[b]) / lam, 0.0, 1.0)
        log_derivative += np.log(T.slopes[b] * np.asarray(T.profiles[b].deriv(s)))
        x = np.asarray(T.eval_branch(b, x))
    imax, imin = int(np.argmax(log_derivative)), int(np.argmin(log_derivative))
    lhs = float(np.exp(log_derivative[imax] - log_derivative[imin]))
    rhs = float(np.exp(T.nonlinearity_l1()))
    return _log_report(
        BoundReport("distortion", lhs, rhs, witnesses=(imax, imin), tolerance=1e-9)
    )


def tower_distortion_check(T: Giet, partition: DynamicalPartition, j: int) -> BoundReport:
    """Distortion along the whole tower over floor j."""
    floor = partition.floors[j]
    return distortion_check(T, (float(floor[0]), float(floor[1])), partition.heights[j] - 1)


# =============================================================================
# Profile bounds along renormalisation
# =============================================================================


def _trace(T: Giet, loop: RauzyLoop, n: int, trace: RenormTrace | None) -> RenormTrace:
    if trace is None or trace.depth < n:
        trace = renormalization_trace(T, loop, n)
    if trace.depth < n:
        raise RenormalizationError(
            f"Not renormalisable {n} times (stopped at level {trace.depth}, {trace.exit_reason})",
            step_index=trace.exit_step,
        )
    return trace


def profile_c1_check(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    trace: RenormTrace | None = None,
    baseline: float = BASELINE_M,
) -> BoundReport:
    """sup_k ‖π_P(RᵏT) - Id‖_{C¹} against M ‖π_P(T) - Id‖_{C²}.

    ``values`` holds the ratios for levels 1..n; their sup is the measured M.

    Raises:
        RenormalizationError: If T is not renormalisable n times.
    """
    trace = _trace(T, loop, n, trace)
    denominator = cr_norm(T, 2)
    numerators = [lvl.c1_norm for lvl in trace.levels[1 : n + 1]]
    if denominator == 0.0:
        return _log_report(BoundReport("profile_c1", max(numerators, default=0.0), 0.0))
    ratios = tuple(v / denominator for v in numerators)
    worst = int(np.argmax(ratios)) + 1 if ratios else 0
    return _log_report(
        BoundReport(
            "profile_c1",
            lhs=max(numerators, default=0.0),
            rhs=baseline * denominator,
            witnesses=(worst,),
            values=ratios,
        )
    )


@dataclass(frozen=True)
class CompositionCheck:
    """A composition formula against the chain-rule oracle.

    Attributes:
        points: Evaluation points.
        formula: Values of the expanded formula.
        direct: Values from the composed map.
    """

    points: FloatArray
    formula: FloatArray
    direct: FloatArray

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.formula - self.direct)))


def _chain(phis: Sequence[MonotoneMap], points: FloatArray) -> list[tuple[FloatArray, ...]]:
    """Per factor: (f_{k-1}, f_{k-1}', f_{k-1}'') at the points, f_0 = id."""
    f = points.copy()
    f1 = np.ones_like(points)
    f2 = np.zeros_like(points)
    stages = []
    for phi in phis:
        stages.append((f, f1, f2))
        p1, p2 = np.asarray(phi.deriv(f)), np.asarray(phi.deriv2(f))
        f, f1, f2 = np.asarray(phi.eval(f)), p1 * f1, p2 * f1**2 + p1 * f2
    return stages


def _direct(phis: Sequence[MonotoneMap], points: FloatArray) -> MonotoneMap:
    composed = phis[0].resample(points)
    for phi in phis[1:]:
        composed = compose(phi, composed, grid=points)
    return composed


def second_derivative_composition(
    phis: Sequence[MonotoneMap], points: ArrayLike | None = None
) -> CompositionCheck:
    """f_n'' = Σ_k φ_k''(f_{k-1}) (f_{k-1}')² Π_{i>k} φ_i'(f_{i-1}) for f_n = φ_n ∘ ⋯ ∘ φ_1."""
    x = phis[0].grid if points is None else np.asarray(points, dtype=float)
    stages = _chain(phis, x)
    later = [np.asarray(phi.deriv(stage[0])) for phi, stage in zip(phis, stages)]
    total = np.zeros_like(x)
    for k, (phi, (f, f1, _)) in enumerate(zip(phis, stages)):
        term = np.asarray(phi.deriv2(f)) * f1**2
        for i in range(k + 1, len(phis)):
            term = term * later[i]
        total += term
    return CompositionCheck(points=x, formula=total, direct=_direct(phis, x).d2.copy())


def eta_derivative_composition(
    phis: Sequence[MonotoneMap], points: ArrayLike | None = None
) -> CompositionCheck:
    """Dη of f_n = φ_n ∘ ⋯ ∘ φ_1 from Dη(f∘g) = Dη_f∘g · g'² + η_f∘g · g'' + Dη_g, iterated."""
    x = phis[0].grid if points is None else np.asarray(points, dtype=float)
    total = np.zeros_like(x)
    for phi, (f, f1, f2) in zip(phis, _chain(phis, x)):
        total += np.asarray(phi.deta(f)) * f1**2 + np.asarray(phi.eta(f)) * f2
    composed = _direct(phis, x)
    direct = composed.d3 / composed.d1 - (composed.d2 / composed.d1) ** 2
    return CompositionCheck(points=x, formula=total, direct=direct)


def c2_check(
    T: Giet,
    loop: RauzyLoop,
    n: int,
    trace: RenormTrace | None = None,
    baseline: float = BASELINE_M_PRIME,
) -> BoundReport:
    """sup over levels 1..n and branches of ‖(φⁱ_k)''‖ against M′ ‖(T⁻¹)'‖ ‖T''‖.

    Raises:
        RenormalizationError: If T is not renormalisable n times.
    """
    trace = _trace(T, loop, n, trace)
    per_level = tuple(
        max(p.sup_derivative(2) for p in lvl.giet.profiles) for lvl in trace.levels[1 : n + 1]
    )
    scale = T.inverse_derivative_norm() * T.second_derivative_norm()
    worst = int(np.argmax(per_level)) + 1 if per_level else 0
    return _log_report(
        BoundReport(
            "c2",
            lhs=max(per_level, default=0.0),
            rhs=baseline * scale,
            witnesses=(worst,),
            values=per_level,
        )
    )


def deta_sup(trace: RenormTrace) -> float:
    """sup over levels >= 1 and branches of ‖Dη(φⁱ_k)‖."""
    return max(
        (max(p.deta_sup() for p in lvl.giet.profiles) for lvl in trace.levels[1:]), default=0.0
    )


def c3_check(
    family: Callable[[float], Giet],
    loop: RauzyLoop,
    n: int,
    amplitudes: Sequence[float] = DEFAULT_AMPLITUDES,
) -> BoundReport:
    """Dη of the renormalised profiles tends to 0 with the perturbation.

    ``family(ε)`` builds the perturbation of amplitude ε. The report's
    ``values`` are the measured sups in the order of ``amplitudes``
    (decreasing); it passes when every ratio of consecutive sups is below 1.
    A member of the family that stops before level n fails the check.
    """
    sups = []
    for eps in amplitudes:
        trace = renormalization_trace(family(eps), loop, n)
        sups.append(deta_sup(trace))
        logger.info("c3 amplitude=%.1e depth=%d sup_deta=%.6e", eps, trace.depth, sups[-1])
        if trace.depth < n:
            logger.warning("c3 amplitude=%.1e stopped at level %d of %d", eps, trace.depth, n)
            return _log_report(
                BoundReport("c3", lhs=math.inf, rhs=1.0, witnesses=(eps,), values=tuple(sups))
            )
    ratios = [b / a if a > 0.0 else 0.0 for a, b in zip(sups[:-1], sups[1:])]
    worst = int(np.argmax(ratios)) if ratios else 0
    return _log_report(
        BoundReport(
            "c3",
            lhs=max(ratios, default=0.0),
            rhs=1.0,
            witnesses=(worst,),
            values=tuple(sups),
            tolerance=0.0,
        )
    )


# =============================================================================
# η-Lipschitz estimate
# =============================================================================


def product_eta_distance(T1: Giet, T2: Giet) -> float:
    """Σ_i d_η(φ_i, ψ_i), the distance on the profile factor."""
    return float(sum(eta_distance(f, g) for f, g in zip(T1.profiles, T2.profiles)))


@dataclass(frozen=True)
class LipschitzEstimate:
    """d_η(R_P T1, R_P T2) / d_η(π_P T1, π_P T2); ``ratio`` is None when both are 0."""

    numerator: float
    denominator: float
    ratio: float | None = field(default=None)

    @property
    def defined(self) -> bool:
        return self.ratio is not None


def same_affine_part(T1: Giet, T2: Giet) -> bool:
    return (
        T1.permutation == T2.permutation
        and np.array_equal(T1.lengths, T2.lengths)
        and np.array_equal(T1.slopes, T2.slopes)
    )


def eta_lipschitz_estimate(T1: Giet, T2: Giet, loop: RauzyLoop) -> LipschitzEstimate:
    """Empirical Lipschitz ratio of the profile part of R for d_η.

    Raises:
        HypothesisError: If the affine parts differ.
    """
    if not same_affine_part(T1, T2):
        raise HypothesisError("The two GIETs must share their affine part", reason="affine parts")
    denominator = product_eta_distance(T1, T2)
    numerator = product_eta_distance(renormalize(T1, loop), renormalize(T2, loop))
    if denominator == 0.0:
        return LipschitzEstimate(numerator=numerator, denominator=0.0, ratio=None)
    ratio = numerator / denominator
    logger.info("eta lipschitz num=%.6e den=%.6e ratio=%.6f", numerator, denominator, ratio)
    return LipschitzEstimate(numerator=numerator, denominator=denominator, ratio=ratio)

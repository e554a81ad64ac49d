"""Increasing C³ diffeomorphisms of [0, 1] as quintic Hermite data.

A :class:`MonotoneMap` stores value, first, second and third derivative at the
nodes of a grid. Each cell is the quintic Hermite interpolant of the order
0-2 data at its two ends, so joins are C². The third derivative is
interpolated linearly from the nodal data, which the chain rule keeps exact
at nodes.

Example usage:

    from gietlab.monotone import MonotoneMap, moebius, eta_distance

    f = moebius(2.0)
    print(f.eval(0.5))                      # 1/3
    print(eta_distance(MonotoneMap.identity(), f))  # 2 log 2
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson

from gietlab.exceptions import DomainError, MonotonicityError

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 257
DOMAIN_SLACK = 1e-12
MONOTONICITY_SAMPLES = 9
NORM_REFINEMENT = 8
QUADRATURE_REFINEMENT = 4
NEWTON_MAX_ITER = 60

FloatArray = NDArray[np.float64]
Scalar = Union[float, FloatArray]


class Integral(NamedTuple):
    """A quadrature value with its Richardson error estimate."""

    value: float
    error: float


@functools.lru_cache(maxsize=16)
def _uniform_grid(n: int) -> FloatArray:
    grid = np.linspace(0.0, 1.0, n)
    grid.setflags(write=False)
    return grid


def uniform_grid(n: int = DEFAULT_GRID_SIZE) -> FloatArray:
    """Uniform grid of ``n`` nodes on [0, 1] (shared, read-only)."""
    if n < 2:
        raise DomainError(f"A grid needs at least 2 nodes, got {n}", value=n, domain="n >= 2")
    return _uniform_grid(int(n))


def refine(knots: ArrayLike, factor: int) -> FloatArray:
    """Subdivide every cell of ``knots`` into ``factor`` equal parts."""
    knots = np.asarray(knots, dtype=float)
    steps = np.arange(factor) / factor
    inner = knots[:-1, None] + np.diff(knots)[:, None] * steps[None, :]
    return np.append(inner.ravel(), knots[-1])


def merge_grids(*grids: ArrayLike, min_gap: float = 1e-10) -> FloatArray:
    """Sorted union of grids, dropping points closer than ``min_gap`` to a kept one."""
    merged = np.unique(np.concatenate([np.asarray(g, dtype=float) for g in grids]))
    kept = [merged[0]]
    for x in merged[1:-1]:
        if x - kept[-1] >= min_gap and merged[-1] - x >= min_gap:
            kept.append(x)
    kept.append(merged[-1])
    return np.array(kept)


def grid_nodes(grid: ArrayLike | int | None, default: int = DEFAULT_GRID_SIZE) -> FloatArray:
    """Resolve a grid argument: None, a node count, or explicit nodes."""
    if grid is None:
        return uniform_grid(default)
    if isinstance(grid, (int, np.integer)):
        return uniform_grid(int(grid))
    return np.asarray(grid, dtype=float)


def integrate(fn: Callable[[FloatArray], FloatArray], knots: ArrayLike) -> Integral:
    """Composite Simpson quadrature of ``fn`` on refined ``knots``."""
    x = refine(knots, QUADRATURE_REFINEMENT)
    y = fn(x)
    fine = float(simpson(y, x=x))
    coarse = float(simpson(y[::2], x=x[::2]))
    return Integral(fine, abs(fine - coarse) / 15.0)


def _quintic_coefficients(
    grid: FloatArray, v: FloatArray, d1: FloatArray, d2: FloatArray
) -> FloatArray:
    """Power-basis coefficients (in the local variable t) of every cell, shape (6, N-1)."""
    h = np.diff(grid)
    p0, p1 = v[:-1], v[1:]
    m0, m1 = h * d1[:-1], h * d1[1:]
    a0, a1 = h * h * d2[:-1], h * h * d2[1:]
    dp = p1 - p0
    return np.vstack(
        [
            p0,
            m0,
            0.5 * a0,
            10.0 * dp - 6.0 * m0 - 4.0 * m1 - 1.5 * a0 + 0.5 * a1,
            -15.0 * dp + 8.0 * m0 + 7.0 * m1 + 1.5 * a0 - a1,
            6.0 * dp - 3.0 * m0 - 3.0 * m1 - 0.5 * a0 + 0.5 * a1,
        ]
    )


def _frozen(values: ArrayLike) -> FloatArray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _output(result: FloatArray, scalar: bool) -> Scalar:
    return float(result.item()) if scalar else result


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """An increasing diffeomorphism of [0, 1] stored as Hermite data.

    Attributes:
        grid: Strictly increasing nodes with ``grid[0] = 0`` and ``grid[-1] = 1``.
        values: f at the nodes, ``values[0] = 0`` and ``values[-1] = 1``.
        d1: First derivatives, strictly positive.
        d2: Second derivatives.
        d3: Third derivatives.
        order: Interpolation order of the cells.
        is_identity: Short-circuit flag for the identity map.
    """

    grid: FloatArray
    values: FloatArray
    d1: FloatArray
    d2: FloatArray
    d3: FloatArray
    order: int = 5
    is_identity: bool = False
    _coeffs: FloatArray = field(init=False, repr=False)
    _dcoeffs: FloatArray = field(init=False, repr=False)
    _ddcoeffs: FloatArray = field(init=False, repr=False)
    _widths: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("grid", "values", "d1", "d2", "d3"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        grid, values, d1 = self.grid, self.values, self.d1
        n = grid.size
        if n < 2 or any(getattr(self, a).shape != (n,) for a in ("values", "d1", "d2", "d3")):
            raise MonotonicityError("Hermite arrays must be one-dimensional and of equal length")
        if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0.0):
            raise MonotonicityError("Grid must increase strictly from 0 to 1")
        if abs(values[0]) > DOMAIN_SLACK or abs(values[-1] - 1.0) > DOMAIN_SLACK:
            raise MonotonicityError(
                f"Endpoint values must be 0 and 1, got {values[0]!r} and {values[-1]!r}"
            )
        if values[0] != 0.0 or values[-1] != 1.0:
            fixed = values.copy()
            fixed[0], fixed[-1] = 0.0, 1.0
            object.__setattr__(self, "values", _frozen(fixed))
        if np.any(np.diff(self.values) <= 0.0):
            cell = int(np.argmax(np.diff(self.values) <= 0.0))
            raise MonotonicityError(f"Values are not increasing at cell {cell}", cell=cell)
        if np.any(d1 <= 0.0):
            node = int(np.argmax(d1 <= 0.0))
            raise MonotonicityError(
                f"Non-positive derivative at node {node}", cell=node, min_derivative=float(d1[node])
            )
        coeffs = _quintic_coefficients(grid, self.values, d1, self.d2)
        object.__setattr__(self, "_coeffs", coeffs)
        object.__setattr__(self, "_dcoeffs", P.polyder(coeffs, axis=0))
        object.__setattr__(self, "_ddcoeffs", P.polyder(coeffs, m=2, axis=0))
        object.__setattr__(self, "_widths", np.diff(grid))
        if not self.is_identity:
            self._check_monotone()

    def _check_monotone(self) -> None:
        t = np.linspace(0.0, 1.0, MONOTONICITY_SAMPLES)
        slopes = P.polyval(t, self._dcoeffs) / self._widths[:, None]
        worst = slopes.min(axis=1)
        if np.any(worst <= 0.0):
            cell = int(np.argmax(worst <= 0.0))
            raise MonotonicityError(
                f"Hermite interpolant is not increasing on cell {cell}",
                cell=cell,
                min_derivative=float(worst[cell]),
            )

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------

    @classmethod
    def identity(cls, n: int = DEFAULT_GRID_SIZE) -> MonotoneMap:
        grid = uniform_grid(n)
        return cls(
            grid=grid,
            values=grid,
            d1=np.ones(n),
            d2=np.zeros(n),
            d3=np.zeros(n),
            is_identity=True,
        )

    @classmethod
    def from_hermite(
        cls,
        grid: ArrayLike,
        values: ArrayLike,
        d1: ArrayLike,
        d2: ArrayLike,
        d3: ArrayLike | None = None,
    ) -> MonotoneMap:
        """Build a map from nodal data, validating monotonicity."""
        d3 = np.zeros(np.shape(grid)) if d3 is None else d3
        return cls(grid=grid, values=values, d1=d1, d2=d2, d3=d3)

    @classmethod
    def from_function(
        cls,
        func: Callable[[FloatArray], FloatArray],
        derivatives: Sequence[Callable[[FloatArray], FloatArray]],
        grid: ArrayLike | None = None,
        interval: tuple[float, float] | None = None,
    ) -> MonotoneMap:
        """Sample a closed-form increasing map and its three derivatives.

        With ``interval=(a, b)`` the restriction of ``func`` to [a, b] is
        normalised to a self-map of [0, 1].
        """
        s = grid_nodes(grid)
        a, b = (0.0, 1.0) if interval is None else interval
        if b - a <= 0.0:
            raise DomainError(f"Degenerate interval [{a}, {b}]", value=(a, b), domain="a < b")
        x = a + (b - a) * s
        fa, fb = float(func(np.array([a]))[0]), float(func(np.array([b]))[0])
        span = fb - fa
        if span <= 0.0:
            raise DomainError("Function is not increasing on the interval", value=(fa, fb))
        width = b - a
        values = (func(x) - fa) / span
        d1, d2, d3 = (
            np.asarray(derivatives[k](x), dtype=float) * width ** (k + 1) / span for k in range(3)
        )
        return cls(grid=s, values=values, d1=d1, d2=d2, d3=d3)

    @classmethod
    def from_polynomial(
        cls, poly: Polynomial, grid: ArrayLike | None = None, interval: tuple[float, float] | None = None
    ) -> MonotoneMap:
        """Sample a polynomial that is increasing on [0, 1] (or on ``interval``)."""
        return cls.from_function(poly, [poly.deriv(1), poly.deriv(2), poly.deriv(3)], grid, interval)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MonotoneMap:
        if data.get("identity"):
            return cls.identity(len(data["grid"]))
        return cls(
            grid=data["grid"],
            values=data["values"],
            d1=data["d1"],
            d2=data["d2"],
            d3=data["d3"],
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "identity": self.is_identity,
            "order": self.order,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "d1": self.d1.tolist(),
            "d2": self.d2.tolist(),
            "d3": self.d3.tolist(),
        }

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.grid.size)

    def _domain(self, x: ArrayLike) -> tuple[FloatArray, bool]:
        scalar = np.ndim(x) == 0
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(arr < -DOMAIN_SLACK) or np.any(arr > 1.0 + DOMAIN_SLACK) or np.any(np.isnan(arr)):
            bad = arr[(arr < -DOMAIN_SLACK) | (arr > 1.0 + DOMAIN_SLACK) | np.isnan(arr)][0]
            raise DomainError(f"Point {bad!r} outside [0, 1]", value=float(bad), domain="[0, 1]")
        return np.clip(arr, 0.0, 1.0), scalar

    def _locate(self, x: FloatArray) -> tuple[NDArray[np.intp], FloatArray]:
        k = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, self.size - 2)
        t = (x - self.grid[k]) / self._widths[k]
        return k, t

    def _cell_eval(self, coeffs: FloatArray, k: NDArray[np.intp], t: FloatArray) -> FloatArray:
        return P.polyval(t, coeffs[:, k], tensor=False)

    def eval(self, x: ArrayLike) -> Scalar:
        """f(x) for x in [0, 1]."""
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(arr, scalar)
        k, t = self._locate(arr)
        return _output(self._cell_eval(self._coeffs, k, t), scalar)

    __call__ = eval

    def deriv(self, x: ArrayLike) -> Scalar:
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(np.ones_like(arr), scalar)
        k, t = self._locate(arr)
        return _output(self._cell_eval(self._dcoeffs, k, t) / self._widths[k], scalar)

    def deriv2(self, x: ArrayLike) -> Scalar:
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(np.zeros_like(arr), scalar)
        k, t = self._locate(arr)
        return _output(self._cell_eval(self._ddcoeffs, k, t) / self._widths[k] ** 2, scalar)

    def deriv3(self, x: ArrayLike) -> Scalar:
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(np.zeros_like(arr), scalar)
        return _output(np.interp(arr, self.grid, self.d3), scalar)

    def eta(self, x: ArrayLike) -> Scalar:
        """Non-linearity D log Df = f''/f'."""
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(np.zeros_like(arr), scalar)
        return _output(np.asarray(self.deriv2(arr)) / np.asarray(self.deriv(arr)), scalar)

    def deta(self, x: ArrayLike) -> Scalar:
        """Derivative of the non-linearity, (f''' f' - f''^2) / f'^2."""
        arr, scalar = self._domain(x)
        if self.is_identity:
            return _output(np.zeros_like(arr), scalar)
        f1 = np.asarray(self.deriv(arr))
        f2 = np.asarray(self.deriv2(arr))
        f3 = np.asarray(self.deriv3(arr))
        return _output(f3 / f1 - (f2 / f1) ** 2, scalar)

    def nodal_eta(self) -> FloatArray:
        return self.d2 / self.d1

    def solve(self, y: ArrayLike) -> Scalar:
        """The x with f(x) = y, by safeguarded Newton inside the bracketing cell."""
        arr, scalar = self._domain(y)
        if self.is_identity:
            return _output(arr, scalar)
        k = np.clip(np.searchsorted(self.values, arr, side="right") - 1, 0, self.size - 2)
        lo = np.zeros_like(arr)
        hi = np.ones_like(arr)
        span = self.values[k + 1] - self.values[k]
        t = np.clip((arr - self.values[k]) / span, 0.0, 1.0)
        for _ in range(NEWTON_MAX_ITER):
            residual = self._cell_eval(self._coeffs, k, t) - arr
            slope = self._cell_eval(self._dcoeffs, k, t)
            lo = np.where(residual < 0.0, t, lo)
            hi = np.where(residual > 0.0, t, hi)
            step = t - residual / slope
            outside = (step < lo) | (step > hi)
            step = np.where(outside, 0.5 * (lo + hi), step)
            done = np.max(np.abs(step - t)) < 1e-16
            t = step
            if done:
                break
        x = self.grid[k] + t * self._widths[k]
        return _output(np.clip(x, 0.0, 1.0), scalar)

    # -------------------------------------------------------------------------
    # Calculus
    # -------------------------------------------------------------------------

    def resample(self, grid: ArrayLike | int = DEFAULT_GRID_SIZE) -> MonotoneMap:
        """The same map sampled on another grid."""
        new = grid_nodes(grid)
        if self.is_identity:
            return _identity_on(new)
        return MonotoneMap(
            grid=new,
            values=np.asarray(self.eval(new)),
            d1=np.asarray(self.deriv(new)),
            d2=np.asarray(self.deriv2(new)),
            d3=np.asarray(self.deriv3(new)),
        )

    def restrict(self, a: float, b: float, grid: ArrayLike | int | None = None) -> MonotoneMap:
        """The normalisation of f restricted to [a, b], as a self-map of [0, 1]."""
        if not 0.0 <= a < b <= 1.0:
            raise DomainError(f"Degenerate interval [{a}, {b}]", value=(a, b), domain="0 <= a < b <= 1")
        s = grid_nodes(grid, default=self.size)
        if self.is_identity:
            return _identity_on(s)
        width = b - a
        x = np.clip(a + width * s, a, b)
        fa, fb = float(self.eval(a)), float(self.eval(b))
        span = fb - fa
        return MonotoneMap(
            grid=s,
            values=(np.asarray(self.eval(x)) - fa) / span,
            d1=np.asarray(self.deriv(x)) * width / span,
            d2=np.asarray(self.deriv2(x)) * width**2 / span,
            d3=np.asarray(self.deriv3(x)) * width**3 / span,
        )

    def sample_points(self, per_cell: int = NORM_REFINEMENT) -> FloatArray:
        return refine(self.grid, per_cell)

    def sup_derivative(self, order: int) -> float:
        """sup |D^order f| over a refined sample (order 0 to 3)."""
        x = self.sample_points()
        fn = (self.eval, self.deriv, self.deriv2, self.deriv3)[order]
        return float(np.max(np.abs(fn(x))))

    def cr_norm(self, r: int = 3) -> float:
        """C^r norm of f - id: max over k <= r of sup |D^k (f - id)|."""
        if not 0 <= r <= 3:
            raise DomainError(f"r must be in 0..3, got {r}", value=r, domain="{0, 1, 2, 3}")
        if self.is_identity:
            return 0.0
        x = self.sample_points()
        parts = [
            np.abs(np.asarray(self.eval(x)) - x),
            np.abs(np.asarray(self.deriv(x)) - 1.0),
            np.abs(np.asarray(self.deriv2(x))),
            np.abs(np.asarray(self.deriv3(x))),
        ]
        return float(max(np.max(p) for p in parts[: r + 1]))

    def eta_integral(self) -> float:
        """∫ η_f = log f'(1) - log f'(0), exact from nodal data."""
        return float(math.log(self.d1[-1]) - math.log(self.d1[0]))

    def eta_l1(self) -> Integral:
        """∫ |η_f|, the η-distance to the identity."""
        if self.is_identity:
            return Integral(0.0, 0.0)
        return integrate(lambda x: np.abs(np.asarray(self.eta(x))), self.grid)

    def deta_sup(self) -> float:
        if self.is_identity:
            return 0.0
        return float(np.max(np.abs(np.asarray(self.deta(self.sample_points())))))

    def __repr__(self) -> str:
        kind = "identity" if self.is_identity else "hermite"
        return f"MonotoneMap({kind}, nodes={self.size})"


def _identity_on(grid: FloatArray) -> MonotoneMap:
    n = grid.size
    return MonotoneMap(
        grid=grid, values=grid, d1=np.ones(n), d2=np.zeros(n), d3=np.zeros(n), is_identity=True
    )


# =============================================================================
# Operations on maps
# =============================================================================


def compose(f: MonotoneMap, g: MonotoneMap, grid: ArrayLike | int | None = None) -> MonotoneMap:
    """f ∘ g with all derivative orders propagated by the chain rule at nodes.

    Without ``grid`` the nodes are the union of g's nodes and the preimages
    under g of f's nodes.
    """
    if grid is None:
        if f.is_identity:
            return g
        if g.is_identity:
            return f
        inner = np.asarray(g.solve(f.grid[1:-1]))
        nodes = merge_grids(g.grid, inner)
    else:
        nodes = grid_nodes(grid)
        if f.is_identity and g.is_identity:
            return _identity_on(nodes)
    u = np.asarray(g.eval(nodes))
    g1, g2, g3 = (np.asarray(fn(nodes)) for fn in (g.deriv, g.deriv2, g.deriv3))
    f1, f2, f3 = (np.asarray(fn(u)) for fn in (f.deriv, f.deriv2, f.deriv3))
    return MonotoneMap(
        grid=nodes,
        values=np.asarray(f.eval(u)),
        d1=f1 * g1,
        d2=f2 * g1**2 + f1 * g2,
        d3=f3 * g1**3 + 3.0 * f2 * g1 * g2 + f1 * g3,
    )


def invert(f: MonotoneMap) -> MonotoneMap:
    """f⁻¹, on the grid of f's nodal values, by the inverse function rules."""
    if f.is_identity:
        return f
    f1, f2, f3 = f.d1, f.d2, f.d3
    return MonotoneMap(
        grid=f.values,
        values=f.grid,
        d1=1.0 / f1,
        d2=-f2 / f1**3,
        d3=(3.0 * f2**2 - f1 * f3) / f1**5,
    )


def normalize(f: MonotoneMap, a: float, b: float, grid: ArrayLike | int | None = None) -> MonotoneMap:
    """Normalisation of the diffeomorphism f: [a, b] → [f(a), f(b)]."""
    return f.restrict(a, b, grid)


def eta_distance(f: MonotoneMap, g: MonotoneMap) -> float:
    """d_η(f, g) = ∫ |η_f - η_g|."""
    return eta_distance_integral(f, g).value


def eta_distance_integral(f: MonotoneMap, g: MonotoneMap) -> Integral:
    if f.is_identity and g.is_identity:
        return Integral(0.0, 0.0)
    knots = merge_grids(f.grid, g.grid)
    return integrate(lambda x: np.abs(np.asarray(f.eta(x)) - np.asarray(g.eta(x))), knots)


# =============================================================================
# Moebius family and profile bumps
# =============================================================================


def moebius(a: float, grid: ArrayLike | int | None = None) -> MonotoneMap:
    """m_a(x) = x / (a + (1 - a) x), with ∫ η = 2 log a."""
    if a <= 0.0:
        raise DomainError(f"Moebius parameter must be positive, got {a}", value=a, domain="a > 0")
    nodes = grid_nodes(grid)
    if a == 1.0:
        return _identity_on(nodes)
    c = 1.0 - a

    def den(x: FloatArray) -> FloatArray:
        return a + c * x

    return MonotoneMap.from_function(
        lambda x: x / den(x),
        [
            lambda x: a / den(x) ** 2,
            lambda x: -2.0 * a * c / den(x) ** 3,
            lambda x: 6.0 * a * c**2 / den(x) ** 4,
        ],
        grid=nodes,
    )


def moebius_parameter(f: MonotoneMap) -> float:
    """Parameter of the Moebius map with the same total non-linearity as f."""
    return math.exp(0.5 * f.eta_integral())


def bump(coefficients: Sequence[float], grid: ArrayLike | int | None = None) -> MonotoneMap:
    """x + x²(1-x)² p(x) for the polynomial p with the given coefficients.

    These profiles have ∫ η = 0 and f'(0) = f'(1) = 1.
    """
    weight = Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])
    poly = Polynomial([0.0, 1.0]) + weight * Polynomial(list(coefficients) or [0.0])
    return MonotoneMap.from_polynomial(poly, grid=grid_nodes(grid))

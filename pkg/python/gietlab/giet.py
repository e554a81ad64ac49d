"""Affine and generalised interval exchange transformations.

Branch ``i`` (0-based top label) maps the top interval ``[a_i, a_i + λ_i)``
onto the bottom interval ``[b_i, b_i + β_i)`` by

    T(x) = b_i + β_i φ_i((x - a_i) / λ_i),   β_i = ρ_i λ_i.

Intervals are half-open: a break point belongs to the branch on its right.

Example usage:

    from gietlab.combinatorics import Permutation
    from gietlab.giet import Aiet, Giet

    a = Aiet.from_lengths([0.6, 0.4], [0.5, 0.5], Permutation((2, 1)))
    T = Giet.from_aiet(a)
    y, branch = T.eval_with_branch(0.3)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike

from gietlab.combinatorics import Permutation
from gietlab.exceptions import DomainError, RepresentationError
from gietlab.monotone import (
    DEFAULT_GRID_SIZE,
    FloatArray,
    Integral,
    MonotoneMap,
    Scalar,
    integrate,
    merge_grids,
    refine,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-10


def _frozen(values: ArrayLike) -> FloatArray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Aiet:
    """An affine interval exchange transformation.

    Attributes:
        lengths: Top lengths λ, summing to 1.
        slopes: Slopes ρ with Σ ρ_i λ_i = 1.
        permutation: Top index to bottom position.
    """

    lengths: FloatArray
    slopes: FloatArray
    permutation: Permutation

    def __post_init__(self) -> None:
        object.__setattr__(self, "lengths", _frozen(self.lengths))
        object.__setattr__(self, "slopes", _frozen(self.slopes))
        d = self.permutation.d
        if self.lengths.shape != (d,) or self.slopes.shape != (d,):
            raise RepresentationError(f"Expected {d} lengths and slopes")
        if np.any(self.lengths <= 0.0) or np.any(self.slopes <= 0.0):
            raise RepresentationError("Lengths and slopes must be positive")
        if abs(self.lengths.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise RepresentationError(f"Top lengths sum to {self.lengths.sum()!r}, expected 1")
        if abs(self.bottom_lengths.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise RepresentationError(
                f"Bottom lengths sum to {self.bottom_lengths.sum()!r}, expected 1"
            )

    @classmethod
    def from_lengths(
        cls, top: ArrayLike, bottom: ArrayLike, permutation: Permutation
    ) -> Aiet:
        """Build from unnormalised top and bottom lengths (each rescaled to sum 1)."""
        top = np.asarray(top, dtype=float)
        bottom = np.asarray(bottom, dtype=float)
        if np.any(top <= 0.0) or np.any(bottom <= 0.0):
            raise RepresentationError("Lengths must be positive")
        lam = top / top.sum()
        beta = bottom / bottom.sum()
        return cls(lengths=lam, slopes=beta / lam, permutation=permutation)

    @classmethod
    def from_log_slopes(
        cls, lengths: ArrayLike, mu: ArrayLike, permutation: Permutation
    ) -> Aiet:
        """Build from lengths and log-slopes, shifting μ so that Σ λ_i e^{μ_i} = 1."""
        lam = np.asarray(lengths, dtype=float)
        lam = lam / lam.sum()
        mu = np.asarray(mu, dtype=float)
        shift = np.log(np.dot(lam, np.exp(mu)))
        return cls(lengths=lam, slopes=np.exp(mu - shift), permutation=permutation)

    @classmethod
    def iet(cls, lengths: ArrayLike, permutation: Permutation) -> Aiet:
        """The (standard) interval exchange with all slopes 1."""
        lam = np.asarray(lengths, dtype=float)
        lam = lam / lam.sum()
        return cls(lengths=lam, slopes=np.ones_like(lam), permutation=permutation)

    @property
    def d(self) -> int:
        return self.permutation.d

    @property
    def bottom_lengths(self) -> FloatArray:
        """β_i = ρ_i λ_i, indexed by top label."""
        return self.slopes * self.lengths

    @property
    def log_slopes(self) -> FloatArray:
        return np.log(self.slopes)

    @property
    def top_starts(self) -> FloatArray:
        return np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])

    @property
    def bottom_starts(self) -> FloatArray:
        """Left end of the image of each top interval."""
        beta = self.bottom_lengths
        order = np.argsort(self.permutation.sigma)  # labels by bottom position
        starts = np.empty(self.d)
        starts[order] = np.concatenate([[0.0], np.cumsum(beta[order])[:-1]])
        return starts

    def is_iet(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.slopes - 1.0) < tol))

    def to_dict(self) -> dict[str, Any]:
        return {
            "permutation": list(self.permutation.sigma),
            "lengths": self.lengths.tolist(),
            "slopes": self.slopes.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Aiet:
        return cls(
            lengths=data["lengths"],
            slopes=data["slopes"],
            permutation=Permutation(tuple(data["permutation"])),
        )


@dataclass(frozen=True)
class NonLinearityProfile:
    """Sampled non-linearity of every branch profile.

    Attributes:
        points: Per-branch sample abscissae in [0, 1].
        values: Per-branch η_{φ_i} at the sample points.
        branch_integrals: ∫ η_{φ_i}, exact from endpoint derivatives.
        quadrature: ∫ η_T by quadrature of the samples.
    """

    points: tuple[FloatArray, ...]
    values: tuple[FloatArray, ...]
    branch_integrals: tuple[float, ...]
    quadrature: Integral

    @property
    def total(self) -> float:
        return float(sum(self.branch_integrals))


@dataclass(frozen=True, eq=False)
class Giet:
    """A generalised interval exchange: an AIET plus one profile per branch."""

    affine: Aiet
    profiles: tuple[MonotoneMap, ...]

    def __post_init__(self) -> None:
        profiles = tuple(self.profiles)
        object.__setattr__(self, "profiles", profiles)
        if len(profiles) != self.affine.d:
            raise RepresentationError(
                f"Expected {self.affine.d} profiles, got {len(profiles)}"
            )

    @classmethod
    def from_aiet(cls, affine: Aiet, n: int = DEFAULT_GRID_SIZE) -> Giet:
        return cls(affine, tuple(MonotoneMap.identity(n) for _ in range(affine.d)))

    @property
    def d(self) -> int:
        return self.affine.d

    @property
    def permutation(self) -> Permutation:
        return self.affine.permutation

    @property
    def lengths(self) -> FloatArray:
        return self.affine.lengths

    @property
    def bottom_lengths(self) -> FloatArray:
        return self.affine.bottom_lengths

    @property
    def slopes(self) -> FloatArray:
        return self.affine.slopes

    def is_affine(self) -> bool:
        return all(p.is_identity for p in self.profiles)

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------

    def _check(self, x: ArrayLike) -> tuple[FloatArray, bool]:
        scalar = np.ndim(x) == 0
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12) or np.any(np.isnan(arr)):
            raise DomainError("Points must lie in [0, 1]", value=arr, domain="[0, 1]")
        return np.clip(arr, 0.0, 1.0), scalar

    def branch_of(self, x: ArrayLike) -> np.ndarray:
        """0-based branch index of each point (right-hand branch at break points)."""
        arr, _ = self._check(x)
        idx = np.searchsorted(self.affine.top_starts, arr, side="right") - 1
        return np.clip(idx, 0, self.d - 1)

    def _local(self, arr: FloatArray) -> tuple[np.ndarray, FloatArray]:
        idx = np.clip(np.searchsorted(self.affine.top_starts, arr, side="right") - 1, 0, self.d - 1)
        s = (arr - self.affine.top_starts[idx]) / self.lengths[idx]
        return idx, np.clip(s, 0.0, 1.0)

    def _per_branch(self, idx: np.ndarray, s: FloatArray, method: str) -> FloatArray:
        out = np.empty_like(s)
        for i, profile in enumerate(self.profiles):
            mask = idx == i
            if np.any(mask):
                out[mask] = getattr(profile, method)(s[mask])
        return out

    def eval_with_branch(self, x: ArrayLike) -> tuple[Scalar, Any]:
        """T(x) and the branch used."""
        arr, scalar = self._check(x)
        idx, s = self._local(arr)
        y = self.affine.bottom_starts[idx] + self.bottom_lengths[idx] * self._per_branch(idx, s, "eval")
        y = np.clip(y, 0.0, 1.0)
        if scalar:
            return float(y[0]), int(idx[0])
        return y, idx

    def eval(self, x: ArrayLike) -> Scalar:
        return self.eval_with_branch(x)[0]

    __call__ = eval

    def eval_branch(self, i: int, x: ArrayLike) -> Scalar:
        """T_i(x) for x in the closure of the i-th top interval."""
        a = self.affine.top_starts[i]
        lam = self.lengths[i]
        arr = np.asarray(x, dtype=float)
        s = np.clip((arr - a) / lam, 0.0, 1.0)
        value = self.affine.bottom_starts[i] + self.bottom_lengths[i] * np.asarray(self.profiles[i].eval(s))
        return float(value) if np.ndim(x) == 0 else value

    def deriv(self, x: ArrayLike) -> Scalar:
        """DT(x) = ρ_i φ_i'(s)."""
        arr, scalar = self._check(x)
        idx, s = self._local(arr)
        out = self.slopes[idx] * self._per_branch(idx, s, "deriv")
        return float(out[0]) if scalar else out

    def deriv2(self, x: ArrayLike) -> Scalar:
        arr, scalar = self._check(x)
        idx, s = self._local(arr)
        out = self.slopes[idx] / self.lengths[idx] * self._per_branch(idx, s, "deriv2")
        return float(out[0]) if scalar else out

    def eta(self, x: ArrayLike) -> Scalar:
        """η_T(x) = η_{φ_i}(s) / λ_i."""
        arr, scalar = self._check(x)
        idx, s = self._local(arr)
        out = self._per_branch(idx, s, "eta") / self.lengths[idx]
        return float(out[0]) if scalar else out

    def eval_inverse(self, y: ArrayLike) -> Scalar:
        """T⁻¹(y), with bottom intervals also half-open."""
        arr, scalar = self._check(y)
        starts = self.affine.bottom_starts
        order = np.argsort(starts)
        pos = np.clip(np.searchsorted(starts[order], arr, side="right") - 1, 0, self.d - 1)
        idx = order[pos]
        v = np.clip((arr - starts[idx]) / self.bottom_lengths[idx], 0.0, 1.0)
        out = np.empty_like(arr)
        for i, profile in enumerate(self.profiles):
            mask = idx == i
            if np.any(mask):
                out[mask] = np.asarray(profile.solve(v[mask]))
        x = self.affine.top_starts[idx] + self.lengths[idx] * out
        return float(x[0]) if scalar else x

    def orbit(self, x0: float, n: int) -> FloatArray:
        """x0, T(x0), ..., T^{n-1}(x0)."""
        points = np.empty(n)
        x = float(x0)
        for k in range(n):
            points[k] = x
            x = float(self.eval(x))
        return points

    # -------------------------------------------------------------------------
    # Norms and functionals
    # -------------------------------------------------------------------------

    def inverse_derivative_norm(self) -> float:
        """sup |(T⁻¹)'| = max_i sup 1 / (ρ_i φ_i')."""
        return max(
            float(np.max(1.0 / (rho * np.asarray(p.deriv(p.sample_points())))))
            for rho, p in zip(self.slopes, self.profiles)
        )

    def derivative_norm(self) -> float:
        return max(rho * p.sup_derivative(1) for rho, p in zip(self.slopes, self.profiles))

    def second_derivative_norm(self) -> float:
        """sup |T''| = max_i ρ_i / λ_i sup |φ_i''|."""
        return max(
            rho / lam * p.sup_derivative(2)
            for rho, lam, p in zip(self.slopes, self.lengths, self.profiles)
        )

    def total_nonlinearity(self) -> float:
        """∫₀¹ η_T, the sum of the branch integrals."""
        return float(sum(p.eta_integral() for p in self.profiles))

    def nonlinearity_l1(self) -> float:
        """∫₀¹ |η_T| = Σ ∫ |η_{φ_i}|."""
        return float(sum(p.eta_l1().value for p in self.profiles))

    def to_dict(self) -> dict[str, Any]:
        data = self.affine.to_dict()
        data["profiles"] = [p.to_dict() for p in self.profiles]
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Giet:
        return cls(Aiet.from_dict(data), tuple(MonotoneMap.from_dict(p) for p in data["profiles"]))

    def __repr__(self) -> str:
        kind = "affine" if self.is_affine() else "generalised"
        return f"Giet({kind}, d={self.d}, permutation={self.permutation})"


# =============================================================================
# Module functions
# =============================================================================


def assemble(affine: Aiet, profiles: Sequence[MonotoneMap]) -> Giet:
    return Giet(affine, tuple(profiles))


def decompose(T: Giet) -> tuple[Aiet, tuple[MonotoneMap, ...]]:
    return T.affine, T.profiles


def eval_giet(T: Giet, x: ArrayLike) -> tuple[Scalar, Any]:
    """T(x) and the 0-based branch index."""
    return T.eval_with_branch(x)


def total_nonlinearity(T: Giet) -> float:
    return T.total_nonlinearity()


def nonlinearity_profile(T: Giet) -> NonLinearityProfile:
    """Sample η of every branch and integrate η_T interval by interval."""
    points = tuple(p.sample_points(2) for p in T.profiles)
    values = tuple(np.asarray(p.eta(x)) for p, x in zip(T.profiles, points))
    total, error = 0.0, 0.0
    for a, lam, profile in zip(T.affine.top_starts, T.lengths, T.profiles):
        if profile.is_identity:
            continue
        part = integrate(
            lambda x, a=a, lam=lam, p=profile: np.asarray(p.eta(np.clip((x - a) / lam, 0.0, 1.0)))
            / lam,
            a + lam * profile.grid,
        )
        total += part.value
        error += part.error
    return NonLinearityProfile(
        points=points,
        values=values,
        branch_integrals=tuple(p.eta_integral() for p in T.profiles),
        quadrature=Integral(total, error),
    )


def affine_distance(a: Aiet, b: Aiet) -> float:
    """max(|λ - λ'|_∞, |ρ - ρ'|_∞)."""
    return float(max(np.max(np.abs(a.lengths - b.lengths)), np.max(np.abs(a.slopes - b.slopes))))


def cr_norm(T: Giet, r: int = 3, reference: Aiet | None = None) -> float:
    """Max over branches of ‖φ_i - id‖_{C^r}, plus the affine distance to ``reference``."""
    profiles = max(p.cr_norm(r) for p in T.profiles)
    return profiles + (affine_distance(T.affine, reference) if reference is not None else 0.0)


def profile_distance(f: MonotoneMap, g: MonotoneMap, r: int = 0) -> float:
    """max over k <= r of sup |D^k f - D^k g| on a refined merged grid."""
    if f.is_identity and g.is_identity:
        return 0.0
    x = refine(merge_grids(f.grid, g.grid), 4)
    names = ("eval", "deriv", "deriv2", "deriv3")
    return float(
        max(
            np.max(np.abs(np.asarray(getattr(f, m)(x)) - np.asarray(getattr(g, m)(x))))
            for m in names[: r + 1]
        )
    )


def distance(T: Giet, S: Giet, r: int = 0) -> float:
    """C^r distance of the branch profiles plus the affine distance."""
    if T.permutation != S.permutation:
        raise RepresentationError("GIETs with different permutations are not comparable")
    profiles = max(profile_distance(f, g, r) for f, g in zip(T.profiles, S.profiles))
    return profiles + affine_distance(T.affine, S.affine)

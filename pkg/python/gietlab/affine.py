"""The finite-dimensional picture around the fixed IET.

Coordinates on the space of AIETs with a fixed permutation use a chart
ξ = (x, y) ∈ ℝ^{d-1} × ℝ^{d-1}:

    λ = λ⁰ + B_λ x,      μ̃ = B_μ y,      μ = μ̃ - log Σ λ_i e^{μ̃_i},

where the columns of B_λ are an orthonormal basis of {Σ v_i = 0} and those
of B_μ an orthonormal basis of the constraint plane {⟨μ, λ⁰⟩ = 0}. The chart
inverse is exact: x = B_λᵀ(λ - λ⁰) and y = B_μᵀ(μ - ⟨μ, λ⁰⟩ 1).

Example usage:

    from gietlab.affine import fixed_aiet, spectrum, splitting

    report = spectrum(loop.matrix)
    T0 = fixed_aiet(loop)
    split = splitting(loop.matrix, report.perron_vector)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from gietlab.combinatorics import (
    IntersectionMatrix,
    RauzyLoop,
    genus_and_marked_points,
)
from gietlab.exceptions import CombinatoricsError, RenormalizationError
from gietlab.giet import Aiet, Giet
from gietlab.monotone import DEFAULT_GRID_SIZE, FloatArray
from gietlab.renorm import dynamical_partition, renormalize

logger = logging.getLogger(__name__)

UNIT_CIRCLE_TOLERANCE = 1e-9
PERRON_TOLERANCE = 1e-15
PERRON_MAX_ITER = 10_000
FD_STEPS = (1e-4, 1e-5, 1e-6, 1e-7)


# =============================================================================
# Spectrum
# =============================================================================


def perron_data(matrix: IntersectionMatrix | ArrayLike) -> tuple[float, FloatArray]:
    """Perron value and Σ=1 normalised Perron vector by power iteration.

    Raises:
        CombinatoricsError: If the top eigenvalue is not simple.
    """
    m = matrix.to_array() if isinstance(matrix, IntersectionMatrix) else np.asarray(matrix, float)
    v = np.full(m.shape[0], 1.0 / m.shape[0])
    value = 0.0
    for _ in range(PERRON_MAX_ITER):
        w = m @ v
        value = float(w.sum())
        w /= value
        if np.max(np.abs(w - v)) < PERRON_TOLERANCE:
            v = w
            break
        v = w
    moduli = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    if moduli.size > 1 and moduli[1] > value * (1.0 - UNIT_CIRCLE_TOLERANCE):
        raise CombinatoricsError(
            f"Perron value {value:.12g} is not simple (next modulus {moduli[1]:.12g})"
        )
    return value, v


@dataclass(frozen=True)
class SpectrumReport:
    """Spectral data of an intersection matrix A.

    Attributes:
        eigenvalues: Complex eigenvalues sorted by decreasing modulus.
        perron_value: The simple largest eigenvalue.
        perron_vector: Positive Perron vector of ᵗA with Σ = 1 (the lengths λ⁰).
        expanding: Number of eigenvalues of modulus > 1.
        contracting: Number of eigenvalues of modulus < 1.
        indeterminate: Number within the tolerance of the unit circle.
        reciprocal_pairing_error: Max distance from 1/λ to the spectrum.
    """

    eigenvalues: tuple[complex, ...]
    perron_value: float
    perron_vector: FloatArray
    expanding: int
    contracting: int
    indeterminate: int
    reciprocal_pairing_error: float

    @property
    def moduli(self) -> FloatArray:
        return np.abs(np.array(self.eigenvalues))

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "perron_value": self.perron_value,
            "perron_vector": self.perron_vector.tolist(),
            "expanding": self.expanding,
            "contracting": self.contracting,
            "indeterminate": self.indeterminate,
            "reciprocal_pairing_error": self.reciprocal_pairing_error,
        }


def spectrum(A: IntersectionMatrix, tolerance: float = UNIT_CIRCLE_TOLERANCE) -> SpectrumReport:
    eig = np.linalg.eigvals(A.to_array())
    eig = eig[np.argsort(-np.abs(eig), kind="stable")]
    moduli = np.abs(eig)
    near = np.abs(moduli - 1.0) < tolerance
    pairing = max(float(np.min(np.abs(1.0 / z - eig))) for z in eig)
    value, vector = perron_data(A.T)
    return SpectrumReport(
        eigenvalues=tuple(complex(z) for z in eig),
        perron_value=value,
        perron_vector=vector,
        expanding=int(np.sum((moduli > 1.0) & ~near)),
        contracting=int(np.sum((moduli < 1.0) & ~near)),
        indeterminate=int(np.sum(near)),
        reciprocal_pairing_error=pairing,
    )


def fixed_aiet(loop: RauzyLoop, n: int = DEFAULT_GRID_SIZE) -> Giet:
    """The standard IET fixed by renormalisation along ``loop``."""
    _, lengths = perron_data(loop.length_matrix)
    return Giet.from_aiet(Aiet.iet(lengths, loop.base), n)


def slope_cocycle(A: IntersectionMatrix, mu: ArrayLike) -> FloatArray:
    """μ(RT) = A μ(T)."""
    return A.to_array() @ np.asarray(mu, dtype=float)


def slope_cocycle_error(T: Giet, loop: RauzyLoop) -> float:
    """|μ(R T) - A μ(T)|_∞ for an AIET T."""
    image = renormalize(T, loop)
    predicted = slope_cocycle(loop.matrix, T.affine.log_slopes)
    return float(np.max(np.abs(image.affine.log_slopes - predicted)))


def intersection_matrix_from_partition(T0: Giet, loop: RauzyLoop, level: int = 1) -> IntersectionMatrix:
    """Count the level-``level`` tower intervals inside each continuity interval of T0."""
    partition = dynamical_partition(T0, loop, level)
    return IntersectionMatrix.from_array(partition.visit_counts(T0))


# =============================================================================
# Chart and splitting
# =============================================================================


def _complement_basis(normal: FloatArray) -> FloatArray:
    """Orthonormal basis of the hyperplane orthogonal to ``normal``."""
    return scipy.linalg.null_space(normal[None, :])


@dataclass(frozen=True, eq=False)
class AffineChart:
    """The chart ξ ↦ (λ, μ) centred at the fixed IET.

    Attributes:
        lambda0: Lengths of the fixed IET.
        length_basis: B_λ, shape (d, d-1).
        slope_basis: B_μ, shape (d, d-1).
    """

    lambda0: FloatArray
    length_basis: FloatArray = field(init=False)
    slope_basis: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        lam = np.asarray(self.lambda0, dtype=float)
        object.__setattr__(self, "lambda0", lam)
        object.__setattr__(self, "length_basis", _complement_basis(np.ones_like(lam)))
        object.__setattr__(self, "slope_basis", _complement_basis(lam))

    @property
    def d(self) -> int:
        return int(self.lambda0.size)

    @property
    def dim(self) -> int:
        return 2 * (self.d - 1)

    def split(self, xi: ArrayLike) -> tuple[FloatArray, FloatArray]:
        xi = np.asarray(xi, dtype=float)
        return xi[: self.d - 1], xi[self.d - 1 :]

    def lengths_and_log_slopes(self, xi: ArrayLike) -> tuple[FloatArray, FloatArray]:
        x, y = self.split(xi)
        lam = self.lambda0 + self.length_basis @ x
        mu_tilde = self.slope_basis @ y
        mu = mu_tilde - np.log(np.dot(lam, np.exp(mu_tilde)))
        return lam, mu

    def to_aiet(self, xi: ArrayLike, permutation: Any) -> Aiet:
        lam, mu = self.lengths_and_log_slopes(xi)
        if np.any(lam <= 0.0):
            raise RenormalizationError(f"Chart point leaves the simplex: λ = {lam}")
        return Aiet(lengths=lam, slopes=np.exp(mu), permutation=permutation)

    def from_aiet(self, affine: Aiet) -> FloatArray:
        mu = affine.log_slopes
        x = self.length_basis.T @ (affine.lengths - self.lambda0)
        y = self.slope_basis.T @ (mu - np.dot(mu, self.lambda0))
        return np.concatenate([x, y])

    def constraint_projector(self) -> FloatArray:
        """Orthogonal projector of ℝ^d onto {⟨μ, λ⁰⟩ = 0}."""
        return self.slope_basis @ self.slope_basis.T


@dataclass(frozen=True, eq=False)
class Splitting:
    """Unstable and stable subspaces of R restricted to AIETs, in chart coordinates.

    Attributes:
        chart: The chart the bases are expressed in.
        unstable: Orthonormal columns, (d-1)+(g-1) of them.
        stable: Orthonormal columns spanning the complementary invariant subspace.
        slope_unstable: Unstable subspace of A on the constraint plane (y coordinates).
        slope_stable: Stable subspace of A on the constraint plane (y coordinates).
        adapted_unstable: Unit eigenvectors spanning the unstable subspace.
        adapted_stable: Unit eigenvectors spanning the stable subspace.
    """

    chart: AffineChart
    unstable: FloatArray
    stable: FloatArray
    slope_unstable: FloatArray
    slope_stable: FloatArray
    adapted_unstable: FloatArray
    adapted_stable: FloatArray

    @property
    def dim_unstable(self) -> int:
        return int(self.unstable.shape[1])

    @property
    def dim_stable(self) -> int:
        return int(self.stable.shape[1])

    def coordinates(self, xi: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """(u, s) with ξ = U u + S s in the adapted bases."""
        basis = np.hstack([self.adapted_unstable, self.adapted_stable])
        coeffs = np.linalg.solve(basis, np.asarray(xi, dtype=float))
        return coeffs[: self.dim_unstable], coeffs[self.dim_unstable :]

    def point(self, u: ArrayLike, s: ArrayLike) -> FloatArray:
        """ξ = U u + S s."""
        return self.adapted_unstable @ np.asarray(u, dtype=float) + self.adapted_stable @ np.asarray(
            s, dtype=float
        )

    def project_unstable(self, xi: ArrayLike) -> FloatArray:
        """Unstable coordinates of ξ along the stable subspace."""
        return self.coordinates(xi)[0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda0": self.chart.lambda0.tolist(),
            "unstable": self.unstable.tolist(),
            "stable": self.stable.tolist(),
            "dim_unstable": self.dim_unstable,
            "dim_stable": self.dim_stable,
        }


def _invariant_subspace(matrix: FloatArray, outside: bool) -> FloatArray:
    sort = "ouc" if outside else "iuc"
    _, vectors, sdim = scipy.linalg.schur(matrix, output="real", sort=sort)
    return vectors[:, :sdim]


def splitting(
    A: IntersectionMatrix, lambda0: ArrayLike, jacobian: ArrayLike | None = None
) -> Splitting:
    """The splitting of the chart tangent space at the fixed IET.

    The unstable subspace is the λ-tangent plus the unstable directions of A
    on the constraint plane. Without ``jacobian`` the stable subspace is the
    stable directions of A in the y coordinates; given the Jacobian of R in
    the chart it is the invariant subspace of the contracting eigenvalues.
    """
    chart = AffineChart(np.asarray(lambda0, dtype=float))
    d = chart.d
    basis = chart.slope_basis
    restricted = basis.T @ A.to_array() @ basis
    slope_unstable = _invariant_subspace(restricted, outside=True)
    slope_stable = _invariant_subspace(restricted, outside=False)
    top = np.hstack([np.eye(d - 1), np.zeros((d - 1, slope_unstable.shape[1]))])
    bottom = np.hstack([np.zeros((d - 1, d - 1)), slope_unstable])
    unstable = np.vstack([top, bottom])
    if jacobian is None:
        stable = np.vstack([np.zeros((d - 1, slope_stable.shape[1])), slope_stable])
        adapted_unstable, adapted_stable = unstable, stable
    else:
        J = np.asarray(jacobian, dtype=float)
        stable = _invariant_subspace(J, outside=False)
        adapted_unstable = _real_eigenbasis(J, outside=True)
        adapted_stable = _real_eigenbasis(J, outside=False)
    logger.debug("splitting d=%d unstable=%d stable=%d", d, unstable.shape[1], stable.shape[1])
    return Splitting(
        chart=chart,
        unstable=unstable,
        stable=stable,
        slope_unstable=slope_unstable,
        slope_stable=slope_stable,
        adapted_unstable=adapted_unstable,
        adapted_stable=adapted_stable,
    )


def _real_eigenbasis(matrix: FloatArray, outside: bool) -> FloatArray:
    """Unit real eigenvectors (real and imaginary parts for complex pairs)."""
    values, vectors = np.linalg.eig(matrix)
    keep = np.abs(values) > 1.0 if outside else np.abs(values) < 1.0
    order = np.argsort(-np.abs(values))
    columns = []
    for k in order:
        if not keep[k]:
            continue
        if abs(values[k].imag) < 1e-12:
            columns.append(vectors[:, k].real)
        elif values[k].imag > 0:
            columns.extend([vectors[:, k].real, vectors[:, k].imag])
    basis = np.column_stack(columns) if columns else np.zeros((matrix.shape[0], 0))
    return basis / np.linalg.norm(basis, axis=0, keepdims=True) if columns else basis


def expected_unstable_dimension(loop: RauzyLoop) -> int:
    """(d - 1) + (g - 1)."""
    surface = genus_and_marked_points(loop.base)
    return (loop.d - 1) + (surface.genus - 1)


def constraint_invariance_error(A: IntersectionMatrix, lambda0: ArrayLike) -> float:
    """‖(I - P) A P‖ for the projector P onto {⟨μ, λ⁰⟩ = 0}."""
    chart = AffineChart(np.asarray(lambda0, dtype=float))
    proj = chart.constraint_projector()
    return float(np.linalg.norm((np.eye(chart.d) - proj) @ A.to_array() @ proj, 2))


# =============================================================================
# Finite-difference Jacobian
# =============================================================================


def chart_map(loop: RauzyLoop, chart: AffineChart, n: int = 5) -> Callable[[FloatArray], FloatArray]:
    """R expressed in chart coordinates, on AIETs."""

    def apply(xi: FloatArray) -> FloatArray:
        T = Giet.from_aiet(chart.to_aiet(xi, loop.base), n)
        return chart.from_aiet(renormalize(T, loop).affine)

    return apply


def central_jacobian(
    fn: Callable[[FloatArray], FloatArray], at: ArrayLike, h: float
) -> FloatArray:
    at = np.asarray(at, dtype=float)
    columns = []
    for k in range(at.size):
        e = np.zeros_like(at)
        e[k] = h
        columns.append((fn(at + e) - fn(at - e)) / (2.0 * h))
    return np.column_stack(columns)


@dataclass(frozen=True, eq=False)
class DerivativeBlockReport:
    """Finite-difference check of the block structure of DR at the fixed IET.

    Attributes:
        jacobian: The accepted Jacobian in chart coordinates.
        step: The accepted step size.
        sweep: (h, ‖J_h - J_{h'}‖) for consecutive steps of the sweep.
        cross_block_norm: ‖D_λ R_μ‖, zero at the fixed point.
        length_expansion: α, the smallest eigenvalue modulus of D_λ R_λ.
        slope_moduli: Eigenvalue moduli of D_μ R_μ.
        expanding_slope_directions: Number of slope moduli > 1.
        moduli: Eigenvalue moduli of the whole Jacobian, decreasing.
        predicted_moduli: Moduli predicted from the spectrum of A.
    """

    jacobian: FloatArray
    step: float
    sweep: tuple[tuple[float, float], ...]
    cross_block_norm: float
    length_expansion: float
    slope_moduli: FloatArray
    expanding_slope_directions: int
    moduli: FloatArray
    predicted_moduli: FloatArray

    @property
    def prediction_error(self) -> float:
        return float(np.max(np.abs(self.moduli - self.predicted_moduli) / self.predicted_moduli))


def predicted_jacobian_moduli(A: IntersectionMatrix) -> FloatArray:
    """θ/|θ_k| for the length block and |θ_k| for the slope block, k >= 2."""
    moduli = np.sort(np.abs(np.linalg.eigvals(A.to_array())))[::-1]
    theta, rest = moduli[0], moduli[1:]
    return np.sort(np.concatenate([theta / rest, rest]))[::-1]


def derivative_block_check(
    T0: Giet, loop: RauzyLoop, steps: Sequence[float] = FD_STEPS
) -> DerivativeBlockReport:
    """Sweep central differences of R in the chart and check its block structure."""
    chart = AffineChart(T0.lengths)
    fn = chart_map(loop, chart)
    origin = np.zeros(chart.dim)
    jacobians = [central_jacobian(fn, origin, h) for h in steps]
    diffs = [float(np.linalg.norm(jacobians[k + 1] - jacobians[k])) for k in range(len(steps) - 1)]
    best = int(np.argmin(diffs))
    J, step = jacobians[best + 1], steps[best + 1]
    m = chart.d - 1
    jll, jml, jmm = J[:m, :m], J[m:, :m], J[m:, m:]
    slope_moduli = np.sort(np.abs(np.linalg.eigvals(jmm)))[::-1]
    report = DerivativeBlockReport(
        jacobian=J,
        step=step,
        sweep=tuple(zip(steps[1:], diffs)),
        cross_block_norm=float(np.linalg.norm(jml, 2)),
        length_expansion=float(np.min(np.abs(np.linalg.eigvals(jll)))),
        slope_moduli=slope_moduli,
        expanding_slope_directions=int(np.sum(slope_moduli > 1.0)),
        moduli=np.sort(np.abs(np.linalg.eigvals(J)))[::-1],
        predicted_moduli=predicted_jacobian_moduli(loop.matrix),
    )
    logger.info(
        "derivative blocks step=%.0e cross=%.3e alpha=%.6f",
        step,
        report.cross_block_norm,
        report.length_expansion,
    )
    return report

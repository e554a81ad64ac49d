"""Combinatorial Rauzy machinery.

Permutations are stored in the reduced, top-indexed form: interval ``i`` is the
i-th interval from the left on top and ``sigma[i-1]`` is its position on the
bottom. Step kinds are named by the winner (``Top`` when the last top interval
is longer than the last bottom interval).

Matrix convention:
    Each elementary step has a length matrix ``B`` with ``lambda_old = B @
    lambda_new`` (relabelling included for Bottom steps). The matrix returned
    by :func:`rauzy_step` is the intersection matrix ``E = B.T``, so that the
    loop matrix is ``A = E_m @ ... @ E_1`` and ``A.T = B_1 @ ... @ B_m``. With
    this choice ``lambda0`` is the Perron vector of ``A.T``, log-slopes obey
    ``mu(RT) = A @ mu(T)``, and the tower heights at level ``n`` are the row
    sums of ``A**n``.

All matrix arithmetic is carried out on Python integers, which never
overflow along long loops.

Example usage:

    from gietlab.combinatorics import Permutation, enumerate_loops

    pi = Permutation((4, 3, 2, 1))
    loops = enumerate_loops(pi, max_len=8)
    print(loops[0].code, loops[0].matrix.trace)
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from gietlab.exceptions import CombinatoricsError, ReduciblePermutationError

logger = logging.getLogger(__name__)

HYPERBOLICITY_TOLERANCE = 1e-9


class StepKind(str, Enum):
    """Kind of an elementary Rauzy step, named by the winner."""

    TOP = "t"
    BOTTOM = "b"

    @classmethod
    def parse(cls, letter: str) -> StepKind:
        try:
            return cls(letter.lower())
        except ValueError:
            raise CombinatoricsError(f"Unknown step kind: {letter!r} (expected 't' or 'b')")


Top = StepKind.TOP
Bottom = StepKind.BOTTOM


# =============================================================================
# Permutations
# =============================================================================


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{1..d}`` mapping top index to bottom position.

    Attributes:
        sigma: Bottom positions of the top intervals ``1..d``.
    """

    sigma: tuple[int, ...]

    def __post_init__(self) -> None:
        sigma = tuple(int(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if len(sigma) < 2:
            raise CombinatoricsError(f"A permutation needs d >= 2 intervals, got {len(sigma)}")
        if sorted(sigma) != list(range(1, len(sigma) + 1)):
            raise CombinatoricsError(f"Not a bijection of 1..{len(sigma)}: {sigma}")

    @classmethod
    def from_sequence(cls, values: Iterable[int]) -> Permutation:
        """Build a permutation from the bottom images of ``1..d``."""
        return cls(tuple(values))

    @property
    def d(self) -> int:
        """Number of intervals."""
        return len(self.sigma)

    def __call__(self, i: int) -> int:
        return self.sigma[i - 1]

    def inverse(self, position: int) -> int:
        """Top index of the interval sitting at bottom ``position``."""
        return self.sigma.index(position) + 1

    def reducing_index(self) -> int | None:
        """Smallest ``k < d`` with ``sigma({1..k}) = {1..k}``, if any."""
        running = 0
        for k, s in enumerate(self.sigma[:-1], start=1):
            running = max(running, s)
            if running == k:
                return k
        return None

    def is_irreducible(self) -> bool:
        return self.reducing_index() is None

    def require_irreducible(self) -> None:
        """Raise ``ReduciblePermutationError`` for reducible permutations."""
        k = self.reducing_index()
        if k is not None:
            raise ReduciblePermutationError(
                f"Permutation {self} is reducible at k={k}", permutation=self.sigma, k=k
            )

    def __str__(self) -> str:
        if self.d < 10:
            return "(" + "".join(str(s) for s in self.sigma) + ")"
        return "(" + " ".join(str(s) for s in self.sigma) + ")"


def irreducible_permutations(d: int) -> list[Permutation]:
    """All irreducible permutations on ``d`` intervals, in lexicographic order."""
    result = []
    for sigma in itertools.permutations(range(1, d + 1)):
        pi = Permutation(sigma)
        if pi.is_irreducible():
            result.append(pi)
    return result


# =============================================================================
# Integer matrices
# =============================================================================


@dataclass(frozen=True)
class IntersectionMatrix:
    """A square matrix of non-negative integers.

    Attributes:
        entries: Rows of the matrix as tuples of Python integers.
    """

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(a) for a in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        if any(len(row) != len(rows) for row in rows):
            raise CombinatoricsError("Intersection matrices must be square")
        if any(a < 0 for row in rows for a in row):
            raise CombinatoricsError("Intersection matrices have non-negative entries")

    @classmethod
    def identity(cls, d: int) -> IntersectionMatrix:
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))

    @classmethod
    def from_array(cls, array: Sequence[Sequence[int]] | np.ndarray) -> IntersectionMatrix:
        return cls(tuple(tuple(int(a) for a in row) for row in array))

    @property
    def d(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: tuple[int, int]) -> int:
        i, j = index
        return self.entries[i][j]

    def __matmul__(self, other: IntersectionMatrix) -> IntersectionMatrix:
        cols = list(zip(*other.entries))
        return IntersectionMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries)
        )

    def __pow__(self, n: int) -> IntersectionMatrix:
        if n < 0:
            raise CombinatoricsError("Only non-negative powers are supported")
        result = IntersectionMatrix.identity(self.d)
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    @property
    def T(self) -> IntersectionMatrix:  # noqa: N802
        return IntersectionMatrix(tuple(zip(*self.entries)))

    @property
    def trace(self) -> int:
        return sum(self.entries[i][i] for i in range(self.d))

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.entries)

    def column_sums(self) -> tuple[int, ...]:
        return tuple(sum(col) for col in zip(*self.entries))

    def apply(self, vector: Sequence[int]) -> tuple[int, ...]:
        """Exact integer matrix-vector product."""
        return tuple(sum(a * v for a, v in zip(row, vector)) for row in self.entries)

    def is_positive(self) -> bool:
        return all(a > 0 for row in self.entries for a in row)

    def determinant(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        return _bareiss_determinant(self.entries)

    def has_root_of_unity(self) -> bool:
        """True when some eigenvalue is a root of unity, decided exactly.

        A root of unity of degree at most d has order k with k <= 2 d².
        """
        power = self
        for _ in range(2 * self.d**2):
            shifted = [
                [a - int(i == j) for j, a in enumerate(row)] for i, row in enumerate(power.entries)
            ]
            if _bareiss_determinant(shifted) == 0:
                return True
            power = power @ self
        return False

    def to_array(self) -> np.ndarray:
        """Floating point copy for spectral computations."""
        return np.array(self.entries, dtype=float)

    def to_list(self) -> list[list[int]]:
        return [list(row) for row in self.entries]


def _bareiss_determinant(rows: Sequence[Sequence[int]]) -> int:
    m = [list(row) for row in rows]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# =============================================================================
# Elementary steps and loops
# =============================================================================


def _relabelling(d: int, j: int) -> list[int]:
    """Old top index -> new top index after a Bottom step with winner ``j``."""
    new = list(range(d + 1))
    new[d] = j + 1
    for k in range(j + 1, d):
        new[k] = k + 1
    return new


def rauzy_step(pi: Permutation, kind: StepKind) -> tuple[Permutation, IntersectionMatrix]:
    """Apply one elementary Rauzy step to ``pi``.

    Args:
        pi: An irreducible permutation.
        kind: ``Top`` or ``Bottom`` (the winner).

    Returns:
        The induced permutation and the elementary intersection matrix.

    Raises:
        ReduciblePermutationError: If ``pi`` is reducible.
    """
    pi.require_irreducible()
    kind = StepKind(kind)
    d = pi.d
    sigma = pi.sigma
    j = pi.inverse(d)  # label of the last bottom interval
    length = [[int(a == b) for b in range(d)] for a in range(d)]
    if kind is StepKind.TOP:
        s = sigma[d - 1]
        new_sigma = list(sigma)
        for k in range(1, d + 1):
            if k != j and sigma[k - 1] > s:
                new_sigma[k - 1] = sigma[k - 1] + 1
        new_sigma[j - 1] = s + 1
        length[d - 1][j - 1] += 1
    else:
        relabel = _relabelling(d, j)
        new_sigma = [0] * d
        length = [[0] * d for _ in range(d)]
        for k in range(1, d + 1):
            new_sigma[relabel[k] - 1] = sigma[k - 1]
            length[k - 1][relabel[k] - 1] = 1
        length[j - 1][relabel[d] - 1] += 1
    elementary = IntersectionMatrix(tuple(zip(*length)))
    return Permutation(tuple(new_sigma)), elementary


def apply_steps(
    pi: Permutation, steps: Iterable[StepKind]
) -> tuple[Permutation, IntersectionMatrix]:
    """Apply a sequence of steps; returns the end permutation and ``E_m @ ... @ E_1``."""
    matrix = IntersectionMatrix.identity(pi.d)
    for kind in steps:
        pi, elementary = rauzy_step(pi, kind)
        matrix = elementary @ matrix
    return pi, matrix


def parse_steps(code: str) -> tuple[StepKind, ...]:
    """Parse a loop literal such as ``"tbtb"``."""
    return tuple(StepKind.parse(c) for c in code.strip() if not c.isspace())


@dataclass(frozen=True)
class RauzyLoop:
    """A closed path in the Rauzy diagram.

    Attributes:
        base: The permutation the loop starts and ends at.
        steps: The sequence of step kinds.
        matrix: The intersection matrix ``A`` of the loop.
    """

    base: Permutation
    steps: tuple[StepKind, ...]
    matrix: IntersectionMatrix = field(compare=False)

    @classmethod
    def from_steps(cls, base: Permutation, steps: Iterable[StepKind | str]) -> RauzyLoop:
        """Build a loop, checking that it closes up.

        Raises:
            CombinatoricsError: If the steps do not return to ``base``.
        """
        kinds = tuple(StepKind(k) if isinstance(k, StepKind) else StepKind.parse(k) for k in steps)
        end, matrix = apply_steps(base, kinds)
        if end != base:
            raise CombinatoricsError(
                f"Steps {''.join(k.value for k in kinds)!r} lead from {base} to {end}, not a loop"
            )
        return cls(base=base, steps=kinds, matrix=matrix)

    @classmethod
    def from_code(cls, base: Permutation, code: str) -> RauzyLoop:
        return cls.from_steps(base, parse_steps(code))

    @property
    def code(self) -> str:
        return "".join(k.value for k in self.steps)

    @property
    def length_matrix(self) -> IntersectionMatrix:
        """``B_1 @ ... @ B_m``, the transpose of the intersection matrix."""
        return self.matrix.T

    @property
    def d(self) -> int:
        return self.base.d

    def __len__(self) -> int:
        return len(self.steps)

    def power(self, k: int) -> RauzyLoop:
        """The loop travelled ``k`` times."""
        return RauzyLoop.from_steps(self.base, self.steps * k)

    def __str__(self) -> str:
        return f"{self.base}:{self.code}"


def concatenate(first: RauzyLoop, second: RauzyLoop) -> RauzyLoop:
    """``first`` followed by ``second``; its matrix is ``second.matrix @ first.matrix``."""
    if first.base != second.base:
        raise CombinatoricsError("Loops with different base permutations cannot be concatenated")
    return RauzyLoop(
        base=first.base,
        steps=first.steps + second.steps,
        matrix=second.matrix @ first.matrix,
    )


def enumerate_loops(pi: Permutation, max_len: int) -> list[RauzyLoop]:
    """All loops of length ``1..max_len`` based at ``pi``.

    Loops are returned in lexicographic order of their step kinds, with
    ``Top`` before ``Bottom``.
    """
    if max_len < 1:
        raise CombinatoricsError(f"max_len must be >= 1, got {max_len}")
    pi.require_irreducible()
    identity = IntersectionMatrix.identity(pi.d)
    found: list[RauzyLoop] = []

    def walk(current: Permutation, prefix: tuple[StepKind, ...], matrix: IntersectionMatrix) -> None:
        if prefix and current == pi:
            found.append(RauzyLoop(base=pi, steps=prefix, matrix=matrix))
        if len(prefix) == max_len:
            return
        for kind in (StepKind.TOP, StepKind.BOTTOM):
            nxt, elementary = rauzy_step(current, kind)
            walk(nxt, prefix + (kind,), elementary @ matrix)

    walk(pi, (), identity)
    order = {StepKind.TOP: 0, StepKind.BOTTOM: 1}
    found.sort(key=lambda loop: tuple(order[k] for k in loop.steps))
    logger.debug("enumerated loops base=%s max_len=%d count=%d", pi, max_len, len(found))
    return found


# =============================================================================
# Surface data and admissibility
# =============================================================================


@dataclass(frozen=True)
class SurfaceData:
    """Genus and number of marked points of the suspension surface."""

    genus: int
    marked_points: int


def genus_and_marked_points(pi: Permutation) -> SurfaceData:
    """Compute ``(g, s)`` with ``d = 2g + s - 1``.

    ``s`` is the number of cycles of the auxiliary permutation of ``{0..d}``
    that sends ``j`` to the left neighbour (on top) of the interval following
    ``j`` on the bottom.
    """
    pi.require_irreducible()
    d = pi.d
    aux = [0] * (d + 1)
    aux[0] = pi.inverse(1) - 1
    for j in range(1, d + 1):
        if pi(j) == d:
            aux[j] = d
        else:
            aux[j] = pi.inverse(pi(j) + 1) - 1
    seen = [False] * (d + 1)
    cycles = 0
    for start in range(d + 1):
        if seen[start]:
            continue
        cycles += 1
        k = start
        while not seen[k]:
            seen[k] = True
            k = aux[k]
    genus, rem = divmod(d - cycles + 1, 2)
    if rem:
        raise CombinatoricsError(f"Inconsistent singularity count {cycles} for {pi}")
    return SurfaceData(genus=genus, marked_points=cycles)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of :func:`is_admissible_fixed_point`.

    Attributes:
        positive_power: Smallest ``p <= d**2`` with ``A**p > 0`` (None if none).
        hyperbolic: False when an eigenvalue is a root of unity, None when
            another eigenvalue modulus lies within the hyperbolicity tolerance
            of 1, True otherwise.
        genus: Genus of the suspension.
        marked_points: Number of marked points.
        perron_value: Largest eigenvalue modulus.
        moduli: Eigenvalue moduli sorted decreasingly.
        flags: Human readable reasons for rejection or caveats.
    """

    positive_power: int | None
    hyperbolic: bool | None
    genus: int
    marked_points: int
    perron_value: float
    moduli: tuple[float, ...]
    flags: tuple[str, ...]

    @property
    def accepted(self) -> bool:
        """True when the loop satisfies every standing assumption."""
        return (
            self.positive_power is not None
            and self.hyperbolic is True
            and self.genus >= 2
            and self.marked_points == 1
        )

    @property
    def usable(self) -> bool:
        """Positive and hyperbolic, regardless of the genus assumption."""
        return self.positive_power is not None and self.hyperbolic is True


def positivity_power(matrix: IntersectionMatrix) -> int | None:
    """Smallest ``p <= d**2`` with all entries of ``matrix**p`` positive."""
    power = matrix
    for p in range(1, matrix.d**2 + 1):
        if power.is_positive():
            return p
        power = power @ matrix
    return None


def is_admissible_fixed_point(
    loop: RauzyLoop, tolerance: float = HYPERBOLICITY_TOLERANCE
) -> AdmissibilityReport:
    """Report positivity, hyperbolicity and surface data of a loop matrix.

    Failures are reported, never raised. The loop is not replaced by a power.
    """
    surface = genus_and_marked_points(loop.base)
    p = positivity_power(loop.matrix)
    moduli = np.sort(np.abs(np.linalg.eigvals(loop.matrix.to_array())))[::-1]
    distance_to_circle = np.abs(moduli - 1.0)
    hyperbolic: bool | None = True
    if loop.matrix.has_root_of_unity():
        hyperbolic = False
    elif np.any(distance_to_circle < tolerance):
        hyperbolic = None
    flags = []
    if p is None:
        flags.append("no positive power")
    if hyperbolic is False:
        flags.append("not hyperbolic")
    elif hyperbolic is None:
        flags.append("hyperbolicity indeterminate")
    if surface.genus < 2:
        flags.append("below genus assumption")
    if surface.marked_points != 1:
        flags.append("more than one marked point")
    return AdmissibilityReport(
        positive_power=p,
        hyperbolic=hyperbolic,
        genus=surface.genus,
        marked_points=surface.marked_points,
        perron_value=float(moduli[0]),
        moduli=tuple(float(m) for m in moduli),
        flags=tuple(flags),
    )


def select_admissible_loop(
    pi: Permutation, max_len: int, require_genus: bool = True
) -> tuple[RauzyLoop, AdmissibilityReport]:
    """Pick the admissible loop with the smallest Perron value.

    Ties are broken by the lexicographic enumeration order. With
    ``require_genus=False`` positive hyperbolic loops below the genus
    assumption are accepted as well (used for the golden system).

    Raises:
        CombinatoricsError: If no loop qualifies.
    """
    best: tuple[RauzyLoop, AdmissibilityReport] | None = None
    for loop in enumerate_loops(pi, max_len):
        report = is_admissible_fixed_point(loop)
        ok = report.accepted if require_genus else report.usable
        if not ok:
            continue
        if best is None or report.perron_value < best[1].perron_value - 1e-12:
            best = (loop, report)
    if best is None:
        raise CombinatoricsError(f"No admissible loop of length <= {max_len} at {pi}")
    logger.info(
        "selected loop base=%s code=%s perron=%.6f", pi, best[0].code, best[1].perron_value
    )
    return best

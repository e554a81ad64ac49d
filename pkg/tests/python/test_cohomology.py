"""Tests for Birkhoff sums, the cohomological equation and the ratio test."""

from __future__ import annotations

import numpy as np
import pytest

ORBIT = 20_000
GRID = 1025


def wave(x):
    """A smooth observable with non-trivial Birkhoff sums."""
    return np.cos(2.0 * np.pi * np.asarray(x))


class TestBirkhoffSums:
    """Tests for direct Birkhoff sums and bounds."""

    def test_constant_observable(self, golden_T0) -> None:
        """Test that Sₙ1 = n."""
        from gietlab.cohomology import birkhoff_sums

        sums = birkhoff_sums(golden_T0, lambda x: np.ones_like(x), 5, [0.1, 0.2, 0.3])
        assert sums.shape == (5, 3)
        assert sums[:, 0].tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_bound_on_iet(self, golden_loop, golden_T0) -> None:
        """Test that log DT has vanishing sums on an IET, by both routes."""
        from gietlab.cohomology import birkhoff_bound, direct_birkhoff_bound, log_derivative

        f = log_derivative(golden_T0)
        assert direct_birkhoff_bound(golden_T0, f, 50) == 0.0
        assert birkhoff_bound(golden_T0, golden_loop, f, 50) == 0.0

    def test_zero_observable_bound(self, golden_loop, golden_T0) -> None:
        """Test that f = 0 has a zero bound."""
        from gietlab.cohomology import birkhoff_bound

        assert birkhoff_bound(golden_T0, golden_loop, np.zeros_like, 30) == 0.0
        assert birkhoff_bound(golden_T0, golden_loop, wave, 0) == 0.0

    def test_breakpoint_gap(self, golden_T0) -> None:
        """Test that the golden rotation has no break point connection."""
        from gietlab.cohomology import minimal_breakpoint_gap

        assert minimal_breakpoint_gap(golden_T0, 20) > 1e-3


class TestSpecialDecomposition:
    """Tests for the climb-then-descend split of Tⁿ into first returns."""

    def test_zero_iterate(self, golden_loop, golden_T0) -> None:
        """Test that n = 0 uses no returns."""
        from gietlab.cohomology import special_birkhoff_decomposition

        decomposition = special_birkhoff_decomposition(golden_T0, golden_loop, 0, 0.7, 3)
        assert decomposition.coefficients == (0, 0, 0, 0)
        assert decomposition.descent == (0, 0, 0)
        assert decomposition.end == 0.7
        assert decomposition.returns == 0

    def test_single_return(self, golden_loop, golden_T0) -> None:
        """Test that one top-level return covers n = l⁰_k."""
        from gietlab.cohomology import special_birkhoff_decomposition
        from gietlab.renorm import heights

        n = heights(golden_loop, 2)[0]
        decomposition = special_birkhoff_decomposition(golden_T0, golden_loop, n, 1e-7, 2)
        assert decomposition.coefficients == (0, 0, 1)
        assert decomposition.descent == (0, 0)
        assert decomposition.times == (n,)
        assert decomposition.end == pytest.approx(golden_T0.orbit(1e-7, n + 1)[n], abs=1e-12)
        assert abs(decomposition.log_derivative) < 1e-12

    def test_far_start_climbs(self, golden_loop, golden_T0) -> None:
        """Test that a start outside [0, X_k] climbs instead of iterating T."""
        from gietlab.cohomology import special_birkhoff_decomposition
        from gietlab.renorm import heights

        n = max(heights(golden_loop, 6))
        decomposition = special_birkhoff_decomposition(golden_T0, golden_loop, n, 0.9, 6)
        assert decomposition.bound == 3
        assert decomposition.within_bound
        assert decomposition.returns <= 2 * 6 * decomposition.bound + 1
        assert decomposition.end == pytest.approx(golden_T0.orbit(0.9, n + 1)[n], abs=1e-9)

    def test_random_recomposition(self, golden_loop, golden_T0) -> None:
        """Test random (x, n) against direct iteration, with every count at most M."""
        from gietlab.cohomology import special_birkhoff_decomposition
        from gietlab.renorm import heights, renormalization_trace

        k = 6
        trace = renormalization_trace(golden_T0, golden_loop, k)
        budget = max(heights(golden_loop, k))
        rng = np.random.default_rng(20240611)
        for x, n in zip(rng.uniform(0.0, 1.0, 40), rng.integers(0, budget + 1, 40)):
            decomposition = special_birkhoff_decomposition(
                golden_T0, golden_loop, int(n), float(x), k, trace
            )
            direct = golden_T0.orbit(float(x), int(n) + 1)[int(n)]
            assert decomposition.end == pytest.approx(direct, abs=1e-9)
            assert max(decomposition.coefficients + decomposition.descent) <= 3
            assert decomposition.times[-1:] == ((int(n),) if n > 0 else ())

    def test_bumped_matches_direct(self, golden_loop, golden_bumped) -> None:
        """Test special sums of log DT against the direct sum on a non-linear system."""
        from gietlab.cohomology import (
            birkhoff_sums,
            log_derivative,
            special_birkhoff_decomposition,
        )
        from gietlab.renorm import renormalization_trace

        trace = renormalization_trace(golden_bumped, golden_loop, 2)
        for x in (1e-7, 0.45, 0.93):
            for n in (3, 7, 8):
                decomposition = special_birkhoff_decomposition(
                    golden_bumped, golden_loop, n, x, 2, trace
                )
                f = log_derivative(golden_bumped)
                direct = birkhoff_sums(golden_bumped, f, n, [x])[-1, 0]
                end = golden_bumped.orbit(x, n + 1)[n]
                assert decomposition.end == pytest.approx(end, abs=1e-8)
                assert decomposition.log_derivative == pytest.approx(direct, abs=1e-8)
                assert decomposition.within_bound

    def test_d4_recomposition(self, d4_loop, d4_T0) -> None:
        """Test the d = 4 loop: exact end points, climb and descent counts below M."""
        from gietlab.cohomology import special_birkhoff_decomposition
        from gietlab.renorm import heights, renormalization_trace

        k = 2
        trace = renormalization_trace(d4_T0, d4_loop, k)
        budget = max(heights(d4_loop, k))
        rng = np.random.default_rng(7)
        for x, n in zip(rng.uniform(0.0, 1.0, 20), rng.integers(1, budget + 1, 20)):
            decomposition = special_birkhoff_decomposition(
                d4_T0, d4_loop, int(n), float(x), k, trace
            )
            assert decomposition.end == pytest.approx(
                d4_T0.orbit(float(x), int(n) + 1)[int(n)], abs=1e-9
            )
            below_top = decomposition.coefficients[:-1] + decomposition.descent
            assert max(below_top) < decomposition.bound

    def test_budget(self, golden_loop, golden_T0) -> None:
        """Test that n beyond the level's longest return time is rejected."""
        from gietlab import BudgetError, DomainError
        from gietlab.cohomology import special_birkhoff_decomposition

        with pytest.raises(BudgetError):
            special_birkhoff_decomposition(golden_T0, golden_loop, 9, 1e-7, 1)
        with pytest.raises(DomainError):
            special_birkhoff_decomposition(golden_T0, golden_loop, -1, 1e-7, 1)

    def test_special_depth(self, golden_loop) -> None:
        """Test the smallest level whose return times reach N."""
        from gietlab.cohomology import special_depth

        assert special_depth(golden_loop, 1) == 0
        assert special_depth(golden_loop, 55) == 4
        assert special_depth(golden_loop, 60) == 5


class TestSpecialBound:
    """Tests for Birkhoff bounds read off the special times."""

    def test_tabulated_induced_sum(self, golden_loop, golden_T0) -> None:
        """Test one tabulated level-3 return sum against 21 iterates of T."""
        from gietlab.cohomology import InducedSums, birkhoff_sums

        sums = InducedSums.tabulate(golden_T0, golden_loop, wave, 3)
        level = sums.trace.levels[3]
        y = 0.4 * level.scale * level.giet.lengths[0]
        direct = birkhoff_sums(golden_T0, wave, 21, [y])[-1, 0]
        assert sums.depth == 3
        assert sums(3, y) == pytest.approx(direct, abs=1e-10)

    def test_all_times_agree_with_direct(self, golden_loop, golden_T0) -> None:
        """Test that covering every n <= N reproduces the direct sup."""
        from gietlab.cohomology import birkhoff_bound, direct_birkhoff_bound

        N, points = 60, [0.05, 0.37, 0.81]
        special = birkhoff_bound(golden_T0, golden_loop, wave, N, points, times=range(1, N + 1))
        direct = direct_birkhoff_bound(golden_T0, wave, N, points)
        assert direct > 0.0
        assert special == pytest.approx(direct, abs=1e-9)

    def test_sampled_times_bounded_by_direct(self, golden_loop, golden_T0) -> None:
        """Test that the default sampled times never exceed the full sup."""
        from gietlab.cohomology import birkhoff_bound, direct_birkhoff_bound

        N = 144
        special = birkhoff_bound(golden_T0, golden_loop, wave, N)
        direct = direct_birkhoff_bound(golden_T0, wave, N)
        assert 0.0 < special <= direct + 1e-9

    def test_exact_log_derivative_sums(self, golden_loop, golden_bumped) -> None:
        """Test log DT sums from the renormalised maps against direct iteration."""
        from gietlab.cohomology import (
            InducedSums,
            birkhoff_bound,
            direct_birkhoff_bound,
            log_derivative,
        )

        f = log_derivative(golden_bumped)
        sums = InducedSums.log_derivative(golden_bumped, golden_loop, 2)
        points = [0.1, 0.5, 0.9]
        special = birkhoff_bound(
            golden_bumped, golden_loop, f, 8, points, times=range(1, 9), sums=sums
        )
        direct = direct_birkhoff_bound(golden_bumped, f, 8, points)
        assert special == pytest.approx(direct, abs=1e-8)

    def test_shallow_sums_rejected(self, golden_loop, golden_T0) -> None:
        """Test that induced sums must reach the requested level."""
        from gietlab import DomainError
        from gietlab.cohomology import InducedSums, special_birkhoff_decomposition

        sums = InducedSums.tabulate(golden_T0, golden_loop, wave, 1)
        with pytest.raises(DomainError):
            special_birkhoff_decomposition(golden_T0, golden_loop, 5, 0.2, 2, sums=sums)


class TestCohomologicalEquation:
    """Tests for the orbit solver."""

    def test_zero_observable(self, golden_T0) -> None:
        """Test that f = 0 gives u = 0."""
        from gietlab.cohomology import solve_cohomological

        solution = solve_cohomological(
            golden_T0, lambda x: np.zeros_like(x), orbit_length=1000, grid_size=GRID
        )
        assert solution.residual == 0.0
        assert solution.growth == 1.0
        assert np.all(solution.values == 0.0)

    def test_manufactured_coboundary(self, golden_T0) -> None:
        """Test recovery of g from f = g∘T - g."""
        from gietlab.cohomology import solve_cohomological

        def g(x):
            return 0.1 * np.sin(2.0 * np.pi * np.asarray(x))

        solution = solve_cohomological(
            golden_T0,
            lambda x: g(golden_T0.eval(x)) - g(x),
            orbit_length=ORBIT,
        )
        x = np.linspace(0.01, 0.99, 97)
        assert solution.residual < 1e-5
        assert solution.growth < 1.05
        assert np.max(np.abs(solution(x) - (g(x) - g(0.0)))) < 1e-6
        assert solution.to_dict()["orbit_length"] == ORBIT

    def test_dissipative_control(self) -> None:
        """Test that a trapping AIET has sums that at least double from N to 4N."""
        from gietlab import BoundednessError
        from gietlab.cohomology import GROWTH_THRESHOLD, dissipative_aiet, invariant_density

        assert GROWTH_THRESHOLD == 2.0
        with pytest.raises(BoundednessError) as exc_info:
            invariant_density(dissipative_aiet(), orbit_length=1000, grid_size=GRID)
        assert exc_info.value.growth >= 2.0


class TestDensityAndConjugacy:
    """Tests for the invariant density, the conjugacy and the pushforward check."""

    def test_iet_density(self, golden_T0) -> None:
        """Test that an IET has Lebesgue as invariant density."""
        from gietlab.cohomology import invariant_density

        density = invariant_density(golden_T0, orbit_length=1000, grid_size=GRID)
        assert np.allclose(density.values, 1.0, atol=1e-12)
        assert density(0.5) == pytest.approx(1.0)
        assert density.measure([0.1, 0.4], [0.3, 0.9]).tolist() == pytest.approx([0.2, 0.5])

    def test_iet_conjugacy(self, golden_T0) -> None:
        """Test that an IET is conjugate to itself by the identity."""
        from gietlab.cohomology import invariant_density_and_conjugacy

        _, conjugacy = invariant_density_and_conjugacy(
            golden_T0, golden_T0, orbit_length=1000, grid_size=GRID
        )
        assert conjugacy.residual < 1e-10
        assert conjugacy.c1_distance < 1e-10
        assert conjugacy.breakpoint_error < 1e-10
        assert conjugacy.holder is None

    def test_iet_pushforward(self, golden_loop, golden_T0) -> None:
        """Test that the identity pushes Lebesgue onto the invariant measure of T₀."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import invariant_density_and_conjugacy, pushforward_check
        from gietlab.monotone import moebius

        density, conjugacy = invariant_density_and_conjugacy(
            golden_T0, golden_T0, orbit_length=1000, grid_size=GRID
        )
        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 5)]
        report = pushforward_check(density, conjugacy, partitions)
        assert report.levels == (1, 2, 3, 4)
        assert report.passed
        assert report.max_error < 1e-10
        assert not pushforward_check(density, moebius(1.3), partitions).passed

    def test_conjugate_system(self, golden_T0) -> None:
        """Test that h∘T₀∘h⁻¹ is conjugate to T₀ through h."""
        from gietlab.cohomology import conjugate_giet
        from gietlab.monotone import moebius

        h = moebius(1.2)
        T = conjugate_giet(golden_T0, h)
        x = np.linspace(0.01, 0.99, 51)
        assert not T.is_affine()
        assert np.max(np.abs(T.eval(h.eval(x)) - h.eval(golden_T0.eval(x)))) < 1e-7

    def test_recovered_conjugacy_pushforward(self, golden_loop, golden_T0) -> None:
        """Test density, conjugacy and pushforward on a system with known conjugacy."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import (
            conjugate_giet,
            invariant_density_and_conjugacy,
            pushforward_check,
        )
        from gietlab.monotone import moebius

        h = moebius(1.2)
        T = conjugate_giet(golden_T0, h)
        density, conjugacy = invariant_density_and_conjugacy(
            T, golden_T0, orbit_length=ORBIT, grid_size=GRID
        )
        x = np.linspace(0.0, 1.0, 101)
        assert np.max(np.abs(conjugacy.h.eval(x) - h.eval(x))) < 1e-4
        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 5)]
        assert pushforward_check(density, conjugacy, partitions).passed
        assert pushforward_check(density, h, partitions).passed


class TestRatioTest:
    """Tests for the fine-grid axioms and the ratio test."""

    def test_identity(self, golden_loop, golden_T0) -> None:
        """Test that the identity has no discrepancy."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import fine_grid_ratio_test

        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 5)]
        report = fine_grid_ratio_test(lambda x: x, partitions)
        assert report.levels == [1, 2, 3, 4]
        assert report.discrepancies == [0.0] * 4
        assert report.rate is None
        assert report.grid_ok and not report.skipped
        assert len(report.refinement) == 3
        assert max(report.adjacency) == pytest.approx(1.0 / 0.6180339887498949, rel=1e-9)

    def test_axioms(self, golden_loop, golden_T0) -> None:
        """Test that dynamical partitions form a fine grid."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import fine_grid_axioms

        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 5)]
        axioms = fine_grid_axioms(partitions)
        assert axioms.nested and axioms.tiling
        assert axioms.ok and axioms.failures == []
        assert axioms.c == pytest.approx(1.0 / 0.6180339887498949, rel=1e-9)
        assert 2 <= axioms.a <= 3

    def test_non_nested_skips_fit(self, golden_loop, golden_T0) -> None:
        """Test that coarsening partitions fail the axioms and skip the fit."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import fine_grid_ratio_test, salem_map

        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(4, 0, -1)]
        report = fine_grid_ratio_test(salem_map(), partitions)
        assert not report.grid_ok
        assert report.skipped
        assert "not nested" in report.failures
        assert report.rate is None and report.r_squared is None
        assert len(report.discrepancies) == 4

    def test_adjacency_bound_skips_fit(self, golden_loop, golden_T0) -> None:
        """Test that a bound on c below the golden ratio rejects the grid."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import fine_grid_ratio_test, salem_map

        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 5)]
        report = fine_grid_ratio_test(salem_map(), partitions, adjacency_bound=1.1)
        assert not report.grid_ok
        assert report.skipped
        assert any(failure.startswith("adjacency") for failure in report.failures)
        assert report.rate is None

    def test_salem_map(self) -> None:
        """Test the singular control map."""
        from gietlab.cohomology import salem_map

        F = salem_map(0.3, depth=10)
        assert F(np.array([0.0, 0.5, 1.0])).tolist() == pytest.approx([0.0, 0.3, 1.0])
        assert np.all(np.diff(F(np.linspace(0.0, 1.0, 101))) > 0.0)

    def test_salem_discrepancy(self, golden_loop, golden_T0) -> None:
        """Test that the singular map shows a non-zero discrepancy."""
        from gietlab import dynamical_partition
        from gietlab.cohomology import fine_grid_ratio_test, salem_map

        partitions = [dynamical_partition(golden_T0, golden_loop, n) for n in range(1, 4)]
        report = fine_grid_ratio_test(salem_map(), partitions)
        assert report.grid_ok
        assert all(v > 0.0 for v in report.discrepancies)

    def test_salem_domain(self) -> None:
        """Test that q must lie in (0, 1)."""
        from gietlab import DomainError
        from gietlab.cohomology import salem_map

        with pytest.raises(DomainError):
            salem_map(1.0)


class TestHolder:
    """Tests for the Hölder utilities."""

    def test_lipschitz(self) -> None:
        """Test that u = x has seminorm one for δ = 1."""
        from gietlab.cohomology import holder_seminorm

        x = np.linspace(0.0, 1.0, 101)
        assert holder_seminorm(x, x, 1.0) == pytest.approx(1.0)

    def test_square_root(self) -> None:
        """Test that √x is 1/2-Hölder with seminorm one."""
        from gietlab.cohomology import holder_norm, holder_seminorm

        x = np.linspace(0.0, 1.0, 201)
        assert holder_seminorm(x, np.sqrt(x), 0.5) == pytest.approx(1.0)
        assert holder_norm(x, np.sqrt(x), 0.5) == pytest.approx(2.0)

    def test_subsampling(self) -> None:
        """Test that subsampled pairs never exceed the exact seminorm."""
        from gietlab.cohomology import holder_seminorm

        x = np.linspace(0.0, 1.0, 301)
        u = np.sin(3.0 * x)
        exact = holder_seminorm(x, u, 0.7)
        assert holder_seminorm(x, u, 0.7, max_pairs=1000, seed=3) <= exact

    def test_product(self) -> None:
        """Test the product inequality."""
        from gietlab.cohomology import holder_product_check

        x = np.linspace(0.0, 1.0, 151)
        assert holder_product_check(x, np.cos(x), np.sqrt(x), 0.5).passed

    def test_exponent_domain(self) -> None:
        """Test that δ must lie in (0, 1]."""
        from gietlab import DomainError
        from gietlab.cohomology import holder_seminorm

        with pytest.raises(DomainError):
            holder_seminorm([0.0, 1.0], [0.0, 1.0], 0.0)

"""Tests for elementary steps, renormalisation and dynamical partitions."""

from __future__ import annotations

import math

import numpy as np
import pytest

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


class TestElementaryStep:
    """Tests for rauzy_step_giet."""

    def test_golden_first_step_is_bottom(self, golden_T0) -> None:
        """Test that the golden IET selects a Bottom step."""
        from gietlab import Bottom
        from gietlab.renorm import step_kind_of

        assert step_kind_of(golden_T0) is Bottom

    def test_step_rescales(self, golden_T0) -> None:
        """Test that one step induces on [0, φ] and swaps the golden lengths."""
        from gietlab import rauzy_step_giet

        image, shrink = rauzy_step_giet(golden_T0)
        assert shrink == pytest.approx(GOLDEN_RATIO, rel=1e-12)
        assert image.lengths.tolist() == pytest.approx([1 - GOLDEN_RATIO, GOLDEN_RATIO], rel=1e-12)

    def test_wrong_step(self, golden_T0) -> None:
        """Test that a prescribed step disagreeing with the lengths raises."""
        from gietlab import NotInDomainError, Top, rauzy_step_giet

        with pytest.raises(NotInDomainError) as exc_info:
            rauzy_step_giet(golden_T0, Top, step_index=4)
        assert exc_info.value.step_index == 4

    def test_connection(self) -> None:
        """Test that equal competing lengths are a connection."""
        from gietlab import Aiet, Giet, Permutation, RauzyConnectionError, rauzy_step_giet

        T = Giet.from_aiet(Aiet.iet([0.5, 0.5], Permutation((2, 1))))
        with pytest.raises(RauzyConnectionError):
            rauzy_step_giet(T)

    def test_step_keeps_total_nonlinearity(self, d4_bumped) -> None:
        """Test that inducing keeps ∫η_T."""
        from gietlab import rauzy_step_giet

        image, _ = rauzy_step_giet(d4_bumped)
        assert abs(image.total_nonlinearity() - d4_bumped.total_nonlinearity()) < 1e-10


class TestRenormalize:
    """Tests for R along a loop."""

    def test_golden_fixed_point(self, golden_loop, golden_T0) -> None:
        """Test that the golden IET is fixed with scale φ²."""
        from gietlab.giet import affine_distance
        from gietlab.renorm import renormalize_with_scale

        image, scale = renormalize_with_scale(golden_T0, golden_loop)
        assert affine_distance(image.affine, golden_T0.affine) < 1e-10
        assert scale == pytest.approx(GOLDEN_RATIO**2, rel=1e-12)
        assert image.is_affine()

    def test_d4_fixed_point(self, d4_loop, d4_T0) -> None:
        """Test that the d=4 fixed IET is fixed by its loop."""
        from gietlab import renormalize
        from gietlab.giet import affine_distance

        assert affine_distance(renormalize(d4_T0, d4_loop).affine, d4_T0.affine) < 1e-10

    def test_bumped_stays_in_slice(self, d4_loop, d4_bumped) -> None:
        """Test that renormalisation keeps ∫η = 0 and the permutation."""
        from gietlab import renormalize

        image = renormalize(d4_bumped, d4_loop)
        assert image.permutation == d4_bumped.permutation
        assert abs(image.total_nonlinearity()) < 1e-10

    def test_permutation_mismatch(self, golden_loop, d4_T0) -> None:
        """Test that the loop must start at T's permutation."""
        from gietlab import NotInDomainError, renormalize

        with pytest.raises(NotInDomainError):
            renormalize(d4_T0, golden_loop)


class TestTrace:
    """Tests for renormalisation traces."""

    def test_golden_trace(self, golden_loop, golden_T0) -> None:
        """Test that scales shrink by φ² per level."""
        from gietlab import renormalization_trace

        trace = renormalization_trace(golden_T0, golden_loop, 5)
        assert trace.depth == 5
        assert trace.infinitely_renormalisable
        assert trace.scales().tolist() == pytest.approx(
            [GOLDEN_RATIO ** (2 * k) for k in range(6)], rel=1e-10
        )
        assert len(trace.levels[3].to_record()["lengths"]) == 2

    def test_trace_exit(self, golden_loop) -> None:
        """Test that leaving the loop's domain ends the trace without raising."""
        from gietlab import Aiet, Giet, Permutation, renormalization_trace

        T = Giet.from_aiet(Aiet.iet([0.7, 0.3], Permutation((2, 1))))
        trace = renormalization_trace(T, golden_loop, 3)
        assert trace.depth == 0
        assert trace.exit_reason == "NotInDomainError"
        assert trace.exit_step == 1
        assert not trace.infinitely_renormalisable

    def test_radius_exit(self, d4_loop, d4_T0, make_bumped) -> None:
        """Test that a zero radius stops the trace after one level."""
        from gietlab import renormalization_trace

        trace = renormalization_trace(make_bumped(d4_T0), d4_loop, 3, radius=0.0, reference=d4_T0)
        assert trace.depth == 1
        assert trace.exit_reason == "radius"


class TestDynamicalPartition:
    """Tests for towers and their geometry."""

    def test_heights(self, golden_loop) -> None:
        """Test that heights are row sums of Aⁿ."""
        from gietlab.renorm import heights

        assert heights(golden_loop, 0) == (1, 1)
        assert heights(golden_loop, 1) == (3, 2)
        assert heights(golden_loop, 2) == (8, 5)

    def test_partition_tiles_interval(self, d4_loop, d4_bumped) -> None:
        """Test that the tower intervals tile [0, 1]."""
        from gietlab import dynamical_partition

        partition = dynamical_partition(d4_bumped, d4_loop, 1)
        intervals = partition.intervals()
        assert len(intervals) == sum(partition.heights)
        assert partition.total_measure == pytest.approx(1.0, abs=1e-10)
        assert intervals[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(intervals[1:, 0] - intervals[:-1, 1])) < 1e-10

    def test_golden_visit_counts(self, golden_loop, golden_T0) -> None:
        """Test that visit counts recover the loop matrix."""
        from gietlab import dynamical_partition

        partition = dynamical_partition(golden_T0, golden_loop, 1)
        assert partition.visit_counts(golden_T0).tolist() == golden_loop.matrix.to_list()

    def test_golden_delta_rate(self, golden_loop, golden_T0) -> None:
        """Test that Δ_n shrinks by φ² per level."""
        from gietlab import dynamical_partition

        deltas = [dynamical_partition(golden_T0, golden_loop, n).delta for n in range(1, 5)]
        ratios = np.array(deltas[1:]) / np.array(deltas[:-1])
        assert ratios == pytest.approx(GOLDEN_RATIO**2, rel=1e-8)

    def test_budget(self, golden_loop, golden_T0) -> None:
        """Test that the floor budget is enforced before iterating."""
        from gietlab import BudgetError, dynamical_partition

        with pytest.raises(BudgetError) as exc_info:
            dynamical_partition(golden_T0, golden_loop, 2, budget=3)
        assert exc_info.value.required == 13

    def test_negative_level(self, golden_loop, golden_T0) -> None:
        """Test that negative levels are rejected."""
        from gietlab import DomainError, dynamical_partition

        with pytest.raises(DomainError):
            dynamical_partition(golden_T0, golden_loop, -1)


class TestOrbitEval:
    """Tests for evaluating RⁿT through orbits of T."""

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_renormalised_branch(self, d4_loop, d4_T0, make_bumped, n: int) -> None:
        """Test that orbit evaluation agrees with the renormalised map."""
        from gietlab import orbit_eval, renormalization_trace

        T = make_bumped(d4_T0, 0.1)
        trace = renormalization_trace(T, d4_loop, n)
        level = trace.giet(n)
        for j in range(level.d):
            s = np.linspace(0.1, 0.9, 5)
            x = level.affine.top_starts[j] + level.lengths[j] * s
            direct = orbit_eval(T, d4_loop, n, j, x, trace=trace)
            assert np.max(np.abs(direct - level.eval(x))) < 1e-7

    def test_budget(self, golden_loop, golden_T0) -> None:
        """Test that the evaluation budget is enforced."""
        from gietlab import BudgetError, orbit_eval

        with pytest.raises(BudgetError):
            orbit_eval(golden_T0, golden_loop, 3, 0, np.linspace(0.1, 0.5, 10), budget=10)

"""Tests for shooting, cones and convergence diagnostics."""

from __future__ import annotations

import math

import numpy as np
import pytest

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


class TestSystem:
    """Tests for the shadowing system of a loop."""

    def test_golden_system(self, golden_system, golden_T0) -> None:
        """Test the golden splitting and expansion rates."""
        assert golden_system.dim_unstable == 1
        assert golden_system.dim_stable == 1
        low, high = golden_system.expansion()
        assert low == pytest.approx(GOLDEN_RATIO**-4, rel=1e-5)
        assert high == pytest.approx(low)
        assert np.allclose(golden_system.unstable_coordinates(golden_T0), 0.0, atol=1e-14)

    def test_d4_system(self, d4_system) -> None:
        """Test the d=4 splitting dimensions."""
        assert d4_system.dim_unstable == 4
        assert d4_system.dim_stable == 2
        low, high = d4_system.expansion()
        assert 1.0 < low <= high


class TestShadowingProblem:
    """Tests for problem validation."""

    def test_stable_dimension(self, golden_system) -> None:
        """Test that s must match the stable dimension."""
        from gietlab import ShadowingError, ShadowingProblem

        with pytest.raises(ShadowingError):
            ShadowingProblem(golden_system, s=[0.0, 0.0])

    def test_method(self, golden_system) -> None:
        """Test that unknown search methods are rejected."""
        from gietlab import ShadowingError, ShadowingProblem

        with pytest.raises(ShadowingError):
            ShadowingProblem(golden_system, s=[0.0], method="simplex")

    def test_slice(self, golden_system, golden_T0) -> None:
        """Test that profiles with ∫η ≠ 0 are rejected in slice mode."""
        from gietlab import ShadowingError, ShadowingProblem, moebius

        profiles = (moebius(1.1), golden_T0.profiles[1])
        with pytest.raises(ShadowingError):
            ShadowingProblem(golden_system, s=[0.0], profiles=profiles)
        ShadowingProblem(golden_system, s=[0.0], profiles=profiles, slice_only=False)

    def test_default_profiles(self, golden_system) -> None:
        """Test that missing profiles default to the identity."""
        from gietlab import ShadowingProblem

        problem = ShadowingProblem(golden_system, s=[0.0])
        assert problem.giet([0.0]).is_affine()


class TestShoot:
    """Tests for the shooting searches."""

    def test_fixed_point_is_found(self, golden_system) -> None:
        """Test that the fixed IET shoots to full depth at u = 0."""
        from gietlab import ShadowingProblem, shoot

        result = shoot(ShadowingProblem(golden_system, s=[0.0], n_max=6))
        assert result.succeeded
        assert result.method == "bisection"
        assert abs(result.u_star[0]) < 1e-12
        assert result.to_dict()["succeeded"] is True

    def test_golden_stable_offset(self, golden_system) -> None:
        """Test shooting with a non-zero stable coordinate."""
        from gietlab import ShadowingProblem, shoot

        result = shoot(ShadowingProblem(golden_system, s=[1e-3], n_max=6))
        assert result.depth >= 6
        assert len(result.distances) == 7
        assert result.distances[-1].c1 < result.distances[0].c1
        assert result.search_path

    def test_golden_bumped(self, golden_system, golden_bumped) -> None:
        """Test shooting with bump profiles on the golden system."""
        from gietlab import ShadowingProblem, shoot

        problem = ShadowingProblem(
            golden_system, s=[0.0], profiles=golden_bumped.profiles, n_max=6
        )
        result = shoot(problem)
        assert result.succeeded
        assert all(d.c1 <= problem.epsilon for d in result.distances)

    def test_no_shadow(self, golden_system) -> None:
        """Test that an unreachable depth raises with the best candidate."""
        from gietlab import NoShadowError, ShadowingProblem, shoot

        problem = ShadowingProblem(
            golden_system, s=[5e-3], n_max=4, epsilon=1e-3, method="bisection"
        )
        with pytest.raises(NoShadowError) as exc_info:
            shoot(problem)
        assert exc_info.value.best_depth == 0

    @pytest.mark.slow
    def test_d4_newton(self, d4_system, d4_bumped) -> None:
        """Test the nested Newton scheme on the d=4 system."""
        from gietlab import ShadowingProblem, shoot

        problem = ShadowingProblem(d4_system, s=np.zeros(2), profiles=d4_bumped.profiles, n_max=8)
        result = shoot(problem, require_depth=8)
        assert result.depth >= 8
        assert result.method in ("newton", "box")
        if result.method == "newton":
            assert len(result.corrections) == 8


class TestCones:
    """Tests for cone membership and expansion."""

    def test_unstable_direction_in_cone(self, golden_system, golden_loop) -> None:
        """Test that a pure unstable perturbation lies in the cone and expands."""
        from gietlab.shadowing import cone_check

        base = golden_system.T0
        x = golden_system.giet([1e-5], [0.0], base.profiles)
        report = cone_check(x, base, golden_system.splitting, loop=golden_loop)
        assert report.in_cone
        assert report.ratio < 1e-8
        assert report.expansion == pytest.approx(GOLDEN_RATIO**-4, rel=1e-2)

    def test_base_point(self, golden_system) -> None:
        """Test that the base point itself is not in its cone."""
        from gietlab.shadowing import cone_check

        base = golden_system.T0
        report = cone_check(base, base, golden_system.splitting)
        assert not report.in_cone
        assert report.expansion is None


class TestDiagnostics:
    """Tests for Moebius fits and convergence rates."""

    def test_moebius_fit(self) -> None:
        """Test that a Moebius map fits itself."""
        from gietlab import moebius
        from gietlab.shadowing import moebius_fit

        fit = moebius_fit(moebius(1.3))
        assert fit.parameter == pytest.approx(1.3, rel=1e-12)
        assert fit.residual < 1e-10

    def test_golden_delta_rate(self, golden_loop, golden_T0) -> None:
        """Test the fitted Δ rate on the golden IET."""
        from gietlab.shadowing import convergence_diagnostics

        diagnostics = convergence_diagnostics(golden_T0, golden_loop, 4)
        assert len(diagnostics.records) == 5
        assert diagnostics.rates["delta"] == pytest.approx(GOLDEN_RATIO**2, rel=1e-6)
        assert diagnostics.series("affine") == [0.0] * 5

    def test_not_renormalisable(self, golden_loop) -> None:
        """Test that a short trace is an error."""
        from gietlab import Aiet, Giet, Permutation, RenormalizationError
        from gietlab.shadowing import convergence_diagnostics

        T = Giet.from_aiet(Aiet.iet([0.7, 0.3], Permutation((2, 1))))
        with pytest.raises(RenormalizationError):
            convergence_diagnostics(T, golden_loop, 3)

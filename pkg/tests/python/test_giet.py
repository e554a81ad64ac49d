"""Tests for affine and generalised interval exchanges."""

from __future__ import annotations

import math

import numpy as np
import pytest

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


class TestAiet:
    """Tests for Aiet construction and layout."""

    def test_normalisation_enforced(self) -> None:
        """Test that top lengths must sum to one."""
        from gietlab import Aiet, Permutation, RepresentationError

        with pytest.raises(RepresentationError):
            Aiet(lengths=[0.5, 0.6], slopes=[1.0, 1.0], permutation=Permutation((2, 1)))

    def test_bottom_normalisation_enforced(self) -> None:
        """Test that Σ ρ_i λ_i must equal one."""
        from gietlab import Aiet, Permutation, RepresentationError

        with pytest.raises(RepresentationError):
            Aiet(lengths=[0.5, 0.5], slopes=[1.0, 2.0], permutation=Permutation((2, 1)))

    def test_from_lengths(self) -> None:
        """Test slopes recovered from top and bottom lengths."""
        from gietlab import Aiet, Permutation

        aiet = Aiet.from_lengths([1.0, 1.0], [1.0, 3.0], Permutation((2, 1)))
        assert aiet.slopes.tolist() == pytest.approx([0.5, 1.5])
        assert aiet.bottom_lengths.sum() == pytest.approx(1.0)

    def test_from_log_slopes_normalises(self) -> None:
        """Test that log-slopes are shifted onto the normalised slice."""
        from gietlab import Aiet, Permutation

        aiet = Aiet.from_log_slopes([0.3, 0.7], [1.0, 2.0], Permutation((2, 1)))
        assert np.dot(aiet.lengths, aiet.slopes) == pytest.approx(1.0, abs=1e-14)
        assert aiet.log_slopes[1] - aiet.log_slopes[0] == pytest.approx(1.0)

    def test_bottom_starts_rotation(self) -> None:
        """Test that (21) puts the first interval on the right."""
        from gietlab import Aiet, Permutation

        aiet = Aiet.iet([0.6, 0.4], Permutation((2, 1)))
        assert aiet.top_starts.tolist() == pytest.approx([0.0, 0.6])
        assert aiet.bottom_starts.tolist() == pytest.approx([0.4, 0.0])
        assert aiet.is_iet()

    def test_arrays_read_only(self) -> None:
        """Test that stored arrays cannot be mutated."""
        from gietlab import Aiet, Permutation

        aiet = Aiet.iet([0.6, 0.4], Permutation((2, 1)))
        with pytest.raises(ValueError):
            aiet.lengths[0] = 0.1


class TestGietEvaluation:
    """Tests for evaluating GIETs."""

    def test_golden_rotation(self, golden_T0) -> None:
        """Test that the golden IET is a rotation by 1 - λ_1."""
        assert golden_T0.lengths[0] == pytest.approx(GOLDEN_RATIO, rel=1e-12)
        x = np.array([0.0, 0.3, 0.6, 0.7, 0.99])
        expected = np.mod(x + 1.0 - GOLDEN_RATIO, 1.0)
        assert np.max(np.abs(golden_T0.eval(x) - expected)) < 1e-12

    def test_branch_of_half_open(self, golden_T0) -> None:
        """Test that break points belong to the right-hand branch."""
        x = np.array([0.0, golden_T0.lengths[0], 1.0])
        assert golden_T0.branch_of(x).tolist() == [0, 1, 1]

    def test_eval_with_branch_scalar(self, golden_T0) -> None:
        """Test the scalar return types."""
        from gietlab.giet import eval_giet

        y, branch = eval_giet(golden_T0, 0.1)
        assert isinstance(y, float)
        assert branch == 0

    def test_affine_derivative(self) -> None:
        """Test that DT equals the branch slope on an AIET."""
        from gietlab import Aiet, Giet, Permutation

        T = Giet.from_aiet(Aiet.from_lengths([1.0, 1.0], [1.0, 3.0], Permutation((2, 1))))
        assert T.deriv(0.2) == pytest.approx(0.5)
        assert T.deriv(0.8) == pytest.approx(1.5)
        assert T.deriv2(0.8) == pytest.approx(0.0, abs=1e-12)
        assert T.is_affine()

    def test_inverse(self, d4_bumped) -> None:
        """Test that eval_inverse undoes eval away from break points."""
        x = np.linspace(0.01, 0.99, 41)
        x = x[np.min(np.abs(x[:, None] - d4_bumped.affine.top_starts[None, :]), axis=1) > 1e-6]
        y = d4_bumped.eval(x)
        assert np.max(np.abs(d4_bumped.eval_inverse(y) - x)) < 1e-10

    def test_domain_error(self, golden_T0) -> None:
        """Test that points outside [0, 1] raise."""
        from gietlab import DomainError

        with pytest.raises(DomainError):
            golden_T0.eval(-0.5)

    def test_orbit(self, golden_T0) -> None:
        """Test the orbit starts at x0 and follows T."""
        orbit = golden_T0.orbit(0.1, 5)
        assert orbit.shape == (5,)
        assert orbit[0] == 0.1
        assert orbit[3] == pytest.approx(golden_T0.eval(golden_T0.eval(golden_T0.eval(0.1))))

    def test_profile_count(self, golden_T0) -> None:
        """Test that every branch needs a profile."""
        from gietlab import Giet, RepresentationError

        with pytest.raises(RepresentationError):
            Giet(golden_T0.affine, golden_T0.profiles[:1])


class TestNonLinearityFunctionals:
    """Tests for ∫η, norms and distances."""

    def test_bumped_in_slice(self, d4_bumped) -> None:
        """Test that bump profiles keep ∫η_T at zero."""
        from gietlab.giet import nonlinearity_profile, total_nonlinearity

        assert abs(total_nonlinearity(d4_bumped)) < 1e-13
        profile = nonlinearity_profile(d4_bumped)
        assert abs(profile.total) < 1e-13
        assert abs(profile.quadrature.value) < 1e-8
        assert d4_bumped.nonlinearity_l1() > 0.0

    def test_moebius_branch(self, golden_T0) -> None:
        """Test ∫η_T for a Moebius profile on one branch."""
        from gietlab import Giet, moebius

        T = Giet(golden_T0.affine, (moebius(1.5), golden_T0.profiles[1]))
        assert T.total_nonlinearity() == pytest.approx(2.0 * math.log(1.5), rel=1e-12)

    def test_cr_norm_reference(self, d4_T0, d4_bumped) -> None:
        """Test that the C^r norm vanishes on T0 and is positive on a bump."""
        from gietlab.giet import cr_norm

        assert cr_norm(d4_T0) == 0.0
        assert cr_norm(d4_bumped, r=0) > 0.0
        assert cr_norm(d4_bumped, r=3, reference=d4_T0.affine) >= cr_norm(d4_bumped, r=0)

    def test_distance_symmetric(self, d4_T0, d4_bumped) -> None:
        """Test that the distance is symmetric and zero on equal systems."""
        from gietlab import distance

        assert distance(d4_T0, d4_T0) == 0.0
        assert distance(d4_T0, d4_bumped, r=1) == pytest.approx(distance(d4_bumped, d4_T0, r=1))

    def test_distance_permutation_mismatch(self, d4_T0, golden_T0) -> None:
        """Test that systems on different permutations are not comparable."""
        from gietlab import RepresentationError, distance

        with pytest.raises(RepresentationError):
            distance(d4_T0, golden_T0)

    def test_dict_form(self, d4_bumped) -> None:
        """Test that the dict form rebuilds the same map."""
        from gietlab import Giet

        rebuilt = Giet.from_dict(d4_bumped.to_dict())
        x = np.linspace(0.0, 1.0, 51)
        assert np.array_equal(rebuilt.eval(x), d4_bumped.eval(x))

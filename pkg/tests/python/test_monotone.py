"""Tests for the monotone map representation and its calculus."""

from __future__ import annotations

import math

import numpy as np
import pytest


class TestConstruction:
    """Tests for building and validating maps."""

    def test_identity(self) -> None:
        """Test that the identity evaluates exactly."""
        from gietlab.monotone import MonotoneMap

        f = MonotoneMap.identity(17)
        x = np.linspace(0.0, 1.0, 33)
        assert np.array_equal(f.eval(x), x)
        assert f.cr_norm(3) == 0.0
        assert f.eta_l1().value == 0.0

    def test_endpoints_enforced(self) -> None:
        """Test that maps must fix 0 and 1."""
        from gietlab import MonotonicityError
        from gietlab.monotone import MonotoneMap

        grid = np.linspace(0.0, 1.0, 5)
        with pytest.raises(MonotonicityError):
            MonotoneMap.from_hermite(grid, 0.5 * grid, np.full(5, 0.5), np.zeros(5))

    def test_non_positive_derivative(self) -> None:
        """Test that a vanishing nodal derivative is rejected with its node."""
        from gietlab import MonotonicityError
        from gietlab.monotone import MonotoneMap

        grid = np.linspace(0.0, 1.0, 5)
        d1 = np.ones(5)
        d1[2] = 0.0
        with pytest.raises(MonotonicityError) as exc_info:
            MonotoneMap.from_hermite(grid, grid, d1, np.zeros(5))
        assert exc_info.value.cell == 2

    def test_non_monotone_interpolant(self) -> None:
        """Test that a cell whose interpolant turns back is rejected."""
        from gietlab import MonotonicityError
        from gietlab.monotone import MonotoneMap

        grid = np.array([0.0, 0.5, 1.0])
        values = np.array([0.0, 0.5, 1.0])
        d1 = np.array([5.0, 5.0, 5.0])
        d2 = np.zeros(3)
        with pytest.raises(MonotonicityError):
            MonotoneMap.from_hermite(grid, values, d1, d2)

    def test_domain_error(self) -> None:
        """Test that points outside [0, 1] raise."""
        from gietlab import DomainError
        from gietlab.monotone import bump

        with pytest.raises(DomainError):
            bump([1e-2]).eval(1.5)

    def test_to_dict_rebuilds(self) -> None:
        """Test that the dict form rebuilds the same nodal data."""
        from gietlab.monotone import MonotoneMap, bump

        f = bump([1e-2, -3e-3], grid=33)
        g = MonotoneMap.from_dict(f.to_dict())
        assert np.array_equal(g.values, f.values)
        assert np.array_equal(g.d2, f.d2)


class TestEvaluation:
    """Tests for evaluation against closed forms."""

    def test_polynomial_reproduced(self) -> None:
        """Test that a quintic-friendly polynomial is reproduced between nodes."""
        from numpy.polynomial import Polynomial

        from gietlab.monotone import MonotoneMap

        poly = Polynomial([0.0, 0.8, 0.3, -0.1])
        f = MonotoneMap.from_polynomial(poly, grid=9)
        x = np.linspace(0.0, 1.0, 101)
        assert np.max(np.abs(f.eval(x) - poly(x))) < 1e-12
        assert np.max(np.abs(f.deriv(x) - poly.deriv()(x))) < 1e-10
        assert np.max(np.abs(f.deriv2(x) - poly.deriv(2)(x))) < 1e-8

    def test_moebius_closed_form(self) -> None:
        """Test the Moebius map and its derivative against the formula."""
        from gietlab.monotone import moebius

        a = 1.4
        m = moebius(a)
        x = np.linspace(0.0, 1.0, 200)
        den = a + (1 - a) * x
        assert np.max(np.abs(m.eval(x) - x / den)) < 1e-10
        assert np.max(np.abs(m.deriv(x) - a / den**2)) < 1e-8

    def test_scalar_input(self) -> None:
        """Test that scalars come back as floats."""
        from gietlab.monotone import moebius

        value = moebius(2.0).eval(0.5)
        assert isinstance(value, float)
        assert value == pytest.approx(0.5 / (2.0 - 0.5), rel=1e-10)

    @pytest.mark.filterwarnings("error::DeprecationWarning")
    def test_scalar_input_without_warnings(self) -> None:
        """Test that scalar evaluation does not convert arrays implicitly."""
        from gietlab.monotone import bump, moebius

        m = moebius(1.5)
        for value in (m.eval(0.3), m.deriv(0.3), m.deriv2(0.3), bump([1e-3, 0.0]).eval(0.7)):
            assert isinstance(value, float)

    def test_solve_inverts(self) -> None:
        """Test that solve is the inverse of eval."""
        from gietlab.monotone import moebius

        m = moebius(0.6)
        x = np.linspace(0.0, 1.0, 57)
        assert np.max(np.abs(m.solve(m.eval(x)) - x)) < 1e-12


class TestCalculus:
    """Tests for composition, inversion and restriction."""

    def test_compose_moebius_group(self) -> None:
        """Test that m_a ∘ m_b = m_ab."""
        from gietlab.giet import profile_distance
        from gietlab.monotone import compose, moebius

        product = compose(moebius(1.3), moebius(0.8))
        assert profile_distance(product, moebius(1.3 * 0.8), r=1) < 1e-8

    def test_compose_identity_short_circuit(self) -> None:
        """Test that composing with the identity returns the other map."""
        from gietlab.monotone import MonotoneMap, compose, moebius

        m = moebius(1.5)
        assert compose(MonotoneMap.identity(), m) is m
        assert compose(m, MonotoneMap.identity()) is m

    def test_invert_moebius(self) -> None:
        """Test that the inverse of m_a is m_{1/a}."""
        from gietlab.monotone import invert, moebius

        inverse = invert(moebius(1.7))
        x = np.linspace(0.0, 1.0, 101)
        expected = moebius(1.0 / 1.7)
        assert np.max(np.abs(inverse.eval(x) - expected.eval(x))) < 1e-9

    def test_restrict_affine_invariance(self) -> None:
        """Test that restricting a Moebius map gives a Moebius map with the same ∫η sign."""
        from gietlab.monotone import moebius

        m = moebius(1.5)
        r = m.restrict(0.2, 0.7)
        assert r.eval(0.0) == pytest.approx(0.0, abs=1e-14)
        assert r.eval(1.0) == pytest.approx(1.0, abs=1e-14)
        assert r.eta_integral() * m.eta_integral() > 0.0

    def test_restrict_degenerate(self) -> None:
        """Test that an empty interval is rejected."""
        from gietlab import DomainError
        from gietlab.monotone import moebius

        with pytest.raises(DomainError):
            moebius(1.5).restrict(0.5, 0.5)

    def test_resample_keeps_values(self) -> None:
        """Test that resampling on a finer grid keeps the map."""
        from gietlab.monotone import bump

        f = bump([2e-2, 1e-2], grid=33)
        g = f.resample(129)
        x = np.linspace(0.0, 1.0, 77)
        assert np.max(np.abs(f.eval(x) - g.eval(x))) < 1e-10


class TestNonLinearity:
    """Tests for η, its integral and the η-distance."""

    @pytest.mark.parametrize("a", [0.5, 0.9, 1.3, 2.0])
    def test_moebius_eta_integral(self, a: float) -> None:
        """Test ∫η(m_a) = 2 log a and the fitted parameter."""
        from gietlab.monotone import moebius, moebius_parameter

        m = moebius(a)
        assert m.eta_integral() == pytest.approx(2.0 * math.log(a), abs=1e-12)
        assert moebius_parameter(m) == pytest.approx(a, rel=1e-12)

    def test_bump_in_slice(self) -> None:
        """Test that bumps have zero total non-linearity."""
        from gietlab.monotone import bump

        f = bump([5e-2, -2e-2])
        assert abs(f.eta_integral()) < 1e-14
        assert f.eta_l1().value > 0.0

    def test_eta_distance_symmetric(self) -> None:
        """Test that the η-distance is symmetric and vanishes on equal maps."""
        from gietlab.monotone import bump, eta_distance, moebius

        f, g = bump([3e-2]), moebius(1.2)
        assert eta_distance(f, g) == pytest.approx(eta_distance(g, f), rel=1e-12)
        assert eta_distance(f, f) == 0.0

    def test_eta_distance_moebius(self) -> None:
        """Test d_η(m_a, id) = 2|log a| for a Moebius map, whose η has one sign."""
        from gietlab.monotone import MonotoneMap, eta_distance, moebius

        a = 1.6
        assert eta_distance(moebius(a), MonotoneMap.identity()) == pytest.approx(
            2.0 * math.log(a), rel=1e-8
        )

    def test_quadrature_error_estimate(self) -> None:
        """Test that the reported quadrature error is small for smooth integrands."""
        from gietlab.monotone import moebius

        assert moebius(1.6).eta_l1().error < 1e-10

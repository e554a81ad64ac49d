"""Benchmarks for the renormalisation kernels."""

import numpy as np
import pytest

from gietlab import Giet, Permutation, RauzyLoop, bump, compose, fixed_aiet, moebius
from gietlab.renorm import dynamical_partition, orbit_eval, rauzy_step_giet, renormalize

GRID = 257


def bumped(loop: RauzyLoop, amplitude: float = 1e-3) -> Giet:
    """Fixed IET of ``loop`` with alternating bump profiles."""
    T0 = fixed_aiet(loop, GRID)
    profiles = tuple(
        bump([(-1) ** i * amplitude, 0.5 * amplitude], grid=GRID) for i in range(T0.d)
    )
    return Giet(T0.affine, profiles)


@pytest.fixture(scope="module")
def golden():
    return RauzyLoop.from_code(Permutation((2, 1)), "bt")


@pytest.fixture(scope="module")
def d4():
    return RauzyLoop.from_code(Permutation((4, 3, 2, 1)), "ttbtbbtb")


class TestStepBenchmarks:
    """Benchmarks for elementary steps and full loops."""

    def test_elementary_step(self, benchmark, d4):
        """Benchmark one Rauzy step of a bumped GIET."""
        T = bumped(d4)
        result, _ = benchmark(rauzy_step_giet, T)
        assert result.d == 4

    def test_renormalize_golden(self, benchmark, golden):
        """Benchmark R on the golden loop."""
        T = bumped(golden)
        result = benchmark(renormalize, T, golden)
        assert result.permutation == golden.base

    def test_renormalize_d4(self, benchmark, d4):
        """Benchmark R on the d=4 loop."""
        T = bumped(d4)
        result = benchmark(renormalize, T, d4)
        assert result.permutation == d4.base


class TestMapBenchmarks:
    """Benchmarks for monotone map calculus."""

    def test_compose(self, benchmark):
        """Benchmark composition of two profiles."""
        f, g = moebius(1.2, grid=GRID), bump([1e-2, -5e-3], grid=GRID)
        result = benchmark(compose, f, g)
        assert result.size >= GRID


class TestOrbitBenchmarks:
    """Benchmarks for partitions and tower evaluation."""

    def test_partition(self, benchmark, d4):
        """Benchmark the level-3 dynamical partition."""
        T = bumped(d4)
        result = benchmark(dynamical_partition, T, d4, 3)
        assert result.total_measure == pytest.approx(1.0)

    def test_orbit_eval(self, benchmark, golden):
        """Benchmark evaluation of T along a level-4 tower."""
        T = bumped(golden)
        x = np.linspace(0.0, 0.6, 1001)
        result = benchmark(orbit_eval, T, golden, 4, 0, x)
        assert len(result) == len(x)

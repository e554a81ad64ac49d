"""Benchmarks for Birkhoff sums and the cohomological equation."""

import numpy as np
import pytest

from gietlab import Permutation, RauzyLoop, fixed_aiet
from gietlab.cohomology import birkhoff_sums, solve_cohomological


@pytest.fixture(scope="module")
def golden_T0():
    return fixed_aiet(RauzyLoop.from_code(Permutation((2, 1)), "bt"))


def coboundary(T):
    """f = g∘T - g for a smooth g."""

    def g(x):
        return 0.1 * np.sin(2.0 * np.pi * np.asarray(x))

    return lambda x: g(T.eval(x)) - g(x)


class TestBirkhoffBenchmarks:
    """Benchmarks for orbit sums."""

    def test_birkhoff_sums(self, benchmark, golden_T0):
        """Benchmark 10k-step sums from 100 base points."""
        x0 = np.linspace(0.0, 0.99, 100)
        result = benchmark(birkhoff_sums, golden_T0, coboundary(golden_T0), 10_000, x0)
        assert result.shape == (10_000, 100)

    def test_solve(self, benchmark, golden_T0):
        """Benchmark the orbit solver on a 20k orbit."""
        result = benchmark(
            solve_cohomological, golden_T0, coboundary(golden_T0), orbit_length=20_000
        )
        assert result.residual < 1e-4

#!/usr/bin/env python3
"""Unified benchmark runner for gietlab.

Times the renormalisation and cohomology kernels on the golden and d=4
systems and writes a BENCH.md report with ASCII charts.

Usage:
    python benchmarks/run_benchmarks.py

Or with uv:
    uv run python benchmarks/run_benchmarks.py
"""

import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# ============================================
# Configuration
# ============================================

ITERATIONS = int(os.environ.get("BENCH_ITERATIONS", 5))
WARMUP_ITERATIONS = 1
GRID = int(os.environ.get("BENCH_GRID", 257))
BENCH_MD = Path(__file__).parent / "BENCH.md"


# ============================================
# Data structures
# ============================================

@dataclass
class BenchResult:
    """Result of a single benchmark."""
    name: str
    system: str
    mean_ms: float
    min_ms: float
    max_ms: float

    @property
    def display_mean(self) -> str:
        if self.mean_ms < 0.01:
            return f"{self.mean_ms * 1000:.2f} µs"
        elif self.mean_ms < 1:
            return f"{self.mean_ms:.3f} ms"
        else:
            return f"{self.mean_ms:.2f} ms"


@dataclass
class BenchCategory:
    """A group of related kernels."""
    name: str
    description: str
    results: list[BenchResult] = field(default_factory=list)

    def add(self, result: BenchResult):
        self.results.append(result)


# ============================================
# ASCII Chart Generation
# ============================================

def ascii_bar(value: float, max_value: float, width: int = 40, char: str = "█") -> str:
    """Generate an ASCII bar."""
    if max_value == 0:
        return ""
    ratio = min(value / max_value, 1.0)
    return char * int(ratio * width)


def format_bar_chart(results: list[BenchResult], width: int = 40) -> str:
    """Format results as an ASCII bar chart."""
    if not results:
        return "  No results"
    max_mean = max(r.mean_ms for r in results)
    labels = [f"{r.name} ({r.system})" for r in results]
    pad = max(len(label) for label in labels)
    return "\n".join(
        f"  {label:<{pad}}  {ascii_bar(r.mean_ms, max_mean, width)}  {r.display_mean}"
        for label, r in zip(labels, results)
    )


def format_table(results: list[BenchResult]) -> str:
    """Format results as a markdown table."""
    lines = [
        "| Kernel | System | Mean | Min | Max |",
        "|--------|--------|------|-----|-----|",
    ]
    for r in results:
        lines.append(
            f"| {r.name} | {r.system} | {r.display_mean} | {r.min_ms:.2f} ms | {r.max_ms:.2f} ms |"
        )
    return "\n".join(lines)


# ============================================
# Benchmark Functions
# ============================================

def run_timed(func, iterations: int = ITERATIONS, warmup: int = WARMUP_ITERATIONS):
    """Run a function multiple times and return timing stats."""
    for _ in range(warmup):
        func()
    times = []
    for _ in range(iterations):
        start = time.perf_counter()
        func()
        times.append((time.perf_counter() - start) * 1000)
    return {"mean": sum(times) / len(times), "min": min(times), "max": max(times)}


def timed(cat: BenchCategory, name: str, system: str, func) -> None:
    stats = run_timed(func)
    cat.add(BenchResult(name, system, stats["mean"], stats["min"], stats["max"]))
    print(f"  {name:<28} {system:<14} {stats['mean']:10.3f} ms")


def systems():
    """The golden and d=4 loops with bumped GIETs on their fixed affine part."""
    from gietlab import Giet, Permutation, RauzyLoop, bump, fixed_aiet

    loops = {
        "golden": RauzyLoop.from_code(Permutation((2, 1)), "bt"),
        "hyperelliptic4": RauzyLoop.from_code(Permutation((4, 3, 2, 1)), "ttbtbbtb"),
    }
    out = {}
    for name, loop in loops.items():
        T0 = fixed_aiet(loop, GRID)
        profiles = tuple(bump([(-1) ** i * 1e-3, 5e-4], grid=GRID) for i in range(T0.d))
        out[name] = (loop, Giet(T0.affine, profiles))
    return out


# ============================================
# Individual Benchmarks
# ============================================

def bench_renormalization() -> BenchCategory:
    """Benchmark elementary steps, R and partitions."""
    from gietlab.renorm import dynamical_partition, rauzy_step_giet, renormalize

    cat = BenchCategory("Renormalisation", "One Rauzy step, one loop of R, and a level-3 partition")
    for name, (loop, T) in systems().items():
        timed(cat, "elementary step", name, lambda: rauzy_step_giet(T))
        timed(cat, "renormalize", name, lambda: renormalize(T, loop))
        timed(cat, "dynamical partition n=3", name, lambda: dynamical_partition(T, loop, 3))
    return cat


def bench_calculus() -> BenchCategory:
    """Benchmark composition and inversion of profiles."""
    from gietlab import bump, compose, invert, moebius

    cat = BenchCategory("Monotone Calculus", f"Composition and inversion on a {GRID}-node grid")
    f, g = moebius(1.2, grid=GRID), bump([1e-2, -5e-3], grid=GRID)
    timed(cat, "compose", "profiles", lambda: compose(f, g))
    timed(cat, "invert", "profiles", lambda: invert(g))
    return cat


def bench_cohomology() -> BenchCategory:
    """Benchmark the orbit solver."""
    from gietlab import fixed_aiet
    from gietlab.cohomology import solve_cohomological

    cat = BenchCategory("Cohomological Equation", "Orbit solver on a manufactured coboundary")
    loop, _ = systems()["golden"]
    T0 = fixed_aiet(loop, GRID)

    def f(x):
        return 0.1 * (np.sin(2.0 * np.pi * T0.eval(x)) - np.sin(2.0 * np.pi * np.asarray(x)))

    for length in (10_000, 100_000):
        timed(cat, f"solve orbit={length}", "golden", lambda: solve_cohomological(T0, f, orbit_length=length))
    return cat


# ============================================
# Report
# ============================================

def write_report(categories: list[BenchCategory]) -> None:
    import platform

    lines = [
        "# gietlab benchmarks",
        "",
        f"Python {platform.python_version()}, numpy {np.__version__}, "
        f"{ITERATIONS} iterations after {WARMUP_ITERATIONS} warmup, grid {GRID}.",
        "",
    ]
    for cat in categories:
        lines += [
            f"## {cat.name}",
            "",
            cat.description,
            "",
            "```",
            format_bar_chart(cat.results),
            "```",
            "",
            format_table(cat.results),
            "",
        ]
    BENCH_MD.write_text("\n".join(lines))
    print(f"\nWrote {BENCH_MD}")


def main() -> int:
    try:
        import gietlab  # noqa: F401
    except ImportError:
        print("ERROR: gietlab is not importable; run `uv pip install -e .` first")
        return 1
    categories = []
    for bench in (bench_renormalization, bench_calculus, bench_cohomology):
        print(f"\n{bench.__doc__}")
        categories.append(bench())
    write_report(categories)
    return 0


if __name__ == "__main__":
    sys.exit(main())

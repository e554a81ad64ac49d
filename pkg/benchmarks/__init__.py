"""Benchmark suite for gietlab."""

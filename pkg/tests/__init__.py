"""gietlab test suite."""

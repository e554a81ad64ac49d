"""Python tests for gietlab."""

"""Tests for artifact persistence and DataFrame views."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

pd = pytest.importorskip("pandas")


class TestToJsonable:
    """Tests for JSON conversion."""

    def test_numpy_types(self) -> None:
        """Test that numpy scalars and arrays become plain JSON types."""
        from gietlab.io import to_jsonable

        data = {"a": np.float64(0.5), "b": np.int64(3), "c": np.array([1.0, 2.0]), "d": (1, 2)}
        assert to_jsonable(data) == {"a": 0.5, "b": 3, "c": [1.0, 2.0], "d": [1, 2]}

    def test_non_finite(self) -> None:
        """Test that non-finite floats become strings."""
        from gietlab.io import to_jsonable

        assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_to_dict_objects(self) -> None:
        """Test that objects with to_dict are expanded."""
        from gietlab import Aiet, Permutation
        from gietlab.io import to_jsonable

        aiet = Aiet.iet([0.5, 0.5], Permutation((2, 1)))
        assert to_jsonable(aiet)["permutation"] == [2, 1]

    def test_bool_before_int(self) -> None:
        """Test that booleans stay booleans."""
        from gietlab.io import to_jsonable

        assert to_jsonable(np.bool_(True)) is True


class TestFiles:
    """Tests for JSON, JSON-lines and CSV files."""

    def test_json(self, tmp_path: Path) -> None:
        """Test that JSON files are sorted and reread."""
        from gietlab.io import read_json, write_json

        path = write_json(tmp_path / "nested" / "summary.json", {"b": 1, "a": [0.1]})
        assert path.read_text().index('"a"') < path.read_text().index('"b"')
        assert read_json(path) == {"a": [0.1], "b": 1}

    def test_jsonl(self, tmp_path: Path) -> None:
        """Test one object per line."""
        from gietlab.io import read_jsonl, write_jsonl

        path = write_jsonl(tmp_path / "trace.jsonl", [{"level": k} for k in range(3)])
        assert len(path.read_text().splitlines()) == 3
        assert read_jsonl(path) == [{"level": 0}, {"level": 1}, {"level": 2}]

    def test_csv_rows(self, tmp_path: Path) -> None:
        """Test CSV from row mappings with 15 significant digits."""
        from gietlab.io import read_csv, write_csv

        path = write_csv(tmp_path / "levels.csv", [{"n": 1, "delta": 1.0 / 3.0}])
        lines = path.read_text().splitlines()
        assert lines[0] == "n,delta"
        assert lines[1] == "1,0.333333333333333"
        assert read_csv(path)["n"].tolist() == [1]

    def test_csv_columns(self, tmp_path: Path) -> None:
        """Test CSV from a mapping of columns."""
        from gietlab.io import read_csv, write_csv

        path = write_csv(tmp_path / "density.csv", {"x": [0.0, 0.5], "mu": [1.0, 1.0]})
        frame = read_csv(path)
        assert list(frame.columns) == ["x", "mu"]
        assert len(frame) == 2

    def test_csv_deterministic(self, tmp_path: Path) -> None:
        """Test that identical inputs give identical bytes."""
        from gietlab.io import write_csv

        rows = [{"x": 0.1 * k, "y": math.sqrt(k)} for k in range(10)]
        first = write_csv(tmp_path / "a.csv", rows).read_bytes()
        second = write_csv(tmp_path / "b.csv", rows).read_bytes()
        assert first == second


class TestTraceDataFrames:
    """Tests for the lazy trace views."""

    def test_levels(self, golden_loop, golden_bumped) -> None:
        """Test one row per level and caching."""
        from gietlab import renormalization_trace
        from gietlab.dataframes import TraceDataFrames

        dfs = TraceDataFrames(renormalization_trace(golden_bumped, golden_loop, 3))
        levels = dfs.levels
        assert isinstance(levels, pd.DataFrame)
        assert levels["level"].tolist() == [0, 1, 2, 3]
        assert dfs.levels is levels

    def test_branches(self, golden_loop, golden_bumped) -> None:
        """Test one row per level and branch."""
        from gietlab import renormalization_trace
        from gietlab.dataframes import TraceDataFrames

        dfs = TraceDataFrames(renormalization_trace(golden_bumped, golden_loop, 2))
        branches = dfs.branches
        assert len(branches) == 3 * 2
        assert set(branches["branch"]) == {1, 2}
        assert (branches["length"] > 0.0).all()


class TestReportFrames:
    """Tests for the report helpers."""

    def test_reports_frame(self) -> None:
        """Test label columns on report rows."""
        from gietlab.dataframes import reports_frame
        from gietlab.estimates import BoundReport

        frame = reports_frame(
            [BoundReport("a", 1.0, 2.0), BoundReport("b", 3.0, 2.0)], system="golden"
        )
        assert frame["system"].tolist() == ["golden", "golden"]
        assert frame["passed"].tolist() == [True, False]

    def test_partitions_frame(self, golden_loop, golden_T0) -> None:
        """Test Δ and measure per partition."""
        from gietlab import dynamical_partition
        from gietlab.dataframes import partitions_frame

        frame = partitions_frame(dynamical_partition(golden_T0, golden_loop, n) for n in (1, 2))
        assert frame["level"].tolist() == [1, 2]
        assert frame["measure"].tolist() == pytest.approx([1.0, 1.0])

    def test_fine_grid_frame(self) -> None:
        """Test the ratio test columns."""
        from gietlab.cohomology import FineGridReport
        from gietlab.dataframes import fine_grid_frame

        report = FineGridReport(levels=[1, 2], adjacency=[1.6, 1.6], discrepancies=[0.1, 0.05])
        frame = fine_grid_frame(report)
        assert list(frame.columns) == ["level", "adjacency", "discrepancy", "grid_ok"]
        assert frame["grid_ok"].all()

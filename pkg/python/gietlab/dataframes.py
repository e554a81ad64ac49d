"""pandas DataFrame views of traces and reports.

Requires pandas to be installed.

Example usage:
    from gietlab.renorm import renormalization_trace
    from gietlab.dataframes import TraceDataFrames

    dfs = TraceDataFrames(renormalization_trace(T, loop, 8))
    print(dfs.levels.head())

Reports from the estimate battery, the shooting search and the convergence
diagnostics convert with the module-level helpers:
    from gietlab.dataframes import reports_frame

    print(reports_frame(reports, system="golden"))
"""

from __future__ import annotations

from collections.abc import Iterable
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    import pandas as pd

    from gietlab.cohomology import FineGridReport
    from gietlab.estimates import BoundReport
    from gietlab.renorm import DynamicalPartition, RenormTrace
    from gietlab.shadowing import ConvergenceDiagnostics, ShadowingResult


def _check_pandas() -> Any:
    """Check if pandas is available."""
    try:
        import pandas
        return pandas
    except ImportError:
        raise ImportError(
            "pandas is required for DataFrame support. "
            "Install it with: pip install pandas"
        )


class TraceDataFrames:
    """Lazy-loading DataFrames of a renormalisation trace.

    Each DataFrame is computed on first access and cached.
    """

    def __init__(self, trace: RenormTrace):
        self._trace = trace
        self._levels_df: pd.DataFrame | None = None
        self._branches_df: pd.DataFrame | None = None

    @property
    def levels(self) -> pd.DataFrame:
        """One row per level: n, x_n, X_n, C¹/C² norms and ∫η."""
        if self._levels_df is None:
            pd = _check_pandas()
            self._levels_df = pd.DataFrame([
                {
                    "level": lvl.level,
                    "x": lvl.x,
                    "scale": lvl.scale,
                    "c1_norm": lvl.c1_norm,
                    "c2_norm": lvl.c2_norm,
                    "total_nonlinearity": lvl.total_nonlinearity,
                }
                for lvl in self._trace.levels
            ])
        return self._levels_df

    @property
    def branches(self) -> pd.DataFrame:
        """One row per (level, branch) with lengths, slopes and profile norms."""
        if self._branches_df is None:
            pd = _check_pandas()
            rows = []
            for lvl in self._trace.levels:
                giet = lvl.giet
                for i, profile in enumerate(giet.profiles):
                    rows.append({
                        "level": lvl.level,
                        "branch": i + 1,
                        "length": float(giet.lengths[i]),
                        "bottom_length": float(giet.bottom_lengths[i]),
                        "slope": float(giet.slopes[i]),
                        "c1_norm": profile.cr_norm(1),
                        "c2_norm": profile.cr_norm(2),
                    })
            self._branches_df = pd.DataFrame(rows)
        return self._branches_df


def partitions_frame(partitions: Iterable[DynamicalPartition]) -> pd.DataFrame:
    """n and Δ_n of each partition."""
    pd = _check_pandas()
    return pd.DataFrame([
        {"level": p.level, "scale": p.scale, "delta": p.delta, "measure": p.total_measure}
        for p in partitions
    ])


def reports_frame(reports: Iterable[BoundReport], **labels: Any) -> pd.DataFrame:
    """One row per report, with constant label columns such as the system name."""
    pd = _check_pandas()
    return pd.DataFrame([{**labels, **report.to_record()} for report in reports])


def shadowing_frame(result: ShadowingResult) -> pd.DataFrame:
    """Per-level distances of the shadowing orbit, with the correction norms."""
    pd = _check_pandas()
    corrections = list(result.corrections)
    return pd.DataFrame([
        {
            "level": dist.level,
            "c0": dist.c0,
            "c1": dist.c1,
            "eta": dist.eta,
            "correction": corrections[k] if k < len(corrections) else float("nan"),
        }
        for k, dist in enumerate(result.distances)
    ])


def convergence_frame(diagnostics: ConvergenceDiagnostics) -> pd.DataFrame:
    pd = _check_pandas()
    return pd.DataFrame(diagnostics.records)


def fine_grid_frame(report: FineGridReport) -> pd.DataFrame:
    pd = _check_pandas()
    return pd.DataFrame({
        "level": report.levels,
        "adjacency": report.adjacency,
        "discrepancy": report.discrepancies,
        "grid_ok": [report.grid_ok] * len(report.levels),
    })

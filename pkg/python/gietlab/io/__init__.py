"""JSON, JSON-lines and CSV persistence for traces, reports and summaries.

Floats are written at full precision in JSON (Python's shortest repr) and
with 15 significant digits in CSV, so identical runs give identical files.

Example usage:

    from gietlab.io import write_csv, write_jsonl

    write_jsonl("out/trace.jsonl", [lvl.to_record() for lvl in trace])
    write_csv("out/levels.csv", [{"n": 1, "delta": 0.38}])
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any, Union

import numpy as np

if TYPE_CHECKING:
    import pandas as pd

PathLike = Union[str, Path]

CSV_FLOAT_FORMAT = "%.15g"


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars and arrays, dataclass reports and tuples to JSON types.

    Non-finite floats become strings ("inf", "-inf", "nan").
    """
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: PathLike, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text())


def write_jsonl(path: PathLike, records: Iterable[Any]) -> Path:
    """One JSON object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for record in records:
            handle.write(json.dumps(to_jsonable(record), sort_keys=True) + "\n")
    return path


def read_jsonl(path: PathLike) -> list[Any]:
    with Path(path).open() as handle:
        return [json.loads(line) for line in handle if line.strip()]


def write_csv(
    path: PathLike, rows: pd.DataFrame | Mapping[str, Any] | Iterable[Mapping[str, Any]]
) -> Path:
    """Comma separated, header row, 15 significant digits.

    ``rows`` is a DataFrame, a mapping of columns, or an iterable of row mappings.
    """
    import pandas as pd

    if isinstance(rows, pd.DataFrame):
        frame = rows
    elif isinstance(rows, Mapping):
        frame = pd.DataFrame(dict(rows))
    else:
        frame = pd.DataFrame(list(rows))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    import pandas as pd

    return pd.read_csv(path)


__all__ = [
    "CSV_FLOAT_FORMAT",
    "read_csv",
    "read_json",
    "read_jsonl",
    "to_jsonable",
    "write_csv",
    "write_json",
    "write_jsonl",
]

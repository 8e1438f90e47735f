"""Utility helper functions."""
import json
import logging
import math
import sys
from typing import List, Optional, Sequence, Tuple

import pandas as pd

logger = logging.getLogger(__name__)

# 17 significant digits, lowercase e-notation
FLOAT_FORMAT = "%.16e"


def geometric_grid(k0: int, ratio: float, count: int) -> List[int]:
    """Geometric grid ``floor(k0 * ratio**j)`` for ``j = 0..count-1``.

    Args:
        k0: First half-length
        ratio: Growth factor, > 1
        count: Number of grid points before deduplication

    Returns:
        Strictly increasing list of half-lengths
    """
    if k0 < 1 or count < 1 or not ratio > 1.0:
        raise ValueError(f"geometric grid needs k0 >= 1, ratio > 1, count >= 1; got {k0}:{ratio}:{count}")
    grid: List[int] = []
    for j in range(count):
        k = math.floor(k0 * ratio ** j)
        if not grid or k > grid[-1]:
            grid.append(k)
    return grid


def parse_grid(text: str) -> List[int]:
    """Parse ``k0:ratio:count`` or a comma-separated list of half-lengths.

    Raises:
        ValueError: If the text is malformed or the list is not strictly increasing
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"geometric grid must look like k0:ratio:count, got '{text}'")
        return geometric_grid(int(parts[0]), float(parts[1]), int(parts[2]))

    grid = [int(item) for item in text.split(",") if item.strip()]
    if not grid:
        raise ValueError("grid is empty")
    if any(k < 1 for k in grid):
        raise ValueError(f"every k must be >= 1, got {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"grid must be strictly increasing, got {grid}")
    return grid


def parse_window(text: str) -> Tuple[int, int]:
    """Parse an ``Nmin:Nmax`` fit window."""
    parts = text.strip().split(":")
    if len(parts) != 2:
        raise ValueError(f"window must look like Nmin:Nmax, got '{text}'")
    low, high = int(parts[0]), int(parts[1])
    if low > high:
        raise ValueError(f"window lower end {low} exceeds upper end {high}")
    return low, high


def _json_value(value):
    """JSON has no NaN or infinity; such floats are written as null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_table(
    frame: pd.DataFrame,
    path: Optional[str] = None,
    fmt: str = "csv",
    columns: Optional[Sequence[str]] = None,
) -> None:
    """Write result rows as CSV or as a JSON array of objects.

    Output is byte-deterministic for identical frames: fixed column order,
    floats in CSV with 17 significant digits and ``\\n`` line endings.

    Args:
        frame: Result rows
        path: Output file, or None for stdout
        fmt: "csv" or "json"
        columns: Column order (defaults to the frame's)
    """
    if columns is not None:
        frame = frame.loc[:, list(columns)]

    if fmt == "json":
        records = [
            {key: _json_value(value) for key, value in row.items()}
            for row in frame.to_dict(orient="records")
        ]
        text = json.dumps(records, indent=2, allow_nan=False) + "\n"
    elif fmt == "csv":
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    else:
        raise ValueError(f"unknown output format '{fmt}'")

    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info(f"Wrote {len(frame)} rows to {path}")

"""CSV / JSON emission and the run manifest."""

from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional

import numpy as np

from .. import __version__

CSV_HEADER = [
    "axis",
    "value_unitary",
    "value_cptp",
    "value_general",
    "se_unitary",
    "se_cptp",
    "se_general",
    "mode",
]
PROCESSES = ("unitary", "cptp", "general")


def fmt(x: Optional[float]) -> str:
    """17 significant digits round-trip every double; ``None`` becomes an empty cell."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def parse(cell: str) -> Optional[float]:
    return None if cell == "" else float(cell)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: Optional[int]
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    wall_time_s: float = 0.0
    numpy: str = np.__version__
    python: str = platform.python_version()

    def to_dict(self) -> dict:
        return asdict(self)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([fmt(r["axis"])] + [fmt(r["values"].get(p)) for p in PROCESSES] + [fmt(r["se"].get(p)) for p in PROCESSES] + [r["mode"]])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for cells in reader:
        axis = parse(cells[0])
        values = {p: v for p, v in zip(PROCESSES, map(parse, cells[1:4])) if v is not None}
        se = {p: v for p, v in zip(PROCESSES, map(parse, cells[4:7])) if v is not None}
        rows.append({"axis": axis, "values": values, "se": se, "mode": cells[7]})
    return rows


def _jsonable(x: Any):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if hasattr(x, "value") and hasattr(x, "name"):  # enums
        return x.value
    return x


def dump_json(obj: dict) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False)

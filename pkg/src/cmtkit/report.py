"""Serialisable result records and CSV/JSON writers."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any, Sequence


def _clean(x: Any) -> Any:
    """Convert numpy scalars and tuples into plain JSON values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return x.item()
    return x


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=True) + "\n"


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one randomized verification suite."""

    theorem: str
    params: dict
    samples: int
    min_margin: float
    violations: int
    seed: int
    worst_trial: int = -1
    by_generator: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "params": self.params,
            "samples": self.samples,
            "min_margin": self.min_margin,
            "violations": self.violations,
            "seed": self.seed,
            "worst_trial": self.worst_trial,
            "by_generator": self.by_generator,
        }


@dataclass(frozen=True)
class Table:
    """Named columns of numbers plus the parameters that generated them."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    params: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        ptxt = " ".join(f"{k}={v}" for k, v in self.params.items())
        buf.write(f"# {self.name}" + (f" {ptxt}" if ptxt else "") + "\n")
        buf.write("# columns: " + ",".join(self.columns) + "\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "notes": list(self.notes),
        }


def _fmt(v) -> str:
    if v is None:
        return ""
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_to_csv(reports: Sequence[BoundReport], seed: int) -> str:
    cols = ("theorem", "n", "S", "samples", "min_margin", "violations", "worst_trial")
    rows = tuple(
        (r.theorem, r.params.get("n"), r.params.get("S"), r.samples, r.min_margin, r.violations, r.worst_trial)
        for r in reports
    )
    return Table("verify", cols, rows, {"seed": seed}).to_csv()

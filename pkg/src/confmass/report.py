"""Result records and machine-readable report serialization.

Reports are versioned, key-ordered JSON (or locale-free CSV) so that repeated
runs with the same configuration and seed are byte-identical.  Wall-clock
time is only recorded on request, since it would break that guarantee.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

SCHEMA = "conformal-mass-report/1"
SERIES_SCHEMA = "series-verification/1"
DEC_SCHEMA = "dec-check-report/1"


@dataclass
class CheckResult:
    """One named verification with its provenance in the name."""

    name: str
    measured: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.measured - self.expected) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class MassReport:
    model: dict
    n: int
    params: dict
    method: str
    mass: float
    error_estimate: float
    checks: list = field(default_factory=list)
    seed: int = 0
    wall_time_s: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "model": self.model,
            "n": self.n,
            "params": self.params,
            "method": self.method,
            "mass": self.mass,
            "error_estimate": self.error_estimate,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
            "seed": self.seed,
        }
        if self.wall_time_s is not None:
            out["wall_time_s"] = self.wall_time_s
        return out


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def render_csv(rows: list, header: list) -> str:
    """Locale-free CSV ('.' decimal separator, '\\n' newlines, repr floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_output(text: str, out_path: str | None) -> None:
    if out_path is None or out_path == "-":
        print(text, end="")
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)

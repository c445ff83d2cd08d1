"""Deterministic report serialization.

Reports are JSON envelopes {"meta": ..., "report": ...}: everything under
"report" is byte-reproducible for a fixed scenario and seed (sorted keys,
canonical float repr), while "meta" holds the timestamp and runtime that
legitimately vary between runs. CSV series go to sibling files.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Sequence


def _canonical(value):
    if isinstance(value, Fraction):
        return {"numerator": value.numerator, "denominator": value.denominator, "float": float(value)}
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return value


def canonical_json(payload: dict) -> str:
    return json.dumps(_canonical(payload), sort_keys=True, separators=(",", ":"))


def report_body_bytes(envelope: dict) -> bytes:
    """The deterministic portion of a report envelope."""
    return canonical_json(envelope.get("report", {})).encode()


def write_report(path: Path, report: dict, runtime_seconds: float) -> None:
    envelope = {
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "runtime_seconds": runtime_seconds,
        },
        "report": _canonical(report),
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(envelope, sort_keys=True, indent=2) + "\n")
    tmp.replace(path)


def write_series(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    tmp.replace(path)


def load_report(path: Path) -> dict:
    return json.loads(Path(path).read_text())

"""Invocation trace records and CSV round-trip."""

from __future__ import annotations

import csv
from dataclasses import dataclass

TRACE_HEADER = ["timestamp_ms", "workflow_id", "input_size", "variant_key"]


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    timestamp_ms: float
    workflow_id: str
    input_size: float
    variant_key: str = ""

    def __post_init__(self) -> None:
        if self.input_size < 0:
            raise TraceFormatError("input_size must be nonnegative")


def load_trace(path: str) -> list[TraceRecord]:
    """Read a trace CSV; records must be nondecreasing in timestamp."""
    records: list[TraceRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise TraceFormatError(
                f"{path}: expected header {','.join(TRACE_HEADER)}, "
                f"got {reader.fieldnames}"
            )
        prev = float("-inf")
        for lineno, row in enumerate(reader, start=2):
            try:
                ts = float(row["timestamp_ms"])
                size = float(row["input_size"])
            except ValueError as exc:
                raise TraceFormatError(f"{path}:{lineno}: {exc}") from exc
            if ts < prev:
                raise TraceFormatError(
                    f"{path}:{lineno}: timestamps must be nondecreasing"
                )
            prev = ts
            records.append(
                TraceRecord(ts, row["workflow_id"], size, row["variant_key"] or "")
            )
    return records


def dump_trace(records: list[TraceRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for r in records:
            writer.writerow(
                [f"{r.timestamp_ms:.3f}", r.workflow_id, f"{r.input_size:.6g}", r.variant_key]
            )

"""Max-priority arbitration of frequency requests sharing a power domain.

Functions co-resident on one core or uncore frequency domain can demand
different frequencies; the domain runs at the maximum of the active requests
so no request is ever slowed down by arbitration, and falls back to its idle
floor once the last request is released. The gap between a request and the
applied frequency is the drift that sharing induces.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field


class DomainRequestSet:
    """Active frequency requests for one shared core or uncore domain."""

    def __init__(self, domain_id: str, floor_ghz: float, grid: tuple[float, ...] | None = None):
        self.domain_id = domain_id
        self.floor_ghz = floor_ghz
        self.grid = grid
        self.requests: dict[str, float] = {}

    @property
    def applied_ghz(self) -> float:
        return max(self.requests.values()) if self.requests else self.floor_ghz

    def submit(self, invocation_id: str, ghz: float) -> float:
        """Record a request (replacing any prior one by the same holder)."""
        if self.grid is not None and ghz not in self.grid:
            raise ValueError(f"{self.domain_id}: {ghz} GHz not on the domain grid")
        self.requests[invocation_id] = ghz
        return self.applied_ghz

    def release(self, invocation_id: str) -> float:
        """Drop a request; unknown holders are ignored."""
        self.requests.pop(invocation_id, None)
        return self.applied_ghz


@dataclass(frozen=True)
class DriftSample:
    """One request's applied-minus-requested gap over an interval."""

    domain_kind: str
    sharing_degree: int
    duration_ms: float
    drift_ghz: float


@dataclass
class DriftTracker:
    """Time-weighted drift accounting across a set of domains."""

    samples: list[DriftSample] = field(default_factory=list)
    _last_ms: dict[str, float] = field(default_factory=dict)

    def observe(self, domain: DomainRequestSet, kind: str, now_ms: float) -> None:
        """Close the interval since the previous observation of this domain.

        Call immediately before mutating the domain's request set and once at
        the end of the run.
        """
        start = self._last_ms.get(domain.domain_id)
        self._last_ms[domain.domain_id] = now_ms
        if start is None or now_ms <= start or not domain.requests:
            return
        applied = domain.applied_ghz
        degree = len(domain.requests)
        for ghz in domain.requests.values():
            self.samples.append(
                DriftSample(kind, degree, now_ms - start, applied - ghz)
            )


def drift_report(samples: list[DriftSample]) -> list[dict]:
    """Aggregate drift samples per (domain kind, sharing degree).

    Means are weighted by interval duration.
    """
    acc: dict[tuple[str, int], list[float]] = {}
    for s in samples:
        key = (s.domain_kind, s.sharing_degree)
        bucket = acc.setdefault(key, [0.0, 0.0, 0.0])
        bucket[0] += s.duration_ms
        bucket[1] += s.drift_ghz * s.duration_ms
        bucket[2] = max(bucket[2], s.drift_ghz)
    rows = []
    for (kind, degree), (time_ms, weighted, peak) in sorted(acc.items()):
        rows.append(
            {
                "domain_kind": kind,
                "sharing_degree": degree,
                "time_ms": time_ms,
                "mean_drift_ghz": weighted / time_ms if time_ms else 0.0,
                "max_drift_ghz": peak,
            }
        )
    return rows


DRIFT_HEADER = ["domain_kind", "sharing_degree", "time_ms", "mean_drift_ghz", "max_drift_ghz"]


def dump_drift_report(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DRIFT_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r["domain_kind"],
                    r["sharing_degree"],
                    f"{r['time_ms']:.3f}",
                    f"{r['mean_drift_ghz']:.6f}",
                    f"{r['max_drift_ghz']:.6f}",
                ]
            )

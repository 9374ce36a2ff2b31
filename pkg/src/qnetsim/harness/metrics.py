"""Windowed throughput/latency metrics over request lifecycle records.

A request counts iff both its start and its completion fall inside the
measurement window. Latency is queueing latency: start minus submit. The CDF
is the right-continuous empirical step function; quantiles are its
generalized inverse (smallest value whose cumulative probability reaches q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..control import RequestRecord


@dataclass
class Metrics:
    count: int
    throughput_per_s: float
    mean_latency_ns: float
    p50_ns: float
    p95_ns: float
    latencies_ns: list[int] = field(default_factory=list)
    empty_window: bool = False


def quantile(sorted_values: list[int], q: float) -> float:
    """Smallest value with CDF >= q (right-continuous inverse)."""
    if not sorted_values:
        return 0.0
    idx = max(0, math.ceil(q * len(sorted_values)) - 1)
    return float(sorted_values[idx])


def cdf_points(latencies_ns: list[int]) -> list[tuple[int, float]]:
    """Step points (value, cumulative probability), one per distinct value."""
    pts = []
    n = len(latencies_ns)
    for i, v in enumerate(sorted(latencies_ns), start=1):
        if pts and pts[-1][0] == v:
            pts[-1] = (v, i / n)
        else:
            pts.append((v, i / n))
    return pts


def compute_metrics(records: list[RequestRecord],
                    window_ns: tuple[int, int]) -> Metrics:
    w0, w1 = window_ns
    if w1 <= w0:
        return Metrics(0, 0.0, 0.0, 0.0, 0.0, [], empty_window=True)
    done = [r for r in records
            if r.start_ns is not None and r.complete_ns is not None
            and r.start_ns >= w0 and r.complete_ns <= w1]
    latencies = sorted(r.start_ns - r.submit_ns for r in done)
    if not latencies:
        return Metrics(0, 0.0, 0.0, 0.0, 0.0, [], empty_window=True)
    window_s = (w1 - w0) / 1e9
    return Metrics(
        count=len(done),
        throughput_per_s=len(done) / window_s,
        mean_latency_ns=sum(latencies) / len(latencies),
        p50_ns=quantile(latencies, 0.5),
        p95_ns=quantile(latencies, 0.95),
        latencies_ns=latencies,
    )

"""Deterministic discrete-event engine.

Events are callbacks ordered by (timestamp, insertion sequence); equal
timestamps run in scheduling order. Time is integer nanoseconds. A trace
log accumulates a running hash of everything the simulation does, which is
the replay/determinism fingerprint; line retention is optional so large
runs only pay for hashing.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools


class TraceLog:
    def __init__(self, keep_lines: bool = False):
        self._hash = hashlib.sha256()
        self.lines: list[str] | None = [] if keep_lines else None
        self.count = 0

    def record(self, ts: int, node: str, kind: str, payload: str = ""):
        line = f"{ts} {node} {kind} {payload}" if payload else f"{ts} {node} {kind}"
        self._hash.update(line.encode())
        self._hash.update(b"\n")
        self.count += 1
        if self.lines is not None:
            self.lines.append(line)

    def hexdigest(self) -> str:
        return self._hash.hexdigest()


class Engine:
    """Single-threaded event loop owning one simulation's virtual clock."""

    def __init__(self, keep_trace_lines: bool = False):
        self.now: int = 0
        self._queue: list[tuple[int, int, object]] = []
        self._seq = itertools.count()
        self.trace = TraceLog(keep_lines=keep_trace_lines)
        self.processed = 0

    def schedule(self, delay_ns: int, callback) -> None:
        """Schedule callback at now + delay_ns (delay must be >= 0)."""
        if delay_ns < 0:
            raise ValueError(f"negative delay {delay_ns}")
        heapq.heappush(self._queue, (self.now + delay_ns, next(self._seq), callback))

    def schedule_at(self, ts: int, callback) -> None:
        if ts < self.now:
            raise ValueError(f"cannot schedule at {ts}, now is {self.now}")
        heapq.heappush(self._queue, (ts, next(self._seq), callback))

    def run_until(self, t_end: int) -> int:
        """Process every event with timestamp <= t_end, in order; returns count."""
        count = 0
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            ts, _, callback = heapq.heappop(queue)
            self.now = ts
            callback()
            count += 1
        self.now = max(self.now, t_end)
        self.processed += count
        return count

    def run_to_quiescence(self, max_time_ns: int | None = None) -> tuple[int, bool]:
        """Drain the queue; returns (count, truncated). truncated=True means the
        max_time_ns safety limit fired with events still pending."""
        count = 0
        queue = self._queue
        while queue:
            if max_time_ns is not None and queue[0][0] > max_time_ns:
                self.processed += count
                return count, True
            ts, _, callback = heapq.heappop(queue)
            self.now = ts
            callback()
            count += 1
        self.processed += count
        return count, False

    def pending(self) -> int:
        return len(self._queue)

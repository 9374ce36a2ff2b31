"""Demand model: Poisson request arrivals over uniformly sampled node pairs."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass


class InvalidDemand(Exception):
    pass


@dataclass
class DemandSpec:
    rate_per_s: float
    pairs_per_request: int = 50
    duration_s: float = 2.0
    window_s: tuple[float, float] = (1.0, 2.0)
    repetitions: int = 10
    base_seed: int | None = None

    def validate(self):
        if self.rate_per_s < 0:
            raise InvalidDemand(f"rate must be >= 0, got {self.rate_per_s}")
        if self.pairs_per_request < 1:
            raise InvalidDemand("pairs_per_request must be positive")
        if self.duration_s <= 0:
            raise InvalidDemand("duration must be positive")
        w0, w1 = self.window_s
        if not 0 <= w0 < w1 <= self.duration_s:
            raise InvalidDemand(f"window {self.window_s} not inside [0, {self.duration_s}]")
        if self.repetitions < 1:
            raise InvalidDemand("repetitions must be positive")

    @property
    def duration_ns(self) -> int:
        return round(self.duration_s * 1e9)

    @property
    def window_ns(self) -> tuple[int, int]:
        return round(self.window_s[0] * 1e9), round(self.window_s[1] * 1e9)


@dataclass(frozen=True)
class Injection:
    time_ns: int
    src: str
    dst: str
    num_pairs: int


def _demand_rng(seed: int) -> random.Random:
    digest = hashlib.sha256(repr((seed, "demand")).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def generate_demand(spec: DemandSpec, end_nodes: list[str], seed: int) -> list[Injection]:
    """Timed request injections: exponential gaps at the network-wide rate,
    each over an ordered distinct pair sampled uniformly (first = requester)."""
    spec.validate()
    if len(end_nodes) < 2:
        raise InvalidDemand("need at least two end nodes")
    rng = _demand_rng(seed)
    out: list[Injection] = []
    if spec.rate_per_s == 0:
        return out
    t = 0.0
    while True:
        t += rng.expovariate(spec.rate_per_s)
        if t >= spec.duration_s:
            return out
        src, dst = rng.sample(end_nodes, 2)
        out.append(Injection(round(t * 1e9), src, dst, spec.pairs_per_request))

"""Fixed-function physical layer: heralded entanglement generation over lossy
fibre, entanglement-swap measurements, one-qubit-per-port memories, and the
ground-truth pair tracker the acceptance oracle reads.

Timing model (integer ns): an attempt cycle on a heralded link starts at a
boundary, photons need t_prep to be emitted, fly one fibre delay to the
optical measurement, and the herald flies one delay back, so the herald
reaches a node exactly ``boundary + t_prep + 2*delay`` and the next boundary
follows one period ``t_prep + 2*max(delay_a, delay_b)`` after the previous
one. A busy (pending or entangled) qubit skips the cycle; generation repeats
until the group is removed.

Randomness: one base seed per simulation; each link and each swapping node
draws from its own substream derived by stable hashing, so traces are stable
under topology edits and group reinstalls continue rather than replay.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .bell import compose_bell
from .engine import Engine


class FabricError(Exception):
    pass


class UnitUnbound(FabricError):
    """Generation requested on ports with no registered fibre."""


class QubitNotEntangled(FabricError):
    pass


class SameQubit(FabricError):
    pass


@dataclass(frozen=True)
class QubitRef:
    node: str
    port: int

    def __str__(self):
        return f"{self.node}.{self.port}"


@dataclass
class EntangledPairRecord:
    qubit_a: QubitRef
    qubit_b: QubitRef
    bell: int
    created_at: int

    def partner(self, q: QubitRef) -> QubitRef:
        return self.qubit_b if q == self.qubit_a else self.qubit_a


@dataclass(frozen=True)
class Fibre:
    node_a: str
    port_a: int
    node_b: str
    port_b: int
    length_km: float
    delay_ns: int
    transmission: float  # per-photon survival probability


@dataclass(frozen=True)
class QControlEvent:
    """Physical-layer notification delivered to a device's control block."""

    kind: str  # "heralding_bsm_outcome" | "swap_bsm_outcome"
    timestamp: int
    bsm_id: int
    success: bool
    bell_index: int


@dataclass
class PhysicsParams:
    attenuation_db_per_km: float = 0.2
    propagation_speed_m_per_s: float = 2.0e8
    t_prep_ns: int = 21_600
    optical_bsm_success_factor: float = 0.5
    optical_bsm_bell_states: str = "psi"  # "psi" -> {1,3}; "all" -> {0..3}
    detector_efficiency: float = 1.0
    swap_duration_ns: int = 1_000
    swap_success_prob: float = 1.0

    def fibre_delay_ns(self, length_km: float) -> int:
        return round(length_km * 1000.0 / self.propagation_speed_m_per_s * 1e9)

    def fibre_transmission(self, length_km: float) -> float:
        return 10.0 ** (-self.attenuation_db_per_km * length_km / 10.0)


FREE = "free"
PENDING = "pending"
ENTANGLED = "entangled"


class _Generation:
    """One installed heralded link: repeats attempt cycles until stopped."""

    __slots__ = ("fabric", "hub", "group_id", "qubit_a", "qubit_b", "delay_a",
                 "delay_b", "p_attempt", "period", "rng", "alive", "_token")

    def __init__(self, fabric, hub, group_id, fibre_a: Fibre, fibre_b: Fibre):
        self.fabric = fabric
        self.hub = hub
        self.group_id = group_id
        self.qubit_a = QubitRef(*_remote_end(fibre_a, hub))
        self.qubit_b = QubitRef(*_remote_end(fibre_b, hub))
        self.delay_a = fibre_a.delay_ns
        self.delay_b = fibre_b.delay_ns
        p = fabric.physics
        self.p_attempt = (p.optical_bsm_success_factor
                          * fibre_a.transmission * p.detector_efficiency
                          * fibre_b.transmission * p.detector_efficiency)
        self.period = p.t_prep_ns + 2 * max(self.delay_a, self.delay_b)
        self.rng = fabric.stream("gen", *sorted([
            (self.qubit_a.node, self.qubit_a.port),
            (self.qubit_b.node, self.qubit_b.port)]))
        self.alive = True
        self._token = 0

    def cycle(self):
        if not self.alive:
            return
        fabric = self.fabric
        engine = fabric.engine
        if fabric.state_of(self.qubit_a) == FREE and fabric.state_of(self.qubit_b) == FREE:
            self._token += 1
            token = self._token
            fabric._states[self.qubit_a] = (PENDING, self, token)
            fabric._states[self.qubit_b] = (PENDING, self, token)
            fabric.attempts += 1
            engine.trace.record(engine.now, self.hub, "attempt",
                                f"grp={self.group_id}")
            flight = fabric.physics.t_prep_ns + max(self.delay_a, self.delay_b)
            engine.schedule(flight, lambda: self._bsm(token))
        engine.schedule(self.period, self.cycle)

    def _bsm(self, token: int):
        fabric = self.fabric
        engine = fabric.engine
        intact = (fabric._states.get(self.qubit_a) == (PENDING, self, token)
                  and fabric._states.get(self.qubit_b) == (PENDING, self, token))
        for q in (self.qubit_a, self.qubit_b):
            if fabric._states.get(q) == (PENDING, self, token):
                fabric._states[q] = (FREE,)
        if not self.alive:
            return
        if intact and self.rng.random() < self.p_attempt:
            if fabric.physics.optical_bsm_bell_states == "all":
                bell = self.rng.randrange(4)
            else:
                bell = self.rng.choice((1, 3))
            fabric.create_pair(self.qubit_a, self.qubit_b, bell)
            success = True
        else:
            bell = 0
            success = False
            fabric.failures += 1
        engine.trace.record(engine.now, self.hub, "bsm",
                            f"grp={self.group_id} ok={int(success)} bell={bell}")
        ev = QControlEvent("heralding_bsm_outcome", engine.now, self.group_id,
                           success, bell)
        # Physical heralds reach the nodes one fibre delay out; the hub's own
        # copy is delivered synchronously so its data plane reacts first.
        engine.schedule(self.delay_a,
                        lambda: fabric.deliver(self.qubit_a.node, ev))
        engine.schedule(self.delay_b,
                        lambda: fabric.deliver(self.qubit_b.node, ev))
        fabric.deliver(self.hub, ev)


def _remote_end(fibre: Fibre, local: str) -> tuple[str, int]:
    if fibre.node_a == local:
        return fibre.node_b, fibre.port_b
    return fibre.node_a, fibre.port_a


class Fabric:
    """Quantum ground truth: qubit states, live pair records, and the physical
    processes that create, stitch, and destroy them."""

    def __init__(self, engine: Engine, physics: PhysicsParams, seed: int):
        self.engine = engine
        self.physics = physics
        self.seed = seed
        self._streams: dict[tuple, random.Random] = {}
        self._fibres: dict[tuple[str, int], Fibre] = {}
        self._handlers: dict[str, object] = {}
        self._states: dict[QubitRef, tuple] = {}
        self._pairs: dict[QubitRef, EntangledPairRecord] = {}
        self._generations: dict[tuple[str, int], _Generation] = {}
        self.attempts = 0
        self.failures = 0
        self.pairs_created = 0
        self.pairs_destroyed = 0
        self.swaps = 0

    # -- wiring --------------------------------------------------------------

    def stream(self, kind: str, *key) -> random.Random:
        full = (kind,) + key
        rng = self._streams.get(full)
        if rng is None:
            digest = hashlib.sha256(repr((self.seed,) + full).encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[full] = rng
        return rng

    def register_fibre(self, node_a: str, port_a: int, node_b: str, port_b: int,
                       length_km: float) -> Fibre:
        fibre = Fibre(node_a, port_a, node_b, port_b, length_km,
                      self.physics.fibre_delay_ns(length_km),
                      self.physics.fibre_transmission(length_km))
        self._fibres[(node_a, port_a)] = fibre
        self._fibres[(node_b, port_b)] = fibre
        return fibre

    def attach_node(self, name: str, qcontrol_handler):
        self._handlers[name] = qcontrol_handler

    def deliver(self, node: str, ev: QControlEvent):
        self.engine.trace.record(
            self.engine.now, node, "qev",
            f"{ev.kind} bsm={ev.bsm_id} ok={int(ev.success)} bell={ev.bell_index}")
        self._handlers[node](ev)

    # -- qubit/pair state ------------------------------------------------------

    def state_of(self, q: QubitRef) -> str:
        return self._states.get(q, (FREE,))[0]

    def create_pair(self, qa: QubitRef, qb: QubitRef, bell: int) -> EntangledPairRecord:
        assert qa not in self._pairs and qb not in self._pairs, "double occupancy"
        rec = EntangledPairRecord(qa, qb, bell, self.engine.now)
        self._pairs[qa] = rec
        self._pairs[qb] = rec
        self._states[qa] = (ENTANGLED,)
        self._states[qb] = (ENTANGLED,)
        self.pairs_created += 1
        self.engine.trace.record(self.engine.now, qa.node, "pair+",
                                 f"{qa}~{qb} bell={bell}")
        return rec

    def _destroy_pair(self, rec: EntangledPairRecord, reason: str):
        del self._pairs[rec.qubit_a]
        del self._pairs[rec.qubit_b]
        self._states[rec.qubit_a] = (FREE,)
        self._states[rec.qubit_b] = (FREE,)
        self.pairs_destroyed += 1
        self.engine.trace.record(self.engine.now, rec.qubit_a.node, "pair-",
                                 f"{rec.qubit_a}~{rec.qubit_b} {reason}")

    def ground_truth(self, node: str, port: int) -> tuple[QubitRef, int] | None:
        rec = self._pairs.get(QubitRef(node, port))
        if rec is None:
            return None
        q = QubitRef(node, port)
        return rec.partner(q), rec.bell

    def live_pairs(self) -> list[EntangledPairRecord]:
        return sorted({id(rec): rec for rec in self._pairs.values()}.values(),
                      key=lambda r: (r.created_at, str(r.qubit_a)))

    # -- generation --------------------------------------------------------------

    def start_generation(self, hub: str, group_id: int, port_a: int, port_b: int):
        """Begin repeating attempt cycles for a hub BSM group; first boundary now."""
        fibre_a = self._fibres.get((hub, port_a))
        fibre_b = self._fibres.get((hub, port_b))
        if fibre_a is None or fibre_b is None:
            raise UnitUnbound(f"no fibre on {hub} port {port_a if fibre_a is None else port_b}")
        gen = _Generation(self, hub, group_id, fibre_a, fibre_b)
        self._generations[(hub, group_id)] = gen
        self.engine.trace.record(self.engine.now, hub, "gen+", f"grp={group_id}")
        self.engine.schedule(0, gen.cycle)

    def stop_generation(self, hub: str, group_id: int):
        gen = self._generations.pop((hub, group_id), None)
        if gen is not None:
            gen.alive = False
            self.engine.trace.record(self.engine.now, hub, "gen-", f"grp={group_id}")

    # -- operations --------------------------------------------------------------

    def swap_bsm(self, node: str, port_0: int, port_1: int, bsm_id: int):
        """Entanglement swap on two locally held qubits; outcome arrives async."""
        if port_0 == port_1:
            raise SameQubit(f"{node} port {port_0}")
        q0 = QubitRef(node, port_0)
        q1 = QubitRef(node, port_1)
        for q in (q0, q1):
            if self.state_of(q) != ENTANGLED:
                raise QubitNotEntangled(str(q))
        self.engine.trace.record(self.engine.now, node, "swap",
                                 f"{q0}+{q1} bsm={bsm_id}")
        self.engine.schedule(self.physics.swap_duration_ns,
                             lambda: self._swap_outcome(node, q0, q1, bsm_id))

    def _swap_outcome(self, node: str, q0: QubitRef, q1: QubitRef, bsm_id: int):
        rec0 = self._pairs.get(q0)
        rec1 = self._pairs.get(q1)
        rng = self.stream("swap", node)
        m = rng.randrange(4)
        ok = rec0 is not None and rec1 is not None and rec0 is not rec1
        if ok and self.physics.swap_success_prob < 1.0:
            ok = rng.random() < self.physics.swap_success_prob
        # Measuring consumes whatever entanglement the qubits still hold.
        if rec0 is not None:
            partner_0, bell_0 = rec0.partner(q0), rec0.bell
            self._destroy_pair(rec0, "swap")
        if rec1 is not None and rec1 is not rec0:
            partner_1, bell_1 = rec1.partner(q1), rec1.bell
            self._destroy_pair(rec1, "swap")
        if ok:
            self.create_pair(partner_0, partner_1,
                             compose_bell(bell_0, bell_1, m))
            self.swaps += 1
        self.deliver(node, QControlEvent("swap_bsm_outcome", self.engine.now,
                                         bsm_id, ok, m))

    def release(self, node: str, port: int):
        """Free a qubit; destroys any live pair containing it. Idempotent."""
        q = QubitRef(node, port)
        rec = self._pairs.get(q)
        if rec is not None:
            partner = rec.partner(q)
            self._destroy_pair(rec, "release")
            self.engine.trace.record(self.engine.now, partner.node,
                                     "partner_freed", str(partner))
        state = self._states.get(q)
        if state is not None and state[0] == PENDING:
            self._states[q] = (FREE,)
        self.engine.trace.record(self.engine.now, node, "release", str(q))

    # -- invariants (for tests) -----------------------------------------------

    def check_no_double_occupancy(self):
        seen = set()
        for rec in self.live_pairs():
            for q in (rec.qubit_a, rec.qubit_b):
                assert q not in seen, f"qubit {q} in two live records"
                seen.add(q)

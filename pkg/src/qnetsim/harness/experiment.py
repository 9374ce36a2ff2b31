"""Run orchestration: demand injection, quiescence, results, delivery oracle."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from ..control import RequestRecord
from ..fabric import PhysicsParams
from .demand import DemandSpec, generate_demand
from .topology import Network, TopologySpec, build_network

# Safety limit: finite demand must quiesce; if it does not by this margin the
# run aborts with partial results flagged.
QUIESCENCE_GRACE_NS = 60_000_000_000


@dataclass
class RunResult:
    records: list[RequestRecord]
    trace_hash: str
    seed: int
    duration_ns: int
    truncated: bool
    events: int
    end_time_ns: int


class DeliveryOracle:
    """Checks every application delivery against fabric ground truth.

    The first end to deliver a (conn_id, e2e_seq) pair must hold a live
    fabric record with the claimed Bell index; its partner's later delivery
    must name exactly the recorded partner qubit and the same Bell index.
    Completed requests must account for num_pairs matched deliveries;
    teardown-window spillover (a tail-side delivery whose head never
    delivers because the connection closed) is tolerated but still
    ground-truth-checked at delivery time.
    """

    def __init__(self, network: Network):
        self.net = network
        self.open: dict[tuple[int, int], list] = {}
        self.matched: list[tuple] = []
        self.failures: list[str] = []
        self.checked = 0
        for agent in network.agents.values():
            agent.delivery_hooks.append(self._on_delivery)

    def _on_delivery(self, obj):
        self.checked += 1
        key = (obj.conn_id, obj.e2e_seq)
        waiting = self.open.get(key)
        if waiting:
            first, partner, bell = waiting.pop(0)
            if not waiting:
                del self.open[key]
            if (obj.node, obj.qubit) != (partner.node, partner.port):
                self.failures.append(
                    f"{key}: second delivery at {obj.node}.{obj.qubit}, "
                    f"fabric partner was {partner}")
            elif obj.bell != bell:
                self.failures.append(
                    f"{key}: bell mismatch at {obj.node}: {obj.bell} != fabric {bell}")
            else:
                self.matched.append((key, first, obj, bell))
            return
        truth = self.net.fabric.ground_truth(obj.node, obj.qubit)
        if truth is None:
            self.failures.append(
                f"{key}: first delivery at {obj.node}.{obj.qubit} has no live pair")
            return
        partner, bell = truth
        if obj.bell != bell:
            self.failures.append(
                f"{key}: bell mismatch at {obj.node}: {obj.bell} != fabric {bell}")
            return
        self.open.setdefault(key, []).append((obj, partner, bell))

    def verify_counts(self, records: list[RequestRecord]):
        """Every completed request must have num_pairs matched deliveries.
        Connection ids are reused over time, so matches are attributed to the
        request whose [start, complete] span contains the delivery."""
        for rec in records:
            if rec.complete_ns is None:
                continue
            got = sum(
                1 for key, first, second, bell in self.matched
                if key[0] == rec.conn_id
                and rec.start_ns <= first.time <= rec.complete_ns)
            if got < rec.num_pairs:
                self.failures.append(
                    f"request {rec.request_id} (cid {rec.conn_id}): "
                    f"{got} matched deliveries < {rec.num_pairs}")

    def ok(self) -> bool:
        return not self.failures


def run_experiment(topology: TopologySpec, physics: PhysicsParams,
                   demand: DemandSpec, seed: int,
                   keep_trace_lines: bool = False,
                   with_oracle: bool = False,
                   drain: bool = True):
    """Build, inject demand, run; returns (RunResult, Network).

    With ``drain`` (the default) the simulation runs to quiescence after the
    demand window, so finite demand always finishes. With ``drain=False`` the
    clock stops at the configured duration (the measurement protocol: requests
    still pending are recorded incomplete and never enter windowed metrics,
    and a saturating backlog is not simulated past the window).

    The network object carries agents/controller/fabric for deeper
    inspection; RunResult is the persistable summary.
    """
    demand.validate()
    net = build_network(topology, physics, seed, keep_trace_lines)
    oracle = DeliveryOracle(net) if with_oracle else None
    injections = generate_demand(demand, net.end_nodes, seed)
    for inj in injections:
        net.engine.schedule_at(
            inj.time_ns,
            lambda inj=inj: net.request(inj.src, inj.dst, inj.num_pairs))
    if drain:
        events, truncated = net.engine.run_to_quiescence(
            max_time_ns=demand.duration_ns + QUIESCENCE_GRACE_NS)
        if not truncated and net.controller.outstanding():
            truncated = True  # demand ended but requests are stuck
    else:
        events = net.engine.run_until(demand.duration_ns)
        truncated = False
    result = RunResult(
        records=net.controller.records,
        trace_hash=net.engine.trace.hexdigest(),
        seed=seed,
        duration_ns=demand.duration_ns,
        truncated=truncated,
        events=events,
        end_time_ns=net.engine.now,
    )
    if oracle is not None:
        oracle.verify_counts(result.records)
        net.oracle = oracle
    return result, net


RUN_CSV_COLUMNS = ("request_id", "src", "dst", "submit_ns", "start_ns", "complete_ns")


def run_records_csv(records: list[RequestRecord]) -> str:
    """Canonical CSV text for a run's request records (byte-stable)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_CSV_COLUMNS)
    for r in sorted(records, key=lambda r: r.request_id):
        writer.writerow([
            r.request_id, r.src, r.dst, r.submit_ns,
            "" if r.start_ns is None else r.start_ns,
            "" if r.complete_ns is None else r.complete_ns,
        ])
    return buf.getvalue()

"""Hub-resident controller: request intake, blocked-skipping FCFS scheduling
over fibres and BSM units, data-plane configuration, and teardown.

Scheduling policy: requests queue in submission order (a request is submitted
once both end nodes' REQUESTs arrive; the later arrival is the submit time).
Every pass scans the whole queue front to back and starts any request whose
path fibres are all free and whose on-path hubs each have a free BSM unit, so
a blocked head of line never starves the rest. Resources are accounted
atomically at the scheduling/completion instant; the configuration and
teardown messages themselves travel the classical network with propagation
delay. Messages to the same device are applied in the order they were sent.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .arch.device import BsmGroup, DeviceShell, Role
from .arch.metadata import CPU_PORT
from .protocols.wire import (
    MSG_COMPLETE,
    MSG_REQUEST,
    MSG_TRACK,
    MSG_TRACK_ACK,
    decode,
)


@dataclass
class RequestRecord:
    """Lifecycle of one demand request, feeding throughput/latency metrics."""

    request_id: int
    src: str
    dst: str
    num_pairs: int
    submit_ns: int
    start_ns: int | None = None
    complete_ns: int | None = None
    conn_id: int | None = None


@dataclass
class _Active:
    record: RequestRecord
    path: list[str]
    fibres: list[frozenset]
    units: dict[str, int]
    completes: int = 0


class LedgerViolation(AssertionError):
    pass


class Controller:
    def __init__(self, network):
        self.net = network
        self.device: DeviceShell = network.devices[network.controller_hub]
        self.device.attach_host(self)
        self._pending: dict[tuple[int, int, int], int] = {}
        self._paired: set[tuple[int, int, int]] = set()
        # queue entries: (record, path, fibres, hubs), resolved at submit time
        self.queue: list[tuple] = []
        self.active: dict[int, _Active] = {}
        self.records: list[RequestRecord] = []
        self._fibre_owner: dict[frozenset, int] = {}
        self._free_units: dict[str, list[int]] = {
            name: list(range(1, dev.bsm_units_total + 1))
            for name, dev in network.devices.items()
            if dev.role is Role.HERALDING_HUB}
        self._next_cid = 0
        self.sched_passes = 0
        self.ledger_checks = 0

    # -- intake -------------------------------------------------------------

    def on_packet(self, raw: bytes):
        msg = decode(raw)
        if msg.link.msg_type == MSG_REQUEST:
            self._submit(msg.request)
        elif msg.link.msg_type == MSG_COMPLETE:
            self._complete(msg.link.label)

    def _submit(self, req):
        key = (req.src, req.dst, req.client_seq)
        if key in self._paired:
            return  # duplicate submission, idempotent
        now = self.net.engine.now
        if key not in self._pending:
            self._pending[key] = now
            return
        self._pending.pop(key)
        self._paired.add(key)
        record = RequestRecord(
            request_id=len(self.records) + 1,
            src=self.net.name_of(req.src),
            dst=self.net.name_of(req.dst),
            num_pairs=req.num_pairs,
            submit_ns=now,
        )
        self.records.append(record)
        path = self.net.path(record.src, record.dst)
        fibres = [frozenset((path[i], path[i + 1])) for i in range(len(path) - 1)]
        hubs = [n for n in path
                if self.net.devices[n].role is Role.HERALDING_HUB]
        self.queue.append((record, path, fibres, hubs))
        self.net.engine.trace.record(now, "controller", "submit",
                                     f"id={record.request_id} {record.src}->{record.dst}")
        self.schedule()

    def outstanding(self) -> int:
        return len(self.queue) + len(self.active) + len(self._pending)

    def queued_records(self) -> list[RequestRecord]:
        return [entry[0] for entry in self.queue]

    # -- scheduling ------------------------------------------------------------

    def schedule(self) -> list[RequestRecord]:
        """FCFS pass with blocked skipping; starts every startable request."""
        self.sched_passes += 1
        started = []
        for entry in list(self.queue):
            record, path, fibres, hubs = entry
            if any(f in self._fibre_owner for f in fibres):
                continue
            if any(not self._free_units[h] for h in hubs):
                continue
            cid = self._alloc_cid()
            units = {h: self._free_units[h].pop(0) for h in hubs}
            for f in fibres:
                self._fibre_owner[f] = cid
            record.start_ns = self.net.engine.now
            record.conn_id = cid
            self.queue.remove(entry)
            self.active[cid] = _Active(record, path, fibres, units)
            self._push_configuration(cid, record, path, units)
            self.net.engine.trace.record(
                self.net.engine.now, "controller", "start",
                f"id={record.request_id} cid={cid} units={sorted(units.items())}")
            started.append(record)
        self.check_ledger()
        return started

    def _alloc_cid(self) -> int:
        for _ in range(65535):
            self._next_cid = self._next_cid % 65535 + 1
            if self._next_cid not in self.active:
                return self._next_cid
        raise RuntimeError("connection id space exhausted")

    # -- completion ----------------------------------------------------------------

    def _complete(self, cid: int):
        active = self.active.get(cid)
        if active is None:
            return  # late duplicate after teardown
        active.completes += 1
        if active.completes < 2:
            return
        now = self.net.engine.now
        active.record.complete_ns = now
        del self.active[cid]
        for f in active.fibres:
            del self._fibre_owner[f]
        for hub, unit in active.units.items():
            bisect.insort(self._free_units[hub], unit)
        self._push_teardown(cid, active)
        self.net.engine.trace.record(now, "controller", "complete",
                                     f"id={active.record.request_id} cid={cid}")
        self.check_ledger()
        self.schedule()

    # -- data-plane configuration -----------------------------------------------

    def _send(self, device_name: str, steps):
        """Apply config steps at the device after classical propagation delay."""
        delay = self.net.delay(self.net.controller_hub, device_name)
        engine = self.net.engine

        def apply():
            for step in steps:
                step()
            engine.trace.record(engine.now, device_name, "config", "")

        engine.schedule(delay, apply)

    def _push_configuration(self, cid: int, record: RequestRecord,
                            path: list[str], units: dict[str, int]):
        net = self.net
        head, tail = path[0], path[-1]
        for i, name in enumerate(path):
            dev = net.devices[name]
            if dev.role is Role.HERALDING_HUB:
                up_port = net.port(name, path[i - 1])
                dn_port = net.port(name, path[i + 1])
                unit = units[name]
                self._send(name, [
                    lambda d=dev, p=dn_port: d.processor.table_insert(
                        "t_conn_route", (cid, 0), "forward", (p,)),
                    lambda d=dev, p=up_port: d.processor.table_insert(
                        "t_conn_route", (cid, 1), "forward", (p,)),
                    lambda d=dev, u=unit, a=up_port, b=dn_port:
                        d.install_bsm_group(BsmGroup(u, a, b)),
                ])
            elif dev.role is Role.ROUTER:
                up_port = net.port(name, path[i - 1])
                dn_port = net.port(name, path[i + 1])
                up_gid = units[path[i - 1]]
                dn_gid = units[path[i + 1]]
                self._send(name, [
                    lambda d=dev, g=up_gid, p=up_port, o=dn_port:
                        d.processor.table_insert("t_herald", (g, p), "herald_store",
                                                 (cid, o, 1)),
                    lambda d=dev, g=dn_gid, p=dn_port, o=up_port:
                        d.processor.table_insert("t_herald", (g, p), "herald_store",
                                                 (cid, o, 0)),
                    lambda d=dev: d.processor.table_insert(
                        "t_track", (cid,), "track_conf", ()),
                    lambda d=dev: d.processor.table_insert(
                        "t_ack", (cid,), "ack_conf", ()),
                    lambda d=dev: d.processor.table_insert(
                        "t_swap_outcome", (cid,), "swap_done", (cid,)),
                    lambda d=dev, p=up_port: d.processor.table_insert(
                        "t_egress", (MSG_TRACK, p), "drop_packet", ()),
                    lambda d=dev, p=dn_port: d.processor.table_insert(
                        "t_egress", (MSG_TRACK_ACK, p), "drop_packet", ()),
                    lambda d=dev, a=up_port, b=dn_port:
                        d.install_bsm_group(BsmGroup(cid, a, b)),
                ])
        for name, is_head in ((head, 1), (tail, 0)):
            dev = net.devices[name]
            hub_gid = units[path[1] if is_head else path[-2]]
            uplink = net.port(name, path[1] if is_head else path[-2])
            steps = [
                lambda d=dev, g=hub_gid, h=is_head: d.processor.table_insert(
                    "t_herald", (g,), "herald_conf", (cid, h)),
                lambda d=dev, n=record.num_pairs: d.processor.table_insert(
                    "t_conn", (cid,), "conn_conf", (n,)),
            ]
            if not is_head:
                steps.append(lambda d=dev, u=uplink: d.install_bsm_group(
                    BsmGroup(cid, u, CPU_PORT)))
            self._send(name, steps)

    def _push_teardown(self, cid: int, active: _Active):
        net = self.net
        path = active.path
        head, tail = path[0], path[-1]
        for i, name in enumerate(path):
            dev = net.devices[name]
            if dev.role is Role.HERALDING_HUB:
                unit = active.units[name]
                self._send(name, [
                    lambda d=dev: d.processor.table_delete("t_conn_route", (cid, 0)),
                    lambda d=dev: d.processor.table_delete("t_conn_route", (cid, 1)),
                    lambda d=dev, u=unit: d.remove_bsm_group(u),
                ])
            elif dev.role is Role.ROUTER:
                up_port = net.port(name, path[i - 1])
                dn_port = net.port(name, path[i + 1])
                up_gid = active.units[path[i - 1]]
                dn_gid = active.units[path[i + 1]]
                self._send(name, [
                    lambda d=dev, g=up_gid, p=up_port:
                        d.processor.table_delete("t_herald", (g, p)),
                    lambda d=dev, g=dn_gid, p=dn_port:
                        d.processor.table_delete("t_herald", (g, p)),
                    lambda d=dev: d.processor.table_delete("t_track", (cid,)),
                    lambda d=dev: d.processor.table_delete("t_ack", (cid,)),
                    lambda d=dev: d.processor.table_delete("t_swap_outcome", (cid,)),
                    lambda d=dev, p=up_port: d.processor.table_delete(
                        "t_egress", (MSG_TRACK, p)),
                    lambda d=dev, p=dn_port: d.processor.table_delete(
                        "t_egress", (MSG_TRACK_ACK, p)),
                    lambda d=dev: d.remove_bsm_group(cid),
                    lambda d=dev, p=up_port: d.fabric.release(d.name, p),
                    lambda d=dev, p=dn_port: d.fabric.release(d.name, p),
                    lambda d=dev, p=up_port: d.processor.register_write("r_pv", p, 0),
                    lambda d=dev, p=dn_port: d.processor.register_write("r_pv", p, 0),
                    lambda d=dev: d.processor.register_write("r_ts_valid", 0, 0),
                ])
        for name, is_head in ((head, 1), (tail, 0)):
            dev = net.devices[name]
            hub_gid = active.units[path[1] if is_head else path[-2]]
            uplink = net.port(name, path[1] if is_head else path[-2])
            steps = [
                lambda d=dev, g=hub_gid: d.processor.table_delete("t_herald", (g,)),
                lambda d=dev: d.processor.table_delete("t_conn", (cid,)),
            ]
            if not is_head:
                steps.append(lambda d=dev: d.remove_bsm_group(cid))
            steps.extend([
                lambda d=dev, p=uplink: d.fabric.release(d.name, p),
                lambda d=dev: d.processor.register_write("r_done", 0, 0),
                lambda d=dev: d.processor.register_write("r_pair_valid", 0, 0),
                lambda d=dev: d.processor.register_write("r_stash_valid", 0, 0),
            ])
            self._send(name, steps)

    # -- invariants -----------------------------------------------------------------

    def check_ledger(self):
        """No fibre or unit double-assignment; raises LedgerViolation."""
        self.ledger_checks += 1
        seen_fibres = set()
        unit_use: dict[str, set[int]] = {}
        for cid, active in self.active.items():
            for f in active.fibres:
                if f in seen_fibres:
                    raise LedgerViolation(f"fibre {sorted(f)} assigned twice")
                seen_fibres.add(f)
                if self._fibre_owner.get(f) != cid:
                    raise LedgerViolation(f"fibre owner map out of sync for {sorted(f)}")
            for hub, unit in active.units.items():
                used = unit_use.setdefault(hub, set())
                if unit in used:
                    raise LedgerViolation(f"unit {unit} at {hub} assigned twice")
                used.add(unit)
                if unit in self._free_units[hub]:
                    raise LedgerViolation(f"unit {unit} at {hub} both free and assigned")
        for hub, used in unit_use.items():
            total = self.net.devices[hub].bsm_units_total
            if len(used) > total:
                raise LedgerViolation(f"{hub} oversubscribed: {len(used)}/{total}")

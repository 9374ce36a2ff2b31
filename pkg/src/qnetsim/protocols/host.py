"""Host shim at an end node: originates requests, receives deliveries.

The application side of the stack is deliberately thin. It submits paired
REQUESTs (one to the controller, one forwarded to the peer, which then
submits its own), records entanglement objects surfaced by the data plane on
the CPU port, and injects COMPLETE when a delivery reports zero pairs
remaining (the counter itself lives in the data plane).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..arch.device import DeviceShell
from .wire import (
    CONTROLLER_NODE_ID,
    MSG_REQUEST,
    MSG_TRACK_ACK,
    decode,
    pack_complete,
    pack_request,
)


@dataclass(frozen=True)
class EntanglementObject:
    """What the application receives: the shared identifier, the local qubit,
    and the pair's Bell index as claimed by the protocol."""

    node: str
    conn_id: int
    e2e_seq: int
    bell: int
    qubit: int
    remaining: int
    time: int


class NodeAgent:
    def __init__(self, device: DeviceShell, uplink_port: int):
        self.device = device
        self.node_id = device.node_id
        self.uplink_port = uplink_port
        self.deliveries: list[EntanglementObject] = []
        self.delivery_hooks = []
        self._client_seq = 0
        device.attach_host(self)

    def request(self, dst_id: int, num_pairs: int) -> int:
        """Submit a request for entanglement with dst; returns the client seq.
        The peer copy makes the remote end submit too."""
        self._client_seq += 1
        seq = self._client_seq
        self.device.inject_from_host(pack_request(
            CONTROLLER_NODE_ID, self.node_id, dst_id, num_pairs, seq))
        self.device.inject_from_host(pack_request(
            dst_id, self.node_id, dst_id, num_pairs, seq))
        return seq

    def on_packet(self, raw: bytes):
        msg = decode(raw)
        if msg.link.msg_type == MSG_REQUEST:
            r = msg.request
            self.device.inject_from_host(pack_request(
                CONTROLLER_NODE_ID, r.src, r.dst, r.num_pairs, r.client_seq))
        elif msg.link.msg_type == MSG_TRACK_ACK:
            obj = EntanglementObject(
                node=self.device.name,
                conn_id=msg.net.conn_id,
                e2e_seq=msg.net.e2e_seq,
                bell=msg.net.pauli_acc & 3,
                qubit=self.uplink_port,
                remaining=msg.link.label,
                time=self.device.engine.now,
            )
            self.deliveries.append(obj)
            self.device.engine.trace.record(
                obj.time, obj.node, "deliver",
                f"cid={obj.conn_id} seq={obj.e2e_seq} bell={obj.bell} rem={obj.remaining}")
            for hook in self.delivery_hooks:
                hook(obj)
            if obj.remaining == 0:
                self.device.inject_from_host(pack_complete(obj.conn_id))

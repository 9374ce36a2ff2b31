"""Wire formats of the link/network-layer protocol suite.

Big-endian, MSB-first, no padding:

    link header     msg_type:8  bsm_id:16  label:32  bell:8        (8 bytes)
    net header      conn_id:16  e2e_seq:32 pauli_acc:8 direction:8 (8 bytes)
    request header  src:16  dst:16  num_pairs:16  client_seq:32    (10 bytes)

TRACK and TRACK_ACK carry link+net; REQUEST carries link+request; HERALD and
COMPLETE are link-only. For REQUEST/COMPLETE envelopes the link header's
bsm_id field is the classical destination node id (the controller is id 0)
and COMPLETE carries the connection id in the label field.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MSG_HERALD = 1
MSG_TRACK = 2
MSG_TRACK_ACK = 3
MSG_REQUEST = 4
MSG_COMPLETE = 5

DIR_FORWARD = 0
DIR_ACK = 1

CONTROLLER_NODE_ID = 0

_LINK = struct.Struct("!BHIB")
_NET = struct.Struct("!HIBB")
_REQUEST = struct.Struct("!HHHI")


@dataclass(frozen=True)
class LinkHeader:
    msg_type: int
    bsm_id: int
    label: int
    bell: int


@dataclass(frozen=True)
class NetHeader:
    conn_id: int
    e2e_seq: int
    pauli_acc: int
    direction: int


@dataclass(frozen=True)
class RequestHeader:
    src: int
    dst: int
    num_pairs: int
    client_seq: int


@dataclass(frozen=True)
class Message:
    link: LinkHeader
    net: NetHeader | None = None
    request: RequestHeader | None = None


def pack_herald(bsm_id: int, label: int, bell: int) -> bytes:
    return _LINK.pack(MSG_HERALD, bsm_id, label, bell)


def pack_track(conn_id: int, label: int, e2e_seq: int, pauli_acc: int,
               ack: bool = False) -> bytes:
    msg = MSG_TRACK_ACK if ack else MSG_TRACK
    return (_LINK.pack(msg, conn_id, label, 0)
            + _NET.pack(conn_id, e2e_seq, pauli_acc, DIR_ACK if ack else DIR_FORWARD))


def pack_request(dest_node: int, src: int, dst: int, num_pairs: int,
                 client_seq: int) -> bytes:
    return (_LINK.pack(MSG_REQUEST, dest_node, 0, 0)
            + _REQUEST.pack(src, dst, num_pairs, client_seq))


def pack_complete(conn_id: int) -> bytes:
    return _LINK.pack(MSG_COMPLETE, CONTROLLER_NODE_ID, conn_id, 0)


def decode(raw: bytes) -> Message:
    """Host-side mirror of the data-plane parser."""
    if len(raw) < _LINK.size:
        raise ValueError(f"short packet: {len(raw)} bytes")
    link = LinkHeader(*_LINK.unpack_from(raw, 0))
    net = None
    request = None
    offset = _LINK.size
    if link.msg_type in (MSG_TRACK, MSG_TRACK_ACK):
        net = NetHeader(*_NET.unpack_from(raw, offset))
    elif link.msg_type == MSG_REQUEST:
        request = RequestHeader(*_REQUEST.unpack_from(raw, offset))
    return Message(link, net, request)

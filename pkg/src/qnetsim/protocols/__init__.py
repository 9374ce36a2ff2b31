"""Link/network-layer protocol suite: wire formats, programs, host shims."""

from .host import EntanglementObject, NodeAgent
from .programs import all_programs, endnode_program, hub_program, router_program, write_assets
from .wire import (
    CONTROLLER_NODE_ID,
    DIR_ACK,
    DIR_FORWARD,
    MSG_COMPLETE,
    MSG_HERALD,
    MSG_REQUEST,
    MSG_TRACK,
    MSG_TRACK_ACK,
    Message,
    decode,
    pack_complete,
    pack_herald,
    pack_request,
    pack_track,
)

__all__ = [
    "CONTROLLER_NODE_ID",
    "DIR_ACK",
    "DIR_FORWARD",
    "EntanglementObject",
    "MSG_COMPLETE",
    "MSG_HERALD",
    "MSG_REQUEST",
    "MSG_TRACK",
    "MSG_TRACK_ACK",
    "Message",
    "NodeAgent",
    "all_programs",
    "decode",
    "endnode_program",
    "hub_program",
    "pack_complete",
    "pack_herald",
    "pack_request",
    "pack_track",
    "router_program",
    "write_assets",
]

"""Architecture metadata constants shared by devices and protocol programs.

Enum-typed metadata fields travel as integers in the data plane; the wire
values here are the single source of truth for programs, devices, and the
control plane.
"""

from enum import IntEnum

# standard_metadata conventions
DROP_PORT = 511          # egress_spec all-ones: drop
CPU_PORT = 510           # host/controller attach point; never a wire
MIN_PHYSICAL_PORT = 1    # port 0 is reserved so 0 can mean "unset"

STANDARD_METADATA = "standard_metadata"
XCONNECT_METADATA = "xconnect_metadata"
QCONTROL_METADATA = "qcontrol_metadata"


class EventType(IntEnum):
    HERALDING_BSM_OUTCOME = 0
    SWAP_BSM_OUTCOME = 1
    CNETWORK = 2


class Operation(IntEnum):
    NONE = 0
    SWAP = 1
    RELEASE = 2


class Pathway(IntEnum):
    CNETWORK = 0
    QCONTROL = 1


EVENT_TYPE_BY_KIND = {
    "heralding_bsm_outcome": EventType.HERALDING_BSM_OUTCOME,
    "swap_bsm_outcome": EventType.SWAP_BSM_OUTCOME,
}


def enum_declarations() -> dict[str, dict[str, int]]:
    """Enum tables protocol programs embed so symbolic names resolve at load."""
    return {
        "QControlEventType": {
            "heralding_bsm_outcome": int(EventType.HERALDING_BSM_OUTCOME),
            "swap_bsm_outcome": int(EventType.SWAP_BSM_OUTCOME),
            "cnetwork": int(EventType.CNETWORK),
        },
        "QControlOperation": {
            "none": int(Operation.NONE),
            "swap": int(Operation.SWAP),
            "release": int(Operation.RELEASE),
        },
        "PathWay": {
            "cnetwork": int(Pathway.CNETWORK),
            "qcontrol": int(Pathway.QCONTROL),
        },
    }

"""Quantum device architecture: metadata conventions and the device shell."""

from .device import (
    BsmGroup,
    DeviceConfigError,
    DeviceShell,
    NoFreeBsmUnit,
    PortBusy,
    ProtocolProgramError,
    Role,
    UnknownGroup,
)
from .metadata import (
    CPU_PORT,
    DROP_PORT,
    EventType,
    Operation,
    Pathway,
    QCONTROL_METADATA,
    STANDARD_METADATA,
    XCONNECT_METADATA,
    enum_declarations,
)

__all__ = [
    "BsmGroup",
    "CPU_PORT",
    "DROP_PORT",
    "DeviceConfigError",
    "DeviceShell",
    "EventType",
    "NoFreeBsmUnit",
    "Operation",
    "Pathway",
    "PortBusy",
    "ProtocolProgramError",
    "QCONTROL_METADATA",
    "Role",
    "STANDARD_METADATA",
    "UnknownGroup",
    "XCONNECT_METADATA",
    "enum_declarations",
]

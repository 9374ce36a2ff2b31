"""Discrete-event engine and the quantum physical layer / ground truth."""

from .bell import PHI_MINUS, PHI_PLUS, PSI_MINUS, PSI_PLUS, compose_bell
from .engine import Engine, TraceLog
from .physical import (
    ENTANGLED,
    FREE,
    PENDING,
    EntangledPairRecord,
    Fabric,
    FabricError,
    PhysicsParams,
    QControlEvent,
    QubitNotEntangled,
    QubitRef,
    SameQubit,
    UnitUnbound,
)

__all__ = [
    "ENTANGLED",
    "Engine",
    "EntangledPairRecord",
    "FREE",
    "Fabric",
    "FabricError",
    "PENDING",
    "PHI_MINUS",
    "PHI_PLUS",
    "PSI_MINUS",
    "PSI_PLUS",
    "PhysicsParams",
    "QControlEvent",
    "QubitNotEntangled",
    "QubitRef",
    "SameQubit",
    "TraceLog",
    "UnitUnbound",
    "compose_bell",
]

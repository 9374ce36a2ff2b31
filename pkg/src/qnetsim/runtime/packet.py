"""Packet instances flowing through a processor.

A packet carries one slot per header instance declared by the program.
Metadata instances are always valid and zero-initialized per traversal;
regular headers become valid by parser extraction or ``add_header``.
"""

from __future__ import annotations

from ..bmv2.ir import PipelineProgram


class HeaderSlot:
    __slots__ = ("valid", "fields")

    def __init__(self, field_names, valid=False):
        self.valid = valid
        self.fields = {name: 0 for name in field_names}

    def copy(self) -> "HeaderSlot":
        new = HeaderSlot.__new__(HeaderSlot)
        new.valid = self.valid
        new.fields = dict(self.fields)
        return new


class PacketInstance:
    """Header set + payload for one traversal of a device pipeline."""

    __slots__ = ("headers", "payload")

    def __init__(self, program: PipelineProgram, payload: bytes = b""):
        self.headers: dict[str, HeaderSlot] = {}
        for inst in program.headers:
            ht = program.header_type(inst.header_type)
            self.headers[inst.name] = HeaderSlot(
                (f for f, _ in ht.fields), valid=inst.metadata)
        self.payload = payload

    @staticmethod
    def from_template(template: "PacketInstance", payload: bytes = b"") -> "PacketInstance":
        """Fresh packet cloned from a zeroed per-program template (hot path)."""
        new = template.copy()
        new.payload = payload
        return new

    def copy(self) -> "PacketInstance":
        new = PacketInstance.__new__(PacketInstance)
        new.headers = {name: slot.copy() for name, slot in self.headers.items()}
        new.payload = self.payload
        return new

    def get(self, header: str, field: str) -> int:
        return self.headers[header].fields[field]

    def set(self, header: str, field: str, value: int):
        self.headers[header].fields[field] = value

    def is_valid(self, header: str) -> bool:
        return self.headers[header].valid

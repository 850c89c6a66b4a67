"""Inline reference monitor over the simulated heap."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from . import frames
from .errors import MissingMetadata, MonitorAbort, UsageError
from .frames import LargeFramed, SmallFramed, TagConfig, Untagged
from .heap import AllocationRecord, HeapConfig, ObjectState, SimHeap
from .shadow import ShadowTable
from .typelayer import TypeRegistry


class Outcome(enum.Enum):
    OK = "ok"
    OUT_OF_BOUNDS = "oob"
    USE_AFTER_FREE = "uaf"
    DOUBLE_FREE = "double-free"
    IN_FRAME_VIOLATION = "inframe-violation"
    CAST_ERROR = "cast-error"
    MISSING_METADATA = "missing-metadata"

    @property
    def flagged(self) -> bool:
        return self is not Outcome.OK


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    object_id: int | None = None
    address: int | None = None
    width: int | None = None

    def __post_init__(self):
        if self.outcome is Outcome.OK and self.address is not None:
            raise UsageError("an Ok verdict carries no offending address")

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "object_id": self.object_id,
            "address": self.address,
            "width": self.width,
        }


OK = Verdict(Outcome.OK)


@dataclass(frozen=True)
class MonitorPolicy:
    on_violation: str = "record"  # or "abort"
    arithmetic_check: bool = True

    def __post_init__(self):
        if self.on_violation not in ("record", "abort"):
            raise UsageError(f"unknown violation policy {self.on_violation!r}")


class Monitor:
    def __init__(self, cfg: TagConfig | None = None, heap_cfg: HeapConfig | None = None,
                 policy: MonitorPolicy | None = None, types: TypeRegistry | None = None):
        self.cfg = cfg or TagConfig()
        self.heap = SimHeap(self.cfg, heap_cfg)
        self.table = ShadowTable(self.cfg)
        self.policy = policy or MonitorPolicy()
        self.types = types or TypeRegistry()

    def _flag(self, outcome: Outcome, object_id=None, address=None, width=None) -> Verdict:
        v = Verdict(outcome, object_id, address, width)
        if self.policy.on_violation == "abort":
            raise MonitorAbort(v)
        return v

    def on_alloc(self, size: int, type_id: int = 0, align: int | None = None,
                 md_addr: int | None = None) -> int:
        self.types[type_id]
        rec = self.heap.alloc(size, type_id, align, md_addr)
        if isinstance(rec.tag, LargeFramed):
            frame = frames.wrapper_frame(rec.md_addr, rec.extent_hi)
            self.table.insert(frame.base, frame.exp, rec.md_addr)
        return frames.encode(rec.payload_base, rec.tag, self.cfg)

    def derive_md(self, w: int) -> int:
        """Header address reachable from a tagged word; MissingMetadata if none."""
        addr, tag = frames.decode(w, self.cfg)
        if isinstance(tag, SmallFramed):
            return frames.slot_base(addr, self.cfg) + tag.offset
        if isinstance(tag, LargeFramed):
            return self.table.lookup(addr, tag.wrapper_exp)
        raise UsageError(f"{w:#x} is untagged")

    def _resolve(self, w: int) -> AllocationRecord:
        return self.heap.record_at(self.derive_md(w))

    def on_arith(self, w: int, delta: int) -> tuple[int, Verdict]:
        addr, tag = frames.decode(w, self.cfg)
        result = addr + delta
        if not 0 <= result < 1 << self.cfg.addr_bits:
            raise UsageError(f"{addr:#x} + {delta} leaves the address space")
        out = frames.encode(result, tag, self.cfg)
        if self.policy.arithmetic_check and not frames.in_frame(w, result, self.cfg):
            return out, self._flag(Outcome.IN_FRAME_VIOLATION, address=result)
        return out, OK

    def on_access(self, w: int, width: int, kind: str = "load") -> Verdict:
        if width < 1:
            raise UsageError(f"access width must be >= 1, got {width}")
        if kind not in ("load", "store"):
            raise UsageError(f"unknown access kind {kind!r}")
        addr, tag = frames.decode(w, self.cfg)
        if isinstance(tag, Untagged):
            return OK
        try:
            md = self.derive_md(w)
            hdr = self.heap.read_header(md)
        except MissingMetadata:
            return self._flag(Outcome.MISSING_METADATA, address=addr, width=width)
        oid = self.heap.by_md[md].object_id
        if hdr.state is ObjectState.FREED:
            return self._flag(Outcome.USE_AFTER_FREE, oid, addr, width)
        lower = md + self.cfg.header_size
        if lower <= addr and addr + width <= lower + hdr.payload_size:
            return OK
        return self._flag(Outcome.OUT_OF_BOUNDS, oid, addr, width)

    def on_cast(self, w: int, target: int) -> Verdict:
        addr, tag = frames.decode(w, self.cfg)
        if isinstance(tag, Untagged):
            raise UsageError("cast checks need a tagged word")
        self.types[target]
        try:
            md = self.derive_md(w)
            hdr = self.heap.read_header(md)
        except MissingMetadata:
            return self._flag(Outcome.MISSING_METADATA, address=addr)
        oid = self.heap.by_md[md].object_id
        if hdr.state is ObjectState.FREED:
            return self._flag(Outcome.USE_AFTER_FREE, oid, addr)
        offset = addr - (md + self.cfg.header_size)
        if self.types.cast_ok(hdr.type_id, hdr.payload_size, offset, target):
            return OK
        return self._flag(Outcome.CAST_ERROR, oid, addr)

    def on_free(self, w: int) -> Verdict:
        addr, tag = frames.decode(w, self.cfg)
        if isinstance(tag, Untagged):
            raise UsageError("free needs a tagged word")
        try:
            rec = self._resolve(w)
            hdr = self.heap.read_header(rec.md_addr)
        except MissingMetadata:
            return self._flag(Outcome.MISSING_METADATA, address=addr)
        if hdr.state is ObjectState.FREED:
            return self._flag(Outcome.DOUBLE_FREE, rec.object_id, addr)
        if addr != rec.payload_base:
            return self._flag(Outcome.OUT_OF_BOUNDS, rec.object_id, addr)
        self.heap.free(rec)
        if isinstance(rec.tag, LargeFramed):
            frame = frames.wrapper_frame(rec.md_addr, rec.extent_hi)
            self.table.remove(frame.base, frame.exp)
        return OK

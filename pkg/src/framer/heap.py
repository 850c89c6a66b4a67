"""Simulated sparse address space with header-prefixed allocations.

Objects keep their natural alignment: the payload is never padded or
re-aligned to its wrapper frame.  Freed extents are quarantined for the
lifetime of the heap so stale words keep finding a Freed header.
"""
from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass, field

from .errors import DoubleFreeError, InternalFault, MissingMetadata, OutOfSpace, UsageError
from .frames import FrameTag, TagConfig, categorize

PAGE_SIZE = 4096
MAX_ALIGN = 4096

# payload size (8), type id (4), state (1), reserved (3)
_HEADER = struct.Struct("<QIB3x")


class ObjectState(enum.IntEnum):
    LIVE = 1
    FREED = 2


@dataclass(frozen=True)
class ObjectHeader:
    payload_size: int
    type_id: int
    state: ObjectState

    def pack(self, header_size: int) -> bytes:
        raw = _HEADER.pack(self.payload_size, self.type_id, int(self.state))
        return raw.ljust(header_size, b"\0")

    @classmethod
    def unpack(cls, raw: bytes) -> ObjectHeader:
        size, type_id, state = _HEADER.unpack_from(raw)
        return cls(size, type_id, ObjectState(state))


@dataclass
class AllocationRecord:
    object_id: int
    md_addr: int
    payload_base: int
    payload_size: int
    tag: FrameTag
    live: bool = True
    type_id: int = 0

    @property
    def extent_hi(self) -> int:
        """Inclusive last byte of header plus payload."""
        return self.payload_base + self.payload_size - 1

    @property
    def payload_end(self) -> int:
        return self.payload_base + self.payload_size


@dataclass(frozen=True)
class HeapConfig:
    """Arena and placement policy.

    ``placement`` is ``"bump"`` or ``"random-gaps"``.  Random gaps insert a
    seeded gap of up to one slot before each object and, with probability
    ``straddle_prob``, push the extent across the next slot boundary so
    small objects become large-framed.  With probability ``flush_prob`` the
    payload instead ends exactly on a slot boundary.
    """

    arena_lo: int | None = None
    arena_hi: int | None = None
    placement: str = "bump"
    seed: int = 0
    straddle_prob: float = 0.25
    flush_prob: float = 0.1
    default_align: int = 16

    def arena(self, cfg: TagConfig) -> tuple[int, int]:
        lo = self.arena_lo if self.arena_lo is not None else 0x7 << (cfg.addr_bits - 4)
        hi = self.arena_hi if self.arena_hi is not None else 1 << cfg.addr_bits
        if not 0 <= lo < hi <= 1 << cfg.addr_bits:
            raise UsageError(f"arena [{lo:#x}, {hi:#x}) outside the address space")
        return lo, hi


class PageStore:
    """Byte store that materializes 4 KiB pages on first write."""

    def __init__(self):
        self.pages: dict[int, bytearray] = {}

    def write(self, addr: int, data: bytes):
        pos = 0
        while pos < len(data):
            page, off = divmod(addr + pos, PAGE_SIZE)
            buf = self.pages.get(page)
            if buf is None:
                buf = self.pages[page] = bytearray(PAGE_SIZE)
            n = min(PAGE_SIZE - off, len(data) - pos)
            buf[off:off + n] = data[pos:pos + n]
            pos += n

    def read(self, addr: int, size: int) -> bytes:
        out = bytearray()
        while len(out) < size:
            page, off = divmod(addr + len(out), PAGE_SIZE)
            n = min(PAGE_SIZE - off, size - len(out))
            buf = self.pages.get(page)
            out += buf[off:off + n] if buf is not None else bytes(n)
        return bytes(out)

    @property
    def resident_bytes(self) -> int:
        return len(self.pages) * PAGE_SIZE


class SimHeap:
    def __init__(self, cfg: TagConfig, heap_cfg: HeapConfig | None = None):
        self.cfg = cfg
        self.heap_cfg = heap_cfg or HeapConfig()
        if self.heap_cfg.placement not in ("bump", "random-gaps"):
            raise UsageError(f"unknown placement {self.heap_cfg.placement!r}")
        self.arena_lo, self.arena_hi = self.heap_cfg.arena(cfg)
        self.cursor = self.arena_lo
        self.store = PageStore()
        self.records: list[AllocationRecord] = []
        self.by_md: dict[int, AllocationRecord] = {}
        self._rng = random.Random(self.heap_cfg.seed)

    def _place(self, total: int, align: int) -> int:
        hs = self.cfg.header_size
        lo = self.cursor
        if self.heap_cfg.placement == "random-gaps":
            slot = self.cfg.slot_size
            if self._rng.random() < self.heap_cfg.straddle_prob:
                boundary = (lo + hs + slot) & ~(slot - 1)
                # payload base at or just below the boundary, still aligned
                steps = self._rng.randrange((total - hs - 1) // align + 1)
                payload = boundary - steps * align
                if payload - hs >= lo and payload % align == 0:
                    return payload - hs
            elif self._rng.random() < self.heap_cfg.flush_prob:
                # payload ends exactly on a slot boundary
                size = total - hs
                boundary = (lo + total + slot - 1) & ~(slot - 1)
                payload = boundary - size
                if payload % align == 0:
                    return payload - hs
            lo += self._rng.randrange(slot)
        payload = -(-(lo + hs) // align) * align
        return payload - hs

    def alloc(self, size: int, type_id: int = 0, align: int | None = None,
              md_addr: int | None = None) -> AllocationRecord:
        """Reserve header plus payload; ``md_addr`` forces an exact placement."""
        align = self.heap_cfg.default_align if align is None else align
        if size < 1:
            raise UsageError(f"allocation size must be >= 1, got {size}")
        if align < 1 or align > MAX_ALIGN or align & (align - 1):
            raise UsageError(f"alignment must be a power of two <= {MAX_ALIGN}, got {align}")
        hs = self.cfg.header_size
        total = hs + size
        if md_addr is None:
            md = self._place(total, align)
        else:
            if md_addr < self.cursor or (md_addr + hs) % align:
                raise UsageError(f"cannot place object at {md_addr:#x}")
            md = md_addr
        if md + total > self.arena_hi:
            raise OutOfSpace(f"arena exhausted placing {total} bytes at {md:#x}")
        if self.records and md < self.records[-1].payload_end:
            raise InternalFault(f"extent at {md:#x} overlaps the previous allocation")
        tag = categorize(md, md + total - 1, md, self.cfg)
        rec = AllocationRecord(
            object_id=len(self.records),
            md_addr=md,
            payload_base=md + hs,
            payload_size=size,
            tag=tag,
            type_id=type_id,
        )
        self.store.write(md, ObjectHeader(size, type_id, ObjectState.LIVE).pack(hs))
        self.records.append(rec)
        self.by_md[md] = rec
        self.cursor = md + total
        return rec

    def free(self, record: AllocationRecord):
        if not record.live:
            raise DoubleFreeError(f"object {record.object_id} already freed")
        hdr = self.read_header(record.md_addr)
        self.store.write(
            record.md_addr,
            ObjectHeader(hdr.payload_size, hdr.type_id, ObjectState.FREED).pack(self.cfg.header_size),
        )
        record.live = False

    def read_header(self, md_addr: int) -> ObjectHeader:
        if md_addr not in self.by_md:
            raise MissingMetadata(f"no header at {md_addr:#x}")
        return ObjectHeader.unpack(self.store.read(md_addr, self.cfg.header_size))

    def record_at(self, md_addr: int) -> AllocationRecord:
        try:
            return self.by_md[md_addr]
        except KeyError:
            raise MissingMetadata(f"no header at {md_addr:#x}") from None

    def live_records(self):
        return (r for r in self.records if r.live)

"""Per-slot shadow table for large-framed objects.

A record is materialized the first time a large frame based in its slot is
inserted and stays resident afterwards; its divisions map a wrapper exponent
to the header address of the single live object owning that frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MissingMetadata, ShadowCollision, UsageError
from .frames import TagConfig

ENTRY_BYTES = 8


@dataclass
class SlotRecord:
    slot_index: int
    divisions: dict[int, int] = field(default_factory=dict)


@dataclass
class TableStats:
    live_entries: int = 0
    peak_entries: int = 0
    inserts: int = 0
    resident_bytes: int = 0


class ShadowTable:
    def __init__(self, cfg: TagConfig):
        self.cfg = cfg
        self.records: dict[int, SlotRecord] = {}
        self.stats = TableStats()
        # one fixed-width division per legal exponent in (slot_exp, addr_bits]
        self.record_bytes = (cfg.addr_bits - cfg.slot_exp) * ENTRY_BYTES

    def _check(self, base: int, n: int):
        cfg = self.cfg
        if not cfg.slot_exp < n <= cfg.addr_bits:
            raise UsageError(f"exponent {n} is not a large frame")
        if base & ((1 << n) - 1) or base >> cfg.addr_bits:
            raise UsageError(f"base {base:#x} is not aligned to 2^{n}")

    def insert(self, base: int, n: int, md_addr: int):
        self._check(base, n)
        idx = base >> self.cfg.slot_exp
        rec = self.records.get(idx)
        if rec is None:
            rec = self.records[idx] = SlotRecord(idx)
            self.stats.resident_bytes += self.record_bytes
        if n in rec.divisions:
            raise ShadowCollision(
                f"frame 2^{n} at {base:#x} already owned by header {rec.divisions[n]:#x}"
            )
        rec.divisions[n] = md_addr
        st = self.stats
        st.inserts += 1
        st.live_entries += 1
        st.peak_entries = max(st.peak_entries, st.live_entries)

    def lookup(self, addr: int, n: int) -> int:
        base = (addr >> n) << n
        rec = self.records.get(base >> self.cfg.slot_exp)
        if rec is None or n not in rec.divisions:
            raise MissingMetadata(f"no shadow entry for 2^{n} frame at {base:#x}")
        return rec.divisions[n]

    def remove(self, base: int, n: int):
        self._check(base, n)
        rec = self.records.get(base >> self.cfg.slot_exp)
        if rec is None or n not in rec.divisions:
            raise UsageError(f"no shadow entry for 2^{n} frame at {base:#x}")
        del rec.divisions[n]
        self.stats.live_entries -= 1

    def __len__(self):
        return self.stats.live_entries

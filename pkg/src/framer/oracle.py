"""Ground truth for the monitor.

The oracle tracks raw addresses and intended referents by itself and never
touches tags, frames or the shadow table.  After a run, every event where
either side flagged something is classified.
"""
from __future__ import annotations

import bisect
import enum
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import UsageError
from .monitor import OK, Outcome, Verdict
from .typelayer import TypeRegistry


@dataclass
class ObjectInfo:
    object_id: int
    base: int
    size: int
    type_id: int
    live: bool = True

    @property
    def end(self) -> int:
        return self.base + self.size


class ReferentMap:
    """Sorted payload intervals plus the intended referent of every variable."""

    def __init__(self):
        self._starts: list[int] = []
        self._objs: list[ObjectInfo] = []
        self.objects: dict[int, ObjectInfo] = {}
        self.referent: dict[str, int] = {}
        self.addr: dict[str, int] = {}

    def add_object(self, object_id: int, base: int, size: int, type_id: int = 0):
        i = bisect.bisect_right(self._starts, base)
        info = ObjectInfo(object_id, base, size, type_id)
        for nb in self._objs[max(i - 1, 0):i + 1]:
            if nb.base < info.end and base < nb.end:
                raise UsageError(f"object {object_id} overlaps object {nb.object_id}")
        self._starts.insert(i, base)
        self._objs.insert(i, info)
        self.objects[object_id] = info

    def owner(self, addr: int) -> int | None:
        i = bisect.bisect_right(self._starts, addr) - 1
        if i >= 0 and addr < self._objs[i].end:
            return self._objs[i].object_id
        return None

    def bind(self, var: str, object_id: int, addr: int):
        if object_id not in self.objects:
            raise UsageError(f"unknown object {object_id}")
        self.referent[var] = object_id
        self.addr[var] = addr

    def derive(self, new: str, var: str, delta: int) -> int:
        self.bind(new, self.referent_of(var), self.addr[var] + delta)
        return self.addr[new]

    def referent_of(self, var: str) -> int:
        try:
            return self.referent[var]
        except KeyError:
            raise UsageError(f"variable {var!r} has no intended referent") from None


class Oracle:
    def __init__(self, types: TypeRegistry | None = None):
        self.map = ReferentMap()
        self.types = types or TypeRegistry()

    def on_alloc(self, object_id: int, base: int, size: int, type_id: int = 0):
        self.map.add_object(object_id, base, size, type_id)

    def _referent(self, var: str) -> ObjectInfo:
        return self.map.objects[self.map.referent_of(var)]

    def truth_access(self, var: str, addr: int, width: int) -> Verdict:
        obj = self._referent(var)
        if not obj.live:
            return Verdict(Outcome.USE_AFTER_FREE, obj.object_id, addr, width)
        if obj.base <= addr and addr + width <= obj.end:
            return OK
        return Verdict(Outcome.OUT_OF_BOUNDS, obj.object_id, addr, width)

    def truth_cast(self, var: str, addr: int, target: int) -> Verdict:
        obj = self._referent(var)
        if not obj.live:
            return Verdict(Outcome.USE_AFTER_FREE, obj.object_id, addr)
        if self.types.cast_ok(obj.type_id, obj.size, addr - obj.base, target):
            return OK
        return Verdict(Outcome.CAST_ERROR, obj.object_id, addr)

    def truth_free(self, var: str, addr: int) -> Verdict:
        """Judge a free and, when legal, retire the referent."""
        obj = self._referent(var)
        if not obj.live:
            return Verdict(Outcome.DOUBLE_FREE, obj.object_id, addr)
        if addr != obj.base:
            return Verdict(Outcome.OUT_OF_BOUNDS, obj.object_id, addr)
        obj.live = False
        return OK


class Classification(enum.Enum):
    TRUE_DETECTION = "TrueDetection"
    FP_OUT_AND_BACK = "FP-OutAndBack"
    FP_ONE_PAST_END = "FP-OnePastEnd"
    FALSE_NEGATIVE = "FalseNegative"
    BUG = "Bug"


ARITH_OPS = ("ptr", "add")


@dataclass
class EventRecord:
    index: int
    op: str
    monitor: Verdict
    oracle: Verdict
    chain: tuple[int, ...] = ()  # arithmetic events the word was derived through
    referent: int | None = None
    result_addr: int | None = None
    one_past_end: bool = False
    inside_referent: bool = False  # arithmetic source and result both in the referent payload
    outside_referent: bool = False  # checked access reaches outside the referent payload
    tagged: bool = True
    line: int | None = None


@dataclass(frozen=True)
class Discrepancy:
    event_index: int
    monitor: Verdict
    oracle: Verdict
    classification: Classification
    cause: int | None = None  # arithmetic event credited with the detection

    def to_dict(self) -> dict:
        return {
            "event": self.event_index,
            "monitor": self.monitor.outcome.value,
            "oracle": self.oracle.outcome.value,
            "classification": self.classification.value,
            "cause": self.cause,
        }


class History:
    """Finished event log with lineage lookups in both directions."""

    def __init__(self, events: list[EventRecord]):
        self.events = events
        self._flagged_desc: dict[int, list[int]] = defaultdict(list)
        for ev in events:
            if ev.op not in ARITH_OPS and ev.oracle.outcome.flagged and ev.outside_referent:
                for anc in ev.chain:
                    self._flagged_desc[anc].append(ev.index)

    def escape_cause(self, ev: EventRecord) -> int | None:
        for anc in ev.chain:
            if self.events[anc].monitor.outcome is Outcome.IN_FRAME_VIOLATION:
                return anc
        return None

    def flagged_descendants(self, index: int) -> list[int]:
        return self._flagged_desc.get(index, [])


def classify(monitor: Verdict, oracle: Verdict, history: History,
             event: EventRecord) -> Discrepancy | None:
    m, o = monitor.outcome, oracle.outcome
    if not m.flagged and not o.flagged:
        return None

    def out(kind, cause=None):
        return Discrepancy(event.index, monitor, oracle, kind, cause)

    if event.op in ARITH_OPS:
        if o.flagged or m is not Outcome.IN_FRAME_VIOLATION or event.inside_referent:
            return out(Classification.BUG)
        if history.flagged_descendants(event.index):
            return out(Classification.TRUE_DETECTION)
        if event.one_past_end:
            return out(Classification.FP_ONE_PAST_END)
        return out(Classification.FP_OUT_AND_BACK)

    cause = history.escape_cause(event)
    if m.flagged and o.flagged:
        if m is o or m is Outcome.MISSING_METADATA or cause is not None:
            return out(Classification.TRUE_DETECTION, cause)
        return out(Classification.BUG)
    if o.flagged:
        if cause is not None:
            return out(Classification.TRUE_DETECTION, cause)
        return out(Classification.FALSE_NEGATIVE)
    return out(Classification.BUG)


def classify_all(events: list[EventRecord]) -> list[Discrepancy]:
    history = History(events)
    found = []
    for ev in events:
        d = classify(ev.monitor, ev.oracle, history, ev)
        if d is not None:
            found.append(d)
    return found

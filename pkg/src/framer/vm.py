"""Trace VM: drives the monitor and the oracle in lockstep over a program."""
from __future__ import annotations

import dataclasses
import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import FramerError, InternalFault, MonitorAbort, TraceRunError
from .frames import LargeFramed, SmallFramed, TagConfig
from .heap import HeapConfig
from .monitor import OK, Monitor, MonitorPolicy, Outcome
from .oracle import Classification, Discrepancy, EventRecord, Oracle, classify_all
from .trace import Access, Add, Alloc, Cast, Expect, Free, Let, TraceProgram, Typedef
from .typelayer import TypeRegistry


@dataclass
class RunReport:
    config: dict
    events: list[EventRecord] = field(default_factory=list)
    discrepancies: list[Discrepancy] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    memory: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    allocations: list[dict] = field(default_factory=list)
    expect_failures: list[dict] = field(default_factory=list)
    aborted_at: int | None = None

    @property
    def classification_counts(self) -> dict[str, int]:
        counts = Counter(d.classification.value for d in self.discrepancies)
        return {c.value: counts.get(c.value, 0) for c in Classification}

    @property
    def ok(self) -> bool:
        return not self.expect_failures and not self.classification_counts["Bug"]

    def verdicts(self) -> list[str]:
        return [ev.monitor.outcome.value for ev in self.events]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "events": [
                {
                    "index": ev.index,
                    "line": ev.line,
                    "op": ev.op,
                    "monitor": ev.monitor.to_dict(),
                    "oracle": ev.oracle.to_dict(),
                    "chain": list(ev.chain),
                }
                for ev in self.events
            ],
            "discrepancies": [d.to_dict() for d in self.discrepancies],
            "classification_counts": self.classification_counts,
            "counters": self.counters,
            "memory": self.memory,
            "shadow_table": self.table,
            "allocations": self.allocations,
            "expect_failures": self.expect_failures,
            "aborted_at": self.aborted_at,
        }

    def to_json(self, timestamp: bool = False) -> str:
        d = self.to_dict()
        if timestamp:
            d["generated_at"] = datetime.now(timezone.utc).isoformat()
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    def summary(self) -> str:
        rows = [
            ("events", len(self.events)),
            ("allocations", self.counters.get("objects", 0)),
            ("small-framed", self.counters.get("small_framed", 0)),
            ("large-framed", self.counters.get("large_framed", 0)),
            ("small-sized large-framed", self.counters.get("small_sized_large_framed", 0)),
            ("header bytes", self.memory.get("header_bytes", 0)),
            ("table bytes", self.memory.get("table_bytes", 0)),
            ("payload bytes", self.memory.get("payload_bytes", 0)),
            ("overhead ratio", f"{self.memory.get('overhead_ratio', 0.0):.6f}"),
        ]
        rows += [(k, v) for k, v in self.classification_counts.items()]
        rows.append(("expect failures", len(self.expect_failures)))
        if self.aborted_at is not None:
            rows.append(("aborted at event", self.aborted_at))
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v}" for k, v in rows]
        for f in self.expect_failures:
            lines.append(f"  line {f['line']}: expected {f['expected']}, got {f['actual']}")
        return "\n".join(lines) + "\n"


class _VM:
    def __init__(self, cfg: TagConfig, policy: MonitorPolicy, heap_cfg: HeapConfig):
        self.types = TypeRegistry()
        self.monitor = Monitor(cfg, heap_cfg, policy, self.types)
        self.oracle = Oracle(self.types)
        self.objects: dict[str, tuple[int, int]] = {}  # name -> (object_id, base word)
        self.words: dict[str, int] = {}
        self.chains: dict[str, tuple[int, ...]] = {}
        self.events: list[EventRecord] = []
        self.stmt_event: dict[int, int] = {}
        self.aborted_at: int | None = None

    def _checked(self, fn, *args):
        try:
            return fn(*args), False
        except MonitorAbort as exc:
            return exc.verdict, True

    def _record(self, op, line, monitor_v, oracle_v, **kw) -> EventRecord:
        ev = EventRecord(len(self.events), op, monitor_v, oracle_v, line=line, **kw)
        self.events.append(ev)
        return ev

    def _arith(self, op, st, word, delta, chain, oracle_var, new_var):
        try:
            word2, v = self.monitor.on_arith(word, delta)
            aborted = False
        except MonitorAbort as exc:
            word2, v, aborted = None, exc.verdict, True
        idx = len(self.events)
        if op == "ptr":
            self.oracle.map.bind(new_var, self.objects[st.obj][0], self.oracle.map.addr[oracle_var] + delta)
        else:
            self.oracle.map.derive(new_var, oracle_var, delta)
        obj = self.oracle.map.objects[self.oracle.map.referent[new_var]]
        addr = self.oracle.map.addr[new_var]
        src = addr - delta
        self._record(op, st.line, v, OK, chain=chain + (idx,), referent=obj.object_id,
                     result_addr=addr, one_past_end=addr == obj.end,
                     inside_referent=obj.base <= src < obj.end and obj.base <= addr < obj.end)
        self.words[new_var] = word2
        self.chains[new_var] = chain + (idx,)
        return aborted

    def _outside(self, var, width):
        m = self.oracle.map
        obj = m.objects[m.referent[var]]
        addr = m.addr[var]
        return addr < obj.base or addr + width > obj.end

    def step(self, i: int, st) -> bool:
        mon, orc = self.monitor, self.oracle
        if isinstance(st, Typedef):
            if st.fields is None:
                self.types.primitive(st.name, st.size)
            else:
                self.types.aggregate(st.name, st.fields, st.size)
            return False
        if isinstance(st, Alloc):
            tid = self.types.id_of(st.type_name or "char")
            word = mon.on_alloc(st.size, tid, st.align)
            rec = mon.heap.records[-1]
            orc.on_alloc(rec.object_id, rec.payload_base, rec.payload_size, tid)
            orc.map.bind("@" + st.obj, rec.object_id, rec.payload_base)
            self.objects[st.obj] = (rec.object_id, word)
            return False
        if isinstance(st, Expect):
            return False
        self.stmt_event[i] = len(self.events)
        if isinstance(st, Let):
            return self._arith("ptr", st, self.objects[st.obj][1], st.offset, (), "@" + st.obj, st.var)
        if isinstance(st, Add):
            return self._arith("add", st, self.words[st.src], st.delta, self.chains[st.src],
                               st.src, st.dst)
        if isinstance(st, Access):
            v, aborted = self._checked(mon.on_access, self.words[st.var], st.width, st.kind)
            ov = orc.truth_access(st.var, orc.map.addr[st.var], st.width)
            self._record(st.kind, st.line, v, ov, chain=self.chains[st.var],
                         referent=orc.map.referent[st.var],
                         outside_referent=self._outside(st.var, st.width))
            return aborted
        if isinstance(st, Cast):
            tid = self.types.id_of(st.type_name)
            v, aborted = self._checked(mon.on_cast, self.words[st.var], tid)
            ov = orc.truth_cast(st.var, orc.map.addr[st.var], tid)
            self._record("cast", st.line, v, ov, chain=self.chains[st.var],
                         referent=orc.map.referent[st.var],
                         outside_referent=self._outside(st.var, 1))
            return aborted
        if isinstance(st, Free):
            if st.through_var:
                var, word, chain = st.target, self.words[st.target], self.chains[st.target]
            else:
                var, word, chain = "@" + st.target, self.objects[st.target][1], ()
            outside = self._outside(var, 1)
            v, aborted = self._checked(mon.on_free, word)
            ov = orc.truth_free(var, orc.map.addr[var])
            self._record("free", st.line, v, ov, chain=chain, referent=orc.map.referent[var],
                         outside_referent=outside)
            return aborted
        raise TraceRunError(st.line, f"unsupported statement {st!r}")


def run(program: TraceProgram, cfg: TagConfig | None = None,
        policy: MonitorPolicy | None = None, seed: int = 0,
        heap_cfg: HeapConfig | None = None) -> RunReport:
    """Execute ``program``; the result depends only on the arguments."""
    cfg = cfg or TagConfig()
    policy = policy or MonitorPolicy()
    heap_cfg = dataclasses.replace(heap_cfg or HeapConfig(), seed=seed)
    vm = _VM(cfg, policy, heap_cfg)
    for i, st in enumerate(program.statements):
        try:
            aborted = vm.step(i, st)
        except InternalFault:
            raise
        except FramerError as exc:
            if isinstance(exc, TraceRunError):
                raise
            raise TraceRunError(getattr(st, "line", 0), str(exc)) from exc
        if aborted:
            vm.aborted_at = len(vm.events) - 1
            break

    failures = []
    for s in program.statements:
        if isinstance(s, Expect):
            ev_idx = vm.stmt_event.get(s.target)
            if ev_idx is None:
                if vm.aborted_at is None:
                    raise InternalFault(f"expect on line {s.line} has no event")
                continue
            actual = vm.events[ev_idx].monitor.outcome.value
            if actual != s.token:
                failures.append({"line": s.line, "expected": s.token, "actual": actual,
                                 "event": ev_idx})

    heap, table = vm.monitor.heap, vm.monitor.table
    records = heap.records
    large = [r for r in records if isinstance(r.tag, LargeFramed)]
    header_bytes = cfg.header_size * len(records)
    table_bytes = table.stats.resident_bytes
    payload_bytes = sum(r.payload_size for r in records)
    return RunReport(
        config={
            "addr_bits": cfg.addr_bits,
            "spare_bits": cfg.spare_bits,
            "slot_exp": cfg.slot_exp,
            "header_size": cfg.header_size,
            "policy": policy.on_violation,
            "arithmetic_check": policy.arithmetic_check,
            "placement": heap_cfg.placement,
            "seed": seed,
        },
        events=vm.events,
        discrepancies=classify_all(vm.events),
        counters={
            "objects": len(records),
            "small_framed": sum(isinstance(r.tag, SmallFramed) for r in records),
            "large_framed": len(large),
            "small_sized_large_framed": sum(r.payload_size <= cfg.slot_size for r in large),
        },
        memory={
            "header_bytes": header_bytes,
            "table_bytes": table_bytes,
            "payload_bytes": payload_bytes,
            "overhead_ratio": (header_bytes + table_bytes) / payload_bytes if payload_bytes else 0.0,
        },
        table=dataclasses.asdict(table.stats),
        allocations=[
            {
                "object_id": r.object_id,
                "md_addr": r.md_addr,
                "payload_size": r.payload_size,
                "large_framed": isinstance(r.tag, LargeFramed),
                "live": r.live,
            }
            for r in records
        ],
        expect_failures=failures,
        aborted_at=vm.aborted_at,
    )

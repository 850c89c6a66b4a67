import json

import pytest

from framer import TagConfig, parse, run
from framer.errors import TraceRunError
from framer.heap import HeapConfig
from framer.monitor import MonitorPolicy

from conftest import CLASSIC, TBI

OOB_PROGRAM = "alloc a 10\nlet p = ptr a\nadd q = p + 8\nstore q {w}\nexpect {tok}\n"


def test_store_past_end_reported():
    report = run(parse(OOB_PROGRAM.format(w=4, tok="oob")))
    assert report.verdicts() == ["ok", "ok", "oob"]
    assert report.ok
    assert report.events[-1].monitor.address == 0x700000000010 + 8


def test_narrow_store_is_fine():
    report = run(parse(OOB_PROGRAM.format(w=2, tok="ok")))
    assert report.verdicts()[-1] == "ok"
    assert report.ok


def test_expect_mismatch_is_reported():
    report = run(parse(OOB_PROGRAM.format(w=2, tok="oob")))
    assert report.expect_failures == [{"line": 5, "expected": "oob", "actual": "ok", "event": 2}]
    assert not report.ok


def test_empty_program():
    report = run(parse(""))
    assert report.events == [] and report.discrepancies == []
    assert report.memory["overhead_ratio"] == 0.0


def test_abort_policy_stops_at_first_violation():
    text = "alloc a 4\nlet p = ptr a\nadd q = p + 4\nload q 1\nload p 1\n"
    report = run(parse(text), policy=MonitorPolicy("abort"))
    assert report.verdicts() == ["ok", "ok", "oob"]
    assert report.aborted_at == 2


def test_runtime_error_carries_line():
    with pytest.raises(TraceRunError) as exc:
        run(parse("alloc a 4\nlet p = ptr a\nadd q = p - 0x800000000000\n"))
    assert exc.value.line == 3


def test_typedef_errors_surface_as_run_errors():
    with pytest.raises(TraceRunError):
        run(parse("typedef Bad struct 4 0:int64\n"))


def test_json_report_shape():
    report = run(parse(OOB_PROGRAM.format(w=4, tok="oob")))
    d = json.loads(report.to_json(timestamp=True))
    assert set(d) == {
        "config", "events", "discrepancies", "classification_counts", "counters", "memory",
        "shadow_table", "allocations", "expect_failures", "aborted_at", "generated_at",
    }
    assert d["events"][2]["monitor"]["outcome"] == "oob"
    assert d["events"][2]["oracle"]["outcome"] == "oob"
    assert d["discrepancies"] == [
        {"event": 2, "monitor": "oob", "oracle": "oob", "classification": "TrueDetection", "cause": None}
    ]
    assert d["config"]["spare_bits"] == 16


def test_tbi_run_counts_large_frames():
    text = "alloc a 200\nalloc b 8\n"
    assert run(parse(text), TBI).counters["large_framed"] == 1
    assert run(parse(text), CLASSIC).counters["large_framed"] == 0


def test_summary_lists_failures():
    report = run(parse(OOB_PROGRAM.format(w=2, tok="oob")))
    text = report.summary()
    assert "expect failures" in text and "line 5: expected oob, got ok" in text

import pytest

from framer import TagConfig, run
from framer.errors import UsageError
from framer.fuzz import DEFAULT_MIX, FuzzParams, fuzz, size_sampler
from framer.heap import HeapConfig
from framer.trace import Access, Cast, Free, parse


def test_same_seed_same_program():
    a = fuzz(7, FuzzParams(n_objects=50)).format()
    b = fuzz(7, FuzzParams(n_objects=50)).format()
    assert a == b
    assert a != fuzz(8, FuzzParams(n_objects=50)).format()


def test_program_reparses():
    prog = fuzz(3, FuzzParams(n_objects=40))
    assert parse(prog.format()).format() == prog.format()


def test_random_gaps_yield_large_frames():
    params = FuzzParams(n_objects=40, size_dist="uniform:1:64", placement="random-gaps")
    report = run(fuzz(1, params), seed=1, heap_cfg=HeapConfig(placement="random-gaps"))
    assert report.counters["large_framed"] >= 1


def test_no_frees_means_no_temporal_errors():
    mix = dict(DEFAULT_MIX, free=0)
    prog = fuzz(4, FuzzParams(n_objects=80, op_mix=mix))
    assert not any(isinstance(s, Free) and not s.through_var for s in prog.statements)
    report = run(prog)
    outcomes = {e.oracle.outcome.value for e in report.events}
    assert "uaf" not in outcomes and "double-free" not in outcomes


def test_guaranteed_event_mix():
    report = run(fuzz(0, FuzzParams(n_objects=4)))
    ops = {e.op for e in report.events}
    oracle = {e.oracle.outcome.value for e in report.events}
    assert {"load", "store"} & ops and "cast" in ops and "free" in ops
    assert {"ok", "oob", "uaf"} <= oracle
    assert report.classification_counts["FP-OutAndBack"] >= 1
    assert any(e.one_past_end for e in report.events)


@pytest.mark.parametrize("spec", ["uniform:5:1", "const:0", "normal:1:2", "uniform:a:b"])
def test_bad_size_distribution(spec):
    with pytest.raises(UsageError):
        size_sampler(spec)


def test_size_distributions():
    import random
    rng = random.Random(0)
    assert size_sampler("const:7")(rng) == 7
    assert all(1 <= size_sampler("loguniform:1:4096")(rng) <= 4096 for _ in range(1000))


def test_unknown_op_kind():
    with pytest.raises(UsageError):
        fuzz(0, FuzzParams(op_mix={"teleport": 1}))

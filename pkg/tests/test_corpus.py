from pathlib import Path

import pytest

from framer import parse, run

TRACES = sorted((Path(__file__).resolve().parent.parent / "traces").glob("*.trace"))


@pytest.mark.parametrize("path", TRACES, ids=[p.stem for p in TRACES])
def test_corpus_trace(path):
    report = run(parse(path.read_text()))
    assert report.expect_failures == []
    counts = report.classification_counts
    assert counts["Bug"] == 0 and counts["FalseNegative"] == 0


def test_corpus_has_every_expectation_token():
    tokens = set()
    for path in TRACES:
        tokens |= set(parse(path.read_text()).expectations.values())
    assert tokens == {"ok", "oob", "uaf", "double-free", "inframe-violation", "cast-error",
                      "missing-metadata"}

"""Run every bundled trace under both tag widths and print one line per trace.

Expectations in the corpus are written for the 16-bit layout; the 8-bit
column is informational.
"""
import argparse
from pathlib import Path

from framer import TagConfig, parse, run

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("traces", nargs="*", type=Path)
    args = ap.parse_args()
    paths = args.traces or sorted((ROOT / "traces").glob("*.trace"))
    failed = 0
    for path in paths:
        prog = parse(path.read_text())
        cols = []
        for cfg in (TagConfig.classic(), TagConfig.tbi()):
            r = run(prog, cfg)
            c = r.classification_counts
            cols.append(f"spare={cfg.spare_bits} expect-fail={len(r.expect_failures)} "
                        f"FP={c['FP-OutAndBack']}+{c['FP-OnePastEnd']} bug={c['Bug']}")
        failed += bool(run(prog).expect_failures)
        print(f"{path.stem:<20} " + " | ".join(cols))
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()

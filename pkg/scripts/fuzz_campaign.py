"""Fuzz many seeds and tabulate monitor/oracle agreement."""
import argparse
from collections import Counter

from framer import HeapConfig, TagConfig, run
from framer.fuzz import FuzzParams, fuzz


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--objects", type=int, default=1000)
    ap.add_argument("--sizes", default="uniform:1:4096")
    args = ap.parse_args()

    totals = Counter()
    for spare in (16, 8):
        for placement in ("bump", "random-gaps"):
            agg = Counter()
            events = 0
            for seed in range(args.seeds):
                params = FuzzParams(n_objects=args.objects, size_dist=args.sizes, placement=placement)
                r = run(fuzz(seed, params), TagConfig(spare_bits=spare), seed=seed,
                        heap_cfg=HeapConfig(placement=placement))
                agg.update(r.classification_counts)
                events += len(r.events)
            totals.update(agg)
            cells = " ".join(f"{k}={v}" for k, v in agg.items())
            print(f"spare={spare:<2} {placement:<11} events={events:<8} {cells}")
    bad = totals["FalseNegative"] + totals["Bug"]
    print("FAIL" if bad else "ok: no false negatives, no unclassified discrepancies")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()

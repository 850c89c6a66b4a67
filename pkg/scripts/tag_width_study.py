"""Tag-width trade-off study: per-seed CSV plus a per-config mean table."""
import argparse
from pathlib import Path

from framer import TagConfig
from framer.study import tag_width_study, to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="uniform:1:4096")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--objects", type=int, default=1000)
    ap.add_argument("--spare-bits", type=int, nargs="+", default=[16, 12, 8])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("study.csv"))
    args = ap.parse_args()

    cfgs = [TagConfig(spare_bits=b) for b in args.spare_bits]
    rows = tag_width_study(args.sizes, range(args.seeds), cfgs, args.objects, jobs=args.jobs)
    args.out.write_text(to_csv(rows))
    print(f"wrote {len(rows)} rows to {args.out}")
    keys = ("large_framed_fraction", "small_sized_large_framed_fraction",
            "table_resident_bytes", "overhead_ratio")
    print(f"{'spare':>5}  " + "  ".join(f"{k:>34}" for k in keys))
    for cfg in cfgs:
        sel = [r for r in rows if r["spare_bits"] == cfg.spare_bits]
        means = [sum(r[k] for r in sel) / len(sel) for k in keys]
        print(f"{cfg.spare_bits:>5}  " + "  ".join(f"{m:>34.4f}" for m in means))


if __name__ == "__main__":
    main()

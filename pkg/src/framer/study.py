"""Tag-width trade-off: how the slot size drives large-framed objects and table size."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor

from .frames import TagConfig
from .fuzz import FuzzParams, fuzz
from .heap import HeapConfig
from .vm import run

COLUMNS = (
    "spare_bits",
    "addr_bits",
    "seed",
    "objects",
    "large_framed_fraction",
    "small_sized_large_framed_fraction",
    "table_resident_bytes",
    "overhead_ratio",
)


def study_row(cfg: TagConfig, seed: int, size_dist: str, n_objects: int = 1000,
              placement: str = "bump") -> dict:
    params = FuzzParams(n_objects=n_objects, size_dist=size_dist, placement=placement,
                        ops_per_object=1, aligns=(None,))
    report = run(fuzz(seed, params), cfg, seed=seed, heap_cfg=HeapConfig(placement=placement))
    c, m = report.counters, report.memory
    return {
        "spare_bits": cfg.spare_bits,
        "addr_bits": cfg.addr_bits,
        "seed": seed,
        "objects": c["objects"],
        "large_framed_fraction": c["large_framed"] / c["objects"],
        "small_sized_large_framed_fraction": c["small_sized_large_framed"] / c["objects"],
        "table_resident_bytes": m["table_bytes"],
        "overhead_ratio": m["overhead_ratio"],
    }


def _row(args):
    return study_row(*args)


def tag_width_study(size_dist: str, seeds, cfg_list, n_objects: int = 1000,
                    placement: str = "bump", jobs: int = 1) -> list[dict]:
    """One row per (config, seed), grouped by config in ``cfg_list`` order."""
    tasks = [(cfg, seed, size_dist, n_objects, placement) for cfg in cfg_list for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_row, tasks))
    return [_row(t) for t in tasks]


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()

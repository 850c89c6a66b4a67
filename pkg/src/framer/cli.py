"""Command-line entry point: ``framer run | fuzz | study``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import FramerError, TraceRunError, TraceSyntaxError
from .frames import TagConfig
from .fuzz import DEFAULT_MIX, FuzzParams, fuzz
from .heap import HeapConfig
from .monitor import MonitorPolicy
from .study import tag_width_study, to_csv
from .trace import parse
from .vm import run


def _add_config_args(p):
    p.add_argument("--spare-bits", type=int, default=16, choices=(8, 16))
    p.add_argument("--addr-bits", type=int, default=48)
    p.add_argument("--placement", default="bump", choices=("bump", "random-gaps"))
    p.add_argument("--seed", type=int, default=0)


def _mix(text: str) -> dict:
    mix = dict.fromkeys(DEFAULT_MIX, 0) if text else dict(DEFAULT_MIX)
    for item in filter(None, text.split(",")):
        key, _, val = item.partition("=")
        if key not in DEFAULT_MIX:
            raise argparse.ArgumentTypeError(f"unknown op kind {key!r}")
        mix[key] = float(val)
    return mix


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framer", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="execute a trace through monitor and oracle")
    r.add_argument("trace", type=Path)
    _add_config_args(r)
    r.add_argument("--policy", default="record", choices=("abort", "record"))
    r.add_argument("--no-arith-check", action="store_true")
    r.add_argument("--json", type=Path, help="write the JSON report here")

    f = sub.add_parser("fuzz", help="generate a random trace")
    _add_config_args(f)
    f.add_argument("--objects", type=int, default=100)
    f.add_argument("--sizes", default="uniform:1:4096")
    f.add_argument("--ops-per-object", type=int, default=4)
    f.add_argument("--mix", type=_mix, default=None,
                   help="comma list kind=weight; unnamed kinds get weight 0")
    f.add_argument("--out", type=Path, help="write the trace here (default stdout)")
    f.add_argument("--run", action="store_true", help="also run it and print the summary")
    f.add_argument("--json", type=Path)

    s = sub.add_parser("study", help="tag-width trade-off study, CSV output")
    s.add_argument("--sizes", default="uniform:1:4096")
    s.add_argument("--seeds", type=int, default=10)
    s.add_argument("--objects", type=int, default=1000)
    s.add_argument("--spare-bits", type=int, nargs="+", default=[16, 8])
    s.add_argument("--addr-bits", type=int, default=48)
    s.add_argument("--placement", default="bump", choices=("bump", "random-gaps"))
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", type=Path)
    return ap


def _report(report, args) -> int:
    sys.stdout.write(report.summary())
    if args.json:
        args.json.write_text(report.to_json(timestamp=True))
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg = TagConfig(addr_bits=args.addr_bits, spare_bits=args.spare_bits)
            policy = MonitorPolicy(args.policy, not args.no_arith_check)
            report = run(parse(args.trace.read_text()), cfg, policy, args.seed,
                         HeapConfig(placement=args.placement))
            return _report(report, args)
        if args.cmd == "fuzz":
            params = FuzzParams(n_objects=args.objects, size_dist=args.sizes,
                                placement=args.placement, ops_per_object=args.ops_per_object)
            if args.mix is not None:
                params.op_mix = args.mix
            prog = fuzz(args.seed, params)
            if args.out:
                args.out.write_text(prog.format())
            elif not args.run:
                sys.stdout.write(prog.format())
            if args.run:
                cfg = TagConfig(addr_bits=args.addr_bits, spare_bits=args.spare_bits)
                report = run(prog, cfg, seed=args.seed, heap_cfg=HeapConfig(placement=args.placement))
                return _report(report, args)
            return 0
        cfgs = [TagConfig(addr_bits=args.addr_bits, spare_bits=b) for b in args.spare_bits]
        rows = tag_width_study(args.sizes, range(args.seeds), cfgs, args.objects,
                               args.placement, args.jobs)
        text = to_csv(rows)
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except (TraceSyntaxError, TraceRunError) as exc:
        print(f"{getattr(args, 'trace', '<trace>')}: {exc}", file=sys.stderr)
        return 2
    except FramerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

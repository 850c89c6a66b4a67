"""Seeded generator of trace programs exercising every checked event class."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import UsageError
from .trace import Access, Add, Alloc, Cast, Free, Let, TraceProgram, Typedef

DEFAULT_MIX = {
    "inbounds": 6,
    "oob": 2,
    "escape": 1,  # dereference far outside the referent
    "out_and_back": 2,
    "one_past_end": 2,
    "cast": 2,
    "bad_free": 1,
    "free": 2,
    "uaf": 1,
    "double_free": 1,
}

# kinds guaranteed to appear once (when weighted) before random sampling starts
GUARANTEED = ("inbounds", "oob", "out_and_back", "one_past_end", "cast", "free", "uaf")

TYPEDEFS = (
    Typedef("Pair", 8, ((0, "int32"), (4, "int32"))),
    Typedef("Rec", 24, ((0, "int64"), (8, "Pair"), (16, "int32"))),
    Typedef("Node", 16, ((0, "ptr"), (8, "int32"), (12, "float32"))),
)
TYPE_SIZES = {"char": 1, "int16": 2, "int32": 4, "float32": 4, "int64": 8, "float64": 8,
              "ptr": 8, "Pair": 8, "Rec": 24, "Node": 16}
BIG_STEPS = (1 << 16, 3 << 15, 1 << 17, 1 << 20)


@dataclass
class FuzzParams:
    n_objects: int = 100
    size_dist: str = "uniform:1:4096"
    op_mix: dict = field(default_factory=lambda: dict(DEFAULT_MIX))
    placement: str = "bump"
    ops_per_object: int = 4
    aligns: tuple = (None, None, None, 1, 8, 32, 256)  # None = heap default


def size_sampler(spec: str):
    """``uniform:a:b``, ``loguniform:a:b`` or ``const:n``."""
    kind, *args = spec.split(":")
    try:
        nums = [int(a, 0) for a in args]
    except ValueError:
        raise UsageError(f"bad size distribution {spec!r}") from None
    if kind == "const" and len(nums) == 1 and nums[0] >= 1:
        return lambda rng: nums[0]
    if kind in ("uniform", "loguniform") and len(nums) == 2 and 1 <= nums[0] <= nums[1]:
        lo, hi = nums
        if kind == "uniform":
            return lambda rng: rng.randint(lo, hi)
        return lambda rng: min(hi, int(math.exp(rng.uniform(math.log(lo), math.log(hi + 1)))))
    raise UsageError(f"bad size distribution {spec!r}")


class _Gen:
    def __init__(self, seed: int, params: FuzzParams):
        self.rng = random.Random(seed)
        self.params = params
        self.sample_size = size_sampler(params.size_dist)
        unknown = set(params.op_mix) - set(DEFAULT_MIX)
        if unknown:
            raise UsageError(f"unknown op kinds {sorted(unknown)}")
        self.kinds = [k for k, w in params.op_mix.items() if w > 0]
        self.weights = [params.op_mix[k] for k in self.kinds]
        self.out: list = list(TYPEDEFS)
        self.live: list[tuple[str, str, int]] = []  # (object, base var, size)
        self.freed: list[tuple[str, str, int]] = []
        self.nvars = 0

    def var(self) -> str:
        self.nvars += 1
        return f"v{self.nvars}"

    def emit(self, st):
        self.out.append(st)

    def derive(self, src: str, delta: int) -> str:
        if delta == 0:
            return src
        v = self.var()
        self.emit(Add(v, src, delta))
        return v

    def alloc(self, i: int):
        rng = self.rng
        size = self.sample_size(rng)
        obj = f"o{i}"
        type_name = None
        fits = [t for t, s in TYPE_SIZES.items() if size % s == 0 and t != "char"]
        if fits and rng.random() < 0.7:
            type_name = rng.choice(fits)
        align = rng.choice(self.params.aligns)
        self.emit(Alloc(obj, size, type_name, align))
        base = self.var()
        self.emit(Let(base, obj))
        self.live.append((obj, base, size))

    def width(self, size: int) -> int:
        return self.rng.choice([w for w in (1, 2, 4, 8) if w <= size])

    def op(self, kind: str) -> bool:
        rng = self.rng
        if kind in ("uaf", "double_free"):
            if not self.freed:
                return False
            obj, base, size = rng.choice(self.freed)
            if kind == "double_free":
                self.emit(Free(obj, False))
            else:
                w = self.width(size)
                v = self.derive(base, rng.randint(0, size - w))
                self.emit(Access(rng.choice(("load", "store")), v, w))
            return True
        if not self.live:
            return False
        idx = rng.randrange(len(self.live))
        obj, base, size = self.live[idx]
        if kind == "inbounds":
            w = self.width(size)
            self.emit(Access(rng.choice(("load", "store")), self.derive(base, rng.randint(0, size - w)), w))
        elif kind == "oob":
            w = self.width(size)
            delta = size - w + rng.randint(1, 64) if rng.random() < 0.6 else -rng.randint(1, 64)
            self.emit(Access(rng.choice(("load", "store")), self.derive(base, delta), w))
        elif kind == "escape":
            step = rng.choice(BIG_STEPS) * rng.choice((1, -1))
            v = self.derive(base, step + rng.randrange(size))
            self.emit(Access("load", v, 1))
        elif kind == "out_and_back":
            step = rng.choice(BIG_STEPS) + rng.randrange(size)
            away = self.derive(base, step)
            w = self.width(size)
            off = rng.randint(0, size - w)
            back = self.var()
            self.emit(Add(back, away, off - step))
            if rng.random() < 0.7:
                self.emit(Access(rng.choice(("load", "store")), back, w))
        elif kind == "one_past_end":
            end = self.derive(base, size)
            if rng.random() < 0.5:
                last = self.var()
                self.emit(Add(last, end, -1))
                self.emit(Access("load", last, 1))
        elif kind == "cast":
            off = rng.randrange(size)
            if rng.random() < 0.6:
                off -= off % 4
            self.emit(Cast(self.derive(base, off), rng.choice(sorted(TYPE_SIZES))))
        elif kind == "bad_free":
            if size < 2:
                return False
            self.emit(Free(self.derive(base, rng.randint(1, size - 1)), True))
        elif kind == "free":
            self.emit(Free(base, True) if rng.random() < 0.5 else Free(obj, False))
            self.freed.append(self.live.pop(idx))
        return True

    def build(self) -> TraceProgram:
        p = self.params
        todo = [k for k in GUARANTEED if k in self.kinds]
        for i in range(p.n_objects):
            self.alloc(i)
            for _ in range(p.ops_per_object):
                while todo and self.op(todo[0]):
                    todo.pop(0)
                if self.kinds:
                    self.op(self.rng.choices(self.kinds, self.weights)[0])
        return TraceProgram(self.out)


def fuzz(seed: int, params: FuzzParams | None = None) -> TraceProgram:
    return _Gen(seed, params or FuzzParams()).build()

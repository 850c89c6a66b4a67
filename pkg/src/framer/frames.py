"""Frame algebra: wrapper frames, slots, tag packing and the in-frame test.

Everything here is a pure function of plain integers.  A tagged word is laid
out as::

    bit 63                flag (1 = small-framed)
    bits [64-spare, 62]   tag field, spare_bits - 1 wide
    bits [0, addr_bits)   address

Bits between the address and the tag field must be zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import EncodingError, MalformedTag, UsageError

WORD_BITS = 64
FLAG_BIT = 63


@dataclass(frozen=True)
class TagConfig:
    addr_bits: int = 48
    spare_bits: int = 16
    header_size: int = 16

    def __post_init__(self):
        if self.spare_bits < 2:
            raise UsageError("spare_bits must leave room for flag and tag field")
        if self.addr_bits < 1 or self.addr_bits + self.spare_bits > WORD_BITS:
            raise UsageError(
                f"addr_bits + spare_bits must be <= 64 "
                f"(got {self.addr_bits} + {self.spare_bits})"
            )
        if self.slot_exp >= self.addr_bits:
            raise UsageError("slot must be smaller than the address space")
        hs = self.header_size
        if hs < 16 or hs & (hs - 1):
            raise UsageError(f"header_size must be a power of two >= 16, got {hs}")

    @property
    def slot_exp(self) -> int:
        return self.spare_bits - 1

    @property
    def slot_size(self) -> int:
        return 1 << self.slot_exp

    @property
    def field_shift(self) -> int:
        return WORD_BITS - self.spare_bits

    @property
    def field_mask(self) -> int:
        return (1 << (self.spare_bits - 1)) - 1

    @property
    def addr_mask(self) -> int:
        return (1 << self.addr_bits) - 1

    @classmethod
    def classic(cls, addr_bits: int = 48) -> TagConfig:
        return cls(addr_bits=addr_bits, spare_bits=16)

    @classmethod
    def tbi(cls, addr_bits: int = 48) -> TagConfig:
        """Top-byte configuration: flag plus a 7-bit field fit in 8 bits."""
        return cls(addr_bits=addr_bits, spare_bits=8)


@dataclass(frozen=True)
class SmallFramed:
    offset: int  # slot base -> metadata header, bytes


@dataclass(frozen=True)
class LargeFramed:
    wrapper_exp: int


@dataclass(frozen=True)
class Untagged:
    pass


UNTAGGED = Untagged()

FrameTag = Union[SmallFramed, LargeFramed, Untagged]


@dataclass(frozen=True)
class WrapperFrame:
    exp: int
    base: int

    @property
    def size(self) -> int:
        return 1 << self.exp

    def contains(self, lo: int, hi: int) -> bool:
        return self.base <= lo and hi < self.base + self.size


def wrapper_frame(lo: int, hi: int) -> WrapperFrame:
    """Smallest aligned power-of-two frame holding the inclusive range [lo, hi].

    The exponent is the bit length of ``lo ^ hi``: the highest bit in which
    the bounds differ must be cleared to make them share a frame base.
    """
    if lo < 0 or hi < lo or hi >> WORD_BITS:
        raise UsageError(f"bad range [{lo:#x}, {hi:#x}]")
    exp = (lo ^ hi).bit_length()
    return WrapperFrame(exp=exp, base=(lo >> exp) << exp)


def categorize(range_lo: int, range_hi: int, md_addr: int, cfg: TagConfig) -> FrameTag:
    # extent must start at its header; frames no larger than a slot sit in one slot
    if md_addr != range_lo:
        raise UsageError("metadata must sit at the start of the extent")
    if range_hi >> cfg.addr_bits:
        raise UsageError(f"range end {range_hi:#x} exceeds {cfg.addr_bits}-bit space")
    frame = wrapper_frame(range_lo, range_hi)
    if frame.exp <= cfg.slot_exp:
        return SmallFramed(offset=md_addr & (cfg.slot_size - 1))
    return LargeFramed(wrapper_exp=frame.exp)


def encode(addr: int, tag: FrameTag, cfg: TagConfig) -> int:
    if addr < 0 or addr >> cfg.addr_bits:
        raise EncodingError(f"address {addr:#x} exceeds {cfg.addr_bits} bits")
    if isinstance(tag, SmallFramed):
        if not 0 <= tag.offset < cfg.slot_size:
            raise EncodingError(f"offset {tag.offset:#x} does not fit a 2^{cfg.slot_exp} slot")
        return (1 << FLAG_BIT) | (tag.offset << cfg.field_shift) | addr
    if isinstance(tag, LargeFramed):
        n = tag.wrapper_exp
        if not cfg.slot_exp < n <= cfg.addr_bits or n > cfg.field_mask:
            raise EncodingError(f"wrapper exponent {n} out of range for {cfg}")
        return (n << cfg.field_shift) | addr
    if isinstance(tag, Untagged):
        return addr
    raise EncodingError(f"not a frame tag: {tag!r}")


def decode(w: int, cfg: TagConfig) -> tuple[int, FrameTag]:
    if w < 0 or w >> WORD_BITS:
        raise MalformedTag(f"{w:#x} is not a 64-bit word")
    addr = w & cfg.addr_mask
    if (w >> cfg.addr_bits) & ((1 << (cfg.field_shift - cfg.addr_bits)) - 1):
        raise MalformedTag(f"{w:#x} has stray bits between address and tag")
    field = (w >> cfg.field_shift) & cfg.field_mask
    if w >> FLAG_BIT:
        if field >= cfg.slot_size:
            raise MalformedTag(f"offset field {field:#x} exceeds slot")
        return addr, SmallFramed(offset=field)
    if field == 0:
        return addr, UNTAGGED
    if field <= cfg.slot_exp or field > cfg.addr_bits:
        raise MalformedTag(f"wrapper exponent {field} is not a legal large frame")
    return addr, LargeFramed(wrapper_exp=field)


def strip(w: int, cfg: TagConfig) -> int:
    return w & cfg.addr_mask


def tag_of(w: int, cfg: TagConfig) -> FrameTag:
    return decode(w, cfg)[1]


def slot_base(addr: int, cfg: TagConfig) -> int:
    return addr & ~(cfg.slot_size - 1)


def derive_small_md(w: int, cfg: TagConfig) -> int:
    """Header address of a small-framed word: slot base of the address plus offset."""
    addr, tag = decode(w, cfg)
    if not isinstance(tag, SmallFramed):
        raise UsageError(f"{w:#x} is not small-framed")
    return slot_base(addr, cfg) + tag.offset


def reference_exp(tag: FrameTag, cfg: TagConfig) -> int | None:
    """Exponent of the frame a tagged word must stay inside, None if unchecked."""
    if isinstance(tag, SmallFramed):
        return cfg.slot_exp
    if isinstance(tag, LargeFramed):
        return tag.wrapper_exp
    return None


def in_frame(src: int, result_addr: int, cfg: TagConfig) -> bool:
    addr, tag = decode(src, cfg)
    k = reference_exp(tag, cfg)
    if k is None:
        return True
    return ((addr ^ result_addr) >> k) == 0

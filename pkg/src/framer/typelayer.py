"""Structural type registry for offset-to-type mapping and cast checks."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import TypeDefinitionError, UsageError


@dataclass(frozen=True)
class Primitive:
    size: int


@dataclass(frozen=True)
class Aggregate:
    fields: tuple[tuple[int, int], ...]  # (offset, type_id), sorted by offset


@dataclass(frozen=True)
class TypeDescriptor:
    name: str
    kind: Primitive | Aggregate
    total_size: int
    type_id: int = -1


BUILTINS = (
    ("char", 1),
    ("int16", 2),
    ("int32", 4),
    ("float32", 4),
    ("int64", 8),
    ("float64", 8),
    ("ptr", 8),
)


class TypeRegistry:
    """Append-only registry.  Type id 0 is ``char``, the default for untyped allocations."""

    def __init__(self, builtins: bool = True):
        self._types: list[TypeDescriptor] = []
        self._names: dict[str, int] = {}
        self._leaves: dict[int, tuple[tuple[int, int], ...]] = {}
        if builtins:
            for name, size in BUILTINS:
                self.primitive(name, size)

    def __len__(self):
        return len(self._types)

    def __contains__(self, name: str):
        return name in self._names

    def register(self, desc: TypeDescriptor) -> int:
        if desc.name in self._names:
            raise TypeDefinitionError(f"type {desc.name!r} already defined")
        if desc.total_size < 1:
            raise TypeDefinitionError(f"{desc.name}: size must be positive")
        if isinstance(desc.kind, Aggregate):
            end = 0
            for off, tid in desc.kind.fields:
                if not 0 <= tid < len(self._types):
                    raise TypeDefinitionError(f"{desc.name}: unknown field type id {tid}")
                if off < end:
                    raise TypeDefinitionError(f"{desc.name}: field at {off} overlaps or is unsorted")
                end = off + self._types[tid].total_size
                if end > desc.total_size:
                    raise TypeDefinitionError(
                        f"{desc.name}: field at {off} runs past total size {desc.total_size}"
                    )
            if not desc.kind.fields:
                raise TypeDefinitionError(f"{desc.name}: aggregate needs at least one field")
        elif desc.kind.size != desc.total_size:
            raise TypeDefinitionError(f"{desc.name}: primitive size mismatch")
        tid = len(self._types)
        self._types.append(TypeDescriptor(desc.name, desc.kind, desc.total_size, tid))
        self._names[desc.name] = tid
        return tid

    def primitive(self, name: str, size: int) -> int:
        return self.register(TypeDescriptor(name, Primitive(size), size))

    def aggregate(self, name: str, fields, total_size: int | None = None) -> int:
        fields = tuple((int(off), self.id_of(t) if isinstance(t, str) else t) for off, t in fields)
        if total_size is None:
            total_size = max(off + self[t].total_size for off, t in fields) if fields else 0
        return self.register(TypeDescriptor(name, Aggregate(fields), total_size))

    def __getitem__(self, type_id: int) -> TypeDescriptor:
        if not 0 <= type_id < len(self._types):
            raise UsageError(f"unregistered type id {type_id}")
        return self._types[type_id]

    def id_of(self, name: str) -> int:
        try:
            return self._names[name]
        except KeyError:
            raise UsageError(f"unknown type {name!r}") from None

    def size_of(self, type_id: int) -> int:
        return self[type_id].total_size

    def type_at_offset(self, t: int, offset: int) -> int | None:
        """Outermost type starting exactly at ``offset`` (``t`` itself at 0)."""
        desc = self[t]
        while offset:
            if not isinstance(desc.kind, Aggregate):
                return None
            for off, fid in desc.kind.fields:
                if off <= offset < off + self._types[fid].total_size:
                    desc, offset = self._types[fid], offset - off
                    break
            else:
                return None
        return desc.type_id

    def _flat(self, t: int) -> tuple[tuple[int, int], ...]:
        """Leaf layout as (offset, primitive size) pairs."""
        if t in self._leaves:
            return self._leaves[t]
        desc = self._types[t]
        if isinstance(desc.kind, Primitive):
            out = ((0, desc.total_size),)
        else:
            out = tuple(
                (off + o, s) for off, fid in desc.kind.fields for o, s in self._flat(fid)
            )
        self._leaves[t] = out
        return out

    def cast_compatible(self, found: int, target: int) -> bool:
        """``target`` may view memory typed ``found`` without widening.

        True when the types are equal, both are primitives of one size, or
        target's flattened layout is a prefix of found's and no larger.
        """
        if found == target:
            return True
        f, g = self[found], self[target]
        if g.total_size > f.total_size:
            return False
        leaves_f, leaves_g = self._flat(found), self._flat(target)
        return leaves_f[:len(leaves_g)] == leaves_g

    def cast_ok(self, type_id: int, payload_size: int, offset: int, target: int) -> bool:
        """Whether a pointer ``offset`` bytes into a payload may be viewed as ``target``.

        Payloads larger than their type are treated as arrays of it.
        """
        if offset < 0 or offset + self.size_of(target) > payload_size:
            return False
        found = self.type_at_offset(type_id, offset % self.size_of(type_id))
        return found is not None and self.cast_compatible(found, target)

import itertools

import pytest

from framer.errors import TypeDefinitionError
from framer.typelayer import TypeRegistry

from oracles import layout_walk


@pytest.fixture
def reg():
    r = TypeRegistry()
    r.aggregate("Pair", [(0, "int32"), (4, "int32")], 8)
    r.aggregate("Wide", [(0, "Pair"), (8, "int64")], 16)
    r.aggregate("Head", [(0, "int32")], 4)
    r.aggregate("Tri", [(0, "int32"), (4, "int32"), (8, "int32")], 12)
    r.aggregate("Mixed", [(0, "int16"), (4, "Pair"), (12, "float32")], 16)
    return r


def layouts(reg):
    out = {}
    for tid in range(len(reg)):
        d = reg[tid]
        fields = getattr(d.kind, "fields", None)
        out[d.name] = (d.total_size, [(o, reg[f].name) for o, f in fields] if fields else None)
    return out


def test_register_rejects_bad_fields(reg):
    with pytest.raises(TypeDefinitionError):
        reg.aggregate("Bad", [(0, "int32"), (6, "int32")], 8)
    with pytest.raises(TypeDefinitionError):
        reg.aggregate("Overlap", [(0, "int64"), (4, "int32")], 16)
    with pytest.raises(TypeDefinitionError):
        reg.primitive("int32", 4)


def test_type_at_offset_examples(reg):
    pair, i32 = reg.id_of("Pair"), reg.id_of("int32")
    assert reg.type_at_offset(pair, 0) == pair
    assert reg.type_at_offset(pair, 4) == i32
    assert reg.type_at_offset(pair, 2) is None


def test_type_at_offset_matches_layout_walk(reg):
    lay = layouts(reg)
    for tid in range(len(reg)):
        d = reg[tid]
        for off in range(d.total_size + 2):
            got = reg.type_at_offset(tid, off)
            expect = layout_walk(lay, d.name, off) if off < d.total_size else None
            assert (reg[got].name if got is not None else None) == expect, (d.name, off)
            if got is not None:
                assert off + reg.size_of(got) <= d.total_size


def test_cast_compatible_examples(reg):
    pair, i32 = reg.id_of("Pair"), reg.id_of("int32")
    assert reg.cast_compatible(pair, pair)
    assert reg.cast_compatible(pair, i32)
    assert not reg.cast_compatible(i32, pair)
    assert reg.cast_compatible(reg.id_of("float32"), i32)
    assert not reg.cast_compatible(pair, reg.id_of("int64"))
    assert reg.cast_compatible(reg.id_of("Wide"), pair)
    assert reg.cast_compatible(reg.id_of("Tri"), pair)


def test_cast_compatible_is_reflexive_and_transitive(reg):
    ids = range(len(reg))
    for t in ids:
        assert reg.cast_compatible(t, t)
    for a, b, c in itertools.product(ids, repeat=3):
        if reg.cast_compatible(a, b) and reg.cast_compatible(b, c):
            assert reg.cast_compatible(a, c), (reg[a].name, reg[b].name, reg[c].name)


def test_cast_never_widens(reg):
    for a, b in itertools.product(range(len(reg)), repeat=2):
        if reg.cast_compatible(a, b):
            assert reg.size_of(b) <= reg.size_of(a)


def test_cast_ok_over_arrays(reg):
    i32, pair = reg.id_of("int32"), reg.id_of("Pair")
    assert reg.cast_ok(i32, 40, 36, i32)
    assert not reg.cast_ok(i32, 40, 40, i32)
    assert not reg.cast_ok(i32, 40, 2, i32)
    assert not reg.cast_ok(i32, 40, 4, pair)
    assert reg.cast_ok(pair, 24, 20, i32)
    assert not reg.cast_ok(pair, 24, -4, i32)

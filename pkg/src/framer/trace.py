"""Line-oriented trace language.

::

    typedef Pair struct 8 0:int32 4:int32
    typedef word prim 8
    alloc a 10 type=Pair align=16
    let p = ptr a + 4
    add q = p + 0x10        # or: add q = p - 4
    load q 4
    store q 4
    cast p int32
    free a                  # object id, or a variable
    expect oob              # binds to the statement just above

Integers are unsigned decimal or 0x-hex.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import TraceSyntaxError
from .typelayer import BUILTINS

OUTCOME_TOKENS = (
    "ok", "oob", "uaf", "double-free", "inframe-violation", "cast-error", "missing-metadata",
)

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT = re.compile(r"(0[xX][0-9a-fA-F]+|[0-9]+)\Z")


@dataclass
class Typedef:
    name: str
    size: int
    fields: tuple[tuple[int, str], ...] | None = None  # None for a primitive
    line: int = 0

    def text(self):
        if self.fields is None:
            return f"typedef {self.name} prim {self.size}"
        body = " ".join(f"{off}:{t}" for off, t in self.fields)
        return f"typedef {self.name} struct {self.size} {body}"


@dataclass
class Alloc:
    obj: str
    size: int
    type_name: str | None = None
    align: int | None = None
    line: int = 0

    def text(self):
        s = f"alloc {self.obj} {self.size}"
        if self.type_name:
            s += f" type={self.type_name}"
        if self.align is not None:
            s += f" align={self.align}"
        return s


@dataclass
class Let:
    var: str
    obj: str
    offset: int = 0
    line: int = 0

    def text(self):
        return f"let {self.var} = ptr {self.obj}" + (f" + {self.offset}" if self.offset else "")


@dataclass
class Add:
    dst: str
    src: str
    delta: int
    line: int = 0

    def text(self):
        sign = "-" if self.delta < 0 else "+"
        return f"add {self.dst} = {self.src} {sign} {abs(self.delta)}"


@dataclass
class Access:
    kind: str  # load | store
    var: str
    width: int
    line: int = 0

    def text(self):
        return f"{self.kind} {self.var} {self.width}"


@dataclass
class Cast:
    var: str
    type_name: str
    line: int = 0

    def text(self):
        return f"cast {self.var} {self.type_name}"


@dataclass
class Free:
    target: str
    through_var: bool
    line: int = 0

    def text(self):
        return f"free {self.target}"


@dataclass
class Expect:
    token: str
    target: int  # index of the statement it checks
    line: int = 0

    def text(self):
        return f"expect {self.token}"


CHECKABLE = (Let, Add, Access, Cast, Free)


@dataclass
class TraceProgram:
    statements: list = field(default_factory=list)

    def format(self) -> str:
        return "".join(s.text() + "\n" for s in self.statements)

    @property
    def expectations(self) -> dict[int, str]:
        return {s.target: s.token for s in self.statements if isinstance(s, Expect)}

    def __len__(self):
        return len(self.statements)


def parse_int(tok: str, line: int) -> int:
    if not _INT.match(tok):
        raise TraceSyntaxError(line, f"malformed integer {tok!r}")
    return int(tok, 0) if tok[:2].lower() == "0x" else int(tok, 10)


class _Parser:
    def __init__(self):
        self.types = {name for name, _ in BUILTINS}
        self.objects: set[str] = set()
        self.vars: set[str] = set()
        self.prog = TraceProgram()
        self.expected: set[int] = set()

    def name(self, tok, line, what="name"):
        if not _NAME.match(tok):
            raise TraceSyntaxError(line, f"bad {what} {tok!r}")
        return tok

    def var(self, tok, line):
        if tok not in self.vars:
            raise TraceSyntaxError(line, f"undefined variable {tok!r}")
        return tok

    def obj(self, tok, line):
        if tok not in self.objects:
            raise TraceSyntaxError(line, f"undefined object {tok!r}")
        return tok

    def type(self, tok, line):
        if tok not in self.types:
            raise TraceSyntaxError(line, f"undefined type {tok!r}")
        return tok

    def new_var(self, tok, line):
        self.name(tok, line, "variable")
        if tok in self.objects:
            raise TraceSyntaxError(line, f"{tok!r} already names an object")
        self.vars.add(tok)
        return tok

    def statement(self, toks: list[str], line: int):
        op, args = toks[0], toks[1:]
        handler = getattr(self, "st_" + op, None)
        if handler is None:
            raise TraceSyntaxError(line, f"unknown statement {op!r}")
        try:
            return handler(args, line)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, TraceSyntaxError):
                raise
            raise TraceSyntaxError(line, f"malformed {op} statement") from None

    def st_typedef(self, a, line):
        name = self.name(a[0], line, "type name")
        if name in self.types:
            raise TraceSyntaxError(line, f"type {name!r} already defined")
        kind, size = a[1], parse_int(a[2], line)
        if kind == "prim":
            if len(a) != 3:
                raise TraceSyntaxError(line, "prim typedef takes only a size")
            st = Typedef(name, size, None, line)
        elif kind == "struct":
            fields = []
            for f in a[3:]:
                off, _, tname = f.partition(":")
                fields.append((parse_int(off, line), self.type(tname, line)))
            if not fields:
                raise TraceSyntaxError(line, "struct typedef needs fields")
            st = Typedef(name, size, tuple(fields), line)
        else:
            raise TraceSyntaxError(line, f"unknown typedef kind {kind!r}")
        self.types.add(name)
        return st

    def st_alloc(self, a, line):
        obj = self.name(a[0], line, "object id")
        if obj in self.objects or obj in self.vars:
            raise TraceSyntaxError(line, f"{obj!r} already defined")
        st = Alloc(obj, parse_int(a[1], line), line=line)
        for opt in a[2:]:
            key, eq, val = opt.partition("=")
            if key == "type" and eq:
                st.type_name = self.type(val, line)
            elif key == "align" and eq:
                st.align = parse_int(val, line)
            else:
                raise TraceSyntaxError(line, f"unknown alloc option {opt!r}")
        self.objects.add(obj)
        return st

    def st_free(self, a, line):
        if len(a) != 1:
            raise TraceSyntaxError(line, "free takes one operand")
        if a[0] in self.vars:
            return Free(a[0], True, line)
        return Free(self.obj(a[0], line), False, line)

    def st_let(self, a, line):
        if a[1] != "=" or a[2] != "ptr" or len(a) not in (4, 6):
            raise TraceSyntaxError(line, "expected: let <var> = ptr <id> [+ <off>]")
        obj = self.obj(a[3], line)
        off = 0
        if len(a) == 6:
            if a[4] != "+":
                raise TraceSyntaxError(line, "expected '+' before offset")
            off = parse_int(a[5], line)
        return Let(self.new_var(a[0], line), obj, off, line)

    def st_add(self, a, line):
        if len(a) != 5 or a[1] != "=" or a[3] not in ("+", "-"):
            raise TraceSyntaxError(line, "expected: add <var2> = <var> +|- <delta>")
        src = self.var(a[2], line)
        delta = parse_int(a[4], line)
        return Add(self.new_var(a[0], line), src, -delta if a[3] == "-" else delta, line)

    def _access(self, kind, a, line):
        if len(a) != 2:
            raise TraceSyntaxError(line, f"expected: {kind} <var> <width>")
        return Access(kind, self.var(a[0], line), parse_int(a[1], line), line)

    def st_load(self, a, line):
        return self._access("load", a, line)

    def st_store(self, a, line):
        return self._access("store", a, line)

    def st_cast(self, a, line):
        if len(a) != 2:
            raise TraceSyntaxError(line, "expected: cast <var> <type>")
        return Cast(self.var(a[0], line), self.type(a[1], line), line)

    def st_expect(self, a, line):
        if len(a) != 1 or a[0] not in OUTCOME_TOKENS:
            raise TraceSyntaxError(line, f"expect needs one of {', '.join(OUTCOME_TOKENS)}")
        stmts = self.prog.statements
        target = next((i for i in range(len(stmts) - 1, -1, -1)
                       if not isinstance(stmts[i], Expect)), None)
        if target is None or not isinstance(stmts[target], CHECKABLE):
            raise TraceSyntaxError(line, "expect must follow a checkable statement")
        if target in self.expected:
            raise TraceSyntaxError(line, "statement already has an expectation")
        self.expected.add(target)
        return Expect(a[0], target, line)


def parse(text: str) -> TraceProgram:
    p = _Parser()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if toks:
            p.prog.statements.append(p.statement(toks, lineno))
    return p.prog

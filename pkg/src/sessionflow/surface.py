"""Concrete syntax: lexer, recursive-descent parser and printer.

Grammar summary::

    lattice { L < H; M < H }
    type Cmd = +{ act: end!, wait: end! }
    proc Gov (a : &{ ok: end? } [L], b : Cmd [H]) @ L =
        a?(z){ ok: wait z; 0 }

Processes: ``0``, ``P | Q``, ``new (x : A [c]) y . P``, ``close x``,
``wait x; P``, ``x!l(b)``, ``x?(z){ l: P, ... }``, ``send x(a,b)``,
``recv x(y,z); P``, ``hole``, and references to earlier declarations,
optionally with positional renaming ``Name(u, v)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .lattice import LatticeError, SecrecyLattice
from .session_types import Bot, One, ParT, Plus, SessionType, Tensor, TypingContext, With
from .syntax import (
    Branch,
    Close,
    Hole,
    Inaction,
    Par,
    Process,
    Recv,
    Res,
    Select,
    Send,
    Span,
    Wait,
    count_holes,
    rename,
)

KEYWORDS = {"new", "close", "wait", "send", "recv", "hole", "lattice", "type", "proc", "end"}


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    span: Span

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.format() for d in self.diagnostics))


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    interface: TypingContext
    running: str
    body: Process
    params: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.params:
            object.__setattr__(self, "params", tuple(self.interface))

    @property
    def is_context(self) -> bool:
        return count_holes(self.body) > 0


@dataclass(frozen=True)
class SourceFile:
    lattice: SecrecyLattice
    type_aliases: Tuple[Tuple[str, SessionType], ...] = ()
    decls: Tuple[ProcessDecl, ...] = ()

    def decl(self, name: str) -> ProcessDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(f"no declaration named {name}")

    @property
    def names(self):
        return [d.name for d in self.decls]


# --------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, sym, zero, end, eof
    text: str
    span: Span


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<end>end[!?])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<zero>0)
  | (?P<sym>[(){}\[\]:,;.|!?+&*@<=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> List[Token]:
    toks: List[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            ch = text[pos]
            raise ParseError([Diagnostic("error", f"unexpected character {ch!r}", Span(line, col, line, col + 1))])
        s = m.group()
        kind = m.lastgroup
        end_line, end_col = line, col
        for ch in s:
            if ch == "\n":
                end_line, end_col = end_line + 1, 1
            else:
                end_col += 1
        if kind not in ("ws", "comment"):
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, s, Span(line, col, end_line, end_col)))
        pos = m.end()
        line, col = end_line, end_col
    toks.append(Token("eof", "", Span(line, col, line, col)))
    return toks


# --------------------------------------------------------------------------
# parser


class _Fail(Exception):
    pass


class _Parser:
    def __init__(self, text: str, allow_hole: bool = True):
        self.toks = tokenize(text)
        self.i = 0
        self.diags: List[Diagnostic] = []
        self.aliases: Dict[str, SessionType] = {}
        self.decls: Dict[str, ProcessDecl] = {}
        self.level_uses: List[Tuple[str, Span]] = []
        self.allow_hole = allow_hole

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "kw", "zero")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def describe(self, t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, msg: str, span: Optional[Span] = None):
        self.diags.append(Diagnostic("error", msg, span or self.tok.span))
        raise _Fail()

    def ident(self, what="a name") -> Token:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected {what}, found {self.describe(t)}")
        return self.advance()

    def label(self) -> Token:
        t = self.tok
        if t.kind not in ("ident", "kw"):
            self.fail(f"expected a label, found {self.describe(t)}")
        return self.advance()

    def span_from(self, start: Token) -> Span:
        last = self.toks[self.i - 1] if self.i > 0 else start
        return Span(start.span.line, start.span.col, last.span.end_line, last.span.end_col)

    def level(self) -> str:
        t = self.ident("a secrecy level")
        self.level_uses.append((t.text, t.span))
        return t.text

    # types
    def type_(self) -> SessionType:
        left = self.tensor()
        if self.at("@"):
            self.advance()
            return ParT(left, self.type_())
        return left

    def tensor(self) -> SessionType:
        left = self.type_atom()
        if self.at("*"):
            self.advance()
            return Tensor(left, self.tensor())
        return left

    def type_atom(self) -> SessionType:
        t = self.tok
        if t.kind == "end":
            self.advance()
            return One() if t.text == "end!" else Bot()
        if self.at("+") or self.at("&"):
            self.advance()
            arms = self.type_arms()
            return Plus(arms) if t.text == "+" else With(arms)
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        if t.kind == "ident":
            self.advance()
            if t.text not in self.aliases:
                self.fail(f"unknown type {t.text}", t.span)
            return self.aliases[t.text]
        self.fail(f"expected a session type, found {self.describe(t)}")

    def type_arms(self):
        self.expect("{")
        arms, seen = [], set()
        while True:
            lt = self.label()
            if lt.text in seen:
                self.diags.append(Diagnostic("error", f"duplicate label {lt.text}", lt.span))
            seen.add(lt.text)
            self.expect(":")
            arms.append((lt.text, self.type_()))
            if self.at(","):
                self.advance()
                if self.at("}"):
                    break
                continue
            break
        self.expect("}")
        dedup = dict(arms)
        return tuple(dedup.items())

    # processes
    def par(self) -> Process:
        start = self.tok
        left = self.prefix()
        if self.at("|"):
            self.advance()
            right = self.par()
            return Par(left, right, span=self.span_from(start))
        return left

    def prefix(self) -> Process:
        t = self.tok
        if t.kind == "zero":
            self.advance()
            return Inaction(span=t.span)
        if self.at("("):
            self.advance()
            p = self.par()
            self.expect(")")
            return p
        if t.kind == "kw":
            return getattr(self, "kw_" + t.text, self.unexpected)()
        if t.kind == "ident":
            return self.after_name()
        self.unexpected()

    def unexpected(self):
        self.fail(f"expected a process, found {self.describe(self.tok)}")

    def kw_hole(self):
        t = self.advance()
        if not self.allow_hole:
            self.fail("a hole is not allowed here", t.span)
        return Hole(span=t.span)

    def kw_close(self):
        start = self.advance()
        x = self.ident().text
        return Close(x, span=self.span_from(start))

    def kw_wait(self):
        start = self.advance()
        x = self.ident().text
        self.expect(";")
        cont = self.prefix()
        return Wait(x, cont, span=self.span_from(start))

    def kw_send(self):
        start = self.advance()
        x = self.ident().text
        self.expect("(")
        a = self.ident().text
        self.expect(",")
        b = self.ident().text
        self.expect(")")
        sp = self.span_from(start)
        if len({x, a, b}) != 3:
            self.fail("send names must be pairwise distinct", sp)
        return Send(x, a, b, span=sp)

    def kw_recv(self):
        start = self.advance()
        x = self.ident().text
        self.expect("(")
        y = self.ident().text
        self.expect(",")
        z = self.ident().text
        self.expect(")")
        self.expect(";")
        if y == z:
            self.fail("receive binders must differ", self.span_from(start))
        cont = self.prefix()
        return Recv(x, y, z, cont, span=self.span_from(start))

    def kw_new(self):
        start = self.advance()
        self.expect("(")
        x = self.ident().text
        ty = level = None
        if self.at(":"):
            self.advance()
            ty = self.type_()
            self.expect("[")
            level = self.level()
            self.expect("]")
        self.expect(")")
        y = self.ident().text
        if x == y:
            self.fail("restriction endpoints must differ", self.span_from(start))
        self.expect(".")
        body = self.prefix()
        return Res(x, y, body, ty, level, span=self.span_from(start))

    def after_name(self):
        start = self.advance()
        x = start.text
        if self.at("!"):
            self.advance()
            lab = self.label().text
            self.expect("(")
            b = self.ident().text
            self.expect(")")
            return Select(x, b, lab, span=self.span_from(start))
        if self.at("?"):
            self.advance()
            self.expect("(")
            z = self.ident().text
            self.expect(")")
            self.expect("{")
            arms, seen = [], set()
            while True:
                lt = self.label()
                if lt.text in seen:
                    self.diags.append(Diagnostic("error", f"duplicate branch label {lt.text}", lt.span))
                seen.add(lt.text)
                self.expect(":")
                arms.append((lt.text, self.par()))
                if self.at(","):
                    self.advance()
                    if self.at("}"):
                        break
                    continue
                break
            self.expect("}")
            return Branch(x, z, tuple(dict(arms).items()), span=self.span_from(start))
        # reference to an earlier declaration
        if x not in self.decls:
            self.fail(f"unknown process {x}", start.span)
        decl = self.decls[x]
        if self.at("("):
            self.advance()
            args = []
            if not self.at(")"):
                args.append(self.ident().text)
                while self.at(","):
                    self.advance()
                    args.append(self.ident().text)
            self.expect(")")
            params = list(decl.params)
            if len(args) != len(params):
                self.fail(f"{x} takes {len(params)} names, got {len(args)}", self.span_from(start))
            return rename(decl.body, dict(zip(params, args)))
        return decl.body

    # top level
    def lattice_decl(self):
        start = self.advance()
        self.expect("{")
        edges, levels = [], []
        while not self.at("}"):
            chain = [self.ident("a secrecy level").text]
            while self.at("<"):
                self.advance()
                chain.append(self.ident("a secrecy level").text)
            levels.extend(chain)
            edges.extend(zip(chain, chain[1:]))
            if self.at(";"):
                self.advance()
            elif not self.at("}"):
                self.fail(f"expected ';' or '}}', found {self.describe(self.tok)}")
        self.expect("}")
        try:
            return SecrecyLattice(edges, levels), self.span_from(start)
        except LatticeError as exc:
            self.fail(f"invalid lattice: {exc}", self.span_from(start))

    def type_decl(self):
        self.advance()
        name = self.ident("a type name")
        self.expect("=")
        ty = self.type_()
        if name.text in self.aliases:
            self.diags.append(Diagnostic("error", f"type {name.text} declared twice", name.span))
        self.aliases[name.text] = ty
        return name.text, ty

    def proc_decl(self):
        self.advance()
        name = self.ident("a process name")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pn = self.ident()
                self.expect(":")
                ty = self.type_()
                self.expect("[")
                lv = self.level()
                self.expect("]")
                if any(p[0] == pn.text for p in params):
                    self.diags.append(Diagnostic("error", f"parameter {pn.text} declared twice", pn.span))
                else:
                    params.append((pn.text, (ty, lv)))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        self.expect("@")
        running = self.level()
        self.expect("=")
        body = self.par()
        if count_holes(body) > 1:
            self.diags.append(Diagnostic("error", f"{name.text} contains more than one hole", name.span))
        if name.text in self.decls:
            self.diags.append(Diagnostic("error", f"process {name.text} declared twice", name.span))
        decl = ProcessDecl(name.text, TypingContext(params), running, body, tuple(n for n, _ in params))
        self.decls[name.text] = decl
        return decl

    def source(self) -> SourceFile:
        lattice = None
        aliases, decls = [], []
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("lattice"):
                lat, sp = self.lattice_decl()
                if lattice is not None:
                    self.diags.append(Diagnostic("error", "only one lattice declaration is allowed", sp))
                lattice = lat
            elif self.at("type"):
                aliases.append(self.type_decl())
            elif self.at("proc"):
                decls.append(self.proc_decl())
            else:
                self.fail(f"expected 'lattice', 'type' or 'proc', found {self.describe(t)}")
        if lattice is None:
            self.fail("missing lattice declaration", Span(1, 1, 1, 1))
        for lv, sp in self.level_uses:
            if lv not in lattice.levels:
                self.diags.append(Diagnostic("error", f"unbound secrecy level {lv}", sp))
        return SourceFile(lattice, tuple(aliases), tuple(decls))


def _run(text, fn, allow_hole=True, decls=None, aliases=None, lattice=None):
    p = _Parser(text, allow_hole=allow_hole)
    if decls:
        p.decls.update(decls)
    if aliases:
        p.aliases.update(aliases)
    try:
        out = fn(p)
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.describe(p.tok)} after end of term")
    except _Fail:
        pass
    if lattice is not None:
        for lv, sp in p.level_uses:
            if lv not in lattice.levels:
                p.diags.append(Diagnostic("error", f"unbound secrecy level {lv}", sp))
    if p.diags:
        raise ParseError(p.diags)
    return out


def parse(text: str) -> SourceFile:
    """Parse a whole ``.sp`` file; raises :class:`ParseError` on failure."""
    return _run(text, _Parser.source)


def parse_process(text: str, lattice: SecrecyLattice = None, decls=None, aliases=None,
                  allow_hole: bool = True) -> Process:
    return _run(text, _Parser.par, allow_hole=allow_hole, decls=decls, aliases=aliases, lattice=lattice)


def parse_type(text: str, aliases=None) -> SessionType:
    return _run(text, _Parser.type_, aliases=aliases)


def parse_file(path) -> SourceFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# --------------------------------------------------------------------------
# printer


def print_type(t: SessionType, prec: int = 0) -> str:
    if isinstance(t, One):
        return "end!"
    if isinstance(t, Bot):
        return "end?"
    if isinstance(t, (Plus, With)):
        sign = "+" if isinstance(t, Plus) else "&"
        return sign + "{ " + ", ".join(f"{lab}: {print_type(a)}" for lab, a in t.arms) + " }"
    if isinstance(t, Tensor):
        s = f"{print_type(t.payload, 2)} * {print_type(t.cont, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(t, ParT):
        s = f"{print_type(t.payload, 1)} @ {print_type(t.cont, 0)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a session type: {t!r}")


def print_process(p: Process, tight: bool = False) -> str:
    if isinstance(p, Inaction):
        return "0"
    if isinstance(p, Hole):
        return "hole"
    if isinstance(p, Par):
        s = f"{print_process(p.left, True)} | {print_process(p.right, False)}"
        return f"({s})" if tight else s
    if isinstance(p, Res):
        ann = f" : {print_type(p.type)} [{p.level}]" if p.type is not None else ""
        return f"new ({p.x}{ann}) {p.y} . {print_process(p.body, True)}"
    if isinstance(p, Close):
        return f"close {p.x}"
    if isinstance(p, Wait):
        return f"wait {p.x}; {print_process(p.cont, True)}"
    if isinstance(p, Select):
        return f"{p.x}!{p.label}({p.b})"
    if isinstance(p, Branch):
        arms = ", ".join(f"{lab}: {print_process(a)}" for lab, a in p.arms)
        return f"{p.x}?({p.z}){{ {arms} }}"
    if isinstance(p, Send):
        return f"send {p.x}({p.a},{p.b})"
    if isinstance(p, Recv):
        return f"recv {p.x}({p.y},{p.z}); {print_process(p.cont, True)}"
    raise TypeError(f"not a process: {p!r}")


def print_lattice(lat: SecrecyLattice) -> str:
    edges = lat.covering_edges()
    touched = {c for e in edges for c in e}
    parts = [f"{a} < {b}" for a, b in edges] + sorted(lat.levels - touched)
    return "lattice { " + "; ".join(parts) + " }"


def print_context_entries(gamma: TypingContext) -> str:
    return ", ".join(f"{n} : {print_type(e.type)} [{e.level}]" for n, e in gamma.items())


def print_source(f: SourceFile) -> str:
    lines = [print_lattice(f.lattice), ""]
    for name, ty in f.type_aliases:
        lines.append(f"type {name} = {print_type(ty)}")
    if f.type_aliases:
        lines.append("")
    for d in f.decls:
        header = ", ".join(
            f"{n} : {print_type(d.interface[n].type)} [{d.interface[n].level}]" for n in d.params
        )
        lines.append(f"proc {d.name} ({header}) @ {d.running} =")
        lines.append(f"  {print_process(d.body)}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def pretty(obj) -> str:
    """Print a source file, process or session type."""
    if isinstance(obj, SourceFile):
        return print_source(obj)
    if isinstance(obj, Process):
        return print_process(obj)
    if isinstance(obj, SessionType):
        return print_type(obj)
    if isinstance(obj, SecrecyLattice):
        return print_lattice(obj)
    raise TypeError(f"cannot print {type(obj).__name__}")

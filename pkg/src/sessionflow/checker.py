"""Syntax-directed checking of the information-flow typing rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .lattice import SecrecyLattice, UnknownLevel
from .session_types import (
    Bot,
    One,
    ParT,
    Plus,
    SessionType,
    Tensor,
    TypingContext,
    With,
    dual,
    is_output_type,
)
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
    all_names,
    fresh_name,
    free_names,
    par_all,
    rename,
)

UNBOUND = "unbound name"
LINEARITY = "linearity violation"
MISMATCH = "type mismatch"
SECRECY = "secrecy violation"
LABEL = "label mismatch"
DUALITY = "dual mismatch"


@dataclass(frozen=True)
class Judgment:
    lattice: SecrecyLattice
    process: Process
    running: str
    context: TypingContext


@dataclass(frozen=True)
class TypeIssue:
    kind: str
    rule: str
    message: str
    term: Process = field(compare=False)

    @property
    def span(self) -> Optional[Span]:
        return self.term.span

    def __str__(self):
        where = f" at {self.span}" if self.span else ""
        return f"{self.kind} ({self.rule}){where}: {self.message}"


class IllTyped(Exception):
    """Raised by :func:`check`; ``issues`` lists every failure found."""

    def __init__(self, issues: List[TypeIssue]):
        self.issues = list(issues)
        super().__init__(str(self.issues[0]) if self.issues else "ill-typed")

    @property
    def first(self) -> TypeIssue:
        return self.issues[0]

    @property
    def kinds(self):
        return {i.kind for i in self.issues}

    @property
    def rules(self):
        return {i.rule for i in self.issues}


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Judgment
    premises: Tuple["Derivation", ...] = ()
    side_conditions: Tuple[str, ...] = ()

    def walk(self):
        yield self
        for p in self.premises:
            yield from p.walk()

    def all_side_conditions(self):
        return [c for node in self.walk() for c in node.side_conditions]

    def trace_lines(self, depth: int = 0) -> List[str]:
        j = self.conclusion
        ctx = ", ".join(f"{n}:{e.type}[{e.level}]" for n, e in j.context.items())
        head = f"{'  ' * depth}{self.rule} @ {j.running} :: {ctx or '.'}"
        if self.side_conditions:
            head += "   [" + "; ".join(self.side_conditions) + "]"
        lines = [head]
        for p in self.premises:
            lines.extend(p.trace_lines(depth + 1))
        return lines


class _Checker:
    def __init__(self, lattice: SecrecyLattice, ifc: bool = True):
        self.lat = lattice
        self.ifc = ifc

    def run(self, p: Process, d: str, gamma: TypingContext):
        """Return ``(derivation or None, issues)``."""
        meth = getattr(self, "_" + type(p).__name__.lower(), None)
        if meth is None:
            return None, [TypeIssue(MISMATCH, "typ-inact", f"{type(p).__name__} is not a process", p)]
        return meth(p, d, gamma)

    # helpers
    def _leq(self, d, c, rule, p, issues, conds, what="running secrecy"):
        ok = self.lat.leq(d, c)
        conds.append(f"{d} <= {c}" if ok else f"{d} </= {c}")
        if not ok and self.ifc:
            issues.append(
                TypeIssue(SECRECY, rule, f"{what} {d} is not below channel level {c} (needs {d} <= {c})", p)
            )
        return ok

    def _lookup(self, name, gamma, rule, p, issues, kind_cls, want):
        if name not in gamma:
            issues.append(TypeIssue(UNBOUND, rule, f"name {name} is not in the typing context", p))
            return None
        e = gamma[name]
        if kind_cls is not None and not isinstance(e.type, kind_cls):
            issues.append(TypeIssue(MISMATCH, rule, f"{name} has type {e.type}, expected {want}", p))
            return None
        return e

    def _leftovers(self, gamma, used, rule, p, issues):
        extra = sorted(set(gamma) - set(used))
        if extra:
            issues.append(TypeIssue(LINEARITY, rule, f"names left unused: {', '.join(extra)}", p))

    def _j(self, p, d, gamma):
        return Judgment(self.lat, p, d, gamma)

    # rules
    def _inaction(self, p, d, gamma):
        issues = []
        self._leftovers(gamma, (), "typ-inact", p, issues)
        return (None if issues else Derivation("typ-inact", self._j(p, d, gamma))), issues

    def _hole(self, p, d, gamma):
        return None, [TypeIssue(MISMATCH, "typ-inact", "a hole cannot be typed", p)]

    def _par(self, p, d, gamma):
        issues = []
        fl, fr = free_names(p.left), free_names(p.right)
        for n in sorted(fl & fr):
            issues.append(TypeIssue(LINEARITY, "typ-par", f"name {n} used on both sides of a parallel", p))
        unused = sorted(set(gamma) - fl - fr)
        if unused:
            issues.append(TypeIssue(LINEARITY, "typ-par", f"names left unused: {', '.join(unused)}", p))
        gl = gamma.restrict(fl)
        gr = gamma.restrict(fr - fl)
        dl, il = self.run(p.left, d, gl)
        dr, ir = self.run(p.right, d, gr)
        issues = il + ir + issues
        if issues:
            return None, issues
        return Derivation("typ-par", self._j(p, d, gamma), (dl, dr), (f"{d} <= {d} meet {d}",)), []

    def _res(self, p, d, gamma):
        if p.type is None or p.level is None:
            return None, [TypeIssue(MISMATCH, "typ-res", f"restriction on {p.x},{p.y} has no type annotation", p)]
        if p.level not in self.lat.levels:
            raise UnknownLevel(p.level)
        x, y, body = p.x, p.y, p.body
        if x in gamma or y in gamma:
            avoid = set(gamma) | all_names(body)
            nx, ny = fresh_name(x, avoid), None
            avoid.add(nx)
            ny = fresh_name(y, avoid)
            body = rename(body, {x: nx, y: ny})
            x, y = nx, ny
        inner = gamma.extend((x, p.type, p.level), (y, dual(p.type), p.level))
        sub, issues = self.run(body, d, inner)
        if issues:
            return None, issues
        return Derivation("typ-res", self._j(p, d, gamma), (sub,)), []

    def _close(self, p, d, gamma):
        issues, conds = [], []
        e = self._lookup(p.x, gamma, "typ-close", p, issues, One, "end!")
        self._leftovers(gamma, {p.x}, "typ-close", p, issues)
        if e is not None:
            self._leq(d, e.level, "typ-close", p, issues, conds)
        if issues:
            return None, issues
        return Derivation("typ-close", self._j(p, d, gamma), (), tuple(conds)), []

    def _wait(self, p, d, gamma):
        issues = []
        e = self._lookup(p.x, gamma, "typ-wait", p, issues, Bot, "end?")
        if e is None:
            return None, issues
        d2 = self.lat.join(d, e.level)
        sub, issues = self.run(p.cont, d2, gamma.without(p.x))
        if issues:
            return None, issues
        cond = f"{d2} = {d} join {e.level}"
        return Derivation("typ-wait", self._j(p, d, gamma), (sub,), (cond,)), []

    def _select(self, p, d, gamma):
        issues, conds = [], []
        rule = "typ-sel"
        if p.x == p.b:
            issues.append(TypeIssue(LINEARITY, rule, f"name {p.x} selects on itself", p))
            return None, issues
        e = self._lookup(p.x, gamma, rule, p, issues, Plus, "a +{...} type")
        self._leftovers(gamma, {p.x, p.b}, rule, p, issues)
        if e is not None:
            arms = e.type.arm_map
            if p.label not in arms:
                issues.append(TypeIssue(LABEL, rule, f"label {p.label} not among {sorted(arms)}", p))
            else:
                eb = self._lookup(p.b, gamma, rule, p, issues, None, None)
                want = dual(arms[p.label])
                if eb is not None:
                    if eb.type != want:
                        issues.append(
                            TypeIssue(DUALITY, rule, f"continuation {p.b} has type {eb.type}, expected {want}", p)
                        )
                    if eb.level != e.level and self.ifc:
                        issues.append(
                            TypeIssue(SECRECY, rule, f"continuation {p.b} at {eb.level}, channel at {e.level}", p)
                        )
            self._leq(d, e.level, rule, p, issues, conds)
        if issues:
            return None, issues
        return Derivation(rule, self._j(p, d, gamma), (), tuple(conds)), []

    def _branch(self, p, d, gamma):
        issues = []
        rule = "typ-bra"
        e = self._lookup(p.x, gamma, rule, p, issues, With, "a &{...} type")
        if e is None:
            return None, issues
        tarms = e.type.arm_map
        parms = p.arm_map
        if set(tarms) != set(parms):
            issues.append(TypeIssue(LABEL, rule, f"branch labels {sorted(parms)} differ from type labels {sorted(tarms)}", p))
            return None, issues
        d2 = self.lat.join(d, e.level)
        rest = gamma.without(p.x)
        subs = []
        for lab, arm in p.arms:
            z = p.z
            if z in rest:
                z = fresh_name(z, set(rest) | all_names(arm))
                arm = rename(arm, {p.z: z})
            sub, errs = self.run(arm, d2, rest.extend((z, tarms[lab], e.level)))
            issues.extend(errs)
            subs.append(sub)
        if issues:
            return None, issues
        cond = f"{d2} = {d} join {e.level}"
        return Derivation(rule, self._j(p, d, gamma), tuple(subs), (cond,)), []

    def _send(self, p, d, gamma):
        issues, conds = [], []
        rule = "typ-send"
        e = self._lookup(p.x, gamma, rule, p, issues, Tensor, "a * type")
        self._leftovers(gamma, {p.x, p.a, p.b}, rule, p, issues)
        if e is not None:
            for name, want in ((p.a, dual(e.type.payload)), (p.b, dual(e.type.cont))):
                en = self._lookup(name, gamma, rule, p, issues, None, None)
                if en is None:
                    continue
                if en.type != want:
                    issues.append(TypeIssue(DUALITY, rule, f"{name} has type {en.type}, expected {want}", p))
                if en.level != e.level and self.ifc:
                    issues.append(TypeIssue(SECRECY, rule, f"{name} at {en.level}, channel at {e.level}", p))
            self._leq(d, e.level, rule, p, issues, conds)
        if issues:
            return None, issues
        return Derivation(rule, self._j(p, d, gamma), (), tuple(conds)), []

    def _recv(self, p, d, gamma):
        issues = []
        rule = "typ-recv"
        e = self._lookup(p.x, gamma, rule, p, issues, ParT, "a @ type")
        if e is None:
            return None, issues
        rest = gamma.without(p.x)
        y, z, cont = p.y, p.z, p.cont
        if y in rest or z in rest:
            avoid = set(rest) | all_names(cont) | {y, z}
            ny = fresh_name(y, avoid)
            avoid.add(ny)
            nz = fresh_name(z, avoid)
            cont = rename(cont, {y: ny, z: nz})
            y, z = ny, nz
        d2 = self.lat.join(d, e.level)
        sub, issues = self.run(cont, d2, rest.extend((y, e.type.payload, e.level), (z, e.type.cont, e.level)))
        if issues:
            return None, issues
        cond = f"{d2} = {d} join {e.level}"
        return Derivation(rule, self._j(p, d, gamma), (sub,), (cond,)), []


def check(lattice: SecrecyLattice, p: Process, d: str, gamma: TypingContext = TypingContext(),
          ifc: bool = True) -> Derivation:
    """Derive ``lattice |- p @ d :: gamma`` or raise :class:`IllTyped`.

    With ``ifc=False`` only the session-typing part is enforced: secrecy
    side conditions are still recorded in the derivation but never fail.
    """
    if d not in lattice.levels:
        raise UnknownLevel(d)
    for e in gamma.values():
        if e.level not in lattice.levels:
            raise UnknownLevel(e.level)
    deriv, issues = _Checker(lattice, ifc).run(p, d, gamma)
    if issues:
        raise IllTyped(issues)
    return deriv


def check_closed(lattice: SecrecyLattice, p: Process, d: str, ifc: bool = True) -> Derivation:
    return check(lattice, p, d, TypingContext(), ifc)


def typechecks(lattice: SecrecyLattice, p: Process, d: str, gamma: TypingContext = TypingContext()) -> bool:
    try:
        check(lattice, p, d, gamma)
    except IllTyped:
        return False
    return True


def expand_forwarder(x: str, y: str, a: SessionType, c: str) -> Process:
    """An identity process relaying between ``x : a`` and ``y : dual(a)``."""
    used = {x, y}

    def fresh(stem):
        n = fresh_name(stem, used)
        used.add(n)
        return n

    def go(x, y, a):
        if not is_output_type(a):
            return go(y, x, dual(a))
        if isinstance(a, One):
            return Wait(y, Close(x))
        if isinstance(a, Tensor):
            v, y1 = fresh("v"), fresh(y)
            u, w = fresh("u"), fresh("w")
            z, x1 = fresh("z"), fresh(x)
            body = par_all([Send(x, u, z), go(v, w, dual(a.payload)), go(x1, y1, a.cont)])
            inner = Res(z, x1, body, dual(a.cont), c)
            return Recv(y, v, y1, Res(u, w, inner, dual(a.payload), c))
        if isinstance(a, Plus):
            y1 = fresh(y)
            arms = []
            for lab, ai in a.arms:
                z, x1 = fresh("z"), fresh(x)
                arms.append((lab, Res(z, x1, Par(Select(x, z, lab), go(x1, y1, ai)), dual(ai), c)))
            return Branch(y, y1, tuple(arms))
        raise TypeError(f"not a session type: {a!r}")

    return go(x, y, a)


def forwarder_context(x: str, y: str, a: SessionType, c: str) -> TypingContext:
    return TypingContext({x: (a, c), y: (dual(a), c)})


__all__ = [
    "Derivation",
    "IllTyped",
    "Judgment",
    "TypeIssue",
    "check",
    "check_closed",
    "expand_forwarder",
    "forwarder_context",
    "typechecks",
]

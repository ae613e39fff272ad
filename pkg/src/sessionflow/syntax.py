"""Process terms, binding structure and the syntactic name-set functions."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Optional, Tuple

if TYPE_CHECKING:  # pragma: no cover
    from .session_types import SessionType

Name = str
Label = str


@dataclass(frozen=True)
class Span:
    """A region of source text, 1-based lines and columns."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}-{self.end_line}:{self.end_col}"


@dataclass(frozen=True)
class Process:
    # Source location of the term, when it came out of the parser.  Never
    # part of equality or hashing.
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)

    def __str__(self) -> str:
        from .surface import print_process

        return print_process(self)


@dataclass(frozen=True)
class Inaction(Process):
    pass


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Res(Process):
    """``new (x : type [level]) y . body``; the annotation types ``x``."""

    x: Name
    y: Name
    body: Process
    type: Optional["SessionType"] = field(default=None, compare=False)
    level: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.x == self.y:
            raise ValueError(f"restriction endpoints must differ, got {self.x} twice")


@dataclass(frozen=True)
class Close(Process):
    x: Name


@dataclass(frozen=True)
class Wait(Process):
    x: Name
    cont: Process


@dataclass(frozen=True)
class Select(Process):
    x: Name
    b: Name
    label: Label


@dataclass(frozen=True)
class Branch(Process):
    x: Name
    z: Name
    arms: Tuple[Tuple[Label, Process], ...]

    def __post_init__(self):
        arms = self.arms
        if isinstance(arms, Mapping):
            arms = tuple(arms.items())
        arms = tuple(sorted(arms, key=lambda kv: kv[0]))
        if not arms:
            raise ValueError("a branch needs at least one arm")
        labels = [lab for lab, _ in arms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate branch label in {labels}")
        object.__setattr__(self, "arms", arms)

    @property
    def arm_map(self) -> dict:
        return dict(self.arms)


@dataclass(frozen=True)
class Send(Process):
    x: Name
    a: Name
    b: Name

    def __post_init__(self):
        if len({self.x, self.a, self.b}) != 3:
            raise ValueError(f"send names must be pairwise distinct: {self.x}, {self.a}, {self.b}")


@dataclass(frozen=True)
class Recv(Process):
    x: Name
    y: Name
    z: Name
    cont: Process

    def __post_init__(self):
        if self.y == self.z:
            raise ValueError(f"receive binders must differ, got {self.y} twice")


@dataclass(frozen=True)
class Hole(Process):
    """The hole of an evaluation context."""


OUTPUTS = (Close, Select, Send)
INPUTS = (Wait, Branch, Recv)


def is_output(p: Process) -> bool:
    return isinstance(p, OUTPUTS)


def is_input(p: Process) -> bool:
    return isinstance(p, INPUTS)


def subject(p: Process) -> Optional[Name]:
    """Channel of the foremost prefix, or None for non-prefix terms."""
    if isinstance(p, OUTPUTS + INPUTS):
        return p.x
    return None


def par_all(procs: Iterable[Process]) -> Process:
    """Right-nested parallel composition; the empty composition is 0."""
    procs = list(procs)
    if not procs:
        return Inaction()
    out = procs[-1]
    for p in reversed(procs[:-1]):
        out = Par(p, out)
    return out


def parallel_components(p: Process) -> Iterator[Process]:
    if isinstance(p, Par):
        yield from parallel_components(p.left)
        yield from parallel_components(p.right)
    else:
        yield p


# --------------------------------------------------------------------------
# name sets


@lru_cache(maxsize=200_000)
def free_names(p: Process) -> frozenset:
    if isinstance(p, (Inaction, Hole)):
        return frozenset()
    if isinstance(p, Par):
        return free_names(p.left) | free_names(p.right)
    if isinstance(p, Res):
        return free_names(p.body) - {p.x, p.y}
    if isinstance(p, Close):
        return frozenset({p.x})
    if isinstance(p, Wait):
        return free_names(p.cont) | {p.x}
    if isinstance(p, Select):
        return frozenset({p.x, p.b})
    if isinstance(p, Branch):
        inner = frozenset().union(*(free_names(q) for _, q in p.arms)) - {p.z}
        return inner | {p.x}
    if isinstance(p, Send):
        return frozenset({p.x, p.a, p.b})
    if isinstance(p, Recv):
        return (free_names(p.cont) - {p.y, p.z}) | {p.x}
    raise TypeError(f"not a process: {p!r}")


def all_names(p: Process) -> frozenset:
    """Every name occurring in ``p``, bound or free."""
    if isinstance(p, (Inaction, Hole)):
        return frozenset()
    if isinstance(p, Par):
        return all_names(p.left) | all_names(p.right)
    if isinstance(p, Res):
        return all_names(p.body) | {p.x, p.y}
    if isinstance(p, Close):
        return frozenset({p.x})
    if isinstance(p, Wait):
        return all_names(p.cont) | {p.x}
    if isinstance(p, Select):
        return frozenset({p.x, p.b})
    if isinstance(p, Branch):
        return frozenset().union(*(all_names(q) for _, q in p.arms)) | {p.x, p.z}
    if isinstance(p, Send):
        return frozenset({p.x, p.a, p.b})
    if isinstance(p, Recv):
        return all_names(p.cont) | {p.x, p.y, p.z}
    raise TypeError(f"not a process: {p!r}")


def free_communication_names(p: Process) -> frozenset:
    """Free names used as subjects somewhere along the unblocked spine."""
    if isinstance(p, (Inaction, Hole)):
        return frozenset()
    if isinstance(p, Par):
        return free_communication_names(p.left) | free_communication_names(p.right)
    if isinstance(p, Res):
        return free_communication_names(p.body) - {p.x, p.y}
    if isinstance(p, (Close, Select, Send)):
        return frozenset({p.x})
    if isinstance(p, Wait):
        return free_communication_names(p.cont) | {p.x}
    if isinstance(p, Branch):
        inner = frozenset().union(*(free_communication_names(q) for _, q in p.arms))
        return (inner - {p.z}) | {p.x}
    if isinstance(p, Recv):
        return (free_communication_names(p.cont) - {p.y, p.z}) | {p.x}
    raise TypeError(f"not a process: {p!r}")


def active_output_names(p: Process) -> frozenset:
    """Subjects of outputs not guarded by any input."""
    if isinstance(p, Par):
        return active_output_names(p.left) | active_output_names(p.right)
    if isinstance(p, Res):
        return active_output_names(p.body) - {p.x, p.y}
    if isinstance(p, OUTPUTS):
        return frozenset({p.x})
    return frozenset()


fn = free_names
fcn = free_communication_names
aon = active_output_names


def prefix_count(p: Process) -> int:
    if isinstance(p, (Inaction, Hole)):
        return 0
    if isinstance(p, Par):
        return prefix_count(p.left) + prefix_count(p.right)
    if isinstance(p, Res):
        return prefix_count(p.body)
    if isinstance(p, OUTPUTS):
        return 1
    if isinstance(p, (Wait, Recv)):
        return 1 + prefix_count(p.cont)
    if isinstance(p, Branch):
        return 1 + sum(prefix_count(q) for _, q in p.arms)
    raise TypeError(f"not a process: {p!r}")


def count_holes(p: Process) -> int:
    if isinstance(p, Hole):
        return 1
    if isinstance(p, Par):
        return count_holes(p.left) + count_holes(p.right)
    if isinstance(p, Res):
        return count_holes(p.body)
    if isinstance(p, (Wait, Recv)):
        return count_holes(p.cont)
    if isinstance(p, Branch):
        return sum(count_holes(q) for _, q in p.arms)
    return 0


# --------------------------------------------------------------------------
# fresh names and substitution

_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_name(stem: Name, avoid) -> Name:
    """``stem`` if unused, else the stem with the first free numeric suffix."""
    if stem not in avoid:
        return stem
    base = _TRAILING_DIGITS.sub("", stem) or stem
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def rename(p: Process, mapping: Mapping[Name, Name]) -> Process:
    """Simultaneous capture-avoiding substitution of free names."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return p
    return _rename(p, mapping)


def _rename(p: Process, m: Mapping[Name, Name]) -> Process:
    fv = free_names(p)
    live = {k: v for k, v in m.items() if k in fv}
    if not live:
        return p
    r = lambda n: live.get(n, n)  # noqa: E731
    sp = p.span
    if isinstance(p, Par):
        return Par(_rename(p.left, live), _rename(p.right, live), span=sp)
    if isinstance(p, Close):
        return Close(r(p.x), span=sp)
    if isinstance(p, Select):
        return Select(r(p.x), r(p.b), p.label, span=sp)
    if isinstance(p, Send):
        return Send(r(p.x), r(p.a), r(p.b), span=sp)
    if isinstance(p, Wait):
        return Wait(r(p.x), _rename(p.cont, live), span=sp)
    if isinstance(p, Res):
        (x, y), body = _under_binders((p.x, p.y), [p.body], live)
        return Res(x, y, body[0], p.type, p.level, span=sp)
    if isinstance(p, Recv):
        (y, z), body = _under_binders((p.y, p.z), [p.cont], live)
        return Recv(r(p.x), y, z, body[0], span=sp)
    if isinstance(p, Branch):
        (z,), bodies = _under_binders((p.z,), [q for _, q in p.arms], live)
        arms = tuple((lab, q) for (lab, _), q in zip(p.arms, bodies))
        return Branch(r(p.x), z, arms, span=sp)
    raise TypeError(f"cannot rename inside {p!r}")


def _under_binders(binders, bodies, m):
    used = frozenset().union(*(free_names(q) for q in bodies))
    inner = {k: v for k, v in m.items() if k not in binders and k in used}
    if not inner:
        return binders, bodies
    targets = set(inner.values())
    avoid = set(targets) | set(inner) | set(binders)
    for q in bodies:
        avoid |= all_names(q)
    new_binders = []
    extra = {}
    for b in binders:
        if b in targets:
            nb = fresh_name(b, avoid)
            avoid.add(nb)
            extra[b] = nb
            new_binders.append(nb)
        else:
            new_binders.append(b)
    full = {**inner, **extra}
    return tuple(new_binders), [_rename(q, full) for q in bodies]


def substitute(p: Process, fresh: Name, old: Name) -> Process:
    """Replace free ``old`` by ``fresh``, renaming binders to avoid capture."""
    return rename(p, {old: fresh})


# --------------------------------------------------------------------------
# alpha equivalence


def alpha_normalize(p: Process) -> Process:
    """Rename every binder to ``%k``, numbered leftmost-outermost.

    Restriction binders of a context whose name does not occur in their
    scope are left alone: that name meets the process in the hole.
    """
    counter = [0]

    def nxt():
        counter[0] += 1
        return f"%{counter[0] - 1}"

    def go(q: Process, env: dict) -> Process:
        g = lambda n: env.get(n, n)  # noqa: E731
        if isinstance(q, (Inaction, Hole)):
            return q
        if isinstance(q, Par):
            return Par(go(q.left, env), go(q.right, env))
        if isinstance(q, Close):
            return Close(g(q.x))
        if isinstance(q, Select):
            return Select(g(q.x), g(q.b), q.label)
        if isinstance(q, Send):
            return Send(g(q.x), g(q.a), g(q.b))
        if isinstance(q, Wait):
            return Wait(g(q.x), go(q.cont, env))
        if isinstance(q, Res):
            # in a context, a restricted name that is not free in its scope
            # is connected through the hole and keeps its identity
            keep = count_holes(q.body) > 0
            fv = free_names(q.body) if keep else ()
            x = q.x if keep and q.x not in fv else nxt()
            y = q.y if keep and q.y not in fv else nxt()
            return Res(x, y, go(q.body, {**env, q.x: x, q.y: y}), q.type, q.level)
        if isinstance(q, Recv):
            y, z = nxt(), nxt()
            return Recv(g(q.x), y, z, go(q.cont, {**env, q.y: y, q.z: z}))
        if isinstance(q, Branch):
            z = nxt()
            inner = {**env, q.z: z}
            return Branch(g(q.x), z, tuple((lab, go(a, inner)) for lab, a in q.arms))
        raise TypeError(f"not a process: {q!r}")

    return go(p, {})


def alpha_equivalent(p: Process, q: Process) -> bool:
    return alpha_normalize(p) == alpha_normalize(q)

"""Flattening into binders and nodes, and canonical keys up to congruence.

A canonical key is a string that two processes share exactly when they are
structurally congruent.  Nodes are ordered and bound names numbered by an
individualise-and-refine search: at each step the nodes whose rendering is
smallest (with not-yet-numbered names shown as ``?``) are candidates, and
every tie is explored.  The key is the minimum over all explored numberings,
which makes it independent of the original choice of bound names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .session_types import SessionType, dual
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
    Wait,
    all_names,
    free_names,
    fresh_name,
    rename,
)


@dataclass(frozen=True)
class Binder:
    """A restriction ``new (x : type [level]) y`` pulled to the top level."""

    x: str
    y: str
    type: Optional[SessionType] = field(default=None, compare=False)
    level: Optional[str] = field(default=None, compare=False)

    @property
    def names(self) -> Tuple[str, str]:
        return (self.x, self.y)

    @property
    def pair(self) -> frozenset:
        return frozenset((self.x, self.y))

    def mate(self, n: str) -> str:
        return self.y if n == self.x else self.x

    def type_of(self, n: str) -> Optional[SessionType]:
        if self.type is None:
            return None
        return self.type if n == self.x else dual(self.type)

    def renamed(self, mapping) -> "Binder":
        return Binder(mapping.get(self.x, self.x), mapping.get(self.y, self.y), self.type, self.level)

    def wrap(self, body: Process) -> Process:
        return Res(self.x, self.y, body, self.type, self.level)


def flatten(p: Process, used: set, binders: List[Binder], nodes: List[Process]) -> None:
    """Extrude restrictions and flatten parallels of ``p`` into the lists.

    ``used`` holds names that restriction binders must avoid; clashing
    binders are renamed and every kept binder name is added to it.
    """
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Inaction):
            continue
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
            continue
        if isinstance(q, Res):
            x, y, body = q.x, q.y, q.body
            ren = {}
            for n in (x, y):
                if n in used:
                    nn = fresh_name(n, used | all_names(body) | {x, y} | set(ren.values()))
                    ren[n] = nn
            if ren:
                body = rename(body, ren)
                x, y = ren.get(x, x), ren.get(y, y)
            used.add(x)
            used.add(y)
            binders.append(Binder(x, y, q.type, q.level))
            stack.append(body)
            continue
        nodes.append(q)


def rebuild(binders: Iterable[Binder], nodes: Sequence[Process]) -> Process:
    from .syntax import par_all

    out = par_all(list(nodes))
    for b in reversed(list(binders)):
        out = b.wrap(out)
    return out


# --------------------------------------------------------------------------
# canonical keys

_UNSET = "?"


def _render(node: Process, nm: Dict[str, str], depth: int) -> str:
    g = nm.get
    if isinstance(node, Close):
        return f"close {g(node.x)}"
    if isinstance(node, Select):
        return f"{g(node.x)}!{node.label}({g(node.b)})"
    if isinstance(node, Send):
        return f"send {g(node.x)}({g(node.a)},{g(node.b)})"
    if isinstance(node, Wait):
        return f"wait {g(node.x)};({_canon_process(node.cont, nm, depth + 1)})"
    if isinstance(node, Recv):
        inner = {**nm, node.y: f"${depth}a", node.z: f"${depth}b"}
        return f"recv {g(node.x)}(${depth}a,${depth}b);({_canon_process(node.cont, inner, depth + 1)})"
    if isinstance(node, Branch):
        inner = {**nm, node.z: f"${depth}z"}
        arms = ",".join(f"{lab}:({_canon_process(a, inner, depth + 1)})" for lab, a in node.arms)
        return f"{g(node.x)}?(${depth}z){{{arms}}}"
    if isinstance(node, Hole):
        return "hole"
    if isinstance(node, (Par, Res, Inaction)):
        return f"({_canon_process(node, nm, depth + 1)})"
    raise TypeError(f"not a process: {node!r}")


def _canon_process(p: Process, nm: Dict[str, str], depth: int) -> str:
    fv = free_names(p)
    env = tuple(sorted((n, nm.get(n, _UNSET)) for n in fv))
    return _canon_process_cached(p, env, depth)


@lru_cache(maxsize=100_000)
def _canon_process_cached(p: Process, env: tuple, depth: int) -> str:
    naming = dict(env)
    binders: List[Binder] = []
    nodes: List[Process] = []
    flatten(p, set(naming), binders, nodes)
    if not binders and len(nodes) == 1:
        return _render(nodes[0], naming, depth)
    return canonical_parts([(b, "") for b in binders], [(n, "") for n in nodes], naming, depth)


def canonical_parts(
    binders: Sequence[Tuple[Binder, str]],
    nodes: Sequence[Tuple[Process, str]],
    naming: Dict[str, str],
    depth: int = 0,
) -> str:
    """Canonical key of ``new(binders)(nodes)``.

    ``naming`` fixes the printed form of names that must not be renamed;
    every other name, bound or free, is numbered canonically.  Tags on
    binders and nodes are part of the key.
    """
    bnames = {n for b, _ in binders for n in b.names}
    naming = {k: v for k, v in naming.items() if k not in bnames}
    node_fv = [free_names(n) for n, _ in nodes]
    local = set(bnames)
    for fv in node_fv:
        local |= fv - naming.keys()
    node_local = [fv & local for fv in node_fv]
    prefix = f"%{depth}."
    best: List[Optional[str]] = [None]

    def names_for(assign):
        nm = dict(naming)
        for n in local:
            nm[n] = assign.get(n, _UNSET)
        return nm

    def render(i, assign):
        node, tag = nodes[i]
        return tag + "|" + _render(node, names_for(assign), depth)

    def finish(assign):
        a = dict(assign)
        half = []
        empty = []
        for b, tag in binders:
            got = [n for n in b.names if n in a]
            if len(got) == 1:
                half.append((tag, a[got[0]], b.mate(got[0])))
            elif not got:
                empty.append((tag, b))
        for _, _, n in sorted(half):
            a[n] = f"{prefix}{len(a)}"
        for _, b in sorted(empty, key=lambda t: t[0]):
            a[b.x] = f"{prefix}{len(a)}"
            a[b.y] = f"{prefix}{len(a)}"
        bs = sorted(f"{tag}{{{min(a[b.x], a[b.y])},{max(a[b.x], a[b.y])}}}" for b, tag in binders)
        ns = sorted(render(i, a) for i in range(len(nodes)))
        key = "new[" + ";".join(bs) + "]" + " || ".join(ns)
        if best[0] is None or key < best[0]:
            best[0] = key

    def orders(i, assign, pending):
        if not pending:
            yield {}
            return
        k = len(assign)
        scored = []
        for c in sorted(pending):
            trial = {**assign, c: f"{prefix}{k}"}
            scored.append((render(i, trial), c))
        low = min(s for s, _ in scored)
        for s, c in scored:
            if s != low:
                continue
            here = {**assign, c: f"{prefix}{k}"}
            for rest in orders(i, here, pending - {c}):
                yield {c: here[c], **rest}

    def search(assign, remaining):
        if not remaining:
            finish(assign)
            return
        scored = [(render(i, assign), i) for i in remaining]
        low = min(s for s, _ in scored)
        seen_sig = set()
        for s, i in scored:
            if s != low:
                continue
            pending = frozenset(node_local[i] - assign.keys())
            # identical nodes sharing no pending names are interchangeable
            sig = (nodes[i], pending) if not pending else None
            if sig is not None:
                if sig in seen_sig:
                    continue
                seen_sig.add(sig)
            rest = [j for j in remaining if j != i]
            for ext in orders(i, assign, pending):
                search({**assign, **ext}, rest)

    search({}, list(range(len(nodes))))
    return best[0]


def canonical_key(p: Process) -> str:
    """Key shared by exactly the processes structurally congruent to ``p``."""
    fv = free_names(p)
    binders: List[Binder] = []
    nodes: List[Process] = []
    flatten(p, set(fv), binders, nodes)
    return canonical_parts([(b, "") for b in binders], [(n, "") for n in nodes], {n: n for n in fv})

"""Random well-typed processes, types and congruence rearrangements.

Used by the property tests and the acceptance suite.  Everything is driven
by an explicit ``random.Random`` so runs are reproducible from a seed.

The process generator keeps one invariant: every name in the current typing
context is *usable* at the current running secrecy ``d``, meaning either
``d`` is below the name's level or the name never outputs.  Inputs raise
``d``; the names that would stop being usable are split off into a parallel
component that keeps the old running secrecy.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Sequence, Tuple

from .checker import expand_forwarder
from .contexts import build_peer, peer_recipes
from .lattice import SecrecyLattice
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
    has_no_output,
)
from .syntax import (
    Branch,
    Close,
    Inaction,
    Par,
    Process,
    Recv,
    Res,
    Select,
    Send,
    Wait,
    all_names,
    fresh_name,
    par_all,
    prefix_count,
    rename,
)

LABELS = ("l", "m", "n")


def random_type(rng: random.Random, depth: int = 3) -> SessionType:
    if depth <= 0 or rng.random() < 0.3:
        return rng.choice((One(), Bot()))
    k = rng.randrange(6)
    if k < 2:
        labels = sorted(rng.sample(LABELS, rng.randint(1, 2)))
        arms = tuple((lab, random_type(rng, depth - 1)) for lab in labels)
        return Plus(arms) if k == 0 else With(arms)
    if k < 4:
        a, b = random_type(rng, depth - 2), random_type(rng, depth - 1)
        return Tensor(a, b) if k == 2 else ParT(a, b)
    return rng.choice((One(), Bot()))


def diamond() -> SecrecyLattice:
    """Four levels: bottom ``L``, incomparable ``A`` and ``B``, top ``H``."""
    return SecrecyLattice([("L", "A"), ("L", "B"), ("A", "H"), ("B", "H")])


class _Gen:
    def __init__(self, rng: random.Random, lattice: SecrecyLattice, budget: int):
        self.rng = rng
        self.lat = lattice
        self.budget = budget
        self.used: set = set()

    def fresh(self, stem: str) -> str:
        n = fresh_name(stem, self.used)
        self.used.add(n)
        return n

    def usable(self, entry, d) -> bool:
        ty, c = entry
        return self.lat.leq(d, c) or has_no_output(ty)

    def level_above(self, d) -> str:
        return self.rng.choice(sorted(self.lat.above(d)))

    def small_type(self) -> SessionType:
        return random_type(self.rng, self.rng.randint(0, 2))

    def finish(self, gamma: Dict[str, tuple], d) -> Process:
        """Use up every remaining name with its default peer behaviour."""
        parts = []
        for n in sorted(gamma):
            ty, c = gamma[n]
            parts.append(build_peer(n, ty, peer_recipes(ty, 0)[0], c, self.fresh))
        return par_all(parts)

    def gen(self, gamma: Dict[str, tuple], d) -> Process:
        rng = self.rng
        if self.budget <= 0:
            return self.finish(gamma, d)
        moves = ["new"]
        if len(gamma) >= 2:
            moves += ["split"] * 2
        if gamma:
            moves += ["act"] * 5
        move = rng.choice(moves)
        if move == "split":
            names = sorted(gamma)
            rng.shuffle(names)
            cut = rng.randint(1, len(names) - 1)
            left = {n: gamma[n] for n in names[:cut]}
            right = {n: gamma[n] for n in names[cut:]}
            return Par(self.gen(left, d), self.gen(right, d))
        if move == "new":
            if not gamma and rng.random() < 0.5:
                return Inaction()
            ty, c = self.small_type(), self.level_above(d)
            x, y = self.fresh("x"), self.fresh("y")
            self.budget -= 1
            if gamma and rng.random() < 0.5:
                names = sorted(gamma)
                cut = rng.randint(0, len(names))
                left = {n: gamma[n] for n in names[:cut]}
                right = {n: gamma[n] for n in names[cut:]}
                left[x] = (ty, c)
                right[y] = (dual(ty), c)
                body = Par(self.gen(left, d), self.gen(right, d))
            else:
                g = dict(gamma)
                g[x] = (ty, c)
                g[y] = (dual(ty), c)
                body = self.gen(g, d)
            return Res(x, y, body, ty, c)
        x = rng.choice(sorted(gamma))
        return self.act(x, gamma, d)

    def act(self, x, gamma, d) -> Process:
        ty, c = gamma[x]
        rest = {n: e for n, e in gamma.items() if n != x}
        self.budget -= 1
        if isinstance(ty, One):
            if rest:
                return Par(Close(x), self.gen(rest, d))
            return Close(x)
        if isinstance(ty, Plus):
            lab, a = self.rng.choice(ty.arms)
            b, b1 = self.fresh("b"), self.fresh("c")
            g = dict(rest)
            g[b1] = (a, c)
            return Res(b, b1, Par(Select(x, b, lab), self.gen(g, d)), dual(a), c)
        if isinstance(ty, Tensor):
            a, a1 = self.fresh("a"), self.fresh("p")
            b, b1 = self.fresh("b"), self.fresh("c")
            g = dict(rest)
            g[a1] = (ty.payload, c)
            g[b1] = (ty.cont, c)
            body = Par(Send(x, a, b), self.gen(g, d))
            return Res(a, a1, Res(b, b1, body, dual(ty.cont), c), dual(ty.payload), c)
        # inputs raise the running secrecy
        d2 = self.lat.join(d, c)
        keep = {n: e for n, e in rest.items() if self.usable(e, d2)}
        aside = {n: e for n, e in rest.items() if n not in keep}
        if isinstance(ty, Bot):
            head = Wait(x, self.gen(keep, d2))
        elif isinstance(ty, With):
            z = self.fresh("z")
            arms = []
            for lab, a in ty.arms:
                g = dict(keep)
                g[z] = (a, c)
                arms.append((lab, self.gen(g, d2)))
            head = Branch(x, z, tuple(arms))
        else:
            v, w = self.fresh("v"), self.fresh("w")
            g = dict(keep)
            g[v] = (ty.payload, c)
            g[w] = (ty.cont, c)
            head = Recv(x, v, w, self.gen(g, d2))
        if aside:
            return Par(head, self.gen(aside, d))
        return head


def random_context(rng: random.Random, lattice: SecrecyLattice, d: str, size: int = 2) -> TypingContext:
    """A typing context whose every entry is usable at ``d``."""
    out = {}
    names = ["s", "t", "u", "r"][:size]
    for n in names:
        ty = random_type(rng, rng.randint(0, 2))
        c = rng.choice(sorted(lattice.levels))
        if not (lattice.leq(d, c) or has_no_output(ty)):
            c = rng.choice(sorted(lattice.above(d)))
        out[n] = (ty, c)
    return TypingContext(out)


def random_process(rng: random.Random, lattice: SecrecyLattice, d: str, gamma: TypingContext,
                   max_prefixes: int = 12, attempts: int = 50) -> Optional[Process]:
    """A process typed ``lattice |- P @ d :: gamma`` with at most ``max_prefixes`` prefixes."""
    for _ in range(attempts):
        g = _Gen(rng, lattice, rng.randint(1, max_prefixes))
        g.used |= set(gamma)
        p = g.gen({n: (e.type, e.level) for n, e in gamma.items()}, d)
        if prefix_count(p) <= max_prefixes:
            return p
    return None


def random_judgment(rng: random.Random, lattice: SecrecyLattice, max_prefixes: int = 12,
                    closed: bool = False) -> Tuple[Process, str, TypingContext]:
    """A random ``(process, running secrecy, context)`` triple that typechecks."""
    while True:
        d = rng.choice(sorted(lattice.levels))
        gamma = TypingContext() if closed else random_context(rng, lattice, d, rng.randint(0, 3))
        p = random_process(rng, lattice, d, gamma, max_prefixes)
        if p is not None:
            return p, d, gamma


def random_forwarder(rng: random.Random, lattice: SecrecyLattice) -> Tuple[Process, SessionType, str]:
    ty = random_type(rng, 4)
    c = rng.choice(sorted(lattice.levels))
    return expand_forwarder("x", "y", ty, c), ty, c


# --------------------------------------------------------------------------
# congruence rearrangements


def _subterms(p: Process, path=()):
    yield path, p
    for i, child in enumerate(_children(p)):
        yield from _subterms(child, path + (i,))


def _children(p: Process) -> List[Process]:
    if isinstance(p, Par):
        return [p.left, p.right]
    if isinstance(p, Res):
        return [p.body]
    if isinstance(p, (Wait, Recv)):
        return [p.cont]
    if isinstance(p, Branch):
        return [a for _, a in p.arms]
    return []


def _replace(p: Process, path: Sequence[int], new: Process) -> Process:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(p, Par):
        return Par(_replace(p.left, rest, new), p.right) if i == 0 else Par(p.left, _replace(p.right, rest, new))
    if isinstance(p, Res):
        return Res(p.x, p.y, _replace(p.body, rest, new), p.type, p.level)
    if isinstance(p, Wait):
        return Wait(p.x, _replace(p.cont, rest, new))
    if isinstance(p, Recv):
        return Recv(p.x, p.y, p.z, _replace(p.cont, rest, new))
    if isinstance(p, Branch):
        arms = list(p.arms)
        lab, a = arms[i]
        arms[i] = (lab, _replace(a, rest, new))
        return Branch(p.x, p.z, tuple(arms))
    raise ValueError("bad path")


def _rewrites(q: Process, avoid: set) -> List[Tuple[str, Process]]:
    """Congruence rules applicable at the root of ``q``, each applied once."""
    out = [("par-nil-intro", Par(q, Inaction()))]
    if isinstance(q, Par):
        out.append(("par-symm", Par(q.right, q.left)))
        if isinstance(q.left, Par):
            out.append(("par-assoc", Par(q.left.left, Par(q.left.right, q.right))))
        if isinstance(q.right, Inaction):
            out.append(("par-nil", q.left))
        # scope extrusion: (new xy P) | Q  ->  new xy (P | Q)
        if isinstance(q.left, Res):
            r = q.left
            if not ({r.x, r.y} & all_names(q.right)):
                out.append(("res-assoc", Res(r.x, r.y, Par(r.body, q.right), r.type, r.level)))
    if isinstance(q, Res):
        t = dual(q.type) if q.type is not None else None
        out.append(("res-symm", Res(q.y, q.x, q.body, t, q.level)))
        if isinstance(q.body, Res):
            r = q.body
            out.append(("res-comm", Res(r.x, r.y, Res(q.x, q.y, r.body, q.type, q.level), r.type, r.level)))
        if isinstance(q.body, Par):
            from .syntax import free_names

            if not ({q.x, q.y} & free_names(q.body.right)):
                out.append(("res-assoc-rev", Par(Res(q.x, q.y, q.body.left, q.type, q.level), q.body.right)))
        nx, ny = fresh_name(q.x, avoid), fresh_name(q.y, avoid | {fresh_name(q.x, avoid)})
        out.append(("alpha", Res(nx, ny, rename(q.body, {q.x: nx, q.y: ny}), q.type, q.level)))
    return out


def rearrange(rng: random.Random, p: Process, steps: int = 5) -> Tuple[Process, List[str]]:
    """Apply ``steps`` random congruence rewrites anywhere in ``p``."""
    log = []
    for _ in range(steps):
        spots = list(_subterms(p))
        rng.shuffle(spots)
        avoid = all_names(p)
        for path, q in spots:
            options = _rewrites(q, avoid)
            if options:
                rule, new = rng.choice(options)
                p = _replace(p, path, new)
                log.append(rule)
                break
    return p, log

"""Closing contexts for a pair of judgments.

Every interface name gets a peer process on its dual endpoint.  Peers are
described by small recipes so that different behaviours (which label to
select, which branch arm to exercise, where to put a payload) can be
enumerated and then built on either side.  Observable names get the same
peer on both sides; unobservable ones vary independently.
"""

from __future__ import annotations

import itertools
import random
from typing import Callable, List, Sequence, Tuple

from .checker import IllTyped, Judgment, check_closed, expand_forwarder
from .lattice import SecrecyLattice
from .semantics import plug
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
)

# per-type cap on how many peer recipes are produced
VARIANT_CAP = 6


def peer_recipes(ty: SessionType, depth: int) -> List[tuple]:
    """Recipes for a process using one endpoint of type ``ty``.

    At depth 0 only the default behaviour is returned; each further level
    lets selections pick other labels and nested positions vary.
    """
    if isinstance(ty, One):
        return [("close",)]
    if isinstance(ty, Bot):
        return [("wait",)]
    if isinstance(ty, Plus):
        arms = ty.arms if depth > 0 else ty.arms[:1]
        out = [("sel", lab, r) for lab, a in arms for r in peer_recipes(a, depth - 1)]
        return out[:VARIANT_CAP]
    if isinstance(ty, With):
        per_arm = [[(lab, r) for r in peer_recipes(a, depth - 1)] for lab, a in ty.arms]
        out = [("bra", tuple(combo)) for combo in itertools.islice(itertools.product(*per_arm), VARIANT_CAP)]
        return out
    if isinstance(ty, (Tensor, ParT)):
        tag = "send" if isinstance(ty, Tensor) else "recv"
        pairs = itertools.product(peer_recipes(ty.payload, depth - 1), peer_recipes(ty.cont, depth - 1))
        return [(tag, a, b) for a, b in itertools.islice(pairs, VARIANT_CAP)]
    raise TypeError(f"not a session type: {ty!r}")


class _Names:
    def __init__(self, avoid):
        self.used = set(avoid)

    def __call__(self, stem: str) -> str:
        n = fresh_name(stem, self.used)
        self.used.add(n)
        return n


def build_peer(u: str, ty: SessionType, recipe: tuple, level: str, fresh: Callable[[str], str],
               tail: Process = None) -> Process:
    """The process a recipe describes, on endpoint ``u : ty``.

    ``tail`` runs in parallel with whatever follows the first input; it is
    ignored when the peer starts with an output.
    """
    kind = recipe[0]
    after = (lambda p: Par(p, tail)) if tail is not None else (lambda p: p)
    if kind == "close":
        return Close(u)
    if kind == "wait":
        return Wait(u, tail if tail is not None else par_all([]))
    if kind == "sel":
        _, lab, sub = recipe
        a = ty.arm_map[lab] if hasattr(ty, "arm_map") else dict(ty.arms)[lab]
        b, b1 = fresh("b"), fresh(u + "'")
        return Res(b, b1, Par(Select(u, b, lab), build_peer(b1, a, sub, level, fresh)), dual(a), level)
    if kind == "bra":
        z = fresh(u + "'")
        arms_t = dict(ty.arms)
        arms = tuple((lab, after(build_peer(z, arms_t[lab], sub, level, fresh))) for lab, sub in recipe[1])
        return Branch(u, z, arms)
    if kind == "send":
        _, ra, rb = recipe
        a, a1 = fresh("a"), fresh("a'")
        b, b1 = fresh("b"), fresh(u + "'")
        body = par_all([Send(u, a, b), build_peer(a1, ty.payload, ra, level, fresh),
                        build_peer(b1, ty.cont, rb, level, fresh)])
        return Res(a, a1, Res(b, b1, body, dual(ty.cont), level), dual(ty.payload), level)
    if kind == "recv":
        _, ra, rb = recipe
        v, w = fresh("v"), fresh(u + "'")
        body = Par(build_peer(v, ty.payload, ra, level, fresh), build_peer(w, ty.cont, rb, level, fresh))
        return Recv(u, v, w, after(body))
    raise ValueError(f"unknown recipe {kind!r}")


def _starts_with_input(ty: SessionType) -> bool:
    return not is_output_type(ty)


def group_plans(gamma: TypingContext, names: Sequence[str], depth: int) -> List[List[tuple]]:
    """Plans for closing ``names``: each is a list of peer, link or sequencing items."""
    names = sorted(names)
    if not names:
        return [[]]
    per = [[("peer", n, r) for r in peer_recipes(dual(gamma[n].type), depth)] for n in names]
    plans = [list(p) for p in itertools.islice(itertools.product(*per), 4 * VARIANT_CAP)]
    if depth < 2:
        return plans
    default = {n: peer_recipes(dual(gamma[n].type), 0)[0] for n in names}
    for u, v in itertools.combinations(names, 2):
        eu, ev = gamma[u], gamma[v]
        if eu.level != ev.level:
            continue
        rest = [("peer", n, default[n]) for n in names if n not in (u, v)]
        if ev.type == dual(eu.type):
            plans.append([("link", u, v)] + rest)
            plans.append([("fwd", u, v)] + rest)
    for u, v in itertools.permutations(names, 2):
        if _starts_with_input(dual(gamma[u].type)):
            rest = [("peer", n, default[n]) for n in names if n not in (u, v)]
            plans.append([("seq", u, default[u], v, default[v])] + rest)
    return plans


def build_context(gamma: TypingContext, plan: Sequence[tuple], avoid) -> Process:
    """A context with one hole that closes every name the plan mentions."""
    fresh = _Names(avoid)
    binders: List[Tuple[str, str, SessionType, str]] = []
    nodes: List[Process] = [Hole()]

    def endpoint(n):
        m = fresh(n + "'")
        binders.append((m, n, dual(gamma[n].type), gamma[n].level))
        return m

    for item in plan:
        kind = item[0]
        if kind == "peer":
            _, n, r = item
            m = endpoint(n)
            nodes.append(build_peer(m, dual(gamma[n].type), r, gamma[n].level, fresh))
        elif kind == "link":
            _, u, v = item
            binders.append((u, v, gamma[u].type, gamma[u].level))
        elif kind == "fwd":
            _, u, v = item
            mu, mv = endpoint(u), endpoint(v)
            fw = expand_forwarder(mu, mv, dual(gamma[u].type), gamma[u].level)
            fresh.used |= all_names(fw)
            nodes.append(fw)
        elif kind == "seq":
            _, u, ru, v, rv = item
            mu, mv = endpoint(u), endpoint(v)
            later = build_peer(mv, dual(gamma[v].type), rv, gamma[v].level, fresh)
            nodes.append(build_peer(mu, dual(gamma[u].type), ru, gamma[u].level, fresh, tail=later))
        else:
            raise ValueError(f"unknown plan item {kind!r}")
    out = par_all(nodes)
    for x, y, t, c in reversed(binders):
        out = Res(x, y, out, t, c)
    return out


def _hostings(gamma: TypingContext, unobs: Sequence[str], obs: Sequence[str], depth: int):
    """Optional (u, v): the peer of unobservable ``u`` runs the peer of observable ``v`` after its first input."""
    out = [None]
    if depth >= 2:
        out += [(u, v) for u in sorted(unobs) for v in sorted(obs) if _starts_with_input(dual(gamma[u].type))]
    return out


def _with_hosting(items: List[tuple], host) -> List[tuple]:
    if host is None:
        return items
    u, v = host
    pu = next((it for it in items if it[0] == "peer" and it[1] == u), None)
    pv = next((it for it in items if it[0] == "peer" and it[1] == v), None)
    if pu is None or pv is None:
        return None
    rest = [it for it in items if it is not pu and it is not pv]
    return rest + [("seq", u, pu[2], v, pv[2])]


def enumerate_context_pairs(lattice: SecrecyLattice, observer: str, j1: Judgment, j2: Judgment,
                            depth: int = 2, max_pairs: int = 64, ifc: bool = True) -> List[Tuple[Process, Process]]:
    """Pairs (E1, E2) of closing contexts that type the plugged processes.

    Observable names get the same peer recipe on both sides; at depth 2 an
    unobservable peer may additionally delay an observable one.  When the
    full product of plans is too large a deterministic sample is taken,
    always keeping the all-defaults pair first.
    """
    g1, g2 = j1.context, j2.context
    obs = [n for n, e in g1.items() if lattice.leq(e.level, observer)]
    un1 = [n for n, e in g1.items() if not lattice.leq(e.level, observer)]
    un2 = [n for n, e in g2.items() if not lattice.leq(e.level, observer)]
    obs_plans = group_plans(g1, obs, depth)
    side1 = [(p, h) for p in group_plans(g1, un1, depth) for h in _hostings(g1, un1, obs, depth)]
    side2 = [(p, h) for p in group_plans(g2, un2, depth) for h in _hostings(g2, un2, obs, depth)]
    avoid = all_names(j1.process) | all_names(j2.process)
    dims = (len(obs_plans), len(side1), len(side2))
    total = dims[0] * dims[1] * dims[2]
    budget = max_pairs * 4
    if total <= budget:
        indices = list(range(total))
    else:
        rng = random.Random(0)
        indices = [0] + sorted(rng.sample(range(1, total), budget - 1))
    out = []
    seen = set()
    for flat in indices:
        i, rem = divmod(flat, dims[1] * dims[2])
        k1, k2 = divmod(rem, dims[2])
        items1 = _with_hosting(obs_plans[i] + side1[k1][0], side1[k1][1])
        items2 = _with_hosting(obs_plans[i] + side2[k2][0], side2[k2][1])
        if items1 is None or items2 is None:
            continue
        e1 = build_context(g1, items1, avoid)
        e2 = build_context(g2, items2, avoid)
        if (e1, e2) in seen:
            continue
        seen.add((e1, e2))
        if not (_closes(lattice, e1, j1, ifc) and _closes(lattice, e2, j2, ifc)):
            continue
        out.append((e1, e2))
        if len(out) >= max_pairs:
            break
    return out


def _closes(lattice: SecrecyLattice, e: Process, j: Judgment, ifc: bool = True) -> bool:
    try:
        check_closed(lattice, plug(e, j.process), j.running, ifc)
    except IllTyped:
        return False
    return True

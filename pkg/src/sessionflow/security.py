"""Relevance, observable equivalence and the noninterference relation.

The relation between two networks is decided by mutual recursion:
``term`` explores every terminal state reachable by unobservable steps on
the left and looks for a matching terminal state on the right, ``value``
handles one ready interface name according to its session type, moving the
ready message across the boundary and recursing on a lighter interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .canon import Binder, canonical_parts, rebuild
from .checker import Judgment, check
from .lattice import SecrecyLattice
from .semantics import (
    CTX,
    PROC,
    Network,
    NormalForm,
    State,
    exhaust_with_traces,
    normal_form,
)
from .session_types import (
    Bot,
    One,
    ParT,
    Plus,
    Tensor,
    TypingContext,
    With,
    context_weight,
    project,
)
from .syntax import (
    Close,
    Process,
    Select,
    Send,
    free_communication_names,
    free_names,
    fresh_name,
    is_output,
    subject,
)

TENSOR_NOTE = (
    "tensor clause: payload and continuation names compared pairwise across the two sides; "
    "a fresh payload mate takes the payload type"
)


# --------------------------------------------------------------------------
# relevance


@dataclass(frozen=True)
class RelevanceResult:
    relevant_nodes: Tuple[Process, ...]
    relevant_binders: Tuple[Binder, ...]
    relevant_form: Process
    node_indices: Tuple[int, ...] = ()
    levels: Tuple[Tuple[int, str], ...] = ()


def _name_levels(nf: NormalForm, gamma: TypingContext) -> Dict[str, str]:
    lv = {n: e.level for n, e in gamma.items()}
    for b in nf.binders:
        if b.level is None:
            raise ValueError(f"restriction {b.x},{b.y} has no level annotation")
        lv[b.x] = lv[b.y] = b.level
    return lv


def node_context(nf: NormalForm, gamma: TypingContext, node: Process) -> TypingContext:
    """Typing context of one node: entries for its free names."""
    out = {}
    for n in free_names(node):
        if n in gamma:
            out[n] = gamma[n]
        else:
            b = nf.binder_of(n)
            if b is None or b.type is None:
                raise ValueError(f"no type known for {n}")
            out[n] = (b.type_of(n), b.level)
    return TypingContext(out)


def quasi_running_secrecy(lattice: SecrecyLattice, node: Process, d: str, gamma_node: TypingContext) -> str:
    s = subject(node)
    if s is None:
        raise ValueError("quasi-running secrecy is defined on prefixed nodes only")
    if s not in gamma_node:
        raise KeyError(f"subject {s} is not in the node's context")
    return lattice.join(d, gamma_node[s].level)


def relevant(lattice: SecrecyLattice, observer: str, nf: NormalForm, gamma: TypingContext, d: str) -> RelevanceResult:
    """Nodes and binders of ``nf`` that can affect what the observer sees."""
    lv = _name_levels(nf, gamma)
    low = lambda c: lattice.leq(c, observer)  # noqa: E731
    visible = {n for n, e in gamma.items() if low(e.level)}
    nodes = nf.nodes
    quasi = []
    for q in nodes:
        s = subject(q)
        quasi.append(lattice.join(d, lv[s]) if s in lv else None)
    fcns = [free_communication_names(q) for q in nodes]
    fns = [free_names(q) for q in nodes]
    ok = [c is not None and low(c) for c in quasi]
    current = {i for i in range(len(nodes)) if ok[i] and fcns[i] & visible}
    used = set()
    binder_of = {}
    for bi, b in enumerate(nf.binders):
        binder_of[b.x] = bi
        binder_of[b.y] = bi
    for _ in range(len(nf.binders)):
        grown = set(current)
        for i in range(len(nodes)):
            if not ok[i]:
                continue
            for z in fcns[i]:
                bi = binder_of.get(z)
                if bi is None:
                    continue
                w = nf.binders[bi].mate(z)
                if not low(lv[w]):
                    continue
                if any(w in fns[j] for j in current):
                    grown.add(i)
                    used.add(bi)
        current = grown
    idx = tuple(sorted(current))
    rb = tuple(b for bi, b in enumerate(nf.binders) if bi in used)
    rn = tuple(nodes[i] for i in idx)
    return RelevanceResult(rn, rb, rebuild(rb, rn), idx, tuple((i, quasi[i]) for i in range(len(nodes))))


def relevant_key(result: RelevanceResult, fixed) -> str:
    return canonical_parts([(b, "") for b in result.relevant_binders],
                           [(n, "") for n in result.relevant_nodes], {n: n for n in fixed})


def observably_equivalent(lattice: SecrecyLattice, observer: str, j1: Judgment, j2: Judgment) -> bool:
    r1 = relevant(lattice, observer, normal_form(j1.process), j1.context, j1.running)
    r2 = relevant(lattice, observer, normal_form(j2.process), j2.context, j2.running)
    fixed = free_names(j1.process) | free_names(j2.process)
    return relevant_key(r1, fixed) == relevant_key(r2, fixed)


# --------------------------------------------------------------------------
# verdicts


@dataclass
class RelationVerdict:
    related: bool
    failed_clause: Optional[str] = None
    interface_name: Optional[str] = None
    witness: Optional[Tuple[Network, Network]] = None
    witness_trace: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    message: str = ""
    contexts: Optional[Tuple[Process, Process]] = None
    pairs_checked: int = 0
    pairs_skipped: int = 0

    def __bool__(self):
        return self.related

    def to_dict(self) -> dict:
        from .surface import print_process

        out = {
            "related": self.related,
            "failed_clause": self.failed_clause,
            "interface_name": self.interface_name,
            "message": self.message,
            "witness_trace": list(self.witness_trace),
            "notes": sorted(set(self.notes)),
            "pairs_checked": self.pairs_checked,
            "pairs_skipped": self.pairs_skipped,
        }
        if self.witness is not None:
            out["witness"] = [
                {"context": print_process(n.ctx), "process": print_process(n.proc)} for n in self.witness
            ]
        else:
            out["witness"] = None
        if self.contexts is not None:
            out["contexts"] = [print_process(e) for e in self.contexts]
        else:
            out["contexts"] = None
        return out


def _fail(clause, name, witness, message, trace=()) -> RelationVerdict:
    return RelationVerdict(False, clause, name, witness, list(trace), message=message)


_OK = RelationVerdict(True)


# --------------------------------------------------------------------------
# the relation


def _find_node(state: State, side: str, pred) -> Optional[int]:
    for i, (n, s) in enumerate(state.nodes):
        if s == side and pred(n):
            return i
    return None


def _move(state: State, node_idx: Sequence[int], binders: Sequence[Binder], side: str) -> State:
    bset = {b.pair for b in binders}
    nodes = tuple((n, side if i in node_idx else s) for i, (n, s) in enumerate(state.nodes))
    bs = tuple((b, side if b.pair in bset else s) for b, s in state.binders)
    return State(bs, nodes).settle()


def _shared_fresh(stem: str, *states: State) -> str:
    avoid = set()
    for st in states:
        avoid |= st.names_in_use()
        for n, _ in st.nodes:
            from .syntax import all_names

            avoid |= all_names(n)
    return fresh_name(stem, avoid)


class Relator:
    """Decides the term and value relations, memoising on canonical keys."""

    def __init__(self, max_states: int = 200_000):
        self.memo: Dict[Tuple[str, str], RelationVerdict] = {}
        self.notes: List[str] = []
        self.max_states = max_states

    def note(self, text):
        if text not in self.notes:
            self.notes.append(text)

    # term level
    def term(self, n1: Network, n2: Network) -> RelationVerdict:
        key = (n1.key(), n2.key())
        hit = self.memo.get(key)
        if hit is None:
            hit = self._term(n1, n2)
            self.memo[key] = hit
        return hit

    def _term(self, n1: Network, n2: Network) -> RelationVerdict:
        if n1.interface != n2.interface:
            return _fail("term-interface", None, (n1, n2), "the two networks expose different interfaces")
        for n in (n1, n2):
            if not n.is_valid():
                return _fail("term-network", None, (n1, n2), f"not a network: {n.describe()}")
        left = exhaust_with_traces(n1, self.max_states)
        right = exhaust_with_traces(n2, self.max_states)
        for t1, tr1 in left:
            first = None
            for t2, tr2 in right:
                v = self.match(t1, t2)
                if v.related:
                    break
                if first is None:
                    first = (v, tr2)
            else:
                v, tr2 = first
                trace = [f"LEFT {s}" for s in tr1] + [f"RIGHT {s}" for s in tr2] + v.witness_trace
                return RelationVerdict(False, v.failed_clause, v.interface_name, v.witness, trace,
                                       message=v.message)
        return _OK

    def match(self, t1: Network, t2: Network) -> RelationVerdict:
        """Both clauses for one pair of terminal networks."""
        dom = set(t1.interface)
        a1, a2 = t1.aon() & dom, t2.aon() & dom
        if a1 != a2:
            name = sorted(a1 ^ a2)[0]
            side = "left" if name in a1 else "right"
            return _fail("term-aon", name, (t1, t2),
                         f"only the {side} process has a ready output on {name}")
        for x in sorted((t1.ain() | t2.ain()) & dom):
            v = self.value(t1, t2, x)
            if not v.related:
                return v
        return _OK

    # value level
    def value(self, n1: Network, n2: Network, x: str) -> RelationVerdict:
        gamma = n1.interface
        if x not in gamma:
            raise KeyError(f"{x} is not an observable interface name")
        ty = gamma[x].type
        handler = {One: self._one, Plus: self._plus, Tensor: self._tensor,
                   Bot: self._bot, With: self._with, ParT: self._par}[type(ty)]
        return handler(n1, n2, x)

    def _recurse(self, n1, n2, s1, s2, x, clause) -> RelationVerdict:
        m1, m2 = n1.with_state(s1), n2.with_state(s2)
        before = context_weight(n1.interface)
        assert context_weight(m1.interface) < before, "interface weight did not decrease"
        assert context_weight(m2.interface) < before, "interface weight did not decrease"
        v = self.term(m1, m2)
        if v.related:
            return _OK
        return RelationVerdict(False, v.failed_clause, v.interface_name, v.witness,
                               [f"VALUE {clause} {x}"] + v.witness_trace, message=v.message)

    def _ready(self, n, x, cls):
        return _find_node(n.state, PROC, lambda q: isinstance(q, cls) and q.x == x)

    def _one(self, n1, n2, x):
        i1, i2 = self._ready(n1, x, Close), self._ready(n2, x, Close)
        if i1 is None or i2 is None:
            return _fail("val-one", x, (n1, n2), f"close on {x} is not ready in both processes")
        s1 = _move(n1.state, [i1], [], CTX)
        s2 = _move(n2.state, [i2], [], CTX)
        return self._recurse(n1, n2, s1, s2, x, "val-one")

    def _extrude(self, n, state, name, shared):
        """Rename the process-bound mate of ``name`` to ``shared``; return the binder."""
        found = state.binder_of(name)
        if found is None or found[1] != PROC:
            return None, state
        b, _ = found
        mate = b.mate(name)
        state = state.rename({mate: shared})
        return state.binder_of(name)[0], state

    def _plus(self, n1, n2, x):
        dom = set(n1.interface)
        i1, i2 = self._ready(n1, x, Select), self._ready(n2, x, Select)
        if i1 is None or i2 is None:
            return _fail("val-oplus-label", x, (n1, n2), f"selection on {x} is not ready in both processes")
        o1, o2 = n1.state.nodes[i1][0], n2.state.nodes[i2][0]
        if o1.label != o2.label:
            return _fail("val-oplus-label", x, (n1, n2),
                         f"selections on {x} carry different labels: {o1.label} vs {o2.label}")
        if o1.b in dom or o2.b in dom:
            if o1.b != o2.b:
                return _fail("val-oplus-interface", x, (n1, n2),
                             f"continuations {o1.b} and {o2.b} differ on the interface")
            s1 = _move(n1.state, [i1], [], CTX)
            s2 = _move(n2.state, [i2], [], CTX)
            return self._recurse(n1, n2, s1, s2, x, "val-oplus-interface")
        shared = _shared_fresh(o1.b + "'", n1.state, n2.state)
        b1, s1 = self._extrude(n1, n1.state, o1.b, shared)
        b2, s2 = self._extrude(n2, n2.state, o2.b, shared)
        if b1 is None or b2 is None:
            return _fail("val-oplus-bound", x, (n1, n2), f"continuation of {x} is not bound in the process")
        s1 = _move(s1, [i1], [b1], CTX)
        s2 = _move(s2, [i2], [b2], CTX)
        return self._recurse(n1, n2, s1, s2, x, "val-oplus-bound")

    def _tensor(self, n1, n2, x):
        self.note(TENSOR_NOTE)
        dom = set(n1.interface)
        i1, i2 = self._ready(n1, x, Send), self._ready(n2, x, Send)
        if i1 is None or i2 is None:
            return _fail("val-tensor", x, (n1, n2), f"send on {x} is not ready in both processes")
        o1, o2 = n1.state.nodes[i1][0], n2.state.nodes[i2][0]
        s1, s2 = n1.state, n2.state
        moved1, moved2 = [], []
        parts = []
        for f1, f2 in ((o1.a, o2.a), (o1.b, o2.b)):
            if f1 in dom or f2 in dom:
                if f1 != f2:
                    return _fail("val-tensor-interface", x, (n1, n2),
                                 f"sent names {f1} and {f2} differ on the interface")
                parts.append("in")
                continue
            shared = _shared_fresh(f1 + "'", s1, s2)
            b1, s1 = self._extrude(n1, s1, f1, shared)
            b2, s2 = self._extrude(n2, s2, f2, shared)
            if b1 is None or b2 is None:
                return _fail("val-tensor-bound", x, (n1, n2), f"sent name {f1} is not bound in the process")
            moved1.append(b1)
            moved2.append(b2)
            parts.append("out")
        clause = "val-tensor-" + "-".join(parts)
        s1 = _move(s1, [i1], moved1, CTX)
        s2 = _move(s2, [i2], moved2, CTX)
        return self._recurse(n1, n2, s1, s2, x, clause)

    def _ctx_ready(self, n, x, cls):
        found = n.state.binder_of(x)
        if found is None or found[1] != CTX:
            return None
        b, _ = found
        y = b.mate(x)
        i = _find_node(n.state, CTX, lambda q: isinstance(q, cls) and q.x == y)
        if i is None:
            return None
        return b, i

    def _vacuous(self, clause, x):
        self.note(f"{clause} on {x}: a context is not ready, holds vacuously")
        return _OK

    def _bot(self, n1, n2, x):
        r1, r2 = self._ctx_ready(n1, x, Close), self._ctx_ready(n2, x, Close)
        if r1 is None or r2 is None:
            return self._vacuous("val-bot", x)
        s1 = _move(n1.state, [r1[1]], [r1[0]], PROC)
        s2 = _move(n2.state, [r2[1]], [r2[0]], PROC)
        return self._recurse(n1, n2, s1, s2, x, "val-bot")

    def _with(self, n1, n2, x):
        r1, r2 = self._ctx_ready(n1, x, Select), self._ctx_ready(n2, x, Select)
        if r1 is None or r2 is None:
            return self._vacuous("val-with", x)
        o1, o2 = n1.state.nodes[r1[1]][0], n2.state.nodes[r2[1]][0]
        if o1.label != o2.label:
            return self._vacuous("val-with", x)
        shared = _shared_fresh(o1.b, n1.state, n2.state)
        s1 = n1.state.rename({o1.b: shared})
        s2 = n2.state.rename({o2.b: shared})
        s1 = _move(s1, [r1[1]], [r1[0].renamed({o1.b: shared})], PROC)
        s2 = _move(s2, [r2[1]], [r2[0].renamed({o2.b: shared})], PROC)
        return self._recurse(n1, n2, s1, s2, x, "val-with")

    def _par(self, n1, n2, x):
        r1, r2 = self._ctx_ready(n1, x, Send), self._ctx_ready(n2, x, Send)
        if r1 is None or r2 is None:
            return self._vacuous("val-par", x)
        o1, o2 = n1.state.nodes[r1[1]][0], n2.state.nodes[r2[1]][0]
        sa = _shared_fresh(o1.a, n1.state, n2.state)
        sb = fresh_name(o1.b, n1.state.names_in_use() | n2.state.names_in_use() | {sa})
        s1 = n1.state.rename({o1.a: sa, o1.b: sb})
        s2 = n2.state.rename({o2.a: sa, o2.b: sb})
        s1 = _move(s1, [r1[1]], [s1.binder_of(x)[0]], PROC)
        s2 = _move(s2, [r2[1]], [s2.binder_of(x)[0]], PROC)
        return self._recurse(n1, n2, s1, s2, x, "val-par")


def _finish(v: RelationVerdict, rel: Relator) -> RelationVerdict:
    v = RelationVerdict(**{**v.__dict__})
    v.notes = list(rel.notes)
    return v


def term_related(n1: Network, n2: Network) -> RelationVerdict:
    rel = Relator()
    return _finish(rel.term(n1, n2), rel)


def value_related(n1: Network, n2: Network, x: str) -> RelationVerdict:
    rel = Relator()
    return _finish(rel.value(n1, n2, x), rel)


def replay(v: RelationVerdict) -> RelationVerdict:
    """Re-run the clause a failure witness names, on the witness itself."""
    if v.related or v.witness is None:
        raise ValueError("nothing to replay")
    t1, t2 = v.witness
    rel = Relator()
    if v.failed_clause == "term-aon":
        return _finish(rel.match(t1, t2), rel)
    if v.failed_clause in ("term-network", "term-interface"):
        return _finish(rel.term(t1, t2), rel)
    return _finish(rel.value(t1, t2, v.interface_name), rel)


# --------------------------------------------------------------------------
# equivalence over closing contexts


@dataclass
class ContextSpec:
    """Where the closing contexts for the equivalence check come from.

    Either ``pairs`` lists explicit (E1, E2) pairs, or contexts are
    enumerated up to ``depth``: observable names get the same peer on both
    sides, unobservable names get independently varying peers.
    """

    pairs: Optional[List[Tuple[Process, Process]]] = None
    depth: int = 2
    max_pairs: int = 64
    strict: bool = False


def secrecy_mode(lattice: SecrecyLattice, j: Judgment) -> Tuple[bool, Optional[str]]:
    """Whether ``j`` satisfies the secrecy conditions; raises if it is not even session-typed.

    Returns ``(True, None)`` for a well-typed judgment and ``(False, note)``
    when only secrecy side conditions fail.
    """
    from .checker import SECRECY, IllTyped

    try:
        check(lattice, j.process, j.running, j.context)
        return True, None
    except IllTyped as exc:
        if any(i.kind != SECRECY for i in exc.issues):
            raise
        check(lattice, j.process, j.running, j.context, ifc=False)
        first = exc.issues[0]
        return False, f"secrecy conditions fail ({first.rule}: {first.message}); analysed without them"


def dsni_equivalent(lattice: SecrecyLattice, observer: str, j1: Judgment, j2: Judgment,
                    ctxs: Optional[ContextSpec] = None) -> RelationVerdict:
    """Relate two judgments in every closing context pair, in both directions.

    A judgment that is session-typed but breaks a secrecy side condition is
    still examined, with the secrecy conditions lifted from every network
    check; the verdict notes record this.
    """
    from .checker import IllTyped, check_closed
    from .contexts import enumerate_context_pairs
    from .semantics import plug

    ctxs = ctxs or ContextSpec()
    g1 = project(lattice, j1.context, observer)
    g2 = project(lattice, j2.context, observer)
    if g1 != g2:
        return _fail("precondition-projection", None, None, "the observable interfaces differ")
    modes = [secrecy_mode(lattice, j) for j in (j1, j2)]
    ifc = all(m for m, _ in modes)
    rel = Relator()
    for _, note in modes:
        if note:
            rel.note(note)
    if ctxs.pairs is not None:
        pairs = list(ctxs.pairs)
    else:
        pairs = enumerate_context_pairs(lattice, observer, j1, j2, ctxs.depth, ctxs.max_pairs, ifc)
    checked = skipped = 0
    for e1, e2 in pairs:
        nets = []
        for e, j in ((e1, j1), (e2, j2)):
            problem = None
            try:
                check_closed(lattice, plug(e, j.process), j.running, ifc)
                n = Network.from_parts(e, j.process, lattice, observer, ifc=ifc)
                if n.full_interface != j.context:
                    problem = "the context does not match the declared interface"
            except (IllTyped, ValueError) as exc:
                problem = f"the context does not close the process: {exc}"
            if problem:
                if ctxs.strict:
                    v = _fail("context-closure", None, None, problem)
                    v.contexts = (e1, e2)
                    return v
                nets = None
                break
            nets.append(n)
        if nets is None:
            skipped += 1
            continue
        checked += 1
        for a, b in ((nets[0], nets[1]), (nets[1], nets[0])):
            v = rel.term(a, b)
            if not v.related:
                v = _finish(v, rel)
                v.contexts = (e1, e2)
                v.pairs_checked, v.pairs_skipped = checked, skipped
                return v
    v = _finish(_OK, rel)
    v.pairs_checked, v.pairs_skipped = checked, skipped
    return v


def fundamental_check(lattice: SecrecyLattice, observer: str, j1: Judgment, j2: Judgment,
                      ctxs: Optional[ContextSpec] = None) -> RelationVerdict:
    """Instance check: observably equivalent judgments must be related."""
    if project(lattice, j1.context, observer) != project(lattice, j2.context, observer):
        v = RelationVerdict(True)
        v.notes.append("observable interfaces differ: nothing to check")
        return v
    if not observably_equivalent(lattice, observer, j1, j2):
        v = RelationVerdict(True)
        v.notes.append("not observably equivalent: nothing to check")
        return v
    return dsni_equivalent(lattice, observer, j1, j2, ctxs)

"""Normal forms, congruence, reduction, evaluation contexts and networks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .canon import Binder, canonical_key, canonical_parts, flatten, rebuild
from .checker import IllTyped, check, check_closed
from .lattice import SecrecyLattice
from .session_types import TypingContext, project
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
    count_holes,
    free_names,
    is_input,
    is_output,
    par_all,
    rename,
    subject,
)

CTX = "E"
PROC = "P"


# --------------------------------------------------------------------------
# normal forms and congruence


@dataclass(frozen=True)
class NormalForm:
    binders: Tuple[Binder, ...]
    nodes: Tuple[Process, ...]

    @property
    def binder_pairs(self) -> frozenset:
        return frozenset(b.pair for b in self.binders)

    @property
    def bound_names(self) -> frozenset:
        return frozenset(n for b in self.binders for n in b.names)

    def to_process(self) -> Process:
        return rebuild(self.binders, self.nodes)

    def binder_of(self, name: str) -> Optional[Binder]:
        for b in self.binders:
            if name in b.names:
                return b
        return None


def normal_form(p: Process) -> NormalForm:
    binders: List[Binder] = []
    nodes: List[Process] = []
    flatten(p, set(free_names(p)), binders, nodes)
    return NormalForm(tuple(binders), tuple(nodes))


def is_node(p: Process) -> bool:
    return not isinstance(p, (Inaction, Par, Res))


def struct_congruent(p: Process, q: Process) -> bool:
    if free_names(p) != free_names(q):
        return False
    return canonical_key(p) == canonical_key(q)


def canonical_print(p: Process) -> str:
    """Readable normal-form print: binders outermost, nodes sorted."""
    from .surface import print_process

    nf = normal_form(p)
    nodes = sorted(nf.nodes, key=print_process)
    return print_process(rebuild(nf.binders, nodes))


# --------------------------------------------------------------------------
# states: binders and nodes, each tagged with the side they live on


@dataclass(frozen=True)
class State:
    binders: Tuple[Tuple[Binder, str], ...]
    nodes: Tuple[Tuple[Process, str], ...]

    def names_in_use(self) -> set:
        used = {n for b, _ in self.binders for n in b.names}
        for n, _ in self.nodes:
            used |= free_names(n)
        return used

    def side_nodes(self, side: str) -> List[Process]:
        return [n for n, s in self.nodes if s == side]

    def side_binders(self, side: str) -> List[Binder]:
        return [b for b, s in self.binders if s == side]

    def binder_of(self, name: str) -> Optional[Tuple[Binder, str]]:
        for b, s in self.binders:
            if name in b.names:
                return b, s
        return None

    def key(self, fixed) -> str:
        return canonical_parts(list(self.binders), list(self.nodes), {n: n for n in fixed})

    def proc(self) -> Process:
        return rebuild(self.side_binders(PROC), self.side_nodes(PROC))

    def ctx(self) -> Process:
        return rebuild(self.side_binders(CTX), [Hole()] + self.side_nodes(CTX))

    def whole(self) -> Process:
        return rebuild([b for b, _ in self.binders], [n for n, _ in self.nodes])

    def settle(self) -> "State":
        """Move process binders whose names are used by context nodes."""
        ctx_names = set()
        for n in self.side_nodes(CTX):
            ctx_names |= free_names(n)
        binders = tuple(
            (b, CTX if s == PROC and (b.x in ctx_names or b.y in ctx_names) else s) for b, s in self.binders
        )
        return State(binders, self.nodes)

    def rename(self, mapping: Dict[str, str]) -> "State":
        return State(
            tuple((b.renamed(mapping), s) for b, s in self.binders),
            tuple((rename(n, mapping), s) for n, s in self.nodes),
        )


def state_of(p: Process, side: str = PROC) -> State:
    nf = normal_form(p)
    return State(tuple((b, side) for b in nf.binders), tuple((n, side) for n in nf.nodes))


def split_state(ctx: Process, proc: Process) -> State:
    """Flatten ``ctx[proc]`` keeping track of which side each part is on."""
    if count_holes(ctx) != 1:
        raise ValueError("an evaluation context needs exactly one hole")
    pf = free_names(proc)
    used = set(free_names(ctx))
    cb: List[Binder] = []
    cn: List[Process] = []
    flatten(ctx, used, cb, cn)
    hole_ok = any(isinstance(n, Hole) for n in cn)
    if not hole_ok:
        raise ValueError("the hole of an evaluation context must not sit under a prefix")
    # A context binder renamed while flattening would no longer bind the
    # process's occurrences of it.
    clashing = _renamed_binders(ctx) & pf
    if clashing:
        raise ValueError(f"context shadows interface names {sorted(clashing)}")
    cn = [n for n in cn if not isinstance(n, Hole)]
    used |= {n for b in cb for n in b.names}
    for n in cn:
        used |= free_names(n)
    used |= pf
    pb: List[Binder] = []
    pn: List[Process] = []
    flatten(proc, used, pb, pn)
    return State(
        tuple([(b, CTX) for b in cb] + [(b, PROC) for b in pb]),
        tuple([(n, CTX) for n in cn] + [(n, PROC) for n in pn]),
    ).settle()


def _binder_names(p: Process) -> List[str]:
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Res):
            out.extend((q.x, q.y))
            stack.append(q.body)
        elif isinstance(q, Par):
            stack.extend((q.left, q.right))
    return out


def _renamed_binders(ctx: Process) -> set:
    """Context binder names that flattening may rename: repeats and clashes."""
    seen = set(free_names(ctx))
    clashed = set()
    for n in _binder_names(ctx):
        if n in seen:
            clashed.add(n)
        seen.add(n)
    return clashed


# --------------------------------------------------------------------------
# redexes and reduction


@dataclass(frozen=True)
class Redex:
    kind: str
    out_name: str
    in_name: str
    label: Optional[str]
    binder_index: int
    out_index: int
    in_index: int


def _match(out: Process, inp: Process) -> Optional[Tuple[str, Optional[str]]]:
    if isinstance(out, Close) and isinstance(inp, Wait):
        return "close-wait", None
    if isinstance(out, Send) and isinstance(inp, Recv):
        return "send-recv", None
    if isinstance(out, Select) and isinstance(inp, Branch):
        if out.label in inp.arm_map:
            return "sel-bra", out.label
    return None


def find_redexes(state: State) -> List[Redex]:
    by_subject: Dict[str, List[int]] = {}
    for i, (n, _) in enumerate(state.nodes):
        s = subject(n)
        if s is not None:
            by_subject.setdefault(s, []).append(i)
    found = []
    for bi, (b, _) in enumerate(state.binders):
        for u, v in ((b.x, b.y), (b.y, b.x)):
            for oi in by_subject.get(u, ()):
                out = state.nodes[oi][0]
                if not is_output(out):
                    continue
                for ii in by_subject.get(v, ()):
                    inp = state.nodes[ii][0]
                    if not is_input(inp):
                        continue
                    m = _match(out, inp)
                    if m is not None:
                        found.append(Redex(m[0], u, v, m[1], bi, oi, ii))
    return found


def contractum(out: Process, inp: Process) -> Process:
    if isinstance(inp, Wait):
        return inp.cont
    if isinstance(inp, Branch):
        return rename(inp.arm_map[out.label], {inp.z: out.b})
    if isinstance(inp, Recv):
        return rename(inp.cont, {inp.y: out.a, inp.z: out.b})
    raise TypeError(f"no contractum for {inp!r}")


def fire(state: State, r: Redex) -> State:
    out, _ = state.nodes[r.out_index]
    inp, side = state.nodes[r.in_index]
    cont = contractum(out, inp)
    binders = [bs for i, bs in enumerate(state.binders) if i != r.binder_index]
    nodes = [ns for i, ns in enumerate(state.nodes) if i not in (r.out_index, r.in_index)]
    used = state.names_in_use()
    nb: List[Binder] = []
    nn: List[Process] = []
    flatten(cont, used, nb, nn)
    binders += [(b, side) for b in nb]
    nodes += [(n, side) for n in nn]
    return State(tuple(binders), tuple(nodes)).settle()


def classify(state: State, r: Redex) -> str:
    sides = {state.binders[r.binder_index][1], state.nodes[r.out_index][1], state.nodes[r.in_index][1]}
    if sides == {CTX}:
        return "context"
    if sides == {PROC}:
        return "process"
    return "interface"


@dataclass(frozen=True)
class RedexReport:
    kind: str
    subjects: Tuple[str, str]
    label: Optional[str]
    context: Process
    redex: Process
    contractum: Process
    reduct: Process

    def step_line(self) -> str:
        lab = f" [{self.label}]" if self.label else ""
        return f"STEP {self.kind} ({self.subjects[0]},{self.subjects[1]}){lab}"


def enumerate_redexes(p: Process) -> List[RedexReport]:
    st = state_of(p)
    reports = []
    for r in find_redexes(st):
        b, _ = st.binders[r.binder_index]
        out, inp = st.nodes[r.out_index][0], st.nodes[r.in_index][0]
        others_b = [bb for i, (bb, _) in enumerate(st.binders) if i != r.binder_index]
        others_n = [n for i, (n, _) in enumerate(st.nodes) if i not in (r.out_index, r.in_index)]
        ctx = rebuild(others_b, [Hole()] + others_n)
        redex = b.wrap(Par(out, inp))
        reports.append(
            RedexReport(r.kind, (r.out_name, r.in_name), r.label, ctx, redex, contractum(out, inp),
                        fire(st, r).whole())
        )
    reports.sort(key=lambda rep: (canonical_key(rep.reduct), rep.kind, rep.subjects))
    return reports


def reduce_all(p: Process) -> List[Process]:
    """One-step reducts of ``p``, one per congruence class, in canonical order."""
    st = state_of(p)
    out: Dict[str, Process] = {}
    for r in find_redexes(st):
        q = fire(st, r).whole()
        out.setdefault(canonical_key(q), q)
    return [out[k] for k in sorted(out)]


def reachable_states(p: Process, limit: int = 100_000) -> Tuple[Dict[str, Process], Dict[str, str]]:
    """All processes reachable from ``p`` and, for terminal ones, a status.

    Terminal states with no nodes left are ``finished``; other terminal
    states are ``deadlocked``.
    """
    seen: Dict[str, Process] = {}
    status: Dict[str, str] = {}
    todo = [p]
    while todo:
        q = todo.pop()
        k = canonical_key(q)
        if k in seen:
            continue
        if len(seen) >= limit:
            raise RuntimeError(f"more than {limit} reachable states")
        seen[k] = q
        succ = reduce_all(q)
        if not succ:
            status[k] = "finished" if not normal_form(q).nodes else "deadlocked"
        todo.extend(succ)
    return seen, status


# --------------------------------------------------------------------------
# evaluation contexts


def is_eval_context(e: Process) -> bool:
    if count_holes(e) != 1:
        return False

    def ok(q):
        if isinstance(q, Hole):
            return True
        if isinstance(q, Par):
            return (count_holes(q.left) == 0 or ok(q.left)) and (count_holes(q.right) == 0 or ok(q.right))
        if isinstance(q, Res):
            return ok(q.body)
        return count_holes(q) == 0

    return ok(e)


def plug(e: Process, p: Process) -> Process:
    """Replace the hole of ``e`` by ``p`` (no renaming: the context may bind names of ``p``)."""
    if isinstance(e, Hole):
        return p
    if isinstance(e, Par):
        return Par(plug(e.left, p), plug(e.right, p))
    if isinstance(e, Res):
        return Res(e.x, e.y, plug(e.body, p), e.type, e.level)
    if count_holes(e) == 0:
        return e
    raise ValueError("the hole of an evaluation context must not sit under a prefix")


def split(closed: Process, target: Process) -> Tuple[Process, Process]:
    """Inverse of :func:`plug` for a sub-term occurring exactly once."""
    hits = []

    def walk(q, rebuild_fn):
        if q == target:
            hits.append(rebuild_fn(Hole()))
            return
        if isinstance(q, Par):
            walk(q.left, lambda h, q=q: rebuild_fn(Par(h, q.right)))
            walk(q.right, lambda h, q=q: rebuild_fn(Par(q.left, h)))
        elif isinstance(q, Res):
            walk(q.body, lambda h, q=q: rebuild_fn(Res(q.x, q.y, h, q.type, q.level)))

    walk(closed, lambda h: h)
    if not hits:
        raise ValueError("the marked declaration does not occur in the process")
    if len(hits) > 1:
        raise ValueError("the marked declaration occurs more than once")
    return hits[0], target


def active_context_output_names(e: Process) -> frozenset:
    st = split_state(e, Inaction())
    return _acon(st)


def active_interface_names(e: Process, p: Process) -> frozenset:
    st = split_state(e, p)
    return _acon(st) | _aon_proc(st)


def _acon(st: State) -> frozenset:
    ctx_nodes = st.side_nodes(CTX)
    ready = {n.x for n in ctx_nodes if is_output(n)}
    used = set()
    for n in ctx_nodes:
        used |= free_names(n)
    out = set()
    for b in st.side_binders(CTX):
        for u, v in ((b.x, b.y), (b.y, b.x)):
            if v in ready and u not in used:
                out.add(u)
    return frozenset(out)


def _aon_proc(st: State) -> frozenset:
    bound = {n for b in st.side_binders(PROC) for n in b.names}
    return frozenset(n.x for n in st.side_nodes(PROC) if is_output(n) and n.x not in bound)


# --------------------------------------------------------------------------
# networks


class Network:
    """A context/process pair seen by an observer at a fixed level."""

    def __init__(self, state: State, lattice: SecrecyLattice, observer: str,
                 interface: Optional[TypingContext] = None, ifc: bool = True):
        self.state = state
        self.ifc = ifc
        self.lattice = lattice
        self.observer = observer
        self._full = _derive_interface(state)
        if interface is None:
            interface = project(lattice, self._full, observer) if self._full is not None else TypingContext()
        self.interface = interface
        self._valid: Optional[bool] = None
        self._key: Optional[str] = None

    @classmethod
    def from_parts(cls, ctx: Process, proc: Process, lattice: SecrecyLattice, observer: str,
                   interface: Optional[TypingContext] = None, ifc: bool = True) -> "Network":
        return cls(split_state(ctx, proc), lattice, observer, interface, ifc)

    @property
    def ctx(self) -> Process:
        return self.state.ctx()

    @property
    def proc(self) -> Process:
        return self.state.proc()

    @property
    def plugged(self) -> Process:
        return self.state.whole()

    @property
    def full_interface(self) -> Optional[TypingContext]:
        return self._full

    def key(self) -> str:
        if self._key is None:
            fixed = sorted(self.interface)
            gamma = ";".join(f"{n}:{e.type}[{e.level}]" for n, e in self.interface.items())
            self._key = gamma + "##" + self.state.key(fixed)
        return self._key

    def is_valid(self) -> bool:
        """Whether the pair satisfies the network conditions with this interface."""
        if self._valid is None:
            self._valid = self._check()
        return self._valid

    def _check(self) -> bool:
        if self._full is None:
            return False
        if project(self.lattice, self._full, self.observer) != self.interface:
            return False
        bottom = self.lattice.bottom
        try:
            check(self.lattice, self.proc, bottom, self._full, self.ifc)
            check_closed(self.lattice, self.plugged, bottom, self.ifc)
        except IllTyped:
            return False
        return True

    def aon(self) -> frozenset:
        return _aon_proc(self.state)

    def acon(self) -> frozenset:
        return _acon(self.state)

    def ain(self) -> frozenset:
        return self.acon() | self.aon()

    def with_state(self, state: State, interface: Optional[TypingContext] = None) -> "Network":
        return Network(state, self.lattice, self.observer, interface, self.ifc)

    def describe(self) -> str:
        from .surface import print_process

        return f"E = {print_process(self.ctx)} ; P = {print_process(self.proc)}"

    def __repr__(self):
        return f"Network({self.describe()})"


def _derive_interface(state: State) -> Optional[TypingContext]:
    pf = set()
    bound_p = {n for b in state.side_binders(PROC) for n in b.names}
    for n in state.side_nodes(PROC):
        pf |= free_names(n)
    pf -= bound_p
    entries = {}
    for n in pf:
        found = state.binder_of(n)
        if found is None or found[1] != CTX:
            return None
        b = found[0]
        if b.type is None or b.level is None:
            return None
        entries[n] = (b.type_of(n), b.level)
    return TypingContext(entries)


@dataclass(frozen=True)
class Step:
    kind: str  # context | process | interface
    redex: str  # close-wait | send-recv | sel-bra
    subjects: Tuple[str, str]
    label: Optional[str]

    def line(self) -> str:
        lab = f" [{self.label}]" if self.label else ""
        return f"STEP {self.redex} ({self.subjects[0]},{self.subjects[1]}){lab} {self.kind}"


def unobservable_moves(n: Network) -> List[Tuple[Step, Network]]:
    out = []
    for r in find_redexes(n.state):
        kind = classify(n.state, r)
        succ = n.with_state(fire(n.state, r), n.interface)
        if succ.full_interface is None:
            continue
        if project(n.lattice, succ.full_interface, n.observer) != n.interface:
            # an exchange on an observable interface name
            assert kind == "interface", "internal step changed the interface"
            continue
        if not succ.is_valid():
            continue
        if kind == "interface":
            assert r.out_name not in n.interface and r.in_name not in n.interface
        out.append((Step(kind, r.kind, (r.out_name, r.in_name), r.label), succ))
    return out


def unobservable_step(n: Network) -> List[Network]:
    return [m for _, m in unobservable_moves(n)]


def exhaust_unobservable(n: Network, limit: int = 200_000) -> List[Network]:
    """Terminal networks reachable by unobservable steps, in canonical order."""
    seen = set()
    terminal: Dict[str, Network] = {}
    todo = [n]
    while todo:
        m = todo.pop()
        k = m.key()
        if k in seen:
            continue
        seen.add(k)
        if len(seen) > limit:
            raise RuntimeError(f"more than {limit} intermediate networks")
        succ = unobservable_step(m)
        if not succ:
            terminal[k] = m
        todo.extend(succ)
    return [terminal[k] for k in sorted(terminal)]


def exhaust_with_traces(n: Network, limit: int = 200_000) -> List[Tuple[Network, List[str]]]:
    """Like :func:`exhaust_unobservable` but also returns one step trace per terminal."""
    seen = set()
    terminal: Dict[str, Tuple[Network, List[str]]] = {}
    todo = [(n, [])]
    while todo:
        m, trace = todo.pop()
        k = m.key()
        if k in seen:
            continue
        seen.add(k)
        if len(seen) > limit:
            raise RuntimeError(f"more than {limit} intermediate networks")
        moves = unobservable_moves(m)
        if not moves:
            terminal[k] = (m, trace)
        for step, succ in moves:
            todo.append((succ, trace + [step.line()]))
    return [terminal[k] for k in sorted(terminal)]

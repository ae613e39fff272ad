"""Session types, duality, typing contexts, projection and weight."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Tuple

from .lattice import SecrecyLattice


class SessionType:
    def __str__(self) -> str:
        from .surface import print_type

        return print_type(self)


@dataclass(frozen=True)
class One(SessionType):
    pass


@dataclass(frozen=True)
class Bot(SessionType):
    pass


def _sorted_arms(arms):
    if isinstance(arms, Mapping):
        arms = tuple(arms.items())
    arms = tuple(sorted(arms, key=lambda kv: kv[0]))
    if not arms:
        raise ValueError("a choice type needs at least one arm")
    labels = [lab for lab, _ in arms]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate label in {labels}")
    return arms


@dataclass(frozen=True)
class Plus(SessionType):
    arms: Tuple[Tuple[str, SessionType], ...]

    def __post_init__(self):
        object.__setattr__(self, "arms", _sorted_arms(self.arms))

    @property
    def arm_map(self) -> dict:
        return dict(self.arms)


@dataclass(frozen=True)
class With(SessionType):
    arms: Tuple[Tuple[str, SessionType], ...]

    def __post_init__(self):
        object.__setattr__(self, "arms", _sorted_arms(self.arms))

    @property
    def arm_map(self) -> dict:
        return dict(self.arms)


@dataclass(frozen=True)
class Tensor(SessionType):
    payload: SessionType
    cont: SessionType


@dataclass(frozen=True)
class ParT(SessionType):
    """The multiplicative disjunction, receive-then-continue."""

    payload: SessionType
    cont: SessionType


def dual(a: SessionType) -> SessionType:
    if isinstance(a, One):
        return Bot()
    if isinstance(a, Bot):
        return One()
    if isinstance(a, Plus):
        return With(tuple((lab, dual(t)) for lab, t in a.arms))
    if isinstance(a, With):
        return Plus(tuple((lab, dual(t)) for lab, t in a.arms))
    if isinstance(a, Tensor):
        return ParT(dual(a.payload), dual(a.cont))
    if isinstance(a, ParT):
        return Tensor(dual(a.payload), dual(a.cont))
    raise TypeError(f"not a session type: {a!r}")


def weight(a: SessionType) -> int:
    if isinstance(a, (One, Bot)):
        return 1
    if isinstance(a, (Tensor, ParT)):
        return weight(a.payload) + weight(a.cont) + 1
    if isinstance(a, (Plus, With)):
        return max(weight(t) for _, t in a.arms) + 1
    raise TypeError(f"not a session type: {a!r}")


def is_output_type(a: SessionType) -> bool:
    """Whether the endpoint's next action is an output."""
    return isinstance(a, (One, Plus, Tensor))


def has_no_output(a: SessionType) -> bool:
    """True when no behaviour of ``a`` ever performs an output."""
    if isinstance(a, Bot):
        return True
    if isinstance(a, With):
        return all(has_no_output(t) for _, t in a.arms)
    if isinstance(a, ParT):
        return has_no_output(a.payload) and has_no_output(a.cont)
    return False


def type_size(a: SessionType) -> int:
    if isinstance(a, (One, Bot)):
        return 1
    if isinstance(a, (Tensor, ParT)):
        return 1 + type_size(a.payload) + type_size(a.cont)
    return 1 + sum(type_size(t) for _, t in a.arms)


class Entry(NamedTuple):
    type: SessionType
    level: str


class TypingContext(Mapping):
    """An immutable finite map from names to (type, level) entries."""

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping | Iterable = ()):
        if isinstance(entries, Mapping):
            entries = entries.items()
        d = {}
        for name, entry in entries:
            if name in d:
                raise ValueError(f"name {name} occurs twice in a typing context")
            d[name] = Entry(*entry)
        self._items = dict(sorted(d.items()))
        self._hash = None

    def __getitem__(self, name) -> Entry:
        return self._items[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other):
        if isinstance(other, TypingContext):
            return self._items == other._items
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._items.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{n}: {e.type}[{e.level}]" for n, e in self._items.items())
        return f"TypingContext({body})"

    def extend(self, *triples) -> "TypingContext":
        d = dict(self._items)
        for name, ty, level in triples:
            if name in d:
                raise ValueError(f"name {name} already in context")
            d[name] = Entry(ty, level)
        return TypingContext(d)

    def without(self, *names) -> "TypingContext":
        return TypingContext({n: e for n, e in self._items.items() if n not in names})

    def restrict(self, names) -> "TypingContext":
        return TypingContext({n: e for n, e in self._items.items() if n in names})


def project(lattice: SecrecyLattice, gamma: TypingContext, observer) -> TypingContext:
    """Keep the entries whose level is below the observer."""
    lattice.leq(observer, observer)
    return TypingContext({n: e for n, e in gamma.items() if lattice.leq(e.level, observer)})


def context_weight(gamma: TypingContext) -> int:
    return sum(weight(e.type) for e in gamma.values())

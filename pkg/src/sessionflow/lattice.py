"""Finite secrecy lattices given by covering edges."""

from __future__ import annotations

from itertools import product
from typing import Iterable, Tuple


class LatticeError(ValueError):
    pass


class UnknownLevel(LatticeError, KeyError):
    def __init__(self, level):
        super().__init__(f"unknown secrecy level {level!r}")
        self.level = level

    def __str__(self):
        return self.args[0]


class SecrecyLattice:
    """A finite lattice of secrecy levels.

    ``edges`` are pairs ``(low, high)``; the order is their reflexive and
    transitive closure.  Construction fails unless every pair of levels has
    a unique join and meet.
    """

    def __init__(self, edges: Iterable[Tuple[str, str]] = (), levels: Iterable[str] = ()):
        edges = frozenset((a, b) for a, b in edges)
        lv = set(levels)
        for a, b in edges:
            lv.update((a, b))
        if not lv:
            raise LatticeError("a lattice needs at least one level")
        self.edges = edges
        self.levels = frozenset(lv)
        self._leq = self._closure(self.levels, edges)
        self._check_antisymmetric()
        self._join = {}
        self._meet = {}
        for a, b in product(self.levels, repeat=2):
            self._join[a, b] = self._bound(a, b, upper=True)
            self._meet[a, b] = self._bound(a, b, upper=False)

    @staticmethod
    def _closure(levels, edges):
        leq = {(a, a) for a in levels} | set(edges)
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in product(list(leq), repeat=2):
                if b == c and (a, d) not in leq:
                    leq.add((a, d))
                    changed = True
        return frozenset(leq)

    def _check_antisymmetric(self):
        for a, b in self._leq:
            if a != b and (b, a) in self._leq:
                raise LatticeError(f"order is cyclic between {a} and {b}")

    def _bound(self, a, b, upper):
        if upper:
            cands = [c for c in self.levels if (a, c) in self._leq and (b, c) in self._leq]
            best = [c for c in cands if all((c, o) in self._leq for o in cands)]
        else:
            cands = [c for c in self.levels if (c, a) in self._leq and (c, b) in self._leq]
            best = [c for c in cands if all((o, c) in self._leq for o in cands)]
        if len(best) != 1:
            what = "join" if upper else "meet"
            raise LatticeError(f"levels {a} and {b} have no unique {what}")
        return best[0]

    def _known(self, *levels):
        for c in levels:
            if c not in self.levels:
                raise UnknownLevel(c)

    def leq(self, c, d) -> bool:
        self._known(c, d)
        return (c, d) in self._leq

    def join(self, c, d):
        self._known(c, d)
        return self._join[c, d]

    def meet(self, c, d):
        self._known(c, d)
        return self._meet[c, d]

    @property
    def order(self) -> frozenset:
        return self._leq

    @property
    def bottom(self):
        return next(c for c in self.levels if all((c, o) in self._leq for o in self.levels))

    @property
    def top(self):
        return next(c for c in self.levels if all((o, c) in self._leq for o in self.levels))

    def sorted_levels(self):
        """Levels ordered bottom-up, ties broken by name."""
        return sorted(self.levels, key=lambda c: (sum((o, c) in self._leq for o in self.levels), c))

    def above(self, c):
        return [d for d in self.sorted_levels() if self.leq(c, d)]

    def covering_edges(self):
        """Hasse edges of the closed order, sorted."""
        out = []
        for a, b in self._leq:
            if a == b:
                continue
            if not any(
                (a, m) in self._leq and (m, b) in self._leq and m not in (a, b) for m in self.levels
            ):
                out.append((a, b))
        return sorted(out)

    def __eq__(self, other):
        return isinstance(other, SecrecyLattice) and self._leq == other._leq

    def __hash__(self):
        return hash(self._leq)

    def __repr__(self):
        edges = "; ".join(f"{a} < {b}" for a, b in self.covering_edges())
        return f"SecrecyLattice({edges or ', '.join(sorted(self.levels))})"


def two_point() -> SecrecyLattice:
    """The lattice ``L < H``."""
    return SecrecyLattice([("L", "H")])


def lattice_leq(lattice: SecrecyLattice, c, d) -> bool:
    return lattice.leq(c, d)


def lattice_join(lattice: SecrecyLattice, c, d):
    return lattice.join(c, d)


def lattice_meet(lattice: SecrecyLattice, c, d):
    return lattice.meet(c, d)

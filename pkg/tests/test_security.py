import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sessionflow.checker import Judgment
from sessionflow.contexts import enumerate_context_pairs
from sessionflow.generators import rearrange
from sessionflow.lattice import two_point
from sessionflow.semantics import Network, normal_form, struct_congruent, unobservable_step
from sessionflow.security import (
    ContextSpec,
    dsni_equivalent,
    fundamental_check,
    observably_equivalent,
    quasi_running_secrecy,
    relevant,
    replay,
    term_related,
    value_related,
)
from sessionflow.session_types import Bot, One, Plus, TypingContext
from sessionflow.surface import parse_file, parse_process
from sessionflow.syntax import Close, Inaction, Select, Wait
from oracles import path_oracle
from strategies import judgments

LH = two_point()


def _judgment(f, name):
    d = f.decl(name)
    return Judgment(f.lattice, d.body, d.running, d.interface)


def _net(ctx, proc, observer="L"):
    return Network.from_parts(parse_process(ctx), parse_process(proc), LH, observer)


class TestQuasi:
    def test_raised_by_subject(self):
        assert quasi_running_secrecy(LH, Close("x"), "L", TypingContext({"x": (One(), "H")})) == "H"

    def test_same_level(self):
        assert quasi_running_secrecy(LH, Wait("x", Inaction()), "L", TypingContext({"x": (Bot(), "L")})) == "L"

    def test_running_dominates(self):
        g = TypingContext({"x": (Plus({"l": One()}), "L")})
        assert quasi_running_secrecy(LH, Select("x", "b", "l"), "H", g) == "H"

    def test_subject_missing(self):
        with pytest.raises(KeyError):
            quasi_running_secrecy(LH, Close("x"), "L", TypingContext())


CHAIN = "new (x : end! [L]) y . new (u : end! [L]) w . (close x | wait y; close u | wait w; close s)"


class TestRelevance:
    def test_high_government_branch(self, governments):
        j = _judgment(governments, "GovH")
        r = relevant(LH, "L", normal_form(j.process), j.context, j.running)
        assert r.relevant_nodes == (j.process,)

    def test_high_selection_excluded(self, continuations):
        j = _judgment(continuations, "SecureAct")
        r = relevant(LH, "L", normal_form(j.process), j.context, j.running)
        assert [type(n).__name__ for n in r.relevant_nodes] == ["Wait"]
        assert r.relevant_binders == ()

    def test_all_high_is_empty(self):
        g = TypingContext({"s": (One(), "H")})
        r = relevant(LH, "L", normal_form(parse_process(CHAIN)), g, "L")
        assert r.relevant_nodes == () and r.relevant_binders == ()
        assert struct_congruent(r.relevant_form, Inaction())

    def test_chain_fully_relevant(self):
        g = TypingContext({"s": (One(), "L")})
        nf = normal_form(parse_process(CHAIN))
        r = relevant(LH, "L", nf, g, "L")
        assert len(r.relevant_nodes) == 3
        assert {b.pair for b in r.relevant_binders} == nf.binder_pairs
        assert struct_congruent(r.relevant_form, nf.to_process())

    @given(judgments(max_prefixes=4), st.data())
    def test_matches_path_oracle(self, j, data):
        lat, p, d, g = j
        nf = normal_form(p)
        if len(nf.nodes) > 3:
            return
        xi = data.draw(st.sampled_from(sorted(lat.levels)))
        r = relevant(lat, xi, nf, g, d)
        nodes, binders = path_oracle(lat, xi, nf, g, d)
        assert set(r.node_indices) == nodes
        assert {b.pair for b in r.relevant_binders} == binders


class TestObservableEquivalence:
    def test_secure_continuations(self, continuations):
        assert observably_equivalent(LH, "L", _judgment(continuations, "SecureAct"),
                                     _judgment(continuations, "SecureWait"))

    def test_insecure_continuations(self, continuations):
        assert not observably_equivalent(LH, "L", _judgment(continuations, "LeakInf1"),
                                         _judgment(continuations, "LeakInf2"))

    def test_high_observer_sees_everything(self, continuations):
        assert not observably_equivalent(LH, "H", _judgment(continuations, "SecureAct"),
                                         _judgment(continuations, "SecureWait"))

    @given(judgments(max_prefixes=8), st.integers(0, 2**32 - 1), st.data())
    def test_reflexive_and_congruence_invariant(self, j, seed, data):
        lat, p, d, g = j
        xi = data.draw(st.sampled_from(sorted(lat.levels)))
        j1 = Judgment(lat, p, d, g)
        q, _ = rearrange(random.Random(seed), p)
        j2 = Judgment(lat, q, d, g)
        assert observably_equivalent(lat, xi, j1, j1)
        assert observably_equivalent(lat, xi, j1, j2)
        assert observably_equivalent(lat, xi, j2, j1)


PLUS_CTX = "new (x : +{ l: end!, m: end! } [L]) y . (hole | y?(z){ l: wait z; 0, m: wait z; 0 })"


class TestValueAndTerm:
    def test_one_case(self):
        n = _net("new (s : end! [L]) t . (hole | wait t; 0)", "close s")
        assert value_related(n, n, "s")
        assert term_related(n, n)

    def test_plus_labels_differ(self):
        n1 = _net(PLUS_CTX, "new (bx : end? [L]) b . (x!l(bx) | close b)")
        n2 = _net(PLUS_CTX, "new (bx : end? [L]) b . (x!m(bx) | close b)")
        v = value_related(n1, n2, "x")
        assert not v and v.failed_clause == "val-oplus-label" and v.interface_name == "x"
        again = replay(v)
        assert (again.related, again.failed_clause) == (False, "val-oplus-label")

    def test_plus_same_label(self):
        n = _net(PLUS_CTX, "new (bx : end? [L]) b . (x!l(bx) | close b)")
        assert value_related(n, n, "x")

    def test_with_vacuous_when_context_not_ready(self):
        ready = "new (x : &{ l: end? } [L]) y . (hole | new (bx : end? [L]) b . (y!l(bx) | close b))"
        blocked = ("new (x : &{ l: end? } [L]) y . (hole | new (u : end! [L]) v . "
                   "(close u | wait v; new (bx : end? [L]) b . (y!l(bx) | close b)))")
        proc = "x?(z){ l: wait z; 0 }"
        v = value_related(_net(ready, proc), _net(blocked, proc), "x")
        assert v.related
        assert v.notes

    def test_replay_needs_a_failure(self):
        n = _net("new (s : end! [L]) t . (hole | wait t; 0)", "close s")
        with pytest.raises(ValueError):
            replay(term_related(n, n))

    def test_deadlock_against_emitter(self, programs):
        f = parse_file(programs / "deadlock.sp")
        ctx = "new (s : end! [L]) t . (hole | wait t; 0)"
        emits = Network.from_parts(parse_process(ctx), f.decl("Emits").body, LH, "L")
        stuck = Network.from_parts(parse_process(ctx), f.decl("Stuck").body, LH, "L")
        for a, b in ((emits, stuck), (stuck, emits)):
            v = term_related(a, b)
            assert not v and v.failed_clause == "term-aon" and v.interface_name == "s"
            assert replay(v).failed_clause == "term-aon"
        assert term_related(stuck, stuck)

    @given(judgments(max_prefixes=6), st.data())
    @settings(max_examples=30)
    def test_successor_catches_up_with_origin(self, j, data):
        lat, p, d, g = j
        xi = data.draw(st.sampled_from(sorted(lat.levels)))
        jj = Judgment(lat, p, d, g)
        pairs = enumerate_context_pairs(lat, xi, jj, jj, depth=1, max_pairs=1)
        if not pairs:
            return
        n = Network.from_parts(pairs[0][0], p, lat, xi)
        for m in unobservable_step(n):
            # every terminal state of a successor is a terminal state of the origin
            assert term_related(m, n)


class TestDsni:
    def test_secure_pair_related(self, continuations):
        v = dsni_equivalent(LH, "L", _judgment(continuations, "SecureAct"), _judgment(continuations, "SecureWait"))
        assert v.related and v.pairs_checked >= 1

    def test_insecure_pair_not_related(self, continuations):
        v = dsni_equivalent(LH, "L", _judgment(continuations, "LeakInf1"), _judgment(continuations, "LeakInf2"))
        assert not v.related
        assert (v.failed_clause, v.interface_name) == ("val-oplus-label", "aL")
        assert any("secrecy" in note for note in v.notes)

    def test_high_government_self(self, governments):
        j = _judgment(governments, "GovH")
        v = dsni_equivalent(LH, "L", j, j, ContextSpec(depth=2))
        assert v.related and v.pairs_checked >= 1

    def test_projection_mismatch(self, programs):
        f = parse_file(programs / "deadlock.sp")
        other = Judgment(LH, Close("t"), "L", TypingContext({"t": (One(), "L")}))
        v = dsni_equivalent(LH, "L", _judgment(f, "Emits"), other)
        assert not v and v.failed_clause == "precondition-projection"
        assert v.pairs_checked == 0

    def test_explicit_pairs_strict(self, programs):
        f = parse_file(programs / "deadlock.sp")
        j = _judgment(f, "Emits")
        wrong = parse_process("new (a : end! [L]) b . (hole | close a | wait b; 0)")
        v = dsni_equivalent(LH, "L", j, j, ContextSpec(pairs=[(wrong, wrong)], strict=True))
        assert v.failed_clause == "context-closure"
        lax = dsni_equivalent(LH, "L", j, j, ContextSpec(pairs=[(wrong, wrong)]))
        assert lax.related and lax.pairs_skipped == 1 and lax.pairs_checked == 0


class TestFundamental:
    def test_reflexive_instance(self, governments):
        j = _judgment(governments, "GovL")
        assert fundamental_check(LH, "L", j, j)

    def test_secure_pair(self, continuations):
        v = fundamental_check(LH, "L", _judgment(continuations, "SecureAct"), _judgment(continuations, "SecureWait"))
        assert v.related and v.pairs_checked >= 1

    def test_antecedent_false(self, continuations):
        v = fundamental_check(LH, "L", _judgment(continuations, "LeakInf1"), _judgment(continuations, "LeakInf2"))
        assert v.related and v.pairs_checked == 0
        assert "not observably equivalent" in v.notes[0]

    @given(judgments(max_prefixes=6), st.data())
    @settings(max_examples=20)
    def test_self_related(self, j, data):
        lat, p, d, g = j
        xi = data.draw(st.sampled_from(sorted(lat.levels)))
        jj = Judgment(lat, p, d, g)
        v = fundamental_check(lat, xi, jj, jj, ContextSpec(depth=2, max_pairs=8))
        assert v.related, v.to_dict()

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sessionflow.generators import rearrange
from sessionflow.lattice import two_point
from sessionflow.semantics import (
    Network,
    active_context_output_names,
    active_interface_names,
    enumerate_redexes,
    exhaust_unobservable,
    exhaust_with_traces,
    is_node,
    normal_form,
    plug,
    reachable_states,
    reduce_all,
    split,
    struct_congruent,
    unobservable_step,
)
from sessionflow.surface import parse_process
from sessionflow.syntax import Close, Hole, Inaction, Par, Res, Wait, active_output_names, alpha_equivalent
from strategies import judgments, processes

LH = two_point()


class TestNormalForm:
    def test_nested_example(self):
        p = Par(Res("u", "w", Par(Res("x", "y", Par(Wait("z", Close("x")), Wait("y", Close("u")))),
                                  Wait("w", Inaction()))), Inaction())
        nf = normal_form(p)
        assert nf.binder_pairs == {frozenset("uw"), frozenset("xy")}
        assert sorted(map(repr, nf.nodes)) == sorted(map(repr, [
            Wait("z", Close("x")), Wait("y", Close("u")), Wait("w", Inaction())]))

    def test_inaction(self):
        nf = normal_form(Inaction())
        assert nf.binders == () and nf.nodes == ()

    def test_single_node(self):
        nf = normal_form(Close("x"))
        assert nf.binders == () and nf.nodes == (Close("x"),)

    @given(processes)
    def test_nodes_and_round_trip(self, p):
        nf = normal_form(p)
        assert all(is_node(n) for n in nf.nodes)
        assert struct_congruent(nf.to_process(), p)


class TestCongruence:
    def test_par_nil(self):
        p = Wait("x", Close("y"))
        assert struct_congruent(Par(p, Inaction()), p)

    def test_res_symm(self):
        p = Par(Close("x"), Wait("y", Inaction()))
        assert struct_congruent(Res("x", "y", p), Res("y", "x", p))

    def test_free_names_differ(self):
        assert not struct_congruent(Close("x"), Close("y"))

    def test_label_matters(self):
        assert not struct_congruent(parse_process("x!l(b)"), parse_process("x!m(b)"))

    @given(processes, processes, processes)
    def test_equivalence(self, p, q, r):
        assert struct_congruent(p, p)
        assert struct_congruent(p, q) == struct_congruent(q, p)
        if struct_congruent(p, q) and struct_congruent(q, r):
            assert struct_congruent(p, r)

    @given(judgments(max_prefixes=8), st.integers(0, 2**32 - 1))
    def test_rearrangements_congruent_and_reduce_alike(self, j, seed):
        _, p, _, _ = j
        q, _ = rearrange(random.Random(seed), p)
        assert struct_congruent(p, q)
        rp, rq = reduce_all(p), reduce_all(q)
        assert len(rp) == len(rq)
        assert all(any(struct_congruent(a, b) for b in rq) for a in rp)


class TestRedexes:
    def test_close_wait(self):
        cont = Close("u")
        reports = enumerate_redexes(Res("x", "y", Par(Close("x"), Wait("y", cont))))
        assert [r.kind for r in reports] == ["close-wait"]
        assert struct_congruent(reports[0].reduct, cont)

    def test_system_first_redex(self, governments):
        reports = enumerate_redexes(governments.decl("System").body)
        assert len(reports) == 1
        r = reports[0]
        assert (r.kind, r.subjects, r.label) == ("sel-bra", ("aH", "aL"), "oc2")

    def test_deadlocked_cycle(self):
        p = Res("x", "y", Res("z", "w", Par(Wait("x", Close("z")), Wait("w", Close("y")))))
        assert enumerate_redexes(p) == []
        assert reduce_all(p) == []

    def test_label_mismatch_no_redex(self):
        p = Res("x", "y", Par(parse_process("x!l(b)"), parse_process("y?(z){ m: wait z; 0 }")))
        assert enumerate_redexes(p) == []

    def test_two_independent(self):
        p = parse_process("new (a : end! [L]) b . new (c : end! [L]) d . (close a | wait b; 0 | close c | wait d; close u)")
        assert len(reduce_all(p)) == 2

    def test_system_reduces_to_singleton(self, governments):
        assert len(reduce_all(governments.decl("System").body)) == 1

    @given(judgments(closed=True, max_prefixes=8))
    def test_reports_plug_back(self, j):
        _, p, _, _ = j
        reducts = reduce_all(p)
        for r in enumerate_redexes(p):
            q = plug(r.context, r.contractum)
            assert struct_congruent(q, r.reduct)
            assert any(struct_congruent(q, s) for s in reducts)

    def test_reachable_statuses(self, programs):
        from sessionflow.surface import parse_file

        f = parse_file(programs / "deadlock.sp")
        _, status = reachable_states(f.decl("Cycle").body)
        assert set(status.values()) == {"deadlocked"}
        _, status = reachable_states(f.decl("Chain").body)
        assert set(status.values()) == {"finished"}


class TestContexts:
    E = Res("u", "w", Res("x", "y", Res("z", "v", Par(Wait("x", Close("u")), Par(Close("z"), Hole())))))
    P = Par(Close("y"), Wait("w", Wait("v", Inaction())))

    def test_plug_hole(self):
        assert plug(Hole(), Close("x")) == Close("x")

    def test_plug_system(self, governments):
        ctx = governments.decl("SystemCtx").body
        gov_h = governments.decl("GovH").body
        assert plug(ctx, gov_h) == governments.decl("System").body

    def test_split_inverts_plug(self, governments):
        ctx = governments.decl("SystemCtx").body
        gov_h = governments.decl("GovH").body
        assert split(plug(ctx, gov_h), gov_h) == (ctx, gov_h)

    def test_split_missing(self):
        with pytest.raises(ValueError):
            split(Close("x"), Close("y"))

    def test_plug_under_prefix_rejected(self):
        with pytest.raises(ValueError):
            plug(Wait("x", Hole()), Inaction())

    def test_active_names(self):
        assert active_output_names(self.P) == {"y"}
        assert active_context_output_names(self.E) == {"v"}
        assert active_interface_names(self.E, self.P) == {"y", "v"}

    def test_acon_of_hole(self):
        assert active_context_output_names(Hole()) == frozenset()

    def test_context_alpha(self):
        renamed_u = Res("a", "w", Res("x", "y", Res("z", "v", Par(Wait("x", Close("a")), Par(Close("z"), Hole())))))
        renamed_w = Res("u", "a", Res("x", "y", Res("z", "v", Par(Wait("x", Close("u")), Par(Close("z"), Hole())))))
        assert alpha_equivalent(self.E, renamed_u)
        assert not alpha_equivalent(self.E, renamed_w)


def _net(ctx, proc):
    return Network.from_parts(parse_process(ctx) if isinstance(ctx, str) else ctx,
                              parse_process(proc) if isinstance(proc, str) else proc, LH, "L")


class TestUnobservable:
    def test_government_network_terminal(self, governments):
        n = _net(governments.decl("SystemCtx").body, governments.decl("GovH").body)
        assert n.is_valid()
        assert set(n.interface) == {"aL"}
        # the only redex is the selection on aH, whose mate aL is observable
        assert unobservable_step(n) == []

    def test_context_internal_step(self):
        n = _net("new (a : end! [L]) b . (close a | wait b; 0 | hole)", "0")
        assert n.is_valid()
        succ = unobservable_step(n)
        assert len(succ) == 1
        assert succ[0].proc == Inaction()

    def test_terminal_input(self):
        n = _net("new (s : end? [L]) t . (close t | hole)", "wait s; 0")
        assert [t.key() for t in exhaust_unobservable(n)] == [n.key()]

    def test_chain(self, programs):
        from sessionflow.surface import parse_file

        chain = parse_file(programs / "deadlock.sp").decl("Chain").body
        n = _net(Hole(), chain)
        results = exhaust_with_traces(n)
        assert len(results) == 1
        term, trace = results[0]
        assert len(trace) == 2 and all(line.endswith(" process") for line in trace)
        assert normal_form(term.proc).nodes == ()

    def test_diamond_dedup(self):
        n = _net(Hole(), "new (a : end! [L]) b . new (c : end! [L]) d . (close a | wait b; 0 | close c | wait d; 0)")
        assert len(unobservable_step(n)) == 2
        assert len(exhaust_unobservable(n)) == 1

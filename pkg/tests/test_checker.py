import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sessionflow.checker import (
    SECRECY,
    UNBOUND,
    IllTyped,
    check,
    check_closed,
    expand_forwarder,
    forwarder_context,
    typechecks,
)
from sessionflow.generators import rearrange, random_forwarder
from sessionflow.lattice import two_point
from sessionflow.semantics import reduce_all, struct_congruent
from sessionflow.session_types import Bot, One, Plus, TypingContext
from sessionflow.surface import parse_file
from sessionflow.syntax import Close, Inaction, Wait, all_names, free_names, substitute
from strategies import judgments, session_types

LH = two_point()


def _check_decl(f, name, **kw):
    d = f.decl(name)
    return check(f.lattice, d.body, d.running, d.interface, **kw)


class TestExamples:
    def test_high_government_accepted(self, governments):
        deriv = _check_decl(governments, "GovH")
        assert deriv.rule == "typ-bra"

    def test_every_secure_declaration_accepted(self, governments):
        for d in governments.decls:
            if not d.is_context:
                _check_decl(governments, d.name)

    def test_closed_system(self, governments):
        check_closed(LH, governments.decl("System").body, "L")

    def test_swapped_levels_rejected(self, programs):
        f = parse_file(programs / "governments-swapped.sp")
        with pytest.raises(IllTyped) as info:
            _check_decl(f, "System")
        assert {"typ-sel", "typ-close"} <= info.value.rules
        assert SECRECY in info.value.kinds

    def test_insecure_system_rejected(self, programs):
        f = parse_file(programs / "governments-insecure.sp")
        with pytest.raises(IllTyped) as info:
            _check_decl(f, "System")
        assert SECRECY in info.value.kinds

    def test_insecure_accepted_without_secrecy(self, programs):
        f = parse_file(programs / "governments-insecure.sp")
        _check_decl(f, "System", ifc=False)

    def test_inaction(self):
        assert check_closed(LH, Inaction(), "H").rule == "typ-inact"

    def test_unbound_close(self):
        with pytest.raises(IllTyped) as info:
            check_closed(LH, Close("x"), "L")
        assert info.value.first.kind == UNBOUND
        assert info.value.first.rule == "typ-close"

    def test_close_above_running_secrecy(self):
        g = TypingContext({"x": (One(), "L")})
        with pytest.raises(IllTyped) as info:
            check(LH, Close("x"), "H", g)
        assert info.value.kinds == {SECRECY}

    def test_trace_lines_nest(self, governments):
        lines = _check_decl(governments, "GovH").trace_lines()
        assert lines[0].startswith("typ-bra @ L")
        assert any(line.startswith("  ") for line in lines[1:])


class TestForwarders:
    def test_one(self):
        assert expand_forwarder("x", "y", One(), "L") == Wait("y", Close("x"))

    def test_bot(self):
        assert expand_forwarder("x", "y", Bot(), "L") == Wait("x", Close("y"))

    def test_plus_shape(self):
        fwd = expand_forwarder("x", "y", Plus({"l": One()}), "H")
        assert fwd.x == "y" and [lab for lab, _ in fwd.arms] == ["l"]
        check(LH, fwd, "L", forwarder_context("x", "y", Plus({"l": One()}), "H"))

    @given(session_types, st.sampled_from(["L", "H"]), st.sampled_from(["L", "H"]))
    def test_typechecks_below_channel_level(self, a, c, d):
        if not LH.leq(d, c):
            return
        check(LH, expand_forwarder("x", "y", a, c), d, forwarder_context("x", "y", a, c))

    @given(st.integers(0, 2**32 - 1))
    def test_generated_forwarders(self, seed):
        proc, ty, c = random_forwarder(random.Random(seed), LH)
        check(LH, proc, LH.bottom, forwarder_context("x", "y", ty, c))


class TestProperties:
    @given(judgments())
    def test_context_is_exactly_free_names(self, j):
        lat, p, d, g = j
        check(lat, p, d, g)
        assert set(g) == free_names(p)

    @given(judgments(), st.integers(0, 2**32 - 1))
    def test_subject_congruence(self, j, seed):
        lat, p, d, g = j
        q, _ = rearrange(random.Random(seed), p)
        assert struct_congruent(p, q)
        check(lat, q, d, g)

    @given(judgments(closed=True, max_prefixes=8))
    def test_subject_reduction(self, j):
        lat, p, d, _ = j
        for q in reduce_all(p):
            assert any(lat.leq(d, d2) and typechecks(lat, q, d2) for d2 in sorted(lat.levels)), q

    @given(judgments(), st.data())
    def test_substitution_lemma(self, j, data):
        lat, p, d, g = j
        if not g:
            return
        old = data.draw(st.sampled_from(list(g)))
        # the new name may clash with a bound name, which substitution must rename away
        pool = sorted((all_names(p) - free_names(p)) | {"fresh"})
        new = data.draw(st.sampled_from(pool))
        g2 = TypingContext({(new if n == old else n): (e.type, e.level) for n, e in g.items()})
        check(lat, substitute(p, new, old), d, g2)

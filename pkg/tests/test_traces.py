from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, strategies as st

from hosclab.names import ERRN, Name, final_name
from hosclab.syntax import UNIT_V
from hosclab.traces import (
    BOTTOM, Action, Trace, TraceError, canonicalize, check_predicate, check_well_formed, complete, compute_oav,
    compute_pav, compute_topo, compute_topp, context_witness, dualize, format_trace, justifier, o_bracketed,
    o_visible, p_bracketed, p_visible, parse_trace, show_name_set,
)
from hosclab.types import UNIT, Model

from conftest import corpus, verdict


def names(t: Trace) -> dict[str, Name]:
    """Short printed form -> name, for writing expectations."""
    return {n.short(): n for n in t.names()}


def test_justifiers_in_t1(t1):
    assert justifier(t1, 1) == 0      # que? f0 ... uses f0 from ans! c0 <f0, f1>
    assert justifier(t1, 3) == 2      # first ans? c2 () answers que! f2 () c2
    assert justifier(t1, 5) == 2      # and so does the second one
    assert justifier(t1, 0) is None   # c0 is ambient
    with pytest.raises(TraceError):
        justifier(t1, 9)


def test_o_views_of_cwl_prefixes(t1):
    n = names(t1)
    assert compute_oav(t1[:3]) == {n["f0"], n["f1"], n["c2"]}
    assert compute_oav(t1[:5]) == {n["f0"], n["f1"]}


def test_o_view_of_wbsc_prefix():
    t3 = verdict("wbsc", Model.GOSC).left_only
    n = names(t3)
    assert compute_oav(t3[:7]) == {n["f0"], n["c3"], n["c5"]}


def test_p_view_base_case_and_dual_of_wbsc():
    w = context_witness(verdict("wbsc", Model.GOSC).left_only)
    n = names(w)
    first = compute_pav(w[:1])
    assert first == {ERRN, final_name(UNIT), n["f0"]}
    assert {n["f0"], n["c3"], n["c5"]} <= compute_pav(w[:7])


def test_views_need_the_right_shape(t1):
    with pytest.raises(TraceError):
        compute_oav(t1[:2])
    with pytest.raises(TraceError):
        compute_pav(t1[:1])


def test_top_continuations(t1):
    callomega = [t for t in corpus(Model.HOS) if str(t) == "ans! c0 f0 que? f0 f1 c1 que! f1 () c2"]
    assert callomega
    t = callomega[0]
    assert compute_topo(t) == names(t)["c2"]
    assert compute_topo(t[:1]) is BOTTOM
    assert compute_topo(t1[:7]) is BOTTOM  # ans! c1 () returns to the root question
    assert compute_topo(t1[:3]) == names(t1)["c2"]
    final = final_name(UNIT)
    w = context_witness(t1)
    assert compute_topp(w[:1]) == final
    assert compute_topp(w[:3]) == names(w)["c2"]


def test_visibility_of_the_known_witnesses(t1):
    v = o_visible(t1)
    assert not v and v.violation == 5 and "c2 not O-available" in v.reason
    t3 = verdict("wbsc", Model.GOSC).left_only
    assert o_visible(t3)
    assert not o_bracketed(t3)


def test_completeness():
    t = [x for x in corpus(Model.HOS) if str(x) == "ans! c0 f0 que? f0 f1 c1 que! f1 () c2"][0]
    assert not complete(t)
    assert complete(t[:1])
    assert not complete(t[:2])
    assert check_predicate(t[:1], "Complete")


def test_duality(t1):
    assert dualize(dualize(t1)) == t1
    a = t1[0]
    assert dualize(t1[:1])[0] == Action("O", a.subject, a.payload)
    assert dualize(t1).ambient_o == t1.ambient_p


def test_context_witness_appends_an_error_call(t1):
    w = context_witness(t1[:7])
    assert len(w) == 8 and w[-1].subject == ERRN and w[-1].polarity == "P"
    assert ERRN in w.ambient_o and final_name(UNIT) in w.ambient_o
    # even-length traces already end with a P-action once dualized
    assert len(context_witness(t1[:8])) == 8


def test_well_formedness_checks(t1):
    check_well_formed(t1)
    acts = list(t1.actions)
    with pytest.raises(TraceError, match="alternate"):
        check_well_formed(Trace((acts[0], acts[2]), t1.ambient_o, t1.ambient_p))
    with pytest.raises(TraceError, match="introduced twice"):
        # replaying que? f0 f2 c1 after ans! c1 () re-introduces f2 and c1
        check_well_formed(Trace(tuple(acts[:5]) + (acts[1],), t1.ambient_o, t1.ambient_p))
    with pytest.raises(TraceError, match="does not own"):
        check_well_formed(Trace((acts[1],), t1.ambient_o, t1.ambient_p))
    with pytest.raises(TraceError, match="type"):
        bad = dataclasses.replace(acts[-1], payload=UNIT_V)
        check_well_formed(Trace(tuple(acts[:-1]) + (bad,), t1.ambient_o, t1.ambient_p))


def test_canonical_renaming(t1):
    assert canonicalize(t1) == t1
    ren = {n: dataclasses.replace(n, idx=n.idx + 10) for n in t1.names() - set(t1.ambient)}
    moved = Trace(tuple(a.rename(ren) for a in t1), t1.ambient_o, t1.ambient_p)
    assert moved != t1
    assert canonicalize(moved) == t1


def test_canonical_names_never_collide_across_types(t1):
    # t1 introduces Unit continuations (c1, c2) and an Int one (c3)
    ren = {n: dataclasses.replace(n, idx=50 - n.idx) for n in t1.names() - set(t1.ambient)}
    t = canonicalize(Trace(tuple(a.rename(ren) for a in t1), t1.ambient_o, t1.ambient_p))
    conts = [n for n in t.names() if n.is_cont]
    assert len({n.idx for n in conts}) == len(conts)
    assert {str(n.type) for n in conts} >= {"Unit", "Int"}


def test_trace_file_round_trip(t1):
    text = format_trace(t1)
    assert text.splitlines()[0] == "O-NAMES c0@(((Unit->Unit)->Unit)*(Unit->Int))"
    assert "O-ANS c2@Unit ()" in text
    assert parse_trace(text) == t1
    with pytest.raises(TraceError):
        parse_trace("O-NAMES\nP-NAMES\nX-ANS c0@Unit ()\n")


def test_every_corpus_trace_is_well_formed_and_round_trips():
    for t in corpus():
        check_well_formed(t)
        assert parse_trace(format_trace(t)) == t
        assert canonicalize(t) == t


def test_witness_dualities_over_the_corpus():
    for model in Model:
        for t in corpus(model):
            if len(t) % 2 == 0 or t[0].polarity != "P":
                continue
            w = context_witness(t)
            assert bool(o_visible(t)) == bool(p_visible(w)), t
            assert bool(o_bracketed(t)) == bool(p_bracketed(w)), t


def test_top_p_mirrors_top_o():
    final = final_name(UNIT)
    for t in corpus():
        if len(t) % 2 == 0 or t[0].polarity != "P":
            continue
        top = compute_topo(t)
        assert compute_topp(dualize(t), final) == (final if top is BOTTOM else top)


def test_predicates_are_prefix_closed():
    for t in corpus():
        if not t.actions or t[0].polarity != "P":
            continue
        for pred in (o_visible, o_bracketed):
            if pred(t):
                assert all(pred(t[:i]) for i in range(len(t)))


@given(st.data())
def test_type_preserving_renamings_have_one_canonical_form(data):
    pool = [t for t in corpus() if len(t) >= 3]
    t = data.draw(st.sampled_from(pool))
    movable = sorted(t.names() - set(t.ambient), key=Name.sort_key)
    targets = data.draw(st.permutations(range(100, 100 + len(movable))))
    ren = {n: dataclasses.replace(n, idx=i) for n, i in zip(movable, targets)}
    moved = Trace(tuple(a.rename(ren) for a in t), t.ambient_o, t.ambient_p)
    assert canonicalize(moved) == t


def test_name_sets_print_sorted(t1):
    assert show_name_set(compute_oav(t1[:3])) == "{c2, f0, f1}"

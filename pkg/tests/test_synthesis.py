from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, strategies as st

from hosclab.catalog import EXAMPLES
from hosclab.composite import context_from_source, merge, run_composite
from hosclab.lts import Diverged, apply_o_move, enumerate_o_moves, init_term_config, p_transition, replay
from hosclab.syntax import Lam
from hosclab.synthesis import (
    SynthesisError, context_source, fragment_models, omega_at, synthesize_context, uses_control, verify_synthesis,
)
from hosclab.traces import Trace, context_witness, o_visible
from hosclab.types import Model

from conftest import corpus, terms, verdict

WITNESSED = [("cwl", Model.HOSC), ("wbsc", Model.HOSC), ("wbsc", Model.GOSC), ("acb", Model.HOSC),
             ("acb", Model.HOS), ("esc", Model.HOSC)]


def witnesses(pair, model):
    v = verdict(pair, model, 8 if pair == "esc" else 9)
    return v, [(s, w) for s, w in (("L", v.left_only), ("R", v.right_only)) if w is not None]


def test_cwl_witness_round_trips(t1):
    w = context_witness(t1)
    r = synthesize_context(w, Model.HOSC)
    report = verify_synthesis(w, Model.HOSC, r)
    assert report.ok and len(report.expected) == 6
    assert uses_control(r)
    assert "ok: 6 even prefixes" in str(report)


def test_two_action_trace_round_trips():
    t = next(t for t in corpus() if str(t) == "ans! c0 ()")
    w = context_witness(t)
    assert len(w) == 2
    r = synthesize_context(w, Model.GOS)
    assert verify_synthesis(w, Model.GOS, r).ok
    assert not uses_control(r)


@pytest.mark.parametrize("pair,model", WITNESSED, ids=lambda x: str(x))
def test_witness_contexts_break_only_their_own_term(pair, model):
    v, ws = witnesses(pair, model)
    m1, m2, _ = terms(pair)
    assert ws
    for side, w in ws:
        r = synthesize_context(context_witness(w), model)
        assert model in fragment_models(r)
        mine, other = (m1, m2) if side == "L" else (m2, m1)
        for m, expected in ((mine, "err"), (other, None)):
            run = run_composite(merge(init_term_config(m, v.root.rho, v.root.cont), r.config()))
            assert (run.outcome == "err") == (expected == "err"), (pair, model, side)


def test_control_free_models_get_control_free_contexts():
    for pair, model in WITNESSED:
        _, ws = witnesses(pair, model)
        for _, w in ws:
            r = synthesize_context(context_witness(w), model)
            assert uses_control(r) == (model in (Model.HOSC, Model.GOSC))


def test_gosc_wbsc_context_stays_in_its_fragment():
    _, ws = witnesses("wbsc", Model.GOSC)
    for _, w in ws:
        r = synthesize_context(context_witness(w), Model.GOSC)
        assert fragment_models(r) == {Model.GOSC, Model.HOSC}


def test_synthesized_contexts_diverge_off_script(t1):
    w = context_witness(t1)
    cfg = synthesize_context(w, Model.HOSC).config()
    probes = 0
    for i in range(0, len(w) - 1, 2):
        here, _ = replay(cfg, w[:i])
        for a, _ in enumerate_o_moves(here, (0, 1, 2)):
            if a != w[i]:
                probes += 1
                assert isinstance(p_transition(apply_o_move(here, a)), Diverged), (i, str(a))
    assert probes >= 8


def test_renaming_the_input_changes_nothing(t1):
    w = context_witness(t1)
    ren = {n: dataclasses.replace(n, idx=n.idx + 7) for n in w.names() - set(w.ambient)}
    moved = Trace(tuple(a.rename(ren) for a in w), w.ambient_o, w.ambient_p)
    a, b = synthesize_context(w), synthesize_context(moved)
    assert a.trace == b.trace and a.describe() == b.describe()


def test_a_broken_context_is_caught(t1):
    w = context_witness(t1)
    r = synthesize_context(w, Model.HOSC)
    cell = next(c for c in r.plan.cells if c.role == "cp")  # the code run on the first answer
    broken = dataclasses.replace(r, heap=r.heap.write(cell.loc, _diverging(cell.type)))
    report = verify_synthesis(w, Model.HOSC, broken)
    assert not report.ok and report.missing and not report.type_error
    assert "missing:" in str(report)


def _diverging(ty):
    return Lam("x", ty.arg, omega_at(ty.res))


def test_preconditions_are_enforced(t1):
    v = verdict("acb", Model.HOS)
    w = context_witness(v.left_only)
    with pytest.raises(SynthesisError, match="not P-visible") as e:
        synthesize_context(w, Model.GOS)
    assert e.value.prefix is not None
    with pytest.raises(SynthesisError, match="even-length"):
        synthesize_context(w[:3], Model.HOSC)
    with pytest.raises(SynthesisError, match="O-action"):
        synthesize_context(t1[:2], Model.HOSC)
    with pytest.raises(SynthesisError):
        synthesize_context(context_witness(t1), Model.GOSC)  # t1 is not O-visible


def test_control_free_contexts_have_a_source_form():
    v = verdict("acb", Model.HOS)
    r = synthesize_context(context_witness(v.left_only), Model.HOS)
    text = context_source(r, v.root.rho)
    ex = EXAMPLES["acb1"]
    spec = context_from_source(text, v.root.cont.type, ex.gamma())
    cfg, rho = spec.config()
    c = next(n for n in cfg.gamma if n.is_cont)
    for name, expected in (("acb1", "err"), ("acb2", "loop")):
        run = run_composite(merge(init_term_config(EXAMPLES[name].term(), rho, c), cfg))
        assert run.outcome == expected
    with pytest.raises(SynthesisError, match="no source form"):
        context_source(synthesize_context(context_witness(v.left_only), Model.HOSC), v.root.rho)


def _round_trip_pool():
    pool = []
    for model in Model:
        for t in corpus(model, 5):
            if t.actions and t[0].polarity == "P" and len(t) <= 5:
                pool.append((model, t))
    return pool


@given(st.data())
def test_synthesis_round_trips_on_generated_traces(data):
    model, t = data.draw(st.sampled_from(_round_trip_pool()))
    w = context_witness(t)
    r = synthesize_context(w, model)
    assert verify_synthesis(w, model, r).ok, str(t)
    if model.visible:
        assert o_visible(t)

from __future__ import annotations

import dataclasses

import pytest

from hosclab.catalog import CONTEXTS, EXAMPLES
from hosclab.composite import (
    CompositeError, Stop, composite_observes, composite_step, context_from_source, merge, run_composite, theta,
    theta_observes, validity_errors,
)
from hosclab.equiv import boundary_type
from hosclab.lts import init_context_config, init_term_config, p_transition
from hosclab.machine import EMPTY_HEAP
from hosclab.names import cont_name
from hosclab.parser import parse_term
from hosclab.printer import show_term
from hosclab.syntax import HOLE
from hosclab.types import INT, UNIT

import oracle


def cwl_pair(name="cwl1", ctx="cwl-ctx"):
    m = EXAMPLES[name].term()
    cfg, rho = context_from_source(CONTEXTS[ctx], boundary_type({}, m)).config()
    c = next(n for n in cfg.gamma if n.is_cont)
    return init_term_config(m, rho, c), cfg


def hole_pair(src: str, t=UNIT):
    c = cont_name(t, 0)
    ctx, _ = init_context_config(EMPTY_HEAP, HOLE, [], t, t, c=c)
    return init_term_config(parse_term(src), {}, c), ctx


def test_merge_of_compatible_configurations():
    term, ctx = cwl_pair()
    d = merge(term, ctx)
    assert d.p_runs and validity_errors(d) == []
    assert d.phi == ctx.phi


def test_merge_rejects_incompatible_configurations():
    term, ctx = cwl_pair()
    with pytest.raises(CompositeError, match="exactly one"):
        merge(p_transition(term).config, ctx)
    with pytest.raises(CompositeError, match="compatible"):
        other, _ = hole_pair("1", INT)
        merge(other, ctx)


def test_a_value_at_the_final_name_stops():
    d = merge(*hole_pair("()"))
    out = composite_step(d)
    assert not isinstance(out, Stop)
    label, d = out
    assert str(label) == "ans! c0 ()"
    out = composite_step(d)
    assert isinstance(out, Stop) and out.kind == "ter"


def test_theta_of_a_term_against_the_bare_hole():
    term, ctx = hole_pair("1 + 2", INT)
    m, h = theta(merge(term, ctx))
    assert show_term(m) == "1 + 2" and h == EMPTY_HEAP


def test_theta_refuses_undefined_names():
    term, ctx = cwl_pair()
    r = run_composite(merge(term, ctx))
    d = next(c for c, l in zip(r.configs[1:], r.labels) if l is not None)  # after ans! c0 <f0, f1>
    f = next(n for n in d.gamma_p if not n.is_cont)
    broken = dataclasses.replace(d, gamma_p={k: v for k, v in d.gamma_p.items() if k != f})
    with pytest.raises(CompositeError):
        theta(broken)


def test_observations_of_small_programs():
    assert composite_observes(*hole_pair("()")).outcome == "ter"
    assert str(composite_observes(*hole_pair("()")).trace) == "ans! c0 ()"
    assert not composite_observes(*hole_pair("(fix w(z:Unit) w z) ()"), "ter")
    assert composite_observes(*hole_pair("(fix w(z:Unit) w z) ()")).outcome == "loop"
    with pytest.raises(ValueError):
        composite_observes(*hole_pair("()"), "halt")


def test_the_cwl_context_breaks_only_the_first_term():
    assert composite_observes(*cwl_pair("cwl1"), "err")
    assert composite_observes(*cwl_pair("cwl2"), "ter")
    assert theta_observes(*cwl_pair("cwl1"), "err")
    assert not theta_observes(*cwl_pair("cwl2"), "err")


def test_cwl_run_plays_the_canonical_trace_prefix(t1):
    r = run_composite(merge(*cwl_pair("cwl1")))
    assert r.trace.actions[:5] == t1.actions[:5]


@pytest.mark.parametrize("pair", oracle.hand_written() + oracle.from_witnesses(), ids=lambda p: p.label)
def test_composite_agrees_with_theta(pair):
    assert oracle.audit(pair) == []


def test_synthesized_contexts_separate_their_pair():
    for p in oracle.from_witnesses():
        own = p.label.split("+")[0]
        side = p.label[-1]
        expected = own.endswith("1") == (side == "L")
        assert bool(composite_observes(p.term, p.context, "err")) == expected, p.label

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from hosclab.avals import (
    AValError, aval_decompose, aval_names, all_assignments, canonical_assignment, enumerate_avals, is_aval, recompose,
)
from hosclab.catalog import EXAMPLES
from hosclab.machine import EMPTY_HEAP, MachineState, run
from hosclab.names import ERRN, Fresh, Name, cont_name, final_name, fun_name
from hosclab.parser import parse_term
from hosclab.printer import show_term
from hosclab.syntax import FName, IntLit, Pair, UNIT_V, BoolLit
from hosclab.types import BOOL, INT, UNIT, Arrow, ContT, Prod, RefT, Type

U2U = Arrow(UNIT, UNIT)


def test_names_print_with_their_types():
    assert str(fun_name(U2U, 3)) == "f3@(Unit->Unit)"
    assert str(cont_name(INT, 0)) == "c0@Int"
    assert str(ERRN) == "errn"
    assert str(final_name(UNIT)) == "final@Unit"


def test_allocation_skips_reserved_names():
    fresh = Fresh.after([ERRN, final_name(UNIT), fun_name(U2U, 2), cont_name(INT, 0)])
    f, fresh = fresh.fun(U2U)
    c, _ = fresh.cont(UNIT)
    assert (f.idx, c.idx) == (3, 1)
    assert not f.reserved and not c.reserved


def test_decomposing_a_nested_value():
    v = parse_term("<fun(x:Int) x <> 1, <2, fun(x:Unit) 3>>")
    t = Prod(Arrow(INT, BOOL), Prod(INT, Arrow(UNIT, INT)))
    a, g, fresh = aval_decompose(v, t, Fresh())
    f, h = fun_name(Arrow(INT, BOOL), 0), fun_name(Arrow(UNIT, INT), 1)
    assert a == Pair(FName(f), Pair(IntLit(2), FName(h)))
    assert show_term(g[f]) == "fun(x:Int) x <> 1"
    assert show_term(g[h]) == "fun(x:Unit) 3"
    assert recompose(a, g) == v
    assert fresh == Fresh(2, 0)


def test_base_values_pass_through():
    a, g, _ = aval_decompose(IntLit(5), INT, Fresh())
    assert a == IntLit(5) and g == {}


def test_the_cwl_pair_decomposes_into_two_names():
    out = run(MachineState(EXAMPLES["cwl1"].term(), cont_name(UNIT, 0), EMPTY_HEAP))
    t = Prod(Arrow(U2U, UNIT), Arrow(UNIT, INT))
    a, g, _ = aval_decompose(out.term, t, Fresh())
    assert show_term(a) == "<f0, f1>"
    assert [show_term(g[n])[:14] for n in sorted(g, key=Name.sort_key)] == ["fun(f:Unit -> ", "fun(u:Unit) !l"]


def test_decomposition_refuses_store_and_control_types():
    with pytest.raises(AValError):
        aval_decompose(parse_term("()"), RefT(INT), Fresh())
    with pytest.raises(AValError):
        aval_decompose(parse_term("()"), ContT(INT), Fresh())


def test_enumeration_examples():
    assert enumerate_avals(UNIT, (0, 1)) == [UNIT_V]
    assert enumerate_avals(BOOL) == [BoolLit(True), BoolLit(False)]
    assert enumerate_avals(U2U, (0,), Fresh(7, 0)) == [FName(fun_name(U2U, 7))]
    assert enumerate_avals(INT, (1, 0)) == [IntLit(0), IntLit(1)]


def test_assignments():
    a = canonical_assignment({"f": U2U})
    assert a.values == {"f": FName(fun_name(U2U, 0))}
    assert canonical_assignment({}).values == {}
    assert canonical_assignment({"x": INT}, ints=(0, 1)).values == {"x": IntLit(0)}
    every = all_assignments({"x": INT}, ints=(0, 1))
    assert [x.values["x"] for x in every] == [IntLit(0), IntLit(1)]
    two = canonical_assignment({"f": U2U, "g": Prod(U2U, Arrow(INT, UNIT))})
    assert not set(aval_names(two.values["f"])) & set(aval_names(two.values["g"]))


def boundary_types(depth: int = 2):
    base = st.sampled_from([UNIT, INT, BOOL])
    if depth == 0:
        return base
    inner = boundary_types(depth - 1)
    return st.one_of(base, st.builds(Arrow, inner, inner), st.builds(Prod, inner, inner))


def _expected_count(t: Type, n_ints: int) -> int:
    match t:
        case Prod(a, b):
            return _expected_count(a, n_ints) * _expected_count(b, n_ints)
        case _ if t == INT:
            return n_ints
        case _ if t == BOOL:
            return 2
    return 1


@given(boundary_types(), st.sets(st.integers(-3, 3), min_size=1, max_size=3))
def test_enumeration_size_is_the_product_over_leaves(t, ints):
    avs = enumerate_avals(t, sorted(ints))
    assert len(avs) == _expected_count(t, len(ints))
    assert len(set(avs)) == len(avs)
    for a in avs:
        assert is_aval(a, t)
        ns = aval_names(a)
        assert len(ns) == len(set(ns))


@given(boundary_types(), st.integers(0, 5))
def test_decompose_then_recompose_is_the_identity(t, start):
    # build a closed value of type t: lambdas return a leaf
    def value(u: Type):
        match u:
            case Arrow(a, r):
                return parse_term(f"fun(x:{a}) {show_term(value(r))}")
            case Prod(a, b):
                return Pair(value(a), value(b))
            case _ if u == INT:
                return IntLit(start)
            case _ if u == BOOL:
                return BoolLit(True)
        return UNIT_V

    v = value(t)
    a, g, _ = aval_decompose(v, t, Fresh(start, 0))
    assert recompose(a, g) == v
    ns = aval_names(a)
    assert len(ns) == len(set(ns)) == len(g)

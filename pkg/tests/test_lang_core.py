from __future__ import annotations

import pytest
from hypothesis import given

from hosclab.catalog import EXAMPLES
from hosclab.equiv import boundary_type
from hosclab.parser import ParseError, parse_eval_context, parse_program, parse_term, parse_type
from hosclab.printer import show_term
from hosclab.syntax import App, Callcc, Lam, Loc, NewRef, Pair, UNIT_V, Var
from hosclab.types import BOOL, INT, UNIT, Arrow, ContT, Model, Prod, RefT, classify_type_fragment, is_subtype
from hosclab.typing import TypeCheckError, TypingEnv, check_cr_free, infer_context_type, infer_type

from termgen import programs, typed_terms

CWL_TYPE = Prod(Arrow(Arrow(UNIT, UNIT), UNIT), Arrow(UNIT, INT))


def test_inequality_sugar_parses_to_a_bool_valued_lambda():
    m = parse_term("fun(x:Int) x <> 1")
    assert isinstance(m, Lam) and m.ty == INT
    assert infer_type(TypingEnv(), m) == Arrow(INT, BOOL)


def test_unit_literal():
    assert parse_term("()") == UNIT_V
    assert infer_type(TypingEnv(), UNIT_V) == UNIT


def test_cwl_source_is_two_lets_around_a_pair_of_lambdas():
    m = EXAMPLES["cwl1"].term()
    assert isinstance(m, App) and isinstance(m.fn, Lam) and m.fn.ty is None
    inner = m.fn.body
    assert isinstance(inner, App) and isinstance(inner.fn, Lam) and inner.fn.ty is None
    body = inner.fn.body
    assert isinstance(body, Pair)
    assert isinstance(body.left, Lam) and isinstance(body.right, Lam)
    assert infer_type(TypingEnv(), m) == CWL_TYPE


def test_callcc_takes_its_annotation_as_type():
    assert infer_type(TypingEnv(), parse_term("callcc(x:Int. 5)")) == INT
    assert isinstance(parse_term("callcc(x:Int. 5)"), Callcc)


def test_syntax_errors_carry_a_position():
    with pytest.raises(ParseError, match=r"^1:4"):
        parse_term("1 +")
    with pytest.raises(ParseError, match=r"^2:"):
        parse_term("let x = 1 in\n x +* 2")


def test_runtime_only_forms_are_rejected_by_the_parser():
    for src in ["cont", "[]", "fun(x) x"]:
        with pytest.raises(ParseError):
            parse_term(src)
    # an identifier that merely looks like a location is a variable
    assert parse_term("l0") == Var("l0")


def test_declaration_pragmas_give_the_typing_context():
    gamma, m = parse_program("#@ f : Unit -> Unit\n# just a comment\nf ()")
    assert gamma == {"f": Arrow(UNIT, UNIT)}
    assert infer_type(TypingEnv(vars=gamma), m) == UNIT


def test_type_errors_name_the_rule():
    with pytest.raises(TypeCheckError) as e:
        infer_type(TypingEnv(), parse_term("1 + tt"))
    assert "arith" in str(e.value)
    with pytest.raises(TypeCheckError):
        infer_type(TypingEnv(), parse_term("if 1 then () else ()"))
    with pytest.raises(TypeCheckError):
        infer_type(TypingEnv(), parse_term("throw 1 to 2"))


def test_integer_and_reference_equality_are_told_apart_by_type():
    env = TypingEnv()
    assert infer_type(env, parse_term("1 = 2")) == BOOL
    assert infer_type(env, parse_term("let a = ref 0 in a = a")) == BOOL
    with pytest.raises(TypeCheckError):
        infer_type(env, parse_term("let a = ref 0 in let b = ref tt in a = b"))
    with pytest.raises(TypeCheckError):
        infer_type(env, parse_term("let a = ref 0 in a < a"))


def test_context_typing():
    env = TypingEnv()
    assert infer_context_type(env, parse_eval_context("[]"), INT) == INT
    assert infer_context_type(env, parse_eval_context("if [] then 1 else 2"), BOOL) == INT
    k = parse_eval_context("(fun(y:Unit) !x) []")
    assert infer_context_type(TypingEnv(vars={"x": RefT(INT)}), k, UNIT) == INT


def test_fragment_classification():
    every = {Model.HOSC, Model.GOSC, Model.HOS, Model.GOS}
    assert classify_type_fragment(RefT(INT)) == every
    assert classify_type_fragment(RefT(RefT(BOOL))) == every
    assert classify_type_fragment(RefT(Arrow(UNIT, UNIT))) == {Model.HOSC, Model.HOS}
    assert classify_type_fragment(ContT(INT)) == {Model.HOSC, Model.GOSC}
    assert classify_type_fragment(RefT(ContT(INT))) == {Model.HOSC}


def test_cr_free_boundaries():
    m = EXAMPLES["cwl1"].term()
    assert check_cr_free(TypingEnv(), m, CWL_TYPE)
    assert not check_cr_free(TypingEnv(locs={Loc(0): INT}), parse_term("()"), UNIT)
    assert not check_cr_free(TypingEnv(locs={Loc(0): INT}), Loc(0), RefT(INT))
    assert not check_cr_free(TypingEnv(), NewRef(UNIT_V), RefT(UNIT))
    esc = EXAMPLES["esc1"]
    assert check_cr_free(TypingEnv(vars=esc.gamma()), esc.term(), UNIT)
    assert not check_cr_free(TypingEnv(vars={"k": ContT(UNIT)}), parse_term("()"), UNIT)


def test_every_catalog_program_is_cr_free():
    for ex in EXAMPLES.values():
        # Ω has the bottom type; its boundary settles to Unit
        t = boundary_type(ex.gamma(), ex.term())
        assert check_cr_free(TypingEnv(vars=ex.gamma()), ex.term(), t), ex.name


def test_type_syntax_round_trips():
    for src in ["Unit", "Int -> Bool -> Unit", "(Unit -> Unit) -> Int", "ref Int * cont Bool", "ref (Unit -> Unit)"]:
        t = parse_type(src)
        assert parse_type(str(t)) == t


@given(typed_terms())
def test_printing_then_parsing_is_the_identity(case):
    _, _, m = case
    assert parse_term(show_term(m)) == m


@given(typed_terms())
def test_inference_is_deterministic_and_matches_the_generator(case):
    env, t, m = case
    e = TypingEnv(vars=env)
    first = infer_type(e, m)
    assert infer_type(e, m) == first
    assert is_subtype(first, t)


@given(programs())
def test_generated_programs_are_cr_free(case):
    gamma, t, m = case
    assert check_cr_free(TypingEnv(vars=gamma), m, t)


def test_fragment_lattice_on_sample_types():
    samples = [UNIT, RefT(INT), RefT(Arrow(UNIT, UNIT)), ContT(UNIT), Arrow(ContT(INT), RefT(RefT(INT))),
               Prod(RefT(Arrow(INT, INT)), ContT(BOOL))]
    for t in samples:
        tags = classify_type_fragment(t)
        assert Model.HOSC in tags
        if Model.GOS in tags:
            assert {Model.GOSC, Model.HOS} <= tags
        if Model.GOSC in tags and Model.HOS in tags:
            assert Model.GOS in tags

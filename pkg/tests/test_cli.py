from __future__ import annotations

import io
import json

import pytest

from hosclab.cli import build_parser, cmd_play, main
from hosclab.traces import parse_trace

from conftest import GOLDEN


def run(*argv) -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def play(*argv, moves: str) -> str:
    out = io.StringIO()
    args = build_parser().parse_args(["play", *argv])
    assert cmd_play(args, out, io.StringIO(moves)) == 0
    return out.getvalue()


def test_check_reports_type_and_fragments():
    code, text = run("check", "@cwl1")
    assert code == 0
    assert "type: ((Unit -> Unit) -> Unit) * (Unit -> Int)" in text
    assert "fragments: gos, gosc, hos, hosc" in text


def test_exit_codes(tmp_path, capsys):
    assert run("check", str(tmp_path / "missing.hosc"))[0] == 2
    bad = tmp_path / "bad.hosc"
    bad.write_text("1 + tt")
    assert run("check", str(bad))[0] == 2
    assert "TypeCheckError" in capsys.readouterr().err
    assert run("check", "@no-such-example")[0] == 1
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit):
        main(["traces", "@cwl1", "--depth", "-1"])


def test_traces_listing_respects_the_model(t1):
    _, hosc = run("traces", "@cwl1", "--depth", "9")
    _, gosc = run("traces", "@cwl1", "--depth", "9", "--model", "gosc")
    assert str(t1) in hosc
    assert str(t1) not in gosc and str(t1[:5]) in gosc


def test_derivation_matches_the_golden_file():
    code, text = run("traces", "@cwl1", "--derive", str(GOLDEN / "cwl_t1.trace"))
    assert code == 0
    assert text == (GOLDEN / "cwl1_derivation.txt").read_text()


def test_derivation_of_a_foreign_trace_fails(tmp_path):
    code, _ = run("traces", "@cwl2", "--derive", str(GOLDEN / "cwl_t1.trace"))
    assert code == 2


def test_equiv_verdicts():
    _, text = run("equiv", "@cwl1", "@cwl2", "--depth", "9")
    assert "verdict: DISTINCT" in text
    assert "left-only: ans! c0 <f0, f1> que? f0 f2 c1" in text
    _, text = run("equiv", "@cwl1", "@cwl2", "--depth", "9", "--model", "gos")
    assert "verdict: EQUIVALENT-UP-TO-DEPTH 9" in text


def test_record_output_mirrors_text():
    _, text = run("equiv", "@wbsc1", "@wbsc2", "--model", "gosc", "--depth", "9")
    _, rec = run("equiv", "@wbsc1", "@wbsc2", "--model", "gosc", "--depth", "9", "--format", "record")
    data = json.loads(rec)
    keys = [line.split(":")[0] for line in text.splitlines() if not line.startswith(" ")]
    assert keys == list(data)
    assert data["verdict"] == "DISTINCT"


def test_compose_reports_both_outcomes():
    _, text = run("compose", "@cwl1", "@cwl-ctx")
    assert "outcome: err" in text and "plain-outcome: err" in text
    _, text = run("compose", "@cwl2", "@cwl-ctx")
    assert "outcome: ter" in text


def test_synth_from_a_term_trace(tmp_path):
    saved = tmp_path / "ctx.trace"
    code, text = run("synth", str(GOLDEN / "cwl_t1.trace"), "--term", "@cwl1", "--save", str(saved))
    assert code == 0
    assert "given: term trace" in text
    assert "ok: 6 even prefixes realized exactly" in text
    assert "against-term: err" in text
    assert "source: - (" in text  # control needs continuation literals
    ctx = parse_trace(saved.read_text())
    assert ctx[0].polarity == "O" and len(ctx) == 10


def test_synth_refuses_a_trace_outside_the_model(capsys):
    code, _ = run("synth", str(GOLDEN / "cwl_t1.trace"), "--model", "gos")
    assert code == 2
    assert "SynthesisError" in capsys.readouterr().err


def test_play_refuses_moves_outside_the_model():
    text = play("@cwl1", "--model", "gos", moves="0\n2\n2\nq\n")
    assert "P: ans! c0 <f0, f1>" in text
    assert "P: ans! c1 ()" in text
    assert "refused under GOS" in text
    assert "illegal under GOS" in text  # annotated in the menu as well


def test_play_saves_a_trace_synth_accepts(tmp_path):
    saved = tmp_path / "s.trace"
    text = play("@cwl1", "--model", "gos", "--save", str(saved), moves="0\n1\n0\nt\nq\n")
    assert "trace: ans! c0 <f0, f1> que? f0 f2 c1 que! f2 () c2 que? f1 () c3 ans! c3 0" in text
    code, out = run("synth", str(saved), "--model", "gos", "--term", "@cwl1")
    assert code == 0
    assert "given: context trace" in out
    assert "against-term: err" in out
    assert "source: let tick = ref 0 in" in out


def test_play_handles_bad_input():
    text = play("@unit", moves="x\n7\nq\n")
    assert text.count("no move '") == 2
    assert "O has no move left" in text
    text = play("@omega", moves="q\n")
    assert "P has no further action" in text


def test_unit_has_one_nonempty_trace():
    _, text = run("traces", "@unit")
    assert "count: 2" in text and text.rstrip().endswith("| passive | ans! c0 ()")


def test_play_reproduces_the_player_responses_of_t1(tmp_path, t1):
    transcript = tmp_path / "t.trace"
    text = play("@cwl1", "--transcript", str(transcript), moves="0\n2\n2\n1\nq\n")
    assert "P: ans! c3 2" in text
    assert parse_trace(transcript.read_text()) == t1

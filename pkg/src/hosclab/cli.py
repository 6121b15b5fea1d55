"""Command-line front end.

Exit codes: 0 when a verdict or listing was produced, 1 for usage errors,
2 for bad input (unreadable file, parse, type or trace errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, TextIO

from .avals import AValError
from .catalog import CONTEXTS, EXAMPLES
from .composite import CompositeError, context_from_source, merge, run_composite, theta
from .equiv import Bounds, BoundaryError, Root, boundary_type, compare_terms, roots, term_trace_sets
from .lts import (
    Config, Diverged, IllegalMove, apply_o_move, derivation, enumerate_o_moves, init_term_config,
    move_blocker, p_transition,
)
from .machine import DEFAULT_FUEL, ErrStuck, FuelExhausted, MachineError, Value, run_base
from .parser import ParseError, parse_program, parse_type
from .printer import show_term
from .synthesis import SynthesisError, context_source, synthesize_context, verify_synthesis
from .syntax import Term
from .traces import Trace, TraceError, complete, context_witness, format_trace, parse_trace
from .types import Model, Type, show_type
from .typing import TypeCheckError, TypingEnv, check_cr_free, fragment_of, infer_type

USAGE, INPUT = 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


# -- inputs ---------------------------------------------------------------------

@dataclass(frozen=True)
class Program:
    label: str
    gamma: dict[str, Type]
    term: Term


def load_program(ref: str, extra_env: dict[str, Type] | None = None) -> Program:
    """A term file, or `@name` for a built-in example."""
    if ref.startswith("@"):
        name = ref[1:]
        if name not in EXAMPLES:
            raise UsageError(f"unknown example {name!r}; known: {', '.join(sorted(EXAMPLES))}")
        ex = EXAMPLES[name]
        gamma, term = ex.gamma(), ex.term()
    else:
        gamma, term = parse_program(Path(ref).read_text())
    return Program(ref, {**gamma, **(extra_env or {})}, term)


def load_context(ref: str) -> str:
    if ref.startswith("@"):
        if ref[1:] not in CONTEXTS:
            raise UsageError(f"unknown context {ref[1:]!r}; known: {', '.join(sorted(CONTEXTS))}")
        return CONTEXTS[ref[1:]]
    return Path(ref).read_text()


def parse_ints(text: str) -> tuple[int, ...]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return (int(text),)
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if a > b:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return tuple(range(a, b + 1))


def parse_env(items: list[str]) -> dict[str, Type]:
    env = {}
    for item in items:
        x, sep, t = item.partition(":")
        if not sep or not x.strip():
            raise UsageError(f"--env expects NAME:TYPE, got {item!r}")
        env[x.strip()] = parse_type(t)
    return env


def bounds_of(args) -> Bounds:
    return Bounds(depth=args.depth, fuel=args.fuel, ints=args.ints, exhaustive=args.exhaustive_assignments)


# -- reports --------------------------------------------------------------------

def render(report: dict, fmt: str) -> str:
    """Text and record output carry the same fields in the same order."""
    if fmt == "record":
        return json.dumps(report, indent=2)
    lines = []
    for k, v in report.items():
        if isinstance(v, list):
            lines.append(f"{k}:")
            for item in v:
                if isinstance(item, dict):
                    lines.append("  " + " | ".join(str(x) for x in item.values()))
                else:
                    lines.append(f"  {item}")
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines)


# -- subcommands ------------------------------------------------------------------

def cmd_check(args, out: TextIO) -> int:
    p = load_program(args.term, parse_env(args.env))
    env = TypingEnv(vars=dict(p.gamma))
    seen: set[Type] = set()
    t = infer_type(env, p.term, seen)
    boundary = boundary_type(p.gamma, p.term)
    fragments = sorted(m.value for m in fragment_of(seen))
    report = {
        "command": "check",
        "input": p.label,
        "env": ", ".join(f"{x} : {show_type(ty)}" for x, ty in p.gamma.items()) or "(none)",
        "type": show_type(t),
        "boundary": show_type(boundary),
        "cr-free": "yes" if check_cr_free(env, p.term, boundary) else "no",
        "fragments": ", ".join(fragments),
    }
    out.write(render(report, args.format) + "\n")
    return 0


def _find_root(p: Program, bounds: Bounds, names: frozenset) -> Root:
    """The assignment (and initial continuation) owning exactly these names."""
    boundary = boundary_type(p.gamma, p.term)
    for r in roots(p.gamma, boundary, bounds):
        if frozenset(r.rho.names()) | {r.cont} == names:
            return r
    raise TraceError("no assignment of the free variables matches the trace's names")


def cmd_traces(args, out: TextIO) -> int:
    p = load_program(args.term, parse_env(args.env))
    bounds = bounds_of(args)
    model = Model(args.model)
    if args.derive:
        t = parse_trace(Path(args.derive).read_text())
        r = _find_root(p, bounds, t.ambient_o)
        rows = derivation(init_term_config(p.term, r.rho, r.cont, model), t, bounds.fuel)
        report = {
            "command": "traces", "input": p.label, "model": str(model), "root": str(r),
            "trace": str(t),
            "derivation": [{"label": row.label, "config": row.config.describe()} for row in rows],
        }
        out.write(render(report, args.format) + "\n")
        return 0
    listing = []
    for r, ts in term_trace_sets(p.term, p.gamma, model, bounds):
        for t in ts.sorted():
            if args.complete and not complete(t):
                continue
            listing.append({"root": str(r), "status": ts.status[t], "trace": str(t)})
    report = {"command": "traces", "input": p.label, "model": str(model), "depth": bounds.depth,
              "count": len(listing), "traces": listing}
    out.write(render(report, args.format) + "\n")
    return 0


def cmd_equiv(args, out: TextIO) -> int:
    env = parse_env(args.env)
    p1, p2 = load_program(args.left, env), load_program(args.right, env)
    gamma = {**p1.gamma}
    for x, t in p2.gamma.items():
        if x in gamma and gamma[x] != t:
            raise BoundaryError(f"the two terms declare {x} with different types")
        gamma[x] = t
    model = Model(args.model)
    bounds = bounds_of(args)
    v = compare_terms(p1.term, p2.term, gamma, model, bounds, args.complete)
    report = {
        "command": "equiv", "left": p1.label, "right": p2.label, "model": str(model),
        "complete-only": "yes" if args.complete else "no", "verdict": v.label,
        "left-only": str(v.left_only) if v.left_only is not None else "-",
        "right-only": str(v.right_only) if v.right_only is not None else "-",
        "root": str(v.root) if v.root is not None else "-",
    }
    out.write(render(report, args.format) + "\n")
    return 0


def _plain_outcome(m: Term, h, fuel: int) -> str:
    match run_base(m, h, fuel):
        case Value():
            return "ter"
        case ErrStuck():
            return "err"
        case FuelExhausted(_, looping):
            return "loop" if looping else "fuel"
    return "stuck"


def cmd_compose(args, out: TextIO) -> int:
    p = load_program(args.term, parse_env(args.env))
    hole = boundary_type(p.gamma, p.term)
    spec = context_from_source(load_context(args.context), hole, p.gamma, args.fuel)
    ccfg, rho = spec.config()
    c = next(n for n in ccfg.gamma if n.is_cont)
    tcfg = init_term_config(p.term, rho, c)
    start = merge(tcfg, ccfg)
    run = run_composite(start, args.fuel, check_theta=True, check_validity=True)
    m, h = theta(start)
    report = {
        "command": "compose", "term": p.label, "context": args.context,
        "outcome": run.outcome,
        "plain-outcome": _plain_outcome(m, h, args.fuel),
        "trace": str(run.trace),
        "steps": run.steps,
        "theta-failures": run.theta_failures,
    }
    if args.theta:
        report["theta"] = [
            {"step": i, "label": str(lbl) if lbl is not None else "tau", "program": show_term(theta(d)[0])}
            for i, (lbl, d) in enumerate(zip(run.labels, run.configs[1:]), 1)
        ]
    out.write(render(report, args.format) + "\n")
    return 0


def cmd_synth(args, out: TextIO) -> int:
    t = parse_trace(Path(args.trace).read_text())
    result_type = parse_type(args.result_type)
    model = Model(args.model)
    given = "context"
    if t.actions and t[0].polarity == "P" or not t.actions and not t.ambient_p:
        t, given = context_witness(t, result_type), "term"
    res = synthesize_context(t, model, result_type)
    rep = verify_synthesis(t, model, res, args.fuel)
    report = {
        "command": "synth", "input": args.trace, "model": str(model), "given": f"{given} trace",
        "context-trace": str(res.trace),
        "artifacts": res.describe().splitlines(),
        "fragments": ", ".join(sorted(m.value for m in rep.models)),
        "verification": str(rep).splitlines(),
    }
    if args.term:
        p = load_program(args.term, parse_env(args.env))
        r = _find_root(p, bounds_of(args), t.ambient_p)
        try:
            report["source"] = context_source(res, r.rho)
        except SynthesisError as e:
            report["source"] = f"- ({e})"
        start = merge(init_term_config(p.term, r.rho, r.cont), res.config())
        report["against-term"] = run_composite(start, args.fuel).outcome
    if args.save:
        Path(args.save).write_text(format_trace(res.trace))
    out.write(render(report, args.format) + "\n")
    return 0


# -- play ---------------------------------------------------------------------------

@dataclass
class Session:
    """One configuration per model, all fed the same actions; a model drops
    out (None) once an action is illegal for it."""

    configs: dict[Model, Config | None]
    model: Model
    actions: list
    ambient: tuple

    def current(self) -> Config:
        return self.configs[Model.HOSC]

    def trace(self) -> Trace:
        return Trace(tuple(self.actions), *self.ambient)


def _p_move(s: Session, fuel: int, say: Callable[[str], None]) -> bool:
    outs = {}
    for m, cfg in s.configs.items():
        if cfg is not None:
            outs[m] = p_transition(cfg, fuel)
    first = outs[Model.HOSC]
    if isinstance(first, Diverged):
        say(f"P {first}")
        return False
    s.actions.append(first.action)
    for m, o in outs.items():
        s.configs[m] = o.config
    say(f"P: {first.action}")
    return True


def _annotations(s: Session, act) -> list[str]:
    notes = []
    for m in Model:
        cfg = s.configs[m]
        if m == Model.HOSC:
            continue
        why = "already left this model" if cfg is None else move_blocker(cfg, act.subject)
        if why:
            notes.append(f"illegal under {m}: {why}")
    return notes


def cmd_play(args, out: TextIO, inp: TextIO | None = None) -> int:
    inp = inp or sys.stdin
    p = load_program(args.term, parse_env(args.env))
    bounds = bounds_of(args)
    r = roots(p.gamma, boundary_type(p.gamma, p.term), bounds)[0]
    model = Model(args.model)
    cfgs = {m: init_term_config(p.term, r.rho, r.cont, m) for m in Model}
    s = Session(cfgs, model, [], cfgs[Model.HOSC].ambient())

    def say(msg: str):
        out.write(msg + "\n")

    say(f"playing O against {p.label} under {model} ({r})")
    alive = _p_move(s, bounds.fuel, say)
    while True:
        if not alive:
            say("P has no further action; enter q to quit")
        moves = enumerate_o_moves(s.current(), bounds.ints) if alive else []
        if alive and not moves:
            say("O has no move left; enter q to quit")
        for i, (act, _) in enumerate(moves):
            notes = _annotations(s, act)
            say(f"  {i}: {act}" + (f"  [{'; '.join(notes)}]" if notes else ""))
        out.write("> ")
        out.flush()
        line = inp.readline()
        if not line or line.strip() in ("q", "quit"):
            break
        cmd = line.strip()
        if cmd in ("t", "trace"):
            say(str(s.trace()))
            continue
        if cmd in ("c", "config"):
            say(s.current().describe())
            continue
        try:
            act = moves[int(cmd)][0]
        except (ValueError, IndexError):
            say(f"no move {cmd!r}; pick a number, t (trace), c (configuration) or q (quit)")
            continue
        cfg = s.configs[model]
        why = "this model was left earlier" if cfg is None else move_blocker(cfg, act.subject)
        if why:
            say(f"refused under {model}: {why}")
            continue
        s.actions.append(act)
        for m, cfg in s.configs.items():
            if cfg is not None:
                try:
                    s.configs[m] = apply_o_move(cfg, act)
                except IllegalMove:
                    s.configs[m] = None
        say(f"O: {act}")
        alive = _p_move(s, bounds.fuel, say)
    t = s.trace()
    say(f"trace: {t}")
    if args.transcript:
        Path(args.transcript).write_text(format_trace(t))
    if args.save:
        if s.current().active:
            say("not saved: P is still to move")
        else:
            Path(args.save).write_text(format_trace(context_witness(t)))
            say(f"context-side trace saved to {args.save}")
    return 0


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=[m.value for m in Model], default="hosc")
    common.add_argument("--depth", type=int, default=8, help="maximum trace length (default 8)")
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="reduction steps per move (default 10000)")
    common.add_argument("--ints", type=parse_ints, default=(0, 1), help="integer domain for O's payloads, a..b (default 0..1)")
    common.add_argument("--complete", action="store_true", help="only complete traces")
    common.add_argument("--format", choices=["text", "record"], default="text")
    common.add_argument("--exhaustive-assignments", action="store_true",
                        help="try every assignment of the free variables, not just the canonical one")
    common.add_argument("--env", action="append", default=[], metavar="NAME:TYPE",
                        help="declare a free variable (adds to #@ declarations)")

    ap = _Parser(prog="hosclab", description="Traces, equivalence and context synthesis for HOSC terms.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="parse and typecheck a term")
    p.add_argument("term")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("traces", parents=[common], help="list the traces of a term")
    p.add_argument("term")
    p.add_argument("--derive", metavar="TRACE", help="print the configurations producing this trace")
    p.set_defaults(run=cmd_traces)

    p = sub.add_parser("equiv", parents=[common], help="compare two terms")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("compose", parents=[common], help="run a term inside a context")
    p.add_argument("term")
    p.add_argument("context")
    p.add_argument("--theta", action="store_true", help="print the program each step stands for")
    p.set_defaults(run=cmd_compose)

    p = sub.add_parser("synth", parents=[common], help="synthesize a context realizing a trace")
    p.add_argument("trace")
    p.add_argument("--result-type", default="Unit", help="answer type of the context (default Unit)")
    p.add_argument("--term", help="term whose free variables the context binds (enables the source form)")
    p.add_argument("--save", help="write the canonical context-side trace here")
    p.set_defaults(run=cmd_synth)

    p = sub.add_parser("play", parents=[common], help="play Opponent against a term")
    p.add_argument("term")
    p.add_argument("--save", help="on quit, write the context-side trace (loadable by synth)")
    p.add_argument("--transcript", help="on quit, write the trace played so far")
    p.set_defaults(run=cmd_play)
    return ap


INPUT_ERRORS = (OSError, ParseError, TypeCheckError, BoundaryError, TraceError, SynthesisError,
                CompositeError, IllegalMove, AValError, MachineError)


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.depth < 0 or args.fuel < 1:
        ap.error("--depth must be >= 0 and --fuel >= 1")
    try:
        return args.run(args, out)
    except UsageError as e:
        print(f"hosclab: error: {e}", file=sys.stderr)
        return USAGE
    except INPUT_ERRORS as e:
        print(f"hosclab: {type(e).__name__}: {e}", file=sys.stderr)
        return INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Example programs used across the tests, the walkthrough scripts and the
CLI (`@name` on the command line picks one of these)."""

from __future__ import annotations

from dataclasses import dataclass

from .parser import parse_term, parse_type
from .syntax import Term
from .types import Type

OMEGA = "(fix w(z:Unit) w z) ()"


@dataclass(frozen=True)
class Example:
    name: str
    source: str
    env: tuple[tuple[str, str], ...] = ()
    note: str = ""

    def term(self) -> Term:
        return parse_term(self.source)

    def gamma(self) -> dict[str, Type]:
        return {x: parse_type(t) for x, t in self.env}

    def file_text(self) -> str:
        head = "".join(f"#@ {x} : {t}\n" for x, t in self.env)
        return head + self.source.strip() + "\n"


def _ex(name, source, env=(), note=""):
    return Example(name, source.strip(), tuple(env), note)


_F = [("f", "Unit -> Unit")]
_G = [("f", "((Unit -> Unit) -> Unit) -> Unit")]

EXAMPLES: dict[str, Example] = {e.name: e for e in [
    _ex("cwl1", """
let x = ref 0 in
let b = ref ff in
<fun(f:Unit -> Unit) if not !b then b := tt; f (); x := !x + 1; b := ff else (),
 fun(u:Unit) !x>
""", note="callback with a lock; the increment runs after the callback"),
    _ex("cwl2", """
let x = ref 0 in
let b = ref ff in
<fun(f:Unit -> Unit) if not !b then b := tt; let n = !x in f (); x := n + 1; b := ff else (),
 fun(u:Unit) !x>
""", note="callback with a lock; the counter is read before the callback"),
    _ex("wbsc1", """
let x = ref 0 in fun(f:Unit -> Unit) x := 0; f (); x := 1; f (); !x
""", note="well-bracketed state change"),
    _ex("wbsc2", "fun(f:Unit -> Unit) f (); f (); 1"),
    _ex("acb1", """
let n = ref 0 in fun(y:Unit) if 0 < !n then () else (n := 1; f ())
""", _F, "assignment before the callback"),
    _ex("acb2", """
let n = ref 0 in fun(y:Unit) if 0 < !n then () else (f (); n := 1)
""", _F, "assignment after the callback"),
    _ex("esc1", f"""
let b = ref ff in
callcc(y:Unit. f (fun(g:Unit -> Unit) b := tt; g (); throw () to y); if !b then () else {OMEGA})
""", _G, "escape through a captured continuation, then test the flag"),
    _ex("esc2", f"""
callcc(y:Unit. f (fun(g:Unit -> Unit) g (); throw () to y); {OMEGA})
""", _G, "escape through a captured continuation, then diverge"),
    _ex("counter1", """
let x = ref 0 in <fun(y:Unit) x := !x + 1, fun(z:Unit) !x>
"""),
    _ex("counter2", """
let x = ref 0 in <fun(y:Unit) x := !x - 1, fun(z:Unit) 0 - !x>
"""),
    _ex("callomega", f"fun(f:Unit -> Unit) f (); {OMEGA}"),
    _ex("omegafun", f"fun(f:Unit -> Unit) {OMEGA}"),
    _ex("unit", "()"),
    _ex("omega", OMEGA),
]}

PAIRS = {
    "cwl": ("cwl1", "cwl2"),
    "wbsc": ("wbsc1", "wbsc2"),
    "acb": ("acb1", "acb2"),
    "esc": ("esc1", "esc2"),
    "counter": ("counter1", "counter2"),
    "complete": ("callomega", "omegafun"),
}


# hand-written contexts, as accepted by `compose`
CONTEXTS: dict[str, str] = {
    "cwl-ctx": """
let cnt = ref 0 in
let saved = ref (fun(u:Unit) ()) in
let p = [] in
(fst p) (fun(u:Unit) callcc(k:Unit. saved := (fun(v:Unit) throw () to k); ()));
cnt := !cnt + 1;
if !cnt < 2 then (!saved) () else ();
if (snd p) () = 2 then err () else ()
""".strip(),
    "twice-ctx": """
let p = [] in
(fst p) (fun(u:Unit) ());
(fst p) (fun(u:Unit) ());
if (snd p) () = 2 then err () else ()
""".strip(),
}


def example(name: str) -> Example:
    try:
        return EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {', '.join(sorted(EXAMPLES))}") from None

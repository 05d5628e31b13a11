"""Design-recipe support: the while-loop function template and per-step reports."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .interp import MonitorEvent, MonitorOptions, RunResult, TestResult, run_program
from .hoare.vcgen import VerifyReport, check_program, find_loops
from .syntax import (
    FunDef, Local, Program, TrueF, VarDef, VoidLit, calls_to,
    def_exprs, walk,
)

SCHEMA_VERSION = "1.0"
STATUSES = ("satisfied", "violated", "not-checkable", "user-attested")
STEPS = (
    (1, "problem analysis"),
    (2, "signature, purpose and header"),
    (3, "tests"),
    (4, "loop invariant"),
    (5, "local state variables"),
    (6, "initialization, loop body and return value"),
    (7, "termination argument"),
    (8, "run the tests"),
)
BODY_ORIGINS = ("initialization", "preservation", "postcondition")
VARIANT_ORIGINS = ("variant-decrease", "variant-bounded")
NONTERMINATION = ("variant-nonpositive", "variant-nondecreasing", "iteration-cap")

_IDENT = re.compile(r"^[A-Za-z_!?*<>=/+\-][A-Za-z0-9_!?*<>=/+\-.]*$")


# ---------------------------------------------------------------------------
# template


def scaffold(name: str, params: Sequence[str] = (),
             state_vars: Sequence[tuple[str, Optional[str]]] = ()) -> str:
    """Source text for a ``while``-loop function skeleton with TODO markers."""
    names = [name, *params, *(v for v, _ in state_vars)]
    for n in names:
        if not _IDENT.match(n) or n[0].isdigit():
            raise ValueError(f"not a valid identifier: {n!r}")
    seen: set[str] = set()
    for n in names:
        if n in seen:
            raise ValueError(f"duplicate name: {n}")
        seen.add(n)

    header = " ".join([name, *params])
    arity = " ".join("<type>" for _ in params)
    lines = [
        f"; {name}: {arity + ' ' if arity else ''}-> <type>",
        "; Purpose: TODO",
        "; Effect: TODO",
        f"(define ({header})",
        "  (local [",
    ]
    for v, note in state_vars:
        lines += [
            f"          ; {note or '<type>'}",
            "          ; Purpose: TODO",
            f"          (define {v} (void))",
        ]
    lines.append("          ; TODO: helper functions")
    lines.append("          ]")
    lines.append("    (begin")
    for v, _ in state_vars:
        lines.append(f"      (set! {v} (void)) ; TODO: initial value")
    lines += [
        "      ; TODO: invariant that holds at the top of every iteration",
        "      (while #false ; TODO: driver",
        "        (invariant true) ; TODO",
        "        (void)) ; TODO: mutations that restore the invariant and make progress",
        "      ; invariant and (not driver) imply the result",
        "      (void)))) ; TODO: return value",
        "; Termination argument: TODO",
        "",
        f"; (check-expect ({header}) TODO)",
        f"; (check-expect ({header}) TODO)",
        "",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# report


@dataclass
class StepResult:
    step: int
    name: str
    status: str
    evidence: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"step": self.step, "name": self.name, "status": self.status,
                "evidence": list(self.evidence)}


@dataclass
class FunctionReport:
    name: str
    steps: list[StepResult]
    loops: list[VerifyReport]
    tests: list[TestResult]
    events: list[MonitorEvent]

    @property
    def ok(self) -> bool:
        return all(s.status != "violated" for s in self.steps)

    def step(self, n: int) -> StepResult:
        return self.steps[n - 1]

    def to_json(self) -> dict:
        vcs = []
        drag = []
        for r in self.loops:
            for v in r.vcs:
                vcs.append({"loop": r.function, **v.to_json()})
            if r.drag is not None:
                drag.append({"loop": r.function, "position": str(r.pos) if r.pos else None,
                             "points": r.drag.to_json()})
        return {
            "name": self.name,
            "steps": [s.to_json() for s in self.steps],
            "vcs": vcs,
            "drag": drag,
            "tests": [t.to_json() for t in self.tests],
            "monitor_events": [e.to_json() for e in self.events],
        }

    def text(self) -> str:
        lines = [f"function {self.name}"]
        for s in self.steps:
            lines.append(f"  step {s.step} ({s.name}): {s.status}")
            lines.extend(f"      {e}" for e in s.evidence)
        for r in self.loops:
            if r.drag is not None and len(r.drag):
                lines.append(f"  drag through {r.function}:")
                lines.extend("    " + ln for ln in r.drag.text().splitlines())
        return "\n".join(lines)


@dataclass
class RecipeReport:
    file: str
    functions: list[FunctionReport]

    @property
    def ok(self) -> bool:
        return all(f.ok for f in self.functions)

    def function(self, name: str) -> FunctionReport:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"version": SCHEMA_VERSION, "file": self.file,
                "functions": [f.to_json() for f in self.functions]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    def text(self) -> str:
        return "\n\n".join(f.text() for f in self.functions) + "\n"


def _nested_names(f: FunDef) -> set[str]:
    out = {f.name}
    for x in walk(f.body):
        if isinstance(x, Local):
            out.update(d.name for d in x.defs if isinstance(d, FunDef))
    return out


def _state_vars(f: FunDef) -> list[VarDef]:
    out = []
    for x in walk(f.body):
        if isinstance(x, Local):
            out.extend(d for d in x.defs if isinstance(d, VarDef) and isinstance(d.init, VoidLit))
    return out


def _tests_for(p: Program, name: str, run: RunResult) -> list[TestResult]:
    out = []
    for t, res in zip(p.tests(), run.tests):
        if any(calls_to(e, name) for e in def_exprs(t)) or calls_to(t.expected, name):
            out.append(res)
    return out


def _step2(f: FunDef) -> StepResult:
    missing = [what for what, v in (("signature", f.signature), ("purpose", f.purpose)) if not v]
    if missing:
        return StepResult(2, STEPS[1][1], "violated", [f"missing {' and '.join(missing)} comment"])
    return StepResult(2, STEPS[1][1], "user-attested", [f"signature: {f.signature}", f"purpose: {f.purpose}"])


def _step5(f: FunDef, has_loops: bool) -> StepResult:
    name = STEPS[4][1]
    if not has_loops:
        return StepResult(5, name, "not-checkable", ["no loop to hold state variables for"])
    svs = _state_vars(f)
    if not svs:
        return StepResult(5, name, "violated", ["no state variables defined as (void) in a local"])
    bad = [v.name for v in svs if not (v.type_note and v.purpose)]
    if bad:
        return StepResult(5, name, "violated", [f"missing type or purpose for {', '.join(bad)}"])
    return StepResult(5, name, "user-attested", [f"{v.name}: {v.type_note}" for v in svs])


def _step4(loops: list[VerifyReport], sites, events) -> StepResult:
    name = STEPS[3][1]
    if not sites:
        return StepResult(4, name, "not-checkable", ["no loop"])
    ev: list[str] = []
    status = "satisfied"
    for s in sites:
        inv = s.loop.invariant if s.loop is not None else None
        label = f"{s.function} at {s.pos}" if s.pos else s.function
        if inv is None:
            ev.append(f"{label}: invariant not available")
            continue
        if isinstance(inv, TrueF):
            status = "violated"
            ev.append(f"{label}: invariant is trivial")
        else:
            ev.append(f"{label}: invariant present")
    bad = [e for e in events if e.kind == "invariant-violation"]
    if bad:
        status = "violated"
        ev.extend(str(e) for e in bad[:5])
    else:
        ev.append("no invariant violations observed on the tests")
    for r in loops:
        if r.verdict("postcondition") == "refuted":
            status = "violated"
            ev.append(f"{r.function}: invariant and exit condition do not imply the postcondition")
    return StepResult(4, name, status, ev)


def _vc_status(loops: list[VerifyReport], origins) -> tuple[str, list[str], list[str]]:
    ev: list[str] = []
    verdicts: list[str] = []
    for r in loops:
        if not r.checkable:
            ev.append(f"{r.function}: not checkable: {r.unsupported}")
            continue
        for v in r.vcs:
            if v.origin in origins:
                verdicts.append(v.verdict)
                ev.append(f"{r.function}: {v.label}: {v.verdict}")
                if v.verdict != "proved" and v.statement is not None:
                    ev.append(f"{r.function}: fails after statement {v.statement}: {v.statement_text}")
    if not verdicts:
        return "not-checkable", ev, verdicts
    if all(v == "proved" for v in verdicts):
        return "satisfied", ev, verdicts
    return "violated", ev, verdicts


def _step7(loops: list[VerifyReport], sites, events, tests) -> StepResult:
    name = STEPS[6][1]
    if not sites:
        return StepResult(7, name, "not-checkable", ["no loop"])
    status, ev, verdicts = _vc_status(loops, VARIANT_ORIGINS)
    runaway = [e for e in events if e.kind in NONTERMINATION]
    if runaway:
        return StepResult(7, name, "violated", ev + [str(e) for e in runaway[:5]])
    if status == "satisfied" or "refuted" in verdicts:
        return StepResult(7, name, status, ev)
    # undecided statically: fall back on what the monitor saw
    if tests and all(t.error is None for t in tests):
        return StepResult(7, name, "satisfied", ev + ["every loop run on the tests terminated"])
    return StepResult(7, name, status, ev)


def _step8(tests: list[TestResult]) -> StepResult:
    name = STEPS[7][1]
    if not tests:
        return StepResult(8, name, "violated", ["no tests to run"])
    failed = [t for t in tests if not t.passed]
    ev = [f"{len(tests) - len(failed)} of {len(tests)} tests passed"]
    for t in failed:
        why = t.error or f"got {t.actual}, expected {t.expected}"
        ev.append(f"test at {t.pos}: {why}")
    return StepResult(8, name, "violated" if failed else "satisfied", ev)


def recipe_report(p: Program, file: str = "", mode: str = "lenient",
                  options: Optional[MonitorOptions] = None) -> RecipeReport:
    run = run_program(p, options)
    sites = find_loops(p)
    reports = check_program(p, mode=mode)
    top = [d for d in p.defs if isinstance(d, FunDef)]
    with_loops = [f for f in top if any(s.toplevel == f.name for s in sites)]
    out = []
    for f in with_loops or top:
        mine = [s for s in sites if s.toplevel == f.name]
        loops = [r for s, r in zip(sites, reports) if s.toplevel == f.name]
        names = _nested_names(f)
        events = [e for e in run.events if e.function in names]
        tests = _tests_for(p, f.name, run)
        s1_ev = ["prose required"]
        if mine:
            s1_ev.append("state variables: " + ", ".join(v.name for v in _state_vars(f)))
        s3 = StepResult(3, STEPS[2][1], "satisfied" if tests else "violated",
                        [f"{len(tests)} tests call {f.name}"])
        s6_status, s6_ev, _ = _vc_status(loops, BODY_ORIGINS)
        for r in loops:
            s6_ev.extend(f"{r.function}: {a}" for a in r.advisories)
        steps = [
            StepResult(1, STEPS[0][1], "user-attested", s1_ev),
            _step2(f),
            s3,
            _step4(loops, mine, events),
            _step5(f, bool(mine)),
            StepResult(6, STEPS[5][1], s6_status, s6_ev),
            _step7(loops, mine, events, tests),
            _step8(tests),
        ]
        out.append(FunctionReport(f.name, steps, loops, tests, events))
    return RecipeReport(file, out)

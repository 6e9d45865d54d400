"""Batch front-end: execute vernacular scripts and report results.

Commands run in order against an evolving environment and set of tables.
Theorem commands dispatch one of the two engines (`exact modulo` runs the
recursive product/atom engine, `transfer modulo` the judgment synthesizer)
and every emitted proof is re-checked by the kernel before the theorem is
admitted, independently of any checking the engines do themselves.

Exit codes: 0 all theorems proved, 1 a transfer failed, 2 parse or
semantic error, 3 an engine produced a proof the kernel rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from .kernel import (
    PROP, Const, GlobalEnv, KernelError, LocalContext, Term,
    check_proof_report, infer_type, prelude_env, whnf,
)
from .surface import (
    CmdAxiom, CmdDeclareRelation, CmdDeclareSurjection, CmdDeclareTransfer,
    CmdDefinition, CmdParameter, CmdTheorem, EXACT_MODULO, PLam,
    SurfaceError, elaborate, parse_script, print_term,
)
from .tables import (
    DeclTables, SynthesisError, TableError, declare_relation_v2,
    declare_surjection, declare_transfer_v1, has_relational_encoding,
    prefill_core, surjection_to_relational,
)
from .transfer_v1 import TransferFailure, V1TraceStep, exact_modulo
from .transfer_v2 import transfer_modulo

EXIT_OK = 0
EXIT_PROOF_FAILURE = 1
EXIT_SCRIPT_ERROR = 2
EXIT_INTERNAL = 3


@dataclass
class TheoremResult:
    name: str
    engine: str  # "v1" | "v2"
    status: str  # "proved" | "failed"
    seconds: float
    proof: Term | None = None
    failure: TransferFailure | None = None
    trace_lines: list[str] = field(default_factory=list)


@dataclass
class SessionState:
    env: GlobalEnv
    tables: DeclTables
    results: list[TheoremResult] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    internal_errors: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class RunOptions:
    engine: str | None = None  # force "v1" or "v2"; None = per-tactic keyword
    trace: bool = False
    print_proofs: bool = False
    keep_going: bool = False
    prefill: bool = True
    diagnostics: bool = False
    fmt: str = "human"


class ScriptError(Exception):
    pass


def execute_script(text: str, options: RunOptions = RunOptions()) -> SessionState:
    """Run a script's commands in order; never raises for script-level
    problems (they are collected in the returned state)."""
    state = SessionState(env=prelude_env(), tables=DeclTables())
    try:
        script = parse_script(text)
    except SurfaceError as e:
        state.errors.append(str(e))
        return state
    if options.prefill:
        try:
            state.tables = prefill_core(state.tables, state.env)
        except SynthesisError as e:
            state.internal_errors.append(str(e))
            return state
    for cmd in script.commands:
        try:
            _execute_command(state, cmd, options)
        except ScriptError as e:
            state.errors.append(str(e))
            if not options.keep_going:
                break
        except SynthesisError as e:
            state.internal_errors.append(f"line {cmd.line}: {e}")
            break
        if state.results and state.results[-1].status == "failed" \
                and not options.keep_going:
            break
    return state


def _fail(cmd, message: str) -> ScriptError:
    return ScriptError(f"line {cmd.line}: {message}")


def _elaborate(state: SessionState, cmd, pre) -> Term:
    try:
        return elaborate(state.env, pre)
    except SurfaceError as e:
        raise _fail(cmd, str(e)) from None


def _execute_command(state: SessionState, cmd, options: RunOptions) -> None:
    env, tables = state.env, state.tables
    match cmd:
        case CmdParameter(names, ty_pre, _):
            ty = _elaborate(state, cmd, ty_pre)
            for name in names:
                try:
                    env = env.add_parameter(name, ty)
                except KernelError as e:
                    raise _fail(cmd, str(e)) from None
            state.env = env
        case CmdAxiom(name, stmt_pre, _):
            stmt = _elaborate(state, cmd, stmt_pre)
            try:
                state.env = env.add_axiom(name, stmt)
            except KernelError as e:
                raise _fail(cmd, str(e)) from None
        case CmdDefinition(name, params, body_pre, _):
            pre = PLam(params, body_pre) if params else body_pre
            body = _elaborate(state, cmd, pre)
            try:
                state.env = env.add_definition(name, body)
            except KernelError as e:
                raise _fail(cmd, str(e)) from None
        case CmdDeclareSurjection(fn, inverse, proof, _):
            try:
                state.tables = declare_surjection(tables, env, fn, inverse, proof)
            except TableError as e:
                raise _fail(cmd, str(e)) from None
        case CmdDeclareTransfer(lemma, _):
            try:
                state.tables = declare_transfer_v1(tables, env, lemma)
            except TableError as e:
                raise _fail(cmd, str(e)) from None
        case CmdDeclareRelation(lemma, _):
            try:
                state.tables = declare_relation_v2(tables, env, lemma)
            except TableError as e:
                raise _fail(cmd, str(e)) from None
        case CmdTheorem(_, _, _, _, _):
            _execute_theorem(state, cmd, options)
        case _:
            raise _fail(cmd, f"unhandled command {cmd!r}")


def _execute_theorem(state: SessionState, cmd: CmdTheorem,
                     options: RunOptions) -> None:
    env = state.env
    goal = _elaborate(state, cmd, cmd.statement)
    try:
        goal_sort = whnf(env, infer_type(env, LocalContext(), goal))
    except KernelError as e:
        raise _fail(cmd, str(e)) from None
    if goal_sort != PROP:
        raise _fail(cmd, f"statement of '{cmd.name}' is not a proposition")
    if cmd.source not in env:
        raise _fail(cmd, f"unknown source theorem '{cmd.source}'")
    if cmd.name in env:
        raise _fail(cmd, f"'{cmd.name}' is already declared")
    source_stmt = env.type_of(cmd.source)
    source_proof = Const(cmd.source)

    engine = options.engine or ("v1" if cmd.tactic == EXACT_MODULO else "v2")
    started = time.perf_counter()
    trace_lines: list[str] = []

    if engine == "v1":
        steps: list[V1TraceStep] | None = [] if options.trace else None
        outcome = exact_modulo(env, state.tables, LocalContext(), source_stmt,
                               goal, source_proof, steps)
        if steps:
            trace_lines = [s.line() for s in steps]
    else:
        # Surjections are given their relational encoding on demand.
        for entry in list(state.tables.surjections.values()):
            if not has_relational_encoding(state.tables, env, entry):
                state.tables, env = surjection_to_relational(
                    state.tables, env, entry)
                state.env = env
        outcome = transfer_modulo(env, state.tables, source_stmt, goal,
                                  source_proof,
                                  diagnostics=options.diagnostics)
        if not isinstance(outcome, TransferFailure):
            proof_term, derivation = outcome
            trace_lines = derivation.lines(env)
            outcome = proof_term
    elapsed = time.perf_counter() - started

    if isinstance(outcome, TransferFailure):
        state.results.append(TheoremResult(cmd.name, engine, "failed",
                                           elapsed, failure=outcome,
                                           trace_lines=trace_lines))
        return

    # Mandatory independent re-check before the theorem is admitted.
    ok, diag = check_proof_report(env, LocalContext(), outcome, goal)
    if not ok:
        raise SynthesisError(
            f"engine {engine} produced a rejected proof for '{cmd.name}': {diag}")
    state.env = env.add_definition(cmd.name, outcome, goal)
    state.results.append(TheoremResult(cmd.name, engine, "proved", elapsed,
                                       proof=outcome,
                                       trace_lines=trace_lines))


def exit_code(state: SessionState) -> int:
    if state.errors:
        return EXIT_SCRIPT_ERROR
    if state.internal_errors:
        return EXIT_INTERNAL
    if any(r.status != "proved" for r in state.results):
        return EXIT_PROOF_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def report(state: SessionState, fmt: str = "human",
           options: RunOptions = RunOptions()) -> str:
    if fmt == "machine":
        return _machine_report(state)
    return _human_report(state, options)


def _human_report(state: SessionState, options: RunOptions) -> str:
    lines: list[str] = []
    for r in state.results:
        if r.status == "proved":
            lines.append(f"{r.name} : proved ({r.seconds * 1000:.1f} ms, "
                         f"engine {r.engine})")
        else:
            lines.append(f"{r.name} : failed ({r.failure})")
        if options.print_proofs and r.proof is not None:
            lines.append(f"  proof: {print_term(r.proof, state.env)}")
        if options.trace and r.trace_lines:
            lines.extend(f"  | {t}" for t in r.trace_lines)
    for e in state.errors:
        lines.append(f"error: {e}")
    for e in state.internal_errors:
        lines.append(f"internal error: {e}")
    proved = sum(1 for r in state.results if r.status == "proved")
    lines.append(f"{proved}/{len(state.results)} theorems proved")
    return "\n".join(lines)


def _machine_report(state: SessionState) -> str:
    doc = {
        "theorems": [
            {
                "theorem": r.name,
                "engine": r.engine,
                "status": r.status,
                "proof": (print_term(r.proof, state.env)
                          if r.proof is not None else None),
                "failure": (None if r.failure is None
                            else {"kind": r.failure.kind,
                                  "message": r.failure.message}),
                "trace": r.trace_lines,
            }
            for r in state.results
        ],
        "errors": list(state.errors),
        "internal_errors": list(state.internal_errors),
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def run_script(path: str, options: RunOptions = RunOptions(),
               out=None) -> int:
    """Execute the script at path and print a report; returns the exit code."""
    out = out if out is not None else sys.stdout
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCRIPT_ERROR
    state = execute_script(text, options)
    print(report(state, options.fmt, options), file=out)
    return exit_code(state)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="transfer-kernel",
        description="Run proof-transfer scripts against the kernel.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a script file")
    run.add_argument("file", help="script file (UTF-8)")
    run.add_argument("--engine", choices=["v1", "v2"],
                     help="force one engine for every theorem")
    run.add_argument("--trace", action="store_true",
                     help="record and print derivation traces")
    run.add_argument("--print-proofs", action="store_true",
                     help="print emitted proof terms")
    run.add_argument("--keep-going", action="store_true",
                     help="continue past failed commands")
    run.add_argument("--no-prefill", action="store_true",
                     help="start with empty tables (no implication entry)")
    run.add_argument("--diagnostics", action="store_true",
                     help="kernel-check every intermediate judgment")
    run.add_argument("--format", choices=["human", "machine"],
                     default="human", dest="fmt")
    args = parser.parse_args(argv)
    options = RunOptions(engine=args.engine, trace=args.trace,
                         print_proofs=args.print_proofs,
                         keep_going=args.keep_going,
                         prefill=not args.no_prefill,
                         diagnostics=args.diagnostics, fmt=args.fmt)
    return run_script(args.file, options)


if __name__ == "__main__":
    sys.exit(main())

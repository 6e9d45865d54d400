"""First transfer engine: recursion over atoms and dependent products.

Given a proved source formula and a target formula of the same shape, the
engine builds an explicit proof of the target.  Atoms are bridged by
declared transfer lemmas; quantifiers first try to transfer the bound
hypothesis backwards, then fall back to a declared surjection, replacing
the source variable by `g x'` and rewriting `f (g x')` back to `x'` with
an equality eliminator.  The replacement happens only in covariant
positions so the atoms line up with the transfer-lemma shape.

Every produced proof is checkable by the kernel; failures are returned as
values, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .kernel import (
    EQ_IND,
    App, Const, GlobalEnv, Lam, LocalContext, Pi, Term, Var,
    app, check_proof_report, convertible, replace_var, shift, spine, whnf,
)
from .surface import print_term
from .tables import DeclTables, SynthesisError, lookup_surjection, lookup_transfer_v1


class Polarity(Enum):
    COVARIANT = "covariant"
    CONTRAVARIANT = "contravariant"

    def flipped(self) -> "Polarity":
        if self is Polarity.COVARIANT:
            return Polarity.CONTRAVARIANT
        return Polarity.COVARIANT


COVARIANT = Polarity.COVARIANT
CONTRAVARIANT = Polarity.CONTRAVARIANT


@dataclass(frozen=True)
class TransferFailure:
    """Structured engine failure; `kind` is one of no-table-entry,
    argument-mismatch or shape-mismatch."""
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class AtomView:
    head: Term
    args: tuple[Term, ...]


def atom_view(env: GlobalEnv, formula: Term) -> AtomView:
    """Application-spine view after beta head reduction only; definitions
    are kept folded so declared relations stay recognizable."""
    head, args = spine(whnf(env, formula, delta=False))
    return AtomView(head, tuple(args))


@dataclass(frozen=True)
class V1TraceStep:
    case: str  # identity | atom | product-hypothesis | product-surjection | rewrite
    detail: str
    depth: int

    def line(self) -> str:
        return f"{'  ' * self.depth}{self.case} {self.detail}".rstrip()


def subst_polarized(formula: Term, target: int, replacement: Term,
                    start: Polarity) -> Term:
    """Substitute for a variable only in positions of the given polarity.

    Descending into a product flips polarity for the domain and keeps it
    for the codomain; anything that is not a product is treated as an atom
    and replaced wholesale iff the current polarity is covariant.
    """
    if isinstance(formula, Pi):
        return Pi(formula.name,
                  subst_polarized(formula.ty, target, replacement,
                                  start.flipped()),
                  subst_polarized(formula.body, target + 1,
                                  shift(replacement, 1), start))
    if start is COVARIANT:
        return replace_var(formula, target, replacement)
    return formula


def build_rewrite(env: GlobalEnv, ctx: LocalContext, goal: Term,
                  var_index: int, from_term: Term, eq_proof: Term,
                  inner: Term, codomain: Term) -> Term:
    """Turn a proof of goal[covariant var := from_term] into a proof of goal.

    The motive abstracts exactly the covariant occurrences of the variable,
    so applying it to `from_term` is convertible with the inner statement
    and applying it to the variable is the goal itself.  eq_proof must
    prove `eq codomain from_term var`.
    """
    motive_body = subst_polarized(shift(goal, 1), var_index + 1, Var(0),
                                  COVARIANT)
    motive = Lam("w", codomain, motive_body)
    proof = app(Const(EQ_IND), codomain, from_term, motive, inner,
                Var(var_index), eq_proof)
    ok, diag = check_proof_report(env, ctx, proof, goal)
    if not ok:
        raise SynthesisError(
            f"rewrite construction failed to check (motive/polarity bug): {diag}")
    return proof


def exact_modulo(env: GlobalEnv, tables: DeclTables, ctx: LocalContext,
                 source: Term, target: Term, proof: Term,
                 trace: list[V1TraceStep] | None = None,
                 _depth: int = 0) -> Term | TransferFailure:
    """Transfer `proof : source` into a proof of `target`, or fail.

    Case order: conversion short-circuit, then matching dependent products
    (hypothesis direction first, surjection second), then matching atoms
    through the transfer-lemma table.
    """
    def note(case: str, detail: str) -> None:
        if trace is not None:
            trace.append(V1TraceStep(case, detail, _depth))

    if convertible(env, ctx, source, target):
        note("identity", "")
        return proof

    ws = whnf(env, source)
    wt = whnf(env, target)
    if isinstance(ws, Pi) or isinstance(wt, Pi):
        if not (isinstance(ws, Pi) and isinstance(wt, Pi)):
            return TransferFailure(
                "shape-mismatch",
                f"{print_term(source, env, ctx)} and "
                f"{print_term(target, env, ctx)} do not have the same shape")
        return _product_case(env, tables, ctx, ws, wt, proof, trace, _depth, note)
    return _atom_case(env, tables, ctx, source, target, proof, note)


def _product_case(env, tables, ctx, ws: Pi, wt: Pi, proof, trace, depth, note):
    dom_s, body_s = ws.ty, ws.body
    dom_t, body_t = wt.ty, wt.body
    binder = wt.name if wt.name != "_" else ws.name
    ctx2 = ctx.push(binder, dom_t)
    lifted_proof = shift(proof, 1)

    # Hypothesis direction: turn the new variable (a proof of the target
    # domain) into a proof of the source domain.
    sub_trace: list[V1TraceStep] | None = [] if trace is not None else None
    witness = exact_modulo(env, tables, ctx2, shift(dom_t, 1), shift(dom_s, 1),
                           Var(0), sub_trace, depth + 2)
    if not isinstance(witness, TransferFailure):
        note("product-hypothesis", f"{binder} : {print_term(dom_t, env, ctx)}")
        if trace is not None:
            trace.extend(sub_trace or [])
        inst_body = replace_var(body_s, 0, witness)
        rec = exact_modulo(env, tables, ctx2, inst_body, body_t,
                           App(lifted_proof, witness), trace, depth + 1)
        if isinstance(rec, TransferFailure):
            return rec
        return Lam(binder, dom_t, rec)

    entry = lookup_surjection(tables, env, dom_s, dom_t)
    if entry is None:
        return TransferFailure(
            "no-table-entry",
            f"no surjection declared for ({print_term(dom_s, env, ctx)}, "
            f"{print_term(dom_t, env, ctx)})")
    note("product-surjection",
         f"{binder} via {print_term(entry.fn, env)}")
    g_var = App(shift(entry.inverse, 1), Var(0))
    fg_var = App(shift(entry.fn, 1), g_var)
    inst_body = replace_var(body_s, 0, g_var)
    subst_goal = subst_polarized(body_t, 0, fg_var, COVARIANT)
    rec = exact_modulo(env, tables, ctx2, inst_body, subst_goal,
                       App(lifted_proof, g_var), trace, depth + 1)
    if isinstance(rec, TransferFailure):
        return rec
    note("rewrite", f"restore {binder} from {print_term(fg_var, env, ctx2)}")
    eq_proof = App(shift(entry.proof, 1), Var(0))
    wrapped = build_rewrite(env, ctx2, body_t, 0, fg_var, eq_proof, rec,
                            shift(entry.codomain, 1))
    return Lam(binder, dom_t, wrapped)


def _atom_case(env, tables, ctx, source, target, proof, note):
    vs = atom_view(env, source)
    vt = atom_view(env, target)
    if len(vs.args) != len(vt.args):
        return TransferFailure(
            "shape-mismatch",
            f"atoms {print_term(source, env, ctx)} and "
            f"{print_term(target, env, ctx)} have arities "
            f"{len(vs.args)} and {len(vt.args)}")
    entry = lookup_transfer_v1(tables, env, vs.head, vt.head)
    if entry is None:
        return TransferFailure(
            "no-table-entry",
            f"no transfer lemma for ({print_term(vs.head, env, ctx)}, "
            f"{print_term(vt.head, env, ctx)})")
    if entry.arity != len(vs.args):
        return TransferFailure(
            "shape-mismatch",
            f"transfer lemma for ({print_term(vs.head, env, ctx)}, "
            f"{print_term(vt.head, env, ctx)}) expects {entry.arity} "
            f"arguments, atoms have {len(vs.args)}")
    for i, (arg_s, arg_t) in enumerate(zip(vs.args, vt.args), start=1):
        image = App(entry.transfer_fn, arg_s)
        if not convertible(env, ctx, arg_t, image):
            return TransferFailure(
                "argument-mismatch",
                f"argument {i}: {print_term(arg_t, env, ctx)} is not "
                f"{print_term(image, env, ctx)}")
    lemma_name = print_term(entry.proof, env)
    note("atom", f"{lemma_name} : {print_term(vs.head, env, ctx)} to "
                 f"{print_term(vt.head, env, ctx)}")
    return app(entry.proof, *vs.args, proof)

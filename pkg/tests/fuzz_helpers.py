"""Shared generators for randomized transfer problems.

Both engines are driven over seeded-random, well-typed formula pairs: the
target is the primed counterpart of the source, optionally mutated to
force a failure (an unregistered relation head, or a dropped hypothesis).
"""

from __future__ import annotations

import random

from transfer_kernel.kernel import (
    SET, App, Const, GlobalEnv, Pi, Term, Var, app, arrow, prelude_env,
    unshift,
)
from transfer_kernel.surface import parse_and_elaborate
from transfer_kernel.tables import (
    DeclTables, declare_relation_v2, declare_surjection, declare_transfer_v1,
    lookup_surjection, prefill_core, surjection_to_relational,
)


def _declare(env: GlobalEnv, kind: str, name: str, text: str) -> GlobalEnv:
    term = parse_and_elaborate(env, text)
    return (env.add_parameter(name, term) if kind == "parameter"
            else env.add_axiom(name, term))


def v1_fixture() -> tuple[GlobalEnv, DeclTables]:
    env = prelude_env()
    env = env.add_parameter("A", SET).add_parameter("A'", SET)
    env = _declare(env, "parameter", "fA", "A → A'")
    env = _declare(env, "parameter", "gA", "A' → A")
    env = _declare(env, "axiom", "surjA", "∀ x' : A', fA (gA x') = x'")
    env = _declare(env, "parameter", "R1", "A → Prop")
    env = _declare(env, "parameter", "R1'", "A' → Prop")
    env = _declare(env, "parameter", "R2", "A → A → Prop")
    env = _declare(env, "parameter", "R2'", "A' → A' → Prop")
    env = _declare(env, "parameter", "S1", "A → Prop")
    env = _declare(env, "parameter", "S1'", "A' → Prop")
    env = _declare(env, "axiom", "r1_up", "∀ x : A, R1 x → R1' (fA x)")
    env = _declare(env, "axiom", "r1_down", "∀ x' : A', R1' x' → R1 (gA x')")
    env = _declare(env, "axiom", "r2_up",
                   "∀ x y : A, R2 x y → R2' (fA x) (fA y)")
    env = _declare(env, "axiom", "r2_down",
                   "∀ x y : A', R2' x y → R2 (gA x) (gA y)")
    tables = DeclTables()
    tables = declare_surjection(tables, env, "fA", "gA", "surjA")
    for lemma in ("r1_up", "r1_down", "r2_up", "r2_down"):
        tables = declare_transfer_v1(tables, env, lemma)
    return env, tables


def v1_problem(rng: random.Random, depth: int,
               mutate: str | None) -> tuple[Term, Term]:
    def gen(d: int, n_vars: int, covariant: bool) -> tuple[Term, Term]:
        choices = ["atom"]
        if d > 0:
            if covariant and rng.random() < 0.6:
                choices.append("forall")
            choices.append("imp")
        kind = rng.choice(choices)
        if kind == "forall":
            src, tgt = gen(d - 1, n_vars + 1, covariant)
            return Pi("x", Const("A"), src), Pi("x'", Const("A'"), tgt)
        if kind == "imp":
            hs, ht = gen(d - 1, n_vars, not covariant)
            cs, ct = gen(d - 1, n_vars, covariant)
            return arrow(hs, cs), arrow(ht, ct)
        if n_vars == 0:
            return Const("False"), Const("False")
        if rng.random() < 0.5:
            i = rng.randrange(n_vars)
            return app(Const("R1"), Var(i)), app(Const("R1'"), Var(i))
        i, j = rng.randrange(n_vars), rng.randrange(n_vars)
        return (app(Const("R2"), Var(i), Var(j)),
                app(Const("R2'"), Var(i), Var(j)))

    src, tgt = gen(depth, 0, True)
    if mutate == "head":
        tgt = swap_heads(tgt, Const("R1'"), Const("S1'"))
    elif mutate == "drop":
        tgt = drop_one_arrow(tgt)
    return src, tgt


def v2_fixture() -> tuple[GlobalEnv, DeclTables]:
    env = prelude_env()
    env = env.add_parameter("nat", SET).add_parameter("N", SET)
    env = _declare(env, "parameter", "N.of_nat", "nat → N")
    env = _declare(env, "parameter", "N.to_nat", "N → nat")
    env = _declare(env, "axiom", "of_to", "∀ x' : N, N.of_nat (N.to_nat x') = x'")
    env = env.add_definition(
        "natN", parse_and_elaborate(env, "fun x x' => N.of_nat x = x'"))
    env = _declare(env, "parameter", "le", "nat → nat → Prop")
    env = _declare(env, "parameter", "N.le", "N → N → Prop")
    env = _declare(env, "parameter", "P", "nat → Prop")
    env = _declare(env, "parameter", "P'", "N → Prop")
    env = _declare(env, "parameter", "Q'", "N → Prop")
    env = _declare(env, "axiom", "le_up_rel", "(natN ##> natN ##> impl) le N.le")
    env = _declare(env, "axiom", "le_down_rel",
                   "(natN⁻¹ ##> natN⁻¹ ##> impl) N.le le")
    env = _declare(env, "axiom", "P_up", "(natN ##> impl) P P'")
    env = _declare(env, "axiom", "P_down", "(natN⁻¹ ##> impl) P' P")
    # identity-carrying entry: there is no reflexivity fallback
    env = _declare(env, "axiom", "false_id", "impl False False")
    tables = prefill_core(DeclTables(), env)
    tables = declare_surjection(tables, env, "N.of_nat", "N.to_nat", "of_to")
    for lemma in ("le_up_rel", "le_down_rel", "P_up", "P_down", "false_id"):
        tables = declare_relation_v2(tables, env, lemma)
    entry = lookup_surjection(tables, env, Const("nat"), Const("N"))
    tables, env = surjection_to_relational(tables, env, entry)
    return env, tables


def v2_problem(rng: random.Random, depth: int,
               mutate: str | None) -> tuple[Term, Term]:
    def gen(d: int, n_vars: int, covariant: bool) -> tuple[Term, Term]:
        choices = ["atom"]
        if d > 0:
            if covariant and rng.random() < 0.5:
                choices.append("forall")
            choices.append("imp")
        kind = rng.choice(choices)
        if kind == "forall":
            src, tgt = gen(d - 1, n_vars + 1, covariant)
            return Pi("x", Const("nat"), src), Pi("x'", Const("N"), tgt)
        if kind == "imp":
            hs, ht = gen(d - 1, n_vars, not covariant)
            cs, ct = gen(d - 1, n_vars, covariant)
            return arrow(hs, cs), arrow(ht, ct)
        if n_vars == 0:
            return Const("False"), Const("False")
        if rng.random() < 0.5:
            i = rng.randrange(n_vars)
            return app(Const("P"), Var(i)), app(Const("P'"), Var(i))
        i, j = rng.randrange(n_vars), rng.randrange(n_vars)
        return (app(Const("le"), Var(i), Var(j)),
                app(Const("N.le"), Var(i), Var(j)))

    src, tgt = gen(depth, 0, True)
    if mutate == "head":
        tgt = swap_heads(tgt, Const("P'"), Const("Q'"))
    elif mutate == "drop":
        tgt = drop_one_arrow(tgt)
    return src, tgt


def swap_heads(t: Term, old: Term, new: Term) -> Term:
    if isinstance(t, App):
        return App(swap_heads(t.fn, old, new), t.arg)
    if isinstance(t, Pi):
        return Pi(t.name, t.ty, swap_heads(t.body, old, new))
    return new if t == old else t


def drop_one_arrow(t: Term) -> Term:
    if isinstance(t, Pi) and t.name == "_":
        return unshift(t.body)
    if isinstance(t, Pi):
        return Pi(t.name, t.ty, drop_one_arrow(t.body))
    return t

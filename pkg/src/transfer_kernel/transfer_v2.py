"""Second transfer engine: deterministic synthesis of relatedness judgments.

A judgment relates a source term and a target term through a relation,
witnessed by a kernel-checkable proof.  The synthesizer drives six rules:
implications and universal quantifiers are first viewed as applications of
`impl` and `all` (Arrow, Forall), leaves are closed by context hypotheses
(Env) or declared relation entries (Table, with an inverse fallback that
flips a stored entry), and structure is decomposed one application at a
time (App) or through binders when the expected relation is a relator
arrow (Lambda).

Relation expectations may contain metavariables; they are solved by
one-way matching against hypothesis and table relations, and solutions are
restricted to closed terms so they can move across binders.  The rule
order and operand order are fixed, so identical inputs produce identical
derivations, traces and proofs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import (
    ALL, IMPL, INV, PROP, RESPECTFUL,
    App, Const, GlobalEnv, Lam, LocalContext, Pi, Term, TypeCheckError, Var,
    app, check_proof_report, convertible, infer_type, inv_view,
    max_free_index, occurs_free, relation_types, replace_var, respectful_view,
    shift, spine, unshift, whnf,
)
from .surface import print_term
from .tables import (
    DeclTables, RelationEntryV2, SynthesisError, table_key,
)
from .transfer_v1 import TransferFailure


# ---------------------------------------------------------------------------
# Relation expectations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Known:
    rel: Term


@dataclass(frozen=True)
class Unknown:
    id: int


@dataclass(frozen=True)
class RelArrow:
    """Expectation `dom ##> cod` with holes allowed on either side."""
    dom: "RelExpectation"
    cod: "RelExpectation"


RelExpectation = Known | Unknown | RelArrow


@dataclass(frozen=True)
class Judgment:
    ctx: LocalContext
    lhs: Term
    rhs: Term
    relation: Term
    proof: Term


@dataclass(frozen=True)
class TraceNode:
    rule: str  # Env | Table | Lambda | App | Forall | Arrow
    ctx: LocalContext
    lhs: Term
    rhs: Term
    relation: Term
    via_inverse: bool = False
    children: tuple["TraceNode", ...] = ()

    def rule_label(self) -> str:
        return f"{self.rule}-inv" if self.via_inverse else self.rule


@dataclass(frozen=True)
class DerivationTrace:
    root: TraceNode

    def lines(self, env: GlobalEnv) -> list[str]:
        out: list[str] = []

        def walk(node: TraceNode, depth: int) -> None:
            lhs = print_term(node.lhs, env, node.ctx)
            rhs = print_term(node.rhs, env, node.ctx)
            rel = print_term(node.relation, env, node.ctx)
            out.append(f"{'  ' * depth}{node.rule_label()} {lhs} ⇝[{rel}] {rhs}")
            for child in node.children:
                walk(child, depth + 1)

        walk(self.root, 0)
        return out

    def rules(self) -> list[str]:
        out: list[str] = []

        def walk(node: TraceNode) -> None:
            out.append(node.rule_label())
            for child in node.children:
                walk(child)

        walk(self.root)
        return out


# ---------------------------------------------------------------------------
# Entry inversion
# ---------------------------------------------------------------------------

def _invert_component(env: GlobalEnv, rel: Term) -> Term:
    """R -> R⁻¹, unwrapping an existing inversion instead of double-wrapping."""
    unwrapped = inv_view(env, rel)
    if unwrapped is not None:
        return unwrapped[2]
    x, y = relation_types(env, LocalContext(), rel)
    return app(Const(INV), x, y, rel)


def invert_relation(env: GlobalEnv, rel: Term) -> Term:
    """Flip a relator chain: components are inverted, operands swap sides."""
    view = respectful_view(env, rel)
    if view is None:
        return _invert_component(env, rel)
    x, y, x2, y2, r, s = view
    return app(Const(RESPECTFUL), y, x, y2, x2,
               _invert_component(env, r), invert_relation(env, s))


def _chain_components(env: GlobalEnv, rel: Term) -> list[tuple[Term, Term, Term]]:
    """[(X, Y, R), ...] for each relator-arrow level of rel."""
    out: list[tuple[Term, Term, Term]] = []
    while True:
        view = respectful_view(env, rel)
        if view is None:
            return out
        x, y, _, _, r, s = view
        out.append((x, y, r))
        rel = s


def invert_entry(env: GlobalEnv, entry: RelationEntryV2) -> RelationEntryV2:
    """Flip a stored entry; the proof is the old one with the paired binders
    swapped, which is definitional because `inv R y x` unfolds to `R x y`."""
    new_rel = invert_relation(env, entry.relation)
    components = _chain_components(env, entry.relation)
    n = len(components)
    if n == 0:
        proof = entry.proof
    else:
        args: list[Term] = []
        for i in range(1, n + 1):
            base = 3 * (n - i)
            args.extend([Var(base + 1), Var(base + 2), Var(base)])
        proof = app(shift(entry.proof, 3 * n), *args)
        for x, y, r in reversed(components):
            # Binder order per level: y, x, then a proof of R x y (the
            # unfolding of the flipped statement's `R⁻¹ y x`).
            proof = Lam("h", app(shift(r, 2), Var(0), Var(1)), proof)
            proof = Lam("x", shift(x, 1), proof)
            proof = Lam("y", y, proof)
    statement = app(new_rel, entry.rhs, entry.lhs)
    ok, diag = check_proof_report(env, LocalContext(), proof, statement)
    if not ok:
        raise SynthesisError(f"inverted entry failed to check: {diag}")
    return RelationEntryV2(entry.rhs, entry.lhs, new_rel, proof)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

def match_relation(env: GlobalEnv, ctx: LocalContext, stored: Term,
                   expect: RelExpectation,
                   metas: dict[int, Term]) -> dict[int, Term] | None:
    """One-way match of an expectation pattern against a stored relation.

    Returns the extended substitution, or None.  The stored relation is
    never instantiated; concrete components are compared by conversion.
    Metavariable solutions must be closed so they remain valid under the
    binders other rules introduce.
    """
    trial = dict(metas)
    if _match(env, ctx, stored, expect, trial):
        return trial
    return None


def _match(env: GlobalEnv, ctx: LocalContext, stored: Term,
           expect: RelExpectation, trial: dict[int, Term]) -> bool:
    match expect:
        case Unknown(i):
            if i in trial:
                return convertible(env, ctx, trial[i], stored)
            if max_free_index(stored) >= 0:
                return False
            trial[i] = stored
            return True
        case Known(rel):
            return convertible(env, ctx, rel, stored)
        case RelArrow(dom, cod):
            view = respectful_view(env, stored)
            if view is None:
                return False
            _, _, _, _, r, s = view
            return (_match(env, ctx, r, dom, trial)
                    and _match(env, ctx, s, cod, trial))
    return False


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

@dataclass
class _FailurePoint:
    depth: int
    ctx: LocalContext
    lhs: Term
    rhs: Term
    attempts: list[tuple[str, str]]


class _Synth:
    def __init__(self, env: GlobalEnv, tables: DeclTables,
                 diagnostics: bool = False):
        self.env = env
        self.tables = tables
        self.diagnostics = diagnostics
        self.metas: dict[int, Term] = {}
        self._next_meta = 0
        self.deepest_failure: _FailurePoint | None = None

    def fresh(self) -> Unknown:
        self._next_meta += 1
        return Unknown(self._next_meta)

    # -- expectation helpers -------------------------------------------------

    def resolve(self, expect: RelExpectation,
                ctx: LocalContext) -> Term | None:
        """Expectation as a concrete relation term, if fully solved."""
        match expect:
            case Known(rel):
                return rel
            case Unknown(i):
                return self.metas.get(i)
            case RelArrow(dom, cod):
                d = self.resolve(dom, ctx)
                c = self.resolve(cod, ctx)
                if d is None or c is None:
                    return None
                try:
                    x, y = relation_types(self.env, ctx, d)
                    x2, y2 = relation_types(self.env, ctx, c)
                except TypeCheckError:
                    return None
                return app(Const(RESPECTFUL), x, y, x2, y2, d, c)
        return None

    def match(self, ctx: LocalContext, stored: Term,
              expect: RelExpectation) -> bool:
        result = match_relation(self.env, ctx, stored, expect, self.metas)
        if result is None:
            return False
        self.metas = result
        return True

    def describe(self, expect: RelExpectation, ctx: LocalContext) -> str:
        match expect:
            case Known(rel):
                return print_term(rel, self.env, ctx)
            case Unknown(i):
                sol = self.metas.get(i)
                return print_term(sol, self.env, ctx) if sol is not None else "?"
            case RelArrow(dom, cod):
                return f"{self.describe(dom, ctx)} ##> {self.describe(cod, ctx)}"
        return "?"

    def record_failure(self, depth: int, ctx: LocalContext, lhs: Term,
                       rhs: Term, attempts: list[tuple[str, str]]) -> None:
        if self.deepest_failure is None or depth >= self.deepest_failure.depth:
            self.deepest_failure = _FailurePoint(depth, ctx, lhs, rhs,
                                                 list(attempts))

    def failure_message(self) -> str:
        fp = self.deepest_failure
        if fp is None:
            return "no derivation found"
        lhs = print_term(fp.lhs, self.env, fp.ctx)
        rhs = print_term(fp.rhs, self.env, fp.ctx)
        tried = "; ".join(f"{rule}: {why}" for rule, why in fp.attempts)
        return (f"cannot relate {lhs} to {rhs}"
                + (f" ({tried})" if tried else ""))

    # -- sort checks ----------------------------------------------------------

    def _sort_of(self, ctx: LocalContext, t: Term) -> Term | None:
        try:
            return whnf(self.env, infer_type(self.env, ctx, t))
        except TypeCheckError:
            return None

    # -- the rules -------------------------------------------------------------

    def synth(self, ctx: LocalContext, lhs: Term, rhs: Term,
              expect: RelExpectation,
              depth: int = 0) -> tuple[Judgment, TraceNode] | None:
        attempts: list[tuple[str, str]] = []

        def attempt(rule):
            # Solutions made inside a failed rule attempt are unjustified
            # and must not leak into later attempts.
            saved = dict(self.metas)
            result = rule()
            if result is None:
                self.metas = saved
            return result

        normalized = attempt(
            lambda: self._forall_arrow_view(ctx, lhs, rhs, expect, depth))
        if normalized is not None:
            return normalized

        env_result = attempt(lambda: self._rule_env(ctx, lhs, rhs, expect))
        if env_result is not None:
            return self._finish(env_result, depth)
        attempts.append(("Env", "no hypothesis relates the two sides"))

        table_result = attempt(lambda: self._rule_table(ctx, lhs, rhs, expect))
        if table_result is not None:
            return self._finish(table_result, depth)
        attempts.append(("Table", "no matching entry (direct or inverted)"))

        app_result = attempt(
            lambda: self._rule_app(ctx, lhs, rhs, expect, depth, attempts))
        if app_result is not None:
            return app_result

        lam_result = attempt(
            lambda: self._rule_lambda(ctx, lhs, rhs, expect, depth, attempts))
        if lam_result is not None:
            return lam_result

        self.record_failure(depth, ctx, lhs, rhs, attempts)
        return None

    def _finish(self, result: tuple[Judgment, TraceNode],
                depth: int) -> tuple[Judgment, TraceNode]:
        judgment, node = result
        if self.diagnostics:
            stmt = app(judgment.relation, judgment.lhs, judgment.rhs)
            ok, diag = check_proof_report(self.env, judgment.ctx,
                                          judgment.proof, stmt)
            if not ok:
                raise SynthesisError(
                    f"unsound judgment at {node.rule}: {diag}")
        return judgment, node

    # Forall / Arrow -----------------------------------------------------------

    def _forall_arrow_view(self, ctx, lhs, rhs, expect, depth):
        # Products are detected on the beta view only: the rewritten
        # `impl`/`all` applications must stay applications when recursing.
        wl = whnf(self.env, lhs, delta=False)
        wr = whnf(self.env, rhs, delta=False)
        if not (isinstance(wl, Pi) and isinstance(wr, Pi)):
            return None
        lhs_nondep = not occurs_free(wl.body, 0)
        rhs_nondep = not occurs_free(wr.body, 0)
        if lhs_nondep and rhs_nondep \
                and self._sort_of(ctx, wl.ty) == PROP \
                and self._sort_of(ctx, wr.ty) == PROP:
            lhs2 = app(Const(IMPL), wl.ty, unshift(wl.body))
            rhs2 = app(Const(IMPL), wr.ty, unshift(wr.body))
            sub = self.synth(ctx, lhs2, rhs2, expect, depth + 1)
            if sub is None:
                return None
            judgment, node = sub
            wrapped = Judgment(ctx, lhs, rhs, judgment.relation, judgment.proof)
            return self._finish(
                (wrapped, TraceNode("Arrow", ctx, lhs, rhs, judgment.relation,
                                    children=(node,))), depth)
        body_sort_l = self._sort_of(ctx.push(wl.name, wl.ty), wl.body)
        body_sort_r = self._sort_of(ctx.push(wr.name, wr.ty), wr.body)
        if body_sort_l == PROP and body_sort_r == PROP:
            lhs2 = app(Const(ALL), wl.ty, Lam(wl.name, wl.ty, wl.body))
            rhs2 = app(Const(ALL), wr.ty, Lam(wr.name, wr.ty, wr.body))
            sub = self.synth(ctx, lhs2, rhs2, expect, depth + 1)
            if sub is None:
                return None
            judgment, node = sub
            wrapped = Judgment(ctx, lhs, rhs, judgment.relation, judgment.proof)
            return self._finish(
                (wrapped, TraceNode("Forall", ctx, lhs, rhs, judgment.relation,
                                    children=(node,))), depth)
        return None

    # Env ----------------------------------------------------------------------

    def _rule_env(self, ctx, lhs, rhs, expect):
        for i in range(len(ctx)):
            ty = ctx.type_of(i)
            head, args = spine(whnf(self.env, ty, delta=False))
            if len(args) < 2:
                continue
            rel = app(head, *args[:-2])
            a, b = args[-2], args[-1]
            if not (convertible(self.env, ctx, a, lhs)
                    and convertible(self.env, ctx, b, rhs)):
                continue
            if not self.match(ctx, rel, expect):
                continue
            judgment = Judgment(ctx, lhs, rhs, rel, Var(i))
            return judgment, TraceNode("Env", ctx, lhs, rhs, rel)
        return None

    # Table ----------------------------------------------------------------------

    def _rule_table(self, ctx, lhs, rhs, expect):
        direct = self.tables.relations_v2.get(table_key(self.env, lhs, rhs))
        if direct is not None and self.match(ctx, direct.relation, expect):
            judgment = Judgment(ctx, lhs, rhs, direct.relation, direct.proof)
            return judgment, TraceNode("Table", ctx, lhs, rhs, direct.relation)
        flipped = self.tables.relations_v2.get(table_key(self.env, rhs, lhs))
        if flipped is not None:
            inverted = invert_entry(self.env, flipped)
            if self.match(ctx, inverted.relation, expect):
                judgment = Judgment(ctx, lhs, rhs, inverted.relation,
                                    inverted.proof)
                return judgment, TraceNode("Table", ctx, lhs, rhs,
                                           inverted.relation, via_inverse=True)
        return None

    # App ------------------------------------------------------------------------

    def _rule_app(self, ctx, lhs, rhs, expect, depth, attempts):
        wl = whnf(self.env, lhs, delta=False)
        wr = whnf(self.env, rhs, delta=False)
        if not (isinstance(wl, App) and isinstance(wr, App)):
            attempts.append(("App", "sides are not both applications"))
            return None
        fn_l, arg_l = wl.fn, wl.arg
        fn_r, arg_r = wr.fn, wr.arg

        # Variable arguments are pinned by Env first (the relation flows from
        # the argument); otherwise the function side determines the domain.
        args_are_vars = isinstance(arg_l, Var) and isinstance(arg_r, Var)
        if args_are_vars:
            arg_sub = self.synth(ctx, arg_l, arg_r, self.fresh(), depth + 1)
            if arg_sub is None:
                attempts.append(("App", "argument pair is unrelatable"))
                return None
            arg_j, arg_node = arg_sub
            fn_expect = RelArrow(Known(arg_j.relation), expect)
            fn_sub = self.synth(ctx, fn_l, fn_r, fn_expect, depth + 1)
            if fn_sub is None:
                attempts.append(("App", "function pair is unrelatable"))
                return None
            fn_j, fn_node = fn_sub
            children = (arg_node, fn_node)
        else:
            fn_expect = RelArrow(self.fresh(), expect)
            fn_sub = self.synth(ctx, fn_l, fn_r, fn_expect, depth + 1)
            if fn_sub is None:
                attempts.append(("App", "function pair is unrelatable"))
                return None
            fn_j, fn_node = fn_sub
            view = respectful_view(self.env, fn_j.relation)
            if view is None:
                attempts.append(("App", "function relation is not a relator "
                                        "arrow"))
                return None
            domain = view[4]
            arg_sub = self.synth(ctx, arg_l, arg_r, Known(domain), depth + 1)
            if arg_sub is None:
                attempts.append(("App", "argument pair is unrelatable"))
                return None
            arg_j, arg_node = arg_sub
            children = (fn_node, arg_node)

        view = respectful_view(self.env, fn_j.relation)
        if view is None:
            attempts.append(("App", "function relation is not a relator arrow"))
            return None
        result_rel = view[5]
        proof = app(fn_j.proof, arg_l, arg_r, arg_j.proof)
        judgment = Judgment(ctx, lhs, rhs, result_rel, proof)
        return self._finish(
            (judgment, TraceNode("App", ctx, lhs, rhs, result_rel,
                                 children=children)), depth)

    # Lambda -----------------------------------------------------------------------

    def _rule_lambda(self, ctx, lhs, rhs, expect, depth, attempts):
        resolved = self.resolve(expect, ctx)
        if resolved is None:
            attempts.append(("Lambda", "expected relation is undetermined"))
            return None
        view = respectful_view(self.env, resolved)
        if view is None:
            attempts.append(("Lambda", "expected relation is not a relator "
                                       "arrow"))
            return None
        _, _, _, _, rel_dom, rel_cod = view
        # Only syntactic functions: unfolding constants into lambdas here
        # would re-open the applications the other rules just decomposed.
        wl = whnf(self.env, lhs, delta=False)
        wr = whnf(self.env, rhs, delta=False)
        if not (isinstance(wl, Lam) and isinstance(wr, Lam)):
            attempts.append(("Lambda", "sides are not both functions"))
            return None
        hyp_count = sum(1 for e in ctx.entries if e.marker == "hypothesis")
        hyp_name = "H" if hyp_count == 0 else f"H{hyp_count}"
        ctx3 = (ctx.push(wl.name, wl.ty)
                   .push(wr.name, shift(wr.ty, 1))
                   .push(hyp_name, app(shift(rel_dom, 2), Var(1), Var(0)),
                         marker="hypothesis"))
        body_l = replace_var(shift(wl.body, 2, 1), 0, Var(2))
        body_r = replace_var(shift(wr.body, 2, 1), 0, Var(1))
        sub = self.synth(ctx3, body_l, body_r, Known(shift(rel_cod, 3)),
                         depth + 1)
        if sub is None:
            attempts.append(("Lambda", "bodies are unrelatable"))
            return None
        body_j, body_node = sub
        proof = Lam(wl.name, wl.ty,
                    Lam(wr.name, shift(wr.ty, 1),
                        Lam(hyp_name,
                            app(shift(rel_dom, 2), Var(1), Var(0)),
                            body_j.proof)))
        judgment = Judgment(ctx, lhs, rhs, resolved, proof)
        return self._finish(
            (judgment, TraceNode("Lambda", ctx, lhs, rhs, resolved,
                                 children=(body_node,))), depth)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def synth(env: GlobalEnv, tables: DeclTables, ctx: LocalContext, lhs: Term,
          rhs: Term, expect: RelExpectation | None = None,
          diagnostics: bool = False
          ) -> tuple[Judgment, DerivationTrace] | TransferFailure:
    """Derive a single judgment relating lhs to rhs under the expectation."""
    engine = _Synth(env, tables, diagnostics)
    result = engine.synth(ctx, lhs, rhs,
                          expect if expect is not None else engine.fresh())
    if result is None:
        return TransferFailure("no-derivation", engine.failure_message())
    judgment, node = result
    return judgment, DerivationTrace(node)


def transfer_modulo(env: GlobalEnv, tables: DeclTables, thm_statement: Term,
                    goal: Term, thm_proof: Term, diagnostics: bool = False
                    ) -> tuple[Term, DerivationTrace] | TransferFailure:
    """Produce a proof of goal from a proof of thm_statement, plus a trace.

    The root judgment is derived at the implication relation; its proof,
    applied to the theorem's proof, is re-checked against the goal before
    being returned.
    """
    engine = _Synth(env, tables, diagnostics)
    result = engine.synth(LocalContext(), thm_statement, goal,
                          Known(Const(IMPL)))
    if result is None:
        return TransferFailure("no-derivation", engine.failure_message())
    judgment, node = result
    proof = App(judgment.proof, thm_proof)
    ok, diag = check_proof_report(env, LocalContext(), proof, goal)
    if not ok:
        raise SynthesisError(f"transferred proof failed to check: {diag}")
    return proof, DerivationTrace(node)

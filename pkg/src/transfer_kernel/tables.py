"""Declaration tables: surjections, transfer lemmas and relation entries.

Each store is a map with single-entry-per-key semantics; redeclaring a key
is an error and never overwrites.  Keys are beta-delta normal forms, so a
relation declared through a definitional alias and looked up through its
unfolding hit the same entry.  Declaration functions validate the shape of
the lemma against the kernel and return a new table value, leaving the old
one untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import (
    ALL, EQ, EQ_IND, EQ_REFL, IMPL, INV, PROP, RESPECTFUL,
    App, Const, GlobalEnv, Lam, LocalContext, Pi, Term, Var,
    app, arrow, check_proof_report, convertible, infer_type, max_free_index,
    normalize, occurs_free, relation_types, shift, spine, unshift, whnf,
)
from .surface import print_term


class TableError(Exception):
    pass


class DuplicateEntry(TableError):
    pass


class ShapeError(TableError):
    pass


class SynthesisError(TableError):
    """A proof built by the library failed to kernel-check (internal bug)."""


@dataclass(frozen=True)
class SurjectionEntry:
    domain: Term        # A
    codomain: Term      # A'
    fn: Term            # f : A -> A'
    inverse: Term       # g : A' -> A
    proof: Term         # of  forall x' : A', f (g x') = x'


@dataclass(frozen=True)
class TransferEntryV1:
    source_rel: Term
    target_rel: Term
    arity: int
    transfer_fn: Term
    proof: Term


@dataclass(frozen=True)
class RelationEntryV2:
    lhs: Term
    rhs: Term
    relation: Term
    proof: Term


Key = tuple[Term, Term]


@dataclass(frozen=True)
class DeclTables:
    surjections: dict[Key, SurjectionEntry] = field(default_factory=dict)
    transfers_v1: dict[Key, TransferEntryV1] = field(default_factory=dict)
    relations_v2: dict[Key, RelationEntryV2] = field(default_factory=dict)

    def _with(self, **kwargs) -> "DeclTables":
        data = {
            "surjections": self.surjections,
            "transfers_v1": self.transfers_v1,
            "relations_v2": self.relations_v2,
        }
        data.update(kwargs)
        return DeclTables(**data)


def table_key(env: GlobalEnv, a: Term, b: Term) -> Key:
    """Normalized key pair used by every store."""
    return (normalize(env, a), normalize(env, b))


def _resolve(env: GlobalEnv, name: str, role: str) -> Term:
    if name not in env:
        raise TableError(f"{role} '{name}' is not declared")
    return Const(name)


def _function_type(env: GlobalEnv, t: Term, what: str) -> tuple[Term, Term]:
    ty = whnf(env, infer_type(env, LocalContext(), t))
    if not isinstance(ty, Pi):
        raise ShapeError(f"{what} {print_term(t, env)} is not a function")
    if occurs_free(ty.body, 0):
        raise ShapeError(f"{what} {print_term(t, env)} has a dependent type")
    return ty.ty, unshift(ty.body)


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

def surjection_statement(env: GlobalEnv, fn: Term, inverse: Term,
                         codomain: Term) -> Term:
    """`forall x' : A', eq A' (f (g x')) x'` for f, g between A and A'."""
    cod = shift(codomain, 1)
    return Pi("x'", codomain,
              app(Const(EQ), cod,
                  App(shift(fn, 1), App(shift(inverse, 1), Var(0))),
                  Var(0)))


def declare_surjection(tables: DeclTables, env: GlobalEnv, fn_name: str,
                       inverse_name: str, proof_name: str) -> DeclTables:
    fn = _resolve(env, fn_name, "surjection function")
    inverse = _resolve(env, inverse_name, "right inverse")
    proof = _resolve(env, proof_name, "surjectivity proof")
    dom, cod = _function_type(env, fn, "surjection function")
    dom2, cod2 = _function_type(env, inverse, "right inverse")
    if not (convertible(env, LocalContext(), dom2, cod)
            and convertible(env, LocalContext(), cod2, dom)):
        raise ShapeError(
            f"'{inverse_name}' does not map back from "
            f"{print_term(cod, env)} to {print_term(dom, env)}")
    expected = surjection_statement(env, fn, inverse, cod)
    actual = env.type_of(proof_name)
    if not convertible(env, LocalContext(), actual, expected):
        raise ShapeError(
            f"'{proof_name}' proves {print_term(actual, env)}, expected "
            f"{print_term(expected, env)}")
    key = table_key(env, dom, cod)
    if key in tables.surjections:
        raise DuplicateEntry(
            f"a surjection for ({print_term(dom, env)}, {print_term(cod, env)}) "
            "is already declared")
    new = dict(tables.surjections)
    new[key] = SurjectionEntry(dom, cod, fn, inverse, proof)
    return tables._with(surjections=new)


def _v1_shape(env: GlobalEnv, stmt: Term) -> tuple[Term, Term, int, Term]:
    """Split `forall x1..xn : A, R x1..xn -> R' (f x1)..(f xn)` into
    (R, R', n, f).  Raises ShapeError with the first deviating position."""
    binders: list[Term] = []
    body = whnf(env, stmt, delta=False)
    while isinstance(body, Pi):
        binders.append(body.ty)
        body = whnf(env, body.body, delta=False)
    if len(binders) < 2:
        raise ShapeError("transfer lemma must quantify over at least one "
                         "variable and one hypothesis")
    n = len(binders) - 1
    a = binders[0]
    if max_free_index(a) >= 0:
        raise ShapeError("quantified type may not depend on earlier binders")
    for i, ty in enumerate(binders[1:n], start=2):
        if ty != a:
            raise ShapeError(f"binder {i} has type {print_term(ty, env)}, "
                             f"expected {print_term(a, env)}")
    hyp = binders[n]
    rel, args = spine(whnf(env, hyp, delta=False))
    if len(args) != n:
        raise ShapeError(f"hypothesis applies a relation to {len(args)} "
                         f"arguments, expected {n}")
    if max_free_index(rel) >= 0:
        raise ShapeError("source relation may not mention the quantified "
                         "variables")
    for j, arg in enumerate(args, start=1):
        if arg != Var(n - j):
            raise ShapeError(f"hypothesis argument {j} is not the "
                             f"quantified variable x{j}")
    rel2, args2 = spine(whnf(env, body, delta=False))
    if len(args2) != n:
        raise ShapeError(f"conclusion applies a relation to {len(args2)} "
                         f"arguments, expected {n}")
    if max_free_index(rel2) >= 0:
        raise ShapeError("target relation may not mention the quantified "
                         "variables")
    fn: Term | None = None
    for j, arg in enumerate(args2, start=1):
        expected_var = Var(n + 1 - j)
        if not isinstance(arg, App) or arg.arg != expected_var:
            raise ShapeError(f"conclusion argument {j} is not the transfer "
                             f"function applied to x{j}")
        head = arg.fn
        if max_free_index(head) >= 0:
            raise ShapeError("transfer function may not mention the "
                             "quantified variables")
        if fn is None:
            fn = head
        elif fn != head:
            raise ShapeError(f"conclusion argument {j} uses a different "
                             "transfer function than argument 1")
    assert fn is not None
    return rel, rel2, n, fn


def transfer_v1_statement(env: GlobalEnv, entry: TransferEntryV1) -> Term:
    """Reconstruct the lemma statement from a stored v1 entry."""
    n = entry.arity
    hyp = app(entry.source_rel, *[Var(n - 1 - i) for i in range(n)])
    concl = app(entry.target_rel,
                *[App(entry.transfer_fn, Var(n - 1 - i)) for i in range(n)])
    stmt = arrow(hyp, concl)
    ctx_ty = entry.source_rel
    # All binders share the (closed) quantified type; read it off the relation.
    dom, _ = relation_types(env, LocalContext(), ctx_ty)
    for i in range(n):
        stmt = Pi(f"x{n - i}", dom, stmt)
    return stmt


def declare_transfer_v1(tables: DeclTables, env: GlobalEnv,
                        lemma_name: str) -> DeclTables:
    proof = _resolve(env, lemma_name, "transfer lemma")
    stmt = env.type_of(lemma_name)
    rel, rel2, n, fn = _v1_shape(env, stmt)
    key = table_key(env, rel, rel2)
    if key in tables.transfers_v1:
        raise DuplicateEntry(
            f"a transfer lemma for ({print_term(rel, env)}, "
            f"{print_term(rel2, env)}) is already declared")
    new = dict(tables.transfers_v1)
    new[key] = TransferEntryV1(rel, rel2, n, fn, proof)
    return tables._with(transfers_v1=new)


def declare_relation_v2(tables: DeclTables, env: GlobalEnv,
                        lemma_name: str) -> DeclTables:
    proof = _resolve(env, lemma_name, "relation lemma")
    stmt = whnf(env, env.type_of(lemma_name), delta=False)
    if not (isinstance(stmt, App) and isinstance(stmt.fn, App)):
        raise ShapeError(
            f"'{lemma_name}' is not a binary relation applied to two terms")
    rel, lhs, rhs = stmt.fn.fn, stmt.fn.arg, stmt.arg
    sort = whnf(env, infer_type(env, LocalContext(), stmt))
    if sort != PROP:
        raise ShapeError(f"'{lemma_name}' does not state a proposition")
    relation_types(env, LocalContext(), rel)  # must be a binary relation
    return insert_relation_v2(tables, env,
                              RelationEntryV2(lhs, rhs, rel, proof))


def insert_relation_v2(tables: DeclTables, env: GlobalEnv,
                       entry: RelationEntryV2) -> DeclTables:
    key = table_key(env, entry.lhs, entry.rhs)
    if key in tables.relations_v2:
        raise DuplicateEntry(
            f"a relation entry for ({print_term(entry.lhs, env)}, "
            f"{print_term(entry.rhs, env)}) is already declared")
    new = dict(tables.relations_v2)
    new[key] = entry
    return tables._with(relations_v2=new)


# ---------------------------------------------------------------------------
# Lookups
# ---------------------------------------------------------------------------

def lookup_surjection(tables: DeclTables, env: GlobalEnv,
                      domain: Term, codomain: Term) -> SurjectionEntry | None:
    return tables.surjections.get(table_key(env, domain, codomain))


def lookup_transfer_v1(tables: DeclTables, env: GlobalEnv,
                       source: Term, target: Term) -> TransferEntryV1 | None:
    return tables.transfers_v1.get(table_key(env, source, target))


def lookup_relation_v2(tables: DeclTables, env: GlobalEnv, lhs: Term,
                       rhs: Term) -> tuple[RelationEntryV2, bool] | None:
    """Direct entry for (lhs, rhs), or the inverted (rhs, lhs) entry.

    Returns (entry, via_inverse).  The inverted entry carries a permuted,
    kernel-checked proof (see transfer_v2.invert_entry).
    """
    direct = tables.relations_v2.get(table_key(env, lhs, rhs))
    if direct is not None:
        return direct, False
    flipped = tables.relations_v2.get(table_key(env, rhs, lhs))
    if flipped is not None:
        from .transfer_v2 import invert_entry
        return invert_entry(env, flipped), True
    return None


# ---------------------------------------------------------------------------
# Relational encoding of a surjection
# ---------------------------------------------------------------------------

def _check_generated(env: GlobalEnv, proof: Term, stmt: Term, what: str) -> None:
    ok, diag = check_proof_report(env, LocalContext(), proof, stmt)
    if not ok:
        raise SynthesisError(f"generated {what} failed to check: {diag}")


def surjection_to_relational(
        tables: DeclTables, env: GlobalEnv,
        entry: SurjectionEntry) -> tuple[DeclTables, GlobalEnv]:
    """Encode a surjection as relation entries.

    Defines `R x x' := f x = x'` and proves that universal quantification,
    reverse quantification and equality transport across R, inserting the
    three entries keyed (all A, all A'), (all A', all A) and (eq A, eq A').
    """
    a, a2, fn, inv_fn, surj = (entry.domain, entry.codomain, entry.fn,
                               entry.inverse, entry.proof)
    base = fn.name if isinstance(fn, Const) else "surj"
    rel_name = env.fresh_name(f"{base}_rel")
    rel_body = Lam("x", a,
                   Lam("x'", shift(a2, 1),
                       app(Const(EQ), shift(a2, 2),
                           App(shift(fn, 2), Var(1)), Var(0))))
    env = env.add_definition(rel_name, rel_body)
    rel = Const(rel_name)

    a_pred, a2_pred = arrow(a, PROP), arrow(a2, PROP)
    impl_c, all_c = Const(IMPL), Const(ALL)

    # ((R ##> impl) ##> impl) (all A) (all A')
    chain_surj = app(Const(RESPECTFUL), a_pred, a2_pred, PROP, PROP,
                     app(Const(RESPECTFUL), a, a2, PROP, PROP, rel, impl_c),
                     impl_c)
    stmt_surj = app(chain_surj, App(all_c, a), App(all_c, a2))
    # fun P P' h hp x' => h (g x') x' (surj x') (hp (g x'))
    h_ty = Pi("x", shift(a, 2),
              Pi("x'", shift(a2, 3),
                 arrow(app(rel, Var(1), Var(0)),
                       arrow(App(Var(3), Var(1)), App(Var(2), Var(0))))))
    proof_surj = Lam(
        "P", a_pred,
        Lam("P'", shift(a2_pred, 1),
            Lam("h", h_ty,
                Lam("hp", Pi("x", shift(a, 3), App(Var(3), Var(0))),
                    Lam("x'", shift(a2, 4),
                        app(Var(2),
                            App(shift(inv_fn, 5), Var(0)),
                            Var(0),
                            App(shift(surj, 5), Var(0)),
                            App(Var(1), App(shift(inv_fn, 5), Var(0)))))))))
    _check_generated(env, proof_surj, stmt_surj, "right-totality lemma")

    # ((R⁻¹ ##> impl) ##> impl) (all A') (all A)
    rel_inv = app(Const(INV), a, a2, rel)
    chain_tot = app(Const(RESPECTFUL), a2_pred, a_pred, PROP, PROP,
                    app(Const(RESPECTFUL), a2, a, PROP, PROP, rel_inv, impl_c),
                    impl_c)
    stmt_tot = app(chain_tot, App(all_c, a2), App(all_c, a))
    h_ty_tot = Pi("x'", shift(a2, 2),
                  Pi("x", shift(a, 3),
                     arrow(app(rel_inv, Var(1), Var(0)),
                           arrow(App(Var(3), Var(1)), App(Var(2), Var(0))))))
    proof_tot = Lam(
        "P'", a2_pred,
        Lam("P", shift(a_pred, 1),
            Lam("h", h_ty_tot,
                Lam("hp'", Pi("x'", shift(a2, 3), App(Var(3), Var(0))),
                    Lam("x", shift(a, 4),
                        app(Var(2),
                            App(shift(fn, 5), Var(0)),
                            Var(0),
                            app(Const(EQ_REFL), shift(a2, 5),
                                App(shift(fn, 5), Var(0))),
                            App(Var(1), App(shift(fn, 5), Var(0)))))))))
    _check_generated(env, proof_tot, stmt_tot, "left-totality lemma")

    # (R ##> R ##> impl) (eq A) (eq A')
    chain_func = app(Const(RESPECTFUL), a, a2, arrow(a, PROP), arrow(a2, PROP),
                     rel,
                     app(Const(RESPECTFUL), a, a2, PROP, PROP, rel, impl_c))
    stmt_func = app(chain_func, App(Const(EQ), a), App(Const(EQ), a2))
    # fun x x' h y y' h' e => rewrite x' = f x = f y = y'
    def fS(k: int) -> Term:
        return shift(fn, k)
    step_congr = app(Const(EQ_IND), shift(a, 7), Var(6),
                     Lam("z", shift(a, 7),
                         app(Const(EQ), shift(a2, 8),
                             App(fS(8), Var(7)), App(fS(8), Var(0)))),
                     app(Const(EQ_REFL), shift(a2, 7), App(fS(7), Var(6))),
                     Var(3), Var(0))
    step_left = app(Const(EQ_IND), shift(a2, 7), App(fS(7), Var(6)),
                    Lam("w", shift(a2, 7),
                        app(Const(EQ), shift(a2, 8), Var(0),
                            App(fS(8), Var(4)))),
                    step_congr, Var(5), Var(4))
    step_right = app(Const(EQ_IND), shift(a2, 7), App(fS(7), Var(3)),
                     Lam("w", shift(a2, 7),
                         app(Const(EQ), shift(a2, 8), Var(6), Var(0))),
                     step_left, Var(2), Var(1))
    proof_func = Lam(
        "x", a,
        Lam("x'", shift(a2, 1),
            Lam("h", app(rel, Var(1), Var(0)),
                Lam("y", shift(a, 3),
                    Lam("y'", shift(a2, 4),
                        Lam("h'", app(rel, Var(1), Var(0)),
                            Lam("e", app(Const(EQ), shift(a, 6),
                                         Var(5), Var(2)),
                                step_right)))))))
    _check_generated(env, proof_func, stmt_func, "functionality lemma")

    for suffix, stmt, proof in (("_surj", stmt_surj, proof_surj),
                                ("_tot", stmt_tot, proof_tot),
                                ("_func", stmt_func, proof_func)):
        env = env.add_definition(env.fresh_name(rel_name + suffix), proof, stmt)

    # An existing entry (user-declared, or the flipped twin of an identity
    # surjection) keeps priority; generated entries never overwrite.
    for entry_v2 in (RelationEntryV2(App(all_c, a), App(all_c, a2),
                                     chain_surj, proof_surj),
                     RelationEntryV2(App(all_c, a2), App(all_c, a),
                                     chain_tot, proof_tot),
                     RelationEntryV2(App(Const(EQ), a), App(Const(EQ), a2),
                                     chain_func, proof_func)):
        if table_key(env, entry_v2.lhs, entry_v2.rhs) not in tables.relations_v2:
            tables = insert_relation_v2(tables, env, entry_v2)
    return tables, env


def has_relational_encoding(tables: DeclTables, env: GlobalEnv,
                            entry: SurjectionEntry) -> bool:
    key = table_key(env, App(Const(ALL), entry.domain), App(Const(ALL), entry.codomain))
    return key in tables.relations_v2


# ---------------------------------------------------------------------------
# Pre-filled entries
# ---------------------------------------------------------------------------

def prefill_core(tables: DeclTables, env: GlobalEnv) -> DeclTables:
    """Insert the (impl, impl) entry at `impl⁻¹ ##> impl ##> impl`.

    Its unfolded statement is
    `forall a b, (b -> a) -> forall c d, (c -> d) -> (a -> c) -> b -> d`.
    """
    impl_c = Const(IMPL)
    prop2 = arrow(PROP, PROP)
    impl_inv = app(Const(INV), PROP, PROP, impl_c)
    chain = app(Const(RESPECTFUL), PROP, PROP, prop2, prop2, impl_inv,
                app(Const(RESPECTFUL), PROP, PROP, PROP, PROP, impl_c, impl_c))
    stmt = app(chain, impl_c, impl_c)
    proof = Lam(
        "a", PROP,
        Lam("b", PROP,
            Lam("h1", arrow(Var(0), Var(1)),
                Lam("c", PROP,
                    Lam("d", PROP,
                        Lam("h2", arrow(Var(1), Var(0)),
                            Lam("p", arrow(Var(5), Var(2)),
                                Lam("x", Var(5),
                                    App(Var(2),
                                        App(Var(1),
                                            App(Var(5), Var(0))))))))))))
    _check_generated(env, proof, stmt, "implication entry")
    return insert_relation_v2(
        tables, env, RelationEntryV2(impl_c, impl_c, chain, proof))


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

def audit(tables: DeclTables, env: GlobalEnv) -> list[str]:
    """Re-check every stored proof against its reconstructed statement.

    Returns a list of complaints; empty means the tables are sound.
    """
    problems: list[str] = []
    for (dom, cod), e in tables.surjections.items():
        stmt = surjection_statement(env, e.fn, e.inverse, e.codomain)
        ok, diag = check_proof_report(env, LocalContext(), e.proof, stmt)
        if not ok:
            problems.append(f"surjection ({print_term(dom, env)}, "
                            f"{print_term(cod, env)}): {diag}")
    for (src, tgt), e in tables.transfers_v1.items():
        stmt = transfer_v1_statement(env, e)
        ok, diag = check_proof_report(env, LocalContext(), e.proof, stmt)
        if not ok:
            problems.append(f"transfer ({print_term(src, env)}, "
                            f"{print_term(tgt, env)}): {diag}")
    for (lhs, rhs), e in tables.relations_v2.items():
        stmt = app(e.relation, e.lhs, e.rhs)
        ok, diag = check_proof_report(env, LocalContext(), e.proof, stmt)
        if not ok:
            problems.append(f"relation ({print_term(lhs, env)}, "
                            f"{print_term(rhs, env)}): {diag}")
    return problems

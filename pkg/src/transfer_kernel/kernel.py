"""Core term language and type checker.

Terms are a minimal dependent lambda calculus: three sorts (Prop, Set,
Type with Type : Type), variables as de Bruijn indices, global constants,
lambda, application and dependent products.  Binder display names are kept
for printing but ignored by equality, so structural equality on terms is
alpha-equivalence.

The checker implements beta + delta conversion (no eta): definitions
unfold lazily in head position, parameters and axioms are opaque.  There
are no inductive types or fixpoints, so every reduction terminates.  All
values are immutable; every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class KernelError(Exception):
    """Base class for kernel-level failures."""


class UnboundName(KernelError):
    pass


class TypeCheckError(KernelError):
    """Ill-typed term.  `path` locates the failing subterm from the root."""

    def __init__(self, message: str, path: tuple[str, ...] = ()):
        super().__init__(message)
        self.message = message
        self.path = path

    def __str__(self) -> str:
        if self.path:
            return f"{self.message} (at {'/'.join(self.path)})"
        return self.message


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sort:
    tag: str  # "Prop" | "Set" | "Type"

    def __repr__(self) -> str:
        return self.tag


PROP = Sort("Prop")
SET = Sort("Set")
TYPE = Sort("Type")


@dataclass(frozen=True)
class Var:
    index: int  # de Bruijn index, 0 = innermost binder

    def __repr__(self) -> str:
        return f"Var({self.index})"


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lam:
    name: str = field(compare=False)
    ty: "Term"
    body: "Term"

    def __repr__(self) -> str:
        return f"(fun {self.name} : {self.ty!r} => {self.body!r})"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"

    def __repr__(self) -> str:
        return f"({self.fn!r} {self.arg!r})"


@dataclass(frozen=True)
class Pi:
    name: str = field(compare=False)
    ty: "Term"
    body: "Term"

    def __repr__(self) -> str:
        return f"(forall {self.name} : {self.ty!r}, {self.body!r})"


Term = Sort | Var | Const | Lam | App | Pi


def app(fn: Term, *args: Term) -> Term:
    """Left-nested application `fn a1 ... an`."""
    t = fn
    for a in args:
        t = App(t, a)
    return t


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Decompose `h a1 ... an` into (h, [a1, ..., an])."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def arrow(a: Term, b: Term) -> Pi:
    """Non-dependent product `a -> b` (b is shifted under the binder)."""
    return Pi("_", a, shift(b, 1))


# ---------------------------------------------------------------------------
# de Bruijn plumbing
# ---------------------------------------------------------------------------

def shift(t: Term, by: int, cutoff: int = 0) -> Term:
    """Add `by` to every free index >= cutoff."""
    match t:
        case Var(i):
            return Var(i + by) if i >= cutoff else t
        case App(f, a):
            return App(shift(f, by, cutoff), shift(a, by, cutoff))
        case Lam(x, ty, body):
            return Lam(x, shift(ty, by, cutoff), shift(body, by, cutoff + 1))
        case Pi(x, ty, body):
            return Pi(x, shift(ty, by, cutoff), shift(body, by, cutoff + 1))
        case _:
            return t


def substitute(body: Term, target: int, replacement: Term) -> Term:
    """Capture-avoiding substitution that discharges binder `target`.

    Occurrences of Var(target) become `replacement`; indices above it are
    decremented, so the result lives one binder shallower.
    """
    def go(t: Term, depth: int) -> Term:
        match t:
            case Var(i):
                if i == target + depth:
                    return shift(replacement, depth)
                if i > target + depth:
                    return Var(i - 1)
                return t
            case App(f, a):
                return App(go(f, depth), go(a, depth))
            case Lam(x, ty, b):
                return Lam(x, go(ty, depth), go(b, depth + 1))
            case Pi(x, ty, b):
                return Pi(x, go(ty, depth), go(b, depth + 1))
            case _:
                return t

    return go(body, 0)


def replace_var(t: Term, target: int, replacement: Term) -> Term:
    """Replace Var(target) without discharging the binder (indices keep)."""
    def go(t: Term, depth: int) -> Term:
        match t:
            case Var(i):
                if i == target + depth:
                    return shift(replacement, depth)
                return t
            case App(f, a):
                return App(go(f, depth), go(a, depth))
            case Lam(x, ty, b):
                return Lam(x, go(ty, depth), go(b, depth + 1))
            case Pi(x, ty, b):
                return Pi(x, go(ty, depth), go(b, depth + 1))
            case _:
                return t

    return go(t, 0)


def occurs_free(t: Term, target: int) -> bool:
    match t:
        case Var(i):
            return i == target
        case App(f, a):
            return occurs_free(f, target) or occurs_free(a, target)
        case Lam(_, ty, b) | Pi(_, ty, b):
            return occurs_free(ty, target) or occurs_free(b, target + 1)
        case _:
            return False


def max_free_index(t: Term) -> int:
    """Largest free index in t, or -1 if closed."""
    match t:
        case Var(i):
            return i
        case App(f, a):
            return max(max_free_index(f), max_free_index(a))
        case Lam(_, ty, b) | Pi(_, ty, b):
            return max(max_free_index(ty), max_free_index(b) - 1)
        case _:
            return -1


# ---------------------------------------------------------------------------
# Contexts and global environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CtxEntry:
    name: str
    ty: Term
    marker: str | None = None  # e.g. "hypothesis" for engine-introduced proofs


@dataclass(frozen=True)
class LocalContext:
    entries: tuple[CtxEntry, ...] = ()

    def push(self, name: str, ty: Term, marker: str | None = None) -> "LocalContext":
        return LocalContext(self.entries + (CtxEntry(name, ty, marker),))

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, index: int) -> CtxEntry:
        """Entry for Var(index); 0 is the most recent binder."""
        if index < 0 or index >= len(self.entries):
            raise UnboundName(f"variable index {index} out of range")
        return self.entries[-1 - index]

    def type_of(self, index: int) -> Term:
        # The stored type lives at its own binding depth; shift into scope.
        return shift(self.entry(index).ty, index + 1)

    def name_of(self, index: int) -> str:
        return self.entry(index).name


@dataclass(frozen=True)
class Decl:
    kind: str  # "parameter" | "axiom" | "definition"
    ty: Term
    body: Term | None = None


class GlobalEnv:
    """Ordered global declarations.  Adding returns a new environment."""

    def __init__(self, decls: dict[str, Decl] | None = None):
        self._decls: dict[str, Decl] = dict(decls) if decls else {}

    def __contains__(self, name: str) -> bool:
        return name in self._decls

    def names(self) -> list[str]:
        return list(self._decls)

    def lookup(self, name: str) -> Decl:
        try:
            return self._decls[name]
        except KeyError:
            raise UnboundName(f"unknown constant '{name}'") from None

    def type_of(self, name: str) -> Term:
        return self.lookup(name).ty

    def body_of(self, name: str) -> Term | None:
        return self.lookup(name).body

    def is_definition(self, name: str) -> bool:
        d = self._decls.get(name)
        return d is not None and d.body is not None

    def fresh_name(self, base: str) -> str:
        name = base
        n = 0
        while name in self._decls:
            n += 1
            name = f"{base}{n}"
        return name

    def _extended(self, name: str, decl: Decl) -> "GlobalEnv":
        if name in self._decls:
            raise KernelError(f"'{name}' is already declared")
        new = dict(self._decls)
        new[name] = decl
        return GlobalEnv(new)

    def add_parameter(self, name: str, ty: Term) -> "GlobalEnv":
        _check_is_type(self, ty)
        return self._extended(name, Decl("parameter", ty))

    def add_axiom(self, name: str, ty: Term) -> "GlobalEnv":
        _check_is_type(self, ty)
        return self._extended(name, Decl("axiom", ty))

    def add_definition(self, name: str, body: Term, ty: Term | None = None) -> "GlobalEnv":
        inferred = infer_type(self, LocalContext(), body)
        if ty is None:
            ty = inferred
        elif not convertible(self, LocalContext(), inferred, ty):
            raise TypeCheckError(
                f"definition '{name}' has type {inferred!r}, expected {ty!r}")
        return self._extended(name, Decl("definition", ty, body))


def _check_is_type(env: GlobalEnv, ty: Term) -> None:
    s = whnf(env, infer_type(env, LocalContext(), ty))
    if not isinstance(s, Sort):
        raise TypeCheckError(f"declared type {ty!r} is not a type")


# ---------------------------------------------------------------------------
# Reduction and conversion
# ---------------------------------------------------------------------------

def whnf(env: GlobalEnv, t: Term, delta: bool = True) -> Term:
    """Weak head normal form: beta steps plus (if delta) head unfolding
    of definitions.  Parameters and axioms never unfold."""
    while True:
        head, args = spine(t)
        if isinstance(head, Lam) and args:
            t = app(substitute(head.body, 0, args[0]), *args[1:])
        elif delta and isinstance(head, Const) and env.is_definition(head.name):
            body = env.body_of(head.name)
            assert body is not None
            t = app(body, *args)
        else:
            return t


def normalize(env: GlobalEnv, t: Term) -> Term:
    """Full beta-delta normal form.  Used for table keys."""
    t = whnf(env, t)
    match t:
        case App(f, a):
            return App(normalize(env, f), normalize(env, a))
        case Lam(x, ty, b):
            return Lam(x, normalize(env, ty), normalize(env, b))
        case Pi(x, ty, b):
            return Pi(x, normalize(env, ty), normalize(env, b))
        case _:
            return t


def subsumes(env: GlobalEnv, ctx: LocalContext, have: Term, want: Term) -> bool:
    """Conversion plus the one sort inclusion the scripts need: any sort is
    accepted where Type is expected (so `eq A'` checks when A' : Set)."""
    if convertible(env, ctx, have, want):
        return True
    return isinstance(whnf(env, have), Sort) and whnf(env, want) == TYPE


def convertible(env: GlobalEnv, ctx: LocalContext, a: Term, b: Term) -> bool:
    """Equality modulo alpha, beta and delta (no eta)."""
    if a == b:  # alpha-equality is structural equality
        return True
    a = whnf(env, a)
    b = whnf(env, b)
    match a, b:
        case Sort(sa), Sort(sb):
            return sa == sb
        case Var(i), Var(j):
            return i == j
        case Const(m), Const(n):
            return m == n
        case App(f, x), App(g, y):
            return convertible(env, ctx, f, g) and convertible(env, ctx, x, y)
        case Lam(_, ta, ba), Lam(_, tb, bb):
            return convertible(env, ctx, ta, tb) and convertible(env, ctx, ba, bb)
        case Pi(_, ta, ba), Pi(_, tb, bb):
            return convertible(env, ctx, ta, tb) and convertible(env, ctx, ba, bb)
        case _:
            return False


# ---------------------------------------------------------------------------
# Type inference
# ---------------------------------------------------------------------------

def infer_type(env: GlobalEnv, ctx: LocalContext, t: Term,
               _path: tuple[str, ...] = ()) -> Term:
    """Type of t, or TypeCheckError with a path to the failing subterm.

    Sorts: Prop : Type, Set : Type, Type : Type.  Products take the sort
    of the codomain, which makes Prop impredicative.
    """
    match t:
        case Sort(_):
            return TYPE
        case Var(i):
            if i >= len(ctx):
                raise TypeCheckError(f"unbound variable index {i}", _path)
            return ctx.type_of(i)
        case Const(name):
            try:
                return env.type_of(name)
            except UnboundName as e:
                raise TypeCheckError(str(e), _path) from None
        case Lam(x, ty, body):
            s = whnf(env, infer_type(env, ctx, ty, _path + ("binder-type",)))
            if not isinstance(s, Sort):
                raise TypeCheckError(
                    f"binder type {ty!r} is not a type", _path + ("binder-type",))
            body_ty = infer_type(env, ctx.push(x, ty), body, _path + ("body",))
            return Pi(x, ty, body_ty)
        case App(f, a):
            fn_ty = whnf(env, infer_type(env, ctx, f, _path + ("fn",)))
            if not isinstance(fn_ty, Pi):
                raise TypeCheckError(
                    f"applied term has non-function type {fn_ty!r}", _path + ("fn",))
            arg_ty = infer_type(env, ctx, a, _path + ("arg",))
            if not subsumes(env, ctx, arg_ty, fn_ty.ty):
                raise TypeCheckError(
                    f"argument type {arg_ty!r} does not match domain {fn_ty.ty!r}",
                    _path + ("arg",))
            return substitute(fn_ty.body, 0, a)
        case Pi(x, ty, body):
            s1 = whnf(env, infer_type(env, ctx, ty, _path + ("domain",)))
            if not isinstance(s1, Sort):
                raise TypeCheckError(
                    f"product domain {ty!r} is not a type", _path + ("domain",))
            s2 = whnf(env, infer_type(env, ctx.push(x, ty), body, _path + ("codomain",)))
            if not isinstance(s2, Sort):
                raise TypeCheckError(
                    f"product codomain {body!r} is not a type", _path + ("codomain",))
            return s2
    raise TypeCheckError(f"unrecognized term {t!r}", _path)


def check_proof_report(env: GlobalEnv, ctx: LocalContext, proof: Term,
                       statement: Term) -> tuple[bool, str | None]:
    """check_proof plus a diagnostic explaining a False verdict."""
    try:
        ty = infer_type(env, ctx, proof)
    except TypeCheckError as e:
        return False, f"proof is ill-typed: {e}"
    if convertible(env, ctx, ty, statement):
        return True, None
    return False, f"proof has type {ty!r}, statement is {statement!r}"


def check_proof(env: GlobalEnv, ctx: LocalContext, proof: Term, statement: Term) -> bool:
    """True iff the proof's inferred type is convertible with statement."""
    ok, _ = check_proof_report(env, ctx, proof, statement)
    return ok


# ---------------------------------------------------------------------------
# Prelude
# ---------------------------------------------------------------------------

FALSE = "False"
EQ = "eq"
EQ_REFL = "eq_refl"
EQ_IND = "eq_ind"
IMPL = "impl"
ALL = "all"
RESPECTFUL = "respectful"
INV = "inv"

PRELUDE_NAMES = (FALSE, EQ, EQ_REFL, EQ_IND, IMPL, ALL, RESPECTFUL, INV)


def prelude_env() -> GlobalEnv:
    """Environment holding the initial constants every script starts from."""
    env = GlobalEnv()

    env = env.add_parameter(FALSE, PROP)

    # eq : forall A : Type, A -> A -> Prop
    env = env.add_parameter(
        EQ, Pi("A", TYPE, Pi("x", Var(0), Pi("y", Var(1), PROP))))

    # eq_refl : forall (A : Type) (x : A), eq A x x
    env = env.add_parameter(
        EQ_REFL,
        Pi("A", TYPE, Pi("x", Var(0), app(Const(EQ), Var(1), Var(0), Var(0)))))

    # eq_ind : forall (A : Type) (x : A) (P : A -> Prop),
    #          P x -> forall y : A, eq A x y -> P y
    env = env.add_parameter(
        EQ_IND,
        Pi("A", TYPE,
           Pi("x", Var(0),
              Pi("P", Pi("_", Var(1), PROP),
                 Pi("px", App(Var(0), Var(1)),
                    Pi("y", Var(3),
                       Pi("e", app(Const(EQ), Var(4), Var(3), Var(0)),
                          App(Var(3), Var(1)))))))))

    # impl := fun A B : Prop => A -> B
    env = env.add_definition(
        IMPL, Lam("A", PROP, Lam("B", PROP, Pi("_", Var(1), Var(1)))))

    # all := fun (A : Type) (P : A -> Prop) => forall x : A, P x
    env = env.add_definition(
        ALL,
        Lam("A", TYPE,
            Lam("P", Pi("_", Var(0), PROP),
                Pi("x", Var(1), App(Var(1), Var(0))))))

    # respectful := fun X Y X' Y' R R' f g =>
    #   forall (x : X) (y : Y), R x y -> R' (f x) (g y)
    env = env.add_definition(
        RESPECTFUL,
        Lam("X", TYPE,
            Lam("Y", TYPE,
                Lam("X'", TYPE,
                    Lam("Y'", TYPE,
                        Lam("R", Pi("_", Var(3), Pi("_", Var(3), PROP)),
                            Lam("R'", Pi("_", Var(2), Pi("_", Var(2), PROP)),
                                Lam("f", Pi("_", Var(5), Var(4)),
                                    Lam("g", Pi("_", Var(5), Var(4)),
                                        Pi("x", Var(7),
                                           Pi("y", Var(7),
                                              Pi("h", app(Var(5), Var(1), Var(0)),
                                                 app(Var(5),
                                                     App(Var(4), Var(2)),
                                                     App(Var(3), Var(1)))))))))))))))

    # inv := fun (X Y : Type) (R : X -> Y -> Prop) (y : Y) (x : X) => R x y
    env = env.add_definition(
        INV,
        Lam("X", TYPE,
            Lam("Y", TYPE,
                Lam("R", Pi("_", Var(1), Pi("_", Var(1), PROP)),
                    Lam("y", Var(1),
                        Lam("x", Var(3),
                            app(Var(2), Var(0), Var(1))))))))

    return env


def respectful_view(env: GlobalEnv, t: Term) -> tuple[Term, Term, Term, Term, Term, Term] | None:
    """Decompose t (up to head unfolding) as `respectful X Y X' Y' R S`.

    Returns (X, Y, X', Y', R, S), or None if t is not such an application.
    Stops before unfolding `respectful` itself.
    """
    t = whnf(env, t, delta=False)
    while True:
        head, args = spine(t)
        if isinstance(head, Const) and head.name == RESPECTFUL and len(args) == 6:
            return tuple(args)  # type: ignore[return-value]
        if isinstance(head, Const) and head.name != RESPECTFUL \
                and env.is_definition(head.name):
            body = env.body_of(head.name)
            assert body is not None
            t = whnf(env, app(body, *args), delta=False)
            continue
        return None


def inv_view(env: GlobalEnv, t: Term) -> tuple[Term, Term, Term] | None:
    """Decompose t (up to head unfolding) as `inv X Y R` -> (X, Y, R)."""
    t = whnf(env, t, delta=False)
    while True:
        head, args = spine(t)
        if isinstance(head, Const) and head.name == INV and len(args) == 3:
            return tuple(args)  # type: ignore[return-value]
        if isinstance(head, Const) and head.name not in (INV, RESPECTFUL) \
                and env.is_definition(head.name):
            body = env.body_of(head.name)
            assert body is not None
            t = whnf(env, app(body, *args), delta=False)
            continue
        return None


def unshift(t: Term) -> Term:
    """Strip one unused binder level (the term must not mention Var(0))."""
    return substitute(t, 0, PROP)  # the placeholder is never reached


def relation_types(env: GlobalEnv, ctx: LocalContext, rel: Term) -> tuple[Term, Term]:
    """Domain pair (X, Y) of a binary relation rel : X -> Y -> Prop."""
    ty = whnf(env, infer_type(env, ctx, rel))
    if not isinstance(ty, Pi):
        raise TypeCheckError(f"{rel!r} is not a binary relation")
    inner = whnf(env, ty.body)
    if not isinstance(inner, Pi) or occurs_free(inner.ty, 0):
        raise TypeCheckError(f"{rel!r} is not a binary relation")
    return ty.ty, unshift(inner.ty)

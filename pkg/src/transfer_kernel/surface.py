"""Vernacular syntax: lexer, parser, elaborator and pretty-printer.

The script language is a small command set (Parameter, Axiom, Definition,
Declare ..., Theorem ... Qed) over a term syntax that accepts both Unicode
and ASCII spellings: `∀`/`forall`, `→`/`->`, `λ x, e`/`fun x => e`,
`R⁻¹`/`inv R`, plus the infix sugar `a = b` (Leibniz equality) and the
right-associative relator arrow `R ##> S`.

Parsing yields name-based pre-terms; `elaborate` resolves names against an
environment and local context and fills in the implicit type arguments of
`eq`, `respectful` and `inv` with metavariables solved by first-order
unification.  Solutions must be closed types; anything else is reported as
an elaboration error rather than guessed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import (
    EQ, INV, PROP, RESPECTFUL, TYPE,
    App, Const, GlobalEnv, Lam, LocalContext, Pi, Sort, Term, TypeCheckError,
    Var, app, arrow, infer_type, occurs_free, max_free_index, relation_types,
    shift, spine, substitute, unshift, whnf,
)


class SurfaceError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


class ParseError(SurfaceError):
    pass


class ElabError(SurfaceError):
    pass


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "sym" | "eof"
    value: str
    line: int
    col: int


_SYMBOLS = ("##>", ":=", "=>", "->", "⁻¹", "(", ")", ":", ",", ".", "=",
            "→", "∀", "λ", "@")

_TERM_KEYWORDS = {"forall", "fun", "inv", "Prop", "Set", "Type"}


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c in ("_", "'")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c.isspace():
            advance(1)
            continue
        if text.startswith("(*", i):
            depth, start_line, start_col = 1, line, col
            advance(2)
            while i < n and depth:
                if text.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    advance(2)
                else:
                    advance(1)
            if depth:
                raise ParseError("unterminated comment", start_line, start_col)
            continue
        # symbols first: λ counts as alphabetic, so it must not start a name
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                advance(len(sym))
                break
        else:
            if not _is_ident_start(c):
                raise ParseError(f"unknown character {c!r}", line, col)
            start, sl, sc = i, line, col
            while i < n:
                if _is_ident_char(text[i]):
                    advance(1)
                elif text[i] == "." and i + 1 < n and _is_ident_start(text[i + 1]) \
                        and text[i + 1] != "λ":
                    advance(1)  # qualified-looking name such as N.le
                else:
                    break
            toks.append(Token("ident", text[start:i], sl, sc))
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Pre-terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PRef:
    name: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class PSort:
    tag: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class PApp:
    fn: "PreTerm"
    arg: "PreTerm"


@dataclass(frozen=True)
class PLam:
    binders: tuple[tuple[str, "PreTerm | None"], ...]
    body: "PreTerm"


@dataclass(frozen=True)
class PPi:
    binders: tuple[tuple[str, "PreTerm | None"], ...]
    body: "PreTerm"


@dataclass(frozen=True)
class PArrow:
    lhs: "PreTerm"
    rhs: "PreTerm"


@dataclass(frozen=True)
class PEq:
    lhs: "PreTerm"
    rhs: "PreTerm"
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class PResp:
    lhs: "PreTerm"
    rhs: "PreTerm"
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class PInv:
    inner: "PreTerm"
    line: int = 0
    col: int = 0


PreTerm = PRef | PSort | PApp | PLam | PPi | PArrow | PEq | PResp | PInv


class _TokenStream:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_sym(self, *values: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.value in values

    def at_ident(self, *values: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and (not values or t.value in values)

    def expect_sym(self, value: str) -> Token:
        t = self.peek()
        if t.kind != "sym" or t.value != value:
            raise ParseError(f"expected '{value}', found '{t.value or 'end of input'}'",
                             t.line, t.col)
        return self.next()

    def expect_ident(self, *values: str) -> Token:
        t = self.peek()
        if t.kind != "ident" or (values and t.value not in values):
            what = " or ".join(f"'{v}'" for v in values) if values else "identifier"
            raise ParseError(f"expected {what}, found '{t.value or 'end of input'}'",
                             t.line, t.col)
        return self.next()


def _parse_binder_groups(ts: _TokenStream) -> tuple[tuple[str, PreTerm | None], ...]:
    """`(x y : T) (z : U)` or the single unparenthesized group `x y [: T]`."""
    binders: list[tuple[str, PreTerm | None]] = []
    if ts.at_sym("("):
        while ts.at_sym("("):
            ts.next()
            names = [ts.expect_ident().value]
            while ts.at_ident() and not ts.peek().value in _TERM_KEYWORDS:
                names.append(ts.next().value)
            annot = None
            if ts.at_sym(":"):
                ts.next()
                annot = _parse_term(ts)
            ts.expect_sym(")")
            binders.extend((nm, annot) for nm in names)
    else:
        names = [ts.expect_ident().value]
        while ts.at_ident() and ts.peek().value not in _TERM_KEYWORDS:
            names.append(ts.next().value)
        annot = None
        if ts.at_sym(":"):
            ts.next()
            annot = _parse_term(ts)
        binders.extend((nm, annot) for nm in names)
    return tuple(binders)


def _at_atom_start(ts: _TokenStream) -> bool:
    t = ts.peek()
    if t.kind == "ident":
        return t.value not in ("forall", "fun")
    return t.kind == "sym" and t.value in ("(", "@", "∀", "λ")


def _parse_atom(ts: _TokenStream) -> PreTerm:
    t = ts.peek()
    if ts.at_sym("("):
        ts.next()
        inner = _parse_term(ts)
        ts.expect_sym(")")
        result = inner
    elif ts.at_sym("@"):
        ts.next()
        name = ts.expect_ident()
        result = PRef(name.value, name.line, name.col)
    elif t.kind == "ident":
        ts.next()
        if t.value in ("Prop", "Set", "Type"):
            result = PSort(t.value, t.line, t.col)
        elif t.value == "inv":
            if not _at_atom_start(ts):
                raise ParseError("'inv' expects a relation argument", t.line, t.col)
            result = PInv(_parse_atom(ts), t.line, t.col)
        else:
            result = PRef(t.value, t.line, t.col)
    else:
        raise ParseError(f"unexpected token '{t.value or 'end of input'}'",
                         t.line, t.col)
    while ts.at_sym("⁻¹"):
        mark = ts.next()
        result = PInv(result, mark.line, mark.col)
    return result


def _parse_app(ts: _TokenStream) -> PreTerm:
    term = _parse_atom(ts)
    while _at_atom_start(ts):
        term = PApp(term, _parse_atom(ts))
    return term


def _parse_resp(ts: _TokenStream) -> PreTerm:
    lhs = _parse_app(ts)
    if ts.at_sym("##>"):
        mark = ts.next()
        return PResp(lhs, _parse_resp(ts), mark.line, mark.col)
    return lhs


def _parse_eq(ts: _TokenStream) -> PreTerm:
    lhs = _parse_resp(ts)
    if ts.at_sym("="):
        mark = ts.next()
        return PEq(lhs, _parse_resp(ts), mark.line, mark.col)
    return lhs


def _parse_arrow(ts: _TokenStream) -> PreTerm:
    lhs = _parse_eq(ts)
    if ts.at_sym("->", "→"):
        ts.next()
        return PArrow(lhs, _parse_term(ts))  # binders may follow an arrow
    return lhs


def _parse_term(ts: _TokenStream) -> PreTerm:
    if ts.at_sym("∀") or ts.at_ident("forall"):
        ts.next()
        binders = _parse_binder_groups(ts)
        ts.expect_sym(",")
        return PPi(binders, _parse_term(ts))
    if ts.at_sym("λ") or ts.at_ident("fun"):
        ts.next()
        binders = _parse_binder_groups(ts)
        if ts.at_sym("=>"):
            ts.next()
        else:
            ts.expect_sym(",")
        return PLam(binders, _parse_term(ts))
    return _parse_arrow(ts)


def parse_term(text: str) -> PreTerm:
    """Parse a single term; the whole input must be consumed."""
    ts = _TokenStream(tokenize(text))
    term = _parse_term(ts)
    t = ts.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected trailing input '{t.value}'", t.line, t.col)
    return term


# ---------------------------------------------------------------------------
# Script commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CmdParameter:
    names: tuple[str, ...]
    ty: PreTerm
    line: int = 0


@dataclass(frozen=True)
class CmdAxiom:
    name: str
    statement: PreTerm
    line: int = 0


@dataclass(frozen=True)
class CmdDefinition:
    name: str
    params: tuple[tuple[str, PreTerm | None], ...]
    body: PreTerm
    line: int = 0


@dataclass(frozen=True)
class CmdDeclareSurjection:
    fn_name: str
    inverse_name: str
    proof_name: str
    line: int = 0


@dataclass(frozen=True)
class CmdDeclareTransfer:
    lemma_name: str
    line: int = 0


@dataclass(frozen=True)
class CmdDeclareRelation:
    lemma_name: str
    line: int = 0


EXACT_MODULO = "exact_modulo"
TRANSFER_MODULO = "transfer_modulo"


@dataclass(frozen=True)
class CmdTheorem:
    name: str
    statement: PreTerm
    tactic: str  # EXACT_MODULO | TRANSFER_MODULO
    source: str
    line: int = 0


Command = (CmdParameter | CmdAxiom | CmdDefinition | CmdDeclareSurjection
           | CmdDeclareTransfer | CmdDeclareRelation | CmdTheorem)


@dataclass(frozen=True)
class Script:
    commands: tuple[Command, ...]


def _parse_command(ts: _TokenStream) -> Command:
    head = ts.expect_ident()
    line = head.line
    if head.value == "Parameter":
        names = [ts.expect_ident().value]
        while ts.at_ident():
            names.append(ts.next().value)
        ts.expect_sym(":")
        ty = _parse_term(ts)
        ts.expect_sym(".")
        return CmdParameter(tuple(names), ty, line)
    if head.value == "Axiom":
        name = ts.expect_ident().value
        ts.expect_sym(":")
        stmt = _parse_term(ts)
        ts.expect_sym(".")
        return CmdAxiom(name, stmt, line)
    if head.value == "Definition":
        name = ts.expect_ident().value
        params: list[tuple[str, PreTerm | None]] = []
        while not ts.at_sym(":="):
            if ts.at_sym("("):
                ts.next()
                group = [ts.expect_ident().value]
                while ts.at_ident():
                    group.append(ts.next().value)
                ts.expect_sym(":")
                annot = _parse_term(ts)
                ts.expect_sym(")")
                params.extend((nm, annot) for nm in group)
            elif ts.at_ident():
                params.append((ts.next().value, None))
            else:
                t = ts.peek()
                raise ParseError("expected binder or ':='", t.line, t.col)
        ts.expect_sym(":=")
        body = _parse_term(ts)
        ts.expect_sym(".")
        return CmdDefinition(name, tuple(params), body, line)
    if head.value == "Declare":
        kind = ts.expect_ident("Surjection", "Transfer", "Relation")
        if kind.value == "Surjection":
            fn_name = ts.expect_ident().value
            ts.expect_ident("by")
            ts.expect_sym("(")
            inverse = ts.expect_ident().value
            ts.expect_sym(",")
            proof = ts.expect_ident().value
            ts.expect_sym(")")
            ts.expect_sym(".")
            return CmdDeclareSurjection(fn_name, inverse, proof, line)
        lemma = ts.expect_ident().value
        ts.expect_sym(".")
        if kind.value == "Transfer":
            return CmdDeclareTransfer(lemma, line)
        return CmdDeclareRelation(lemma, line)
    if head.value == "Theorem":
        name = ts.expect_ident().value
        ts.expect_sym(":")
        stmt = _parse_term(ts)
        ts.expect_sym(".")
        tac = ts.expect_ident("exact", "transfer")
        ts.expect_ident("modulo")
        source = ts.expect_ident().value
        ts.expect_sym(".")
        ts.expect_ident("Qed")
        ts.expect_sym(".")
        tactic = EXACT_MODULO if tac.value == "exact" else TRANSFER_MODULO
        return CmdTheorem(name, stmt, tactic, source, line)
    raise ParseError(f"unknown command '{head.value}'", head.line, head.col)


def parse_script(text: str) -> Script:
    ts = _TokenStream(tokenize(text))
    commands: list[Command] = []
    while ts.peek().kind != "eof":
        commands.append(_parse_command(ts))
    return Script(tuple(commands))


# ---------------------------------------------------------------------------
# Elaboration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Meta:
    """Placeholder for an implicit type argument; never escapes elaboration."""
    id: int

    def __repr__(self) -> str:
        return f"?{self.id}"


class _Elaborator:
    def __init__(self, env: GlobalEnv):
        self.env = env
        self.solutions: dict[int, Term] = {}
        self._next = 0

    def fresh(self) -> Meta:
        self._next += 1
        return Meta(self._next)

    # -- metavariable bookkeeping ------------------------------------------

    def resolve(self, t: Term) -> Term:
        """Replace solved metas, leaving unsolved ones in place."""
        match t:
            case Meta(i):
                sol = self.solutions.get(i)
                return self.resolve(sol) if sol is not None else t
            case App(f, a):
                return App(self.resolve(f), self.resolve(a))
            case Lam(x, ty, b):
                return Lam(x, self.resolve(ty), self.resolve(b))
            case Pi(x, ty, b):
                return Pi(x, self.resolve(ty), self.resolve(b))
            case _:
                return t

    def zonk(self, t: Term, line: int = 0, col: int = 0) -> Term:
        t = self.resolve(t)
        if self._has_meta(t):
            raise ElabError("cannot infer an implicit argument or binder type",
                            line, col)
        return t

    def _has_meta(self, t: Term) -> bool:
        match t:
            case Meta(_):
                return True
            case App(f, a):
                return self._has_meta(f) or self._has_meta(a)
            case Lam(_, ty, b) | Pi(_, ty, b):
                return self._has_meta(ty) or self._has_meta(b)
            case _:
                return False

    def head_normal(self, t: Term) -> Term:
        return whnf(self.env, self.resolve(t))

    def unify(self, a: Term, b: Term, line: int, col: int) -> None:
        a = self.head_normal(a)
        b = self.head_normal(b)
        if a == b:
            return
        # Mirror the kernel's sort inclusion: sorts fit where Type is wanted.
        if (isinstance(a, Sort) and b == TYPE) or (isinstance(b, Sort) and a == TYPE):
            return
        if isinstance(a, Meta) or isinstance(b, Meta):
            meta, other = (a, b) if isinstance(a, Meta) else (b, a)
            other = self.resolve(other)
            if isinstance(other, Meta) and other.id == meta.id:
                return
            # Solutions must be closed so they can move across binders.
            if max_free_index(other) >= 0:
                raise ElabError(
                    "cannot infer an implicit argument that depends on a bound "
                    "variable", line, col)
            self.solutions[meta.id] = other
            return
        match a, b:
            case Sort(x), Sort(y) if x == y:
                return
            case Var(i), Var(j) if i == j:
                return
            case Const(m), Const(n) if m == n:
                return
            case App(f, x), App(g, y):
                self.unify(f, g, line, col)
                self.unify(x, y, line, col)
                return
            case (Lam(_, ta, ba), Lam(_, tb, bb)) | (Pi(_, ta, ba), Pi(_, tb, bb)):
                self.unify(ta, tb, line, col)
                self.unify(ba, bb, line, col)
                return
        raise ElabError(f"type mismatch: {a!r} vs {b!r}", line, col)

    # -- the main elaboration pass -----------------------------------------

    def infer(self, pre: PreTerm, ctx: list[tuple[str, Term]]) -> tuple[Term, Term]:
        """Elaborate a pre-term to (term, type); ctx is innermost-last."""
        match pre:
            case PSort(tag, _, _):
                return Sort(tag), TYPE
            case PRef(name, line, col):
                for depth, (nm, ty) in enumerate(reversed(ctx)):
                    if nm == name:
                        return Var(depth), shift(ty, depth + 1)
                if name in self.env:
                    return Const(name), self.env.type_of(name)
                raise ElabError(f"unknown identifier '{name}'", line, col)
            case PApp(fn, arg):
                tf, ty_f = self.infer(fn, ctx)
                ty_f = self.head_normal(ty_f)
                if not isinstance(ty_f, Pi):
                    line, col = _pos_of(fn)
                    raise ElabError("application of a non-function", line, col)
                ta, ty_a = self.infer(arg, ctx)
                line, col = _pos_of(arg)
                self.unify(ty_a, ty_f.ty, line, col)
                return App(tf, ta), substitute(ty_f.body, 0, ta)
            case PLam(binders, body):
                return self._binders(binders, body, ctx, is_pi=False)
            case PPi(binders, body):
                return self._binders(binders, body, ctx, is_pi=True)
            case PArrow(lhs, rhs):
                tl, sl = self.infer(lhs, ctx)
                tr, sr = self.infer(rhs, ctx)
                return arrow(tl, tr), self.head_normal(sr)
            case PEq(lhs, rhs, line, col):
                tl, ty_l = self.infer(lhs, ctx)
                tr, ty_r = self.infer(rhs, ctx)
                self.unify(ty_l, ty_r, line, col)
                ty = self.resolve(ty_l)
                return app(Const(EQ), ty, tl, tr), PROP
            case PResp(lhs, rhs, line, col):
                tl, ty_l = self.infer(lhs, ctx)
                tr, ty_r = self.infer(rhs, ctx)
                x, y = self._relation_domains(ty_l, line, col)
                x2, y2 = self._relation_domains(ty_r, line, col)
                term = app(Const(RESPECTFUL), x, y, x2, y2, tl, tr)
                return term, arrow(arrow(x, x2), arrow(arrow(y, y2), PROP))
            case PInv(inner, line, col):
                ti, ty_i = self.infer(inner, ctx)
                x, y = self._relation_domains(ty_i, line, col)
                return app(Const(INV), x, y, ti), arrow(y, arrow(x, PROP))
        raise ElabError(f"cannot elaborate {pre!r}")

    def _binders(self, binders: tuple[tuple[str, PreTerm | None], ...],
                 body: PreTerm, ctx: list[tuple[str, Term]],
                 is_pi: bool) -> tuple[Term, Term]:
        if not binders:
            return self.infer(body, ctx)
        name, annot = binders[0]
        if annot is not None:
            ty, _ = self.infer(annot, ctx)
        else:
            ty = self.fresh()
        inner, inner_ty = self._binders(binders[1:], body, ctx + [(name, ty)], is_pi)
        if is_pi:
            return Pi(name, ty, inner), self.head_normal(inner_ty)
        return Lam(name, ty, inner), Pi(name, ty, inner_ty)

    def _relation_domains(self, rel_ty: Term, line: int, col: int) -> tuple[Term, Term]:
        ty = self.head_normal(rel_ty)
        if not isinstance(ty, Pi):
            raise ElabError("expected a binary relation", line, col)
        inner = self.head_normal(ty.body)
        if not isinstance(inner, Pi) or occurs_free(inner.ty, 0):
            raise ElabError("expected a binary relation", line, col)
        return ty.ty, unshift(inner.ty)


def _pos_of(pre: PreTerm) -> tuple[int, int]:
    line = getattr(pre, "line", 0)
    col = getattr(pre, "col", 0)
    return line, col


def elaborate(env: GlobalEnv, pre: PreTerm, ctx: LocalContext | None = None) -> Term:
    """Resolve names and implicit arguments, producing a kernel term."""
    el = _Elaborator(env)
    named = [(e.name, e.ty) for e in (ctx.entries if ctx else ())]
    term, _ = el.infer(pre, named)
    line, col = _pos_of(pre)
    return el.zonk(term, line, col)


def parse_and_elaborate(env: GlobalEnv, text: str,
                        ctx: LocalContext | None = None) -> Term:
    return elaborate(env, parse_term(text), ctx)


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

_LVL_TERM, _LVL_ARROW, _LVL_EQ, _LVL_RESP, _LVL_APP, _LVL_ATOM = range(6)

_RESERVED_NAMES = _TERM_KEYWORDS | {"Parameter", "Axiom", "Definition", "Theorem",
                                    "Declare", "Qed", "by", "exact", "transfer",
                                    "modulo"}


class _Printer:
    """Renders kernel terms back to concrete syntax.

    When an environment (and typed context) is available, the printer emits
    the `=`, `##>` and `⁻¹` sugar only if re-elaboration would reconstruct
    the same implicit arguments, which keeps print/parse a round trip.
    """

    def __init__(self, env: GlobalEnv | None, ctx: LocalContext | None):
        self.env = env
        base = ctx.entries if ctx else ()
        self.names: list[str] = [e.name for e in base]
        self.types: list[Term] = [e.ty for e in base]

    def fresh_name(self, hint: str) -> str:
        name = hint if hint and hint != "_" else "x"
        while (name in self.names or name in _RESERVED_NAMES
               or (self.env is not None and name in self.env)):
            name += "'"
        return name

    def _ctx(self) -> LocalContext:
        ctx = LocalContext()
        for nm, ty in zip(self.names, self.types):
            ctx = ctx.push(nm, ty)
        return ctx

    def _type_of(self, t: Term) -> Term | None:
        if self.env is None:
            return None
        try:
            return infer_type(self.env, self._ctx(), t)
        except TypeCheckError:
            return None

    def render(self, t: Term, level: int) -> str:
        match t:
            case Sort(tag):
                return tag
            case Var(i):
                if i < len(self.names):
                    return self.names[-1 - i]
                return f"_x{i - len(self.names)}"  # out-of-context index
            case Const(name):
                return name
            case Pi(_, _, _):
                return self._render_pi(t, level)
            case Lam(_, _, _):
                return self._render_binders(t, level, is_pi=False)
            case App(_, _):
                return self._render_app(t, level)
        raise ValueError(f"cannot print {t!r}")

    def _paren(self, s: str, level: int, required: int) -> str:
        return f"({s})" if level > required else s

    def _render_pi(self, t: Pi, level: int) -> str:
        if not occurs_free(t.body, 0) and not self._quantifier_preferred(t):
            lhs = self.render(t.ty, _LVL_EQ)
            self.names.append("_")
            self.types.append(t.ty)
            rhs = self.render(t.body, _LVL_TERM)
            self.names.pop()
            self.types.pop()
            return self._paren(f"{lhs} → {rhs}", level, _LVL_ARROW)
        return self._render_binders(t, level, is_pi=True)

    def _quantifier_preferred(self, t: Pi) -> bool:
        """Quantify (rather than use an arrow) over non-propositional domains
        in formulas, e.g. `∀ x : A, False` instead of `A → False`."""
        if self.env is None:
            return False
        dom_sort = self._type_of(t.ty)
        if dom_sort is None or whnf(self.env, dom_sort) == PROP:
            return False
        self.names.append("_")
        self.types.append(t.ty)
        body_sort = self._type_of(t.body)
        self.names.pop()
        self.types.pop()
        return body_sort is not None and whnf(self.env, body_sort) == PROP

    def _render_binders(self, t: Term, level: int, is_pi: bool) -> str:
        cls = Pi if is_pi else Lam
        groups: list[tuple[str, str]] = []
        depth = 0
        while isinstance(t, cls):
            # A non-dependent tail of a forall prints as an arrow instead.
            if is_pi and not occurs_free(t.body, 0) \
                    and not self._quantifier_preferred(t):
                break
            ty_str = self.render(t.ty, _LVL_TERM)
            name = self.fresh_name(t.name)
            groups.append((name, ty_str))
            self.names.append(name)
            self.types.append(t.ty)
            depth += 1
            t = t.body
        body = self.render(t, _LVL_TERM)
        for _ in range(depth):
            self.names.pop()
            self.types.pop()
        if len(groups) == 1:
            binder = f"{groups[0][0]} : {groups[0][1]}"
        else:
            binder = " ".join(f"({nm} : {ty})" for nm, ty in groups)
        if is_pi:
            return self._paren(f"∀ {binder}, {body}", level, _LVL_TERM)
        return self._paren(f"fun {binder} => {body}", level, _LVL_TERM)

    def _render_app(self, t: Term, level: int) -> str:
        head, args = spine(t)
        sugared = self._try_sugar(head, args)
        if sugared is not None:
            text, used, text_lvl = sugared
            if used == len(args):
                return self._paren(text, level, text_lvl)
            parts = [self._paren(text, _LVL_APP, text_lvl)]
            parts += [self.render(a, _LVL_ATOM) for a in args[used:]]
            return self._paren(" ".join(parts), level, _LVL_APP)
        parts = [self.render(head, _LVL_APP)]
        parts += [self.render(a, _LVL_ATOM) for a in args]
        return self._paren(" ".join(parts), level, _LVL_APP)

    def _try_sugar(self, head: Term,
                   args: list[Term]) -> tuple[str, int, int] | None:
        """Sugar for a prefix of the spine: (text, args consumed, level)."""
        if self.env is None or not isinstance(head, Const):
            return None
        if head.name == EQ and len(args) == 3:
            ty = self._type_of(args[1])
            if ty is not None and ty == args[0]:
                lhs = self.render(args[1], _LVL_RESP)
                rhs = self.render(args[2], _LVL_RESP)
                return f"{lhs} = {rhs}", 3, _LVL_EQ
        if head.name == RESPECTFUL and len(args) >= 6:
            if self._domains_match(args[4], args[0], args[1]) \
                    and self._domains_match(args[5], args[2], args[3]):
                lhs = self.render(args[4], _LVL_APP)
                rhs = self.render(args[5], _LVL_RESP)
                return f"{lhs} ##> {rhs}", 6, _LVL_RESP
        if head.name == INV and len(args) >= 3:
            if self._domains_match(args[2], args[0], args[1]):
                inner = self.render(args[2], _LVL_ATOM)
                return f"{inner}⁻¹", 3, _LVL_ATOM
        return None

    def _domains_match(self, rel: Term, x: Term, y: Term) -> bool:
        assert self.env is not None
        try:
            dx, dy = relation_types(self.env, self._ctx(), rel)
        except TypeCheckError:
            return False
        return dx == x and dy == y


def print_term(t: Term, env: GlobalEnv | None = None,
               ctx: LocalContext | None = None) -> str:
    """Concrete syntax for t; parse_term(print_term(t)) elaborates back to
    a term alpha-equal to t (sugar is only used when it survives the trip)."""
    return _Printer(env, ctx).render(t, _LVL_TERM)

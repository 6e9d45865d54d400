"""Surface syntax tests: parsing, elaboration, printing, round trips."""

import pytest

from transfer_kernel.kernel import (
    EQ, PROP, RESPECTFUL, SET,
    App, Const, Lam, LocalContext, Pi, Var, app, convertible,
    prelude_env, spine,
)
from transfer_kernel.surface import (
    CmdAxiom, CmdDeclareSurjection, CmdDefinition, CmdParameter, CmdTheorem,
    EXACT_MODULO, ElabError, ParseError, parse_and_elaborate,
    parse_script, parse_term, print_term,
)

from conftest import script_text


@pytest.fixture
def env():
    env = prelude_env()
    env = env.add_parameter("A", SET).add_parameter("A'", SET)
    env = env.add_parameter("nat", SET).add_parameter("N", SET)
    env = parse_add(env, "parameter", "f", "A → A'")
    env = parse_add(env, "parameter", "g", "A' → A")
    env = parse_add(env, "parameter", "N.of_nat", "nat → N")
    env = parse_add(env, "parameter", "le", "nat → nat → Prop")
    env = parse_add(env, "parameter", "N.le", "N → N → Prop")
    env = env.add_definition(
        "natN", parse_and_elaborate(env, "fun x x' => N.of_nat x = x'"))
    return env


def parse_add(env, kind, name, text):
    t = parse_and_elaborate(env, text)
    return env.add_parameter(name, t) if kind == "parameter" else env.add_axiom(name, t)


# --- term parsing -------------------------------------------------------------

def test_parse_forall(env):
    t = parse_and_elaborate(env, "∀ x : A, False")
    assert t == Pi("x", Const("A"), Const("False"))


def test_parse_ascii_forms(env):
    unicode = parse_and_elaborate(env, "∀ x : A, False")
    ascii_ = parse_and_elaborate(env, "forall x : A, False")
    assert unicode == ascii_
    assert parse_and_elaborate(env, "A -> False") == \
        parse_and_elaborate(env, "A → False")
    assert parse_and_elaborate(env, "inv natN") == \
        parse_and_elaborate(env, "natN⁻¹")


def test_parse_fun_identity(env):
    t = parse_and_elaborate(env, "fun x : Prop => x")
    assert t == Lam("x", PROP, Var(0))
    assert parse_and_elaborate(env, "λ x : Prop, x") == t


def test_respectful_is_right_associative(env):
    t = parse_and_elaborate(env, "(natN ##> natN ##> impl) le N.le")
    head, args = spine(t)
    assert args[-2:] == [Const("le"), Const("N.le")]
    chain = app(head, *args[:-2])
    chead, cargs = spine(chain)
    assert chead == Const(RESPECTFUL)
    # right operand of the outer arrow is itself a relator arrow
    inner_head, _ = spine(cargs[5])
    assert cargs[4] == Const("natN") and inner_head == Const(RESPECTFUL)


def test_application_left_associative(env):
    t = parse_and_elaborate(env, "le x y",
                            LocalContext().push("x", Const("nat"))
                                          .push("y", Const("nat")))
    assert t == App(App(Const("le"), Var(1)), Var(0))


def test_arrow_non_dependent(env):
    t = parse_and_elaborate(env, "A -> False")
    assert t == Pi("_", Const("A"), Const("False"))


def test_eq_sugar_elaborates_type_argument(env):
    ctx = LocalContext().push("x", Const("nat"))
    t = parse_and_elaborate(env, "N.of_nat x = N.of_nat x", ctx)
    head, args = spine(t)
    assert head == Const(EQ) and args[0] == Const("N")


def test_at_prefix_gives_explicit_constant(env):
    assert parse_and_elaborate(env, "@eq nat") == App(Const(EQ), Const("nat"))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse_term("∀ x : A, (False")
    assert err.value.line == 1 and err.value.col > 0
    with pytest.raises(ParseError, match="unknown character"):
        parse_term("a % b")


def test_unknown_identifier_is_elab_error(env):
    with pytest.raises(ElabError, match="unknown identifier"):
        parse_and_elaborate(env, "mystery x")


def test_binder_type_inference_in_definitions(env):
    t = parse_and_elaborate(env, "fun a b => N.of_nat a = b")
    assert isinstance(t, Lam)
    assert t.ty == Const("nat")
    assert isinstance(t.body, Lam) and t.body.ty == Const("N")


def test_uninferable_binder_is_an_error(env):
    with pytest.raises(ElabError):
        parse_and_elaborate(env, "fun a => a")


# --- script parsing -------------------------------------------------------------

def test_empty_input_gives_empty_script():
    assert parse_script("").commands == ()
    assert parse_script(" (* just a comment *) ").commands == ()


def test_example_script_has_seven_commands():
    script = parse_script(script_text("example1.tk"))
    cmds = script.commands
    assert len(cmds) == 7
    assert isinstance(cmds[0], CmdParameter) and cmds[0].names == ("A", "A'")
    assert isinstance(cmds[1], CmdAxiom)
    assert isinstance(cmds[5], CmdDeclareSurjection)
    assert cmds[5] == CmdDeclareSurjection("f", "g", "surjf", cmds[5].line)
    thm = cmds[6]
    assert isinstance(thm, CmdTheorem)
    assert thm.name == "emptyA'" and thm.tactic == EXACT_MODULO
    assert thm.source == "emptyA"


def test_definition_command_with_untyped_binders():
    script = parse_script("Definition natN x x' := N.of_nat x = x'.")
    (cmd,) = script.commands
    assert isinstance(cmd, CmdDefinition)
    assert cmd.name == "natN"
    assert [b[0] for b in cmd.params] == ["x", "x'"]


def test_every_corpus_script_parses():
    for name in ("example1.tk", "example2.tk", "v2_letrans.tk",
                 "zn_transfer.tk", "zn_missing.tk", "iszero.tk",
                 "agreement.tk"):
        script = parse_script(script_text(name))
        assert script.commands, name


def test_unknown_command_is_parse_error():
    with pytest.raises(ParseError, match="unknown command"):
        parse_script("Conjecture foo : False.")


def test_qualified_names_and_sentence_dots():
    script = parse_script("Parameter N.le : Prop.\nAxiom x' : N.le.")
    assert isinstance(script.commands[0], CmdParameter)
    assert script.commands[0].names == ("N.le",)
    assert script.commands[1].name == "x'"


# --- printing and round trips ------------------------------------------------

ROUND_TRIP_CASES = [
    "∀ x : A, False",
    "∀ x' : A', f (g x') = x'",
    "∀ (x : nat) (y : nat) (z : nat), le x y → le y z → le x z",
    "(natN ##> natN ##> impl) le N.le",
    "(natN⁻¹ ##> natN⁻¹ ##> impl) N.le le",
    "((natN ##> impl) ##> impl) (all nat) (all N)",
    "natN⁻¹",
    "fun x : Prop => x",
    "fun (x : nat) (y : nat) => le y x",
    "impl False False",
    "le x y → (le y z → False) → False",
]


@pytest.mark.parametrize("text", ROUND_TRIP_CASES)
def test_print_parse_round_trip(env, text):
    ctx = LocalContext()
    for name in ("x", "y", "z"):
        ctx = ctx.push(name, Const("nat"))
    term = parse_and_elaborate(env, text, ctx)
    printed = print_term(term, env, ctx)
    again = parse_and_elaborate(env, printed, ctx)
    assert again == term, printed


def test_round_trip_freshens_shadowed_binders(env):
    shadowed = Lam("x", Const("nat"), Lam("x", Const("nat"),
                                          app(Const("le"), Var(0), Var(1))))
    printed = print_term(shadowed, env)
    assert parse_and_elaborate(env, printed) == shadowed
    # the two binder occurrences got distinct names in one merged group
    assert printed.count("fun") == 1
    assert "(x : nat)" in printed and "(x' : nat)" in printed


def test_printer_avoids_capturing_globals(env):
    # binder wants to be called "f" but that would capture the global f
    t = Lam("f", Const("A"), App(Const("g"),
                                 App(Const("f"), Var(0))))
    printed = print_term(t, env)
    assert parse_and_elaborate(env, printed) == t


def test_sugar_coherence(env):
    ctx = LocalContext().push("x", Const("nat"))
    eq_term = parse_and_elaborate(env, "N.of_nat x = N.of_nat x", ctx)
    explicit = parse_and_elaborate(env, "@eq N (N.of_nat x) (N.of_nat x)", ctx)
    assert eq_term == explicit
    impl_term = parse_and_elaborate(env, "impl False False")
    arrow_term = parse_and_elaborate(env, "False -> False")
    assert convertible(env, LocalContext(), impl_term, arrow_term)


def test_print_without_env_is_still_reparseable(env):
    term = parse_and_elaborate(env, "∀ x : A, False")
    printed = print_term(term)  # no sugar guarantees, but valid syntax
    assert parse_and_elaborate(env, printed) == term


def test_printed_respectful_uses_infix(env):
    term = parse_and_elaborate(env, "(natN ##> natN ##> impl) le N.le")
    assert print_term(term, env) == "(natN ##> natN ##> impl) le N.le"


def test_comments_are_ignored():
    script = parse_script(
        "(* header (* nested *) still comment *)\nParameter A : Set.")
    assert len(script.commands) == 1

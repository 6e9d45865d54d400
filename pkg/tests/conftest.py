import random
from pathlib import Path

import pytest

from transfer_kernel.kernel import SET, GlobalEnv, prelude_env
from transfer_kernel.surface import parse_and_elaborate

SCRIPTS = Path(__file__).parent / "scripts"
GOLDEN = Path(__file__).parent / "golden"


def script_text(name: str) -> str:
    return (SCRIPTS / name).read_text(encoding="utf-8")


def declare(env: GlobalEnv, kind: str, name: str, text: str) -> GlobalEnv:
    term = parse_and_elaborate(env, text)
    if kind == "parameter":
        return env.add_parameter(name, term)
    if kind == "axiom":
        return env.add_axiom(name, term)
    raise ValueError(kind)


@pytest.fixture
def rng():
    return random.Random(20240817)


@pytest.fixture
def nat_env():
    """Environment with the two representations of naturals and their order."""
    env = prelude_env()
    env = env.add_parameter("nat", SET).add_parameter("N", SET)
    env = declare(env, "parameter", "N.to_nat", "N → nat")
    env = declare(env, "parameter", "N.of_nat", "nat → N")
    env = declare(env, "parameter", "le", "nat → nat → Prop")
    env = declare(env, "parameter", "N.le", "N → N → Prop")
    env = declare(env, "axiom", "to_of", "∀ x : nat, N.to_nat (N.of_nat x) = x")
    env = declare(env, "axiom", "of_to", "∀ x' : N, N.of_nat (N.to_nat x') = x'")
    env = declare(env, "axiom", "le_down",
                  "∀ x' y' : N, N.le x' y' → le (N.to_nat x') (N.to_nat y')")
    env = declare(env, "axiom", "le_up",
                  "∀ x y : nat, le x y → N.le (N.of_nat x) (N.of_nat y)")
    env = declare(env, "axiom", "le_trans",
                  "∀ x y z : nat, le x y → le y z → le x z")
    return env


@pytest.fixture
def empty_set_env():
    """Environment for the empty-set transfer scenario."""
    env = prelude_env()
    env = env.add_parameter("A", SET).add_parameter("A'", SET)
    env = declare(env, "axiom", "emptyA", "∀ x : A, False")
    env = declare(env, "parameter", "f", "A → A'")
    env = declare(env, "parameter", "g", "A' → A")
    env = declare(env, "axiom", "surjf", "∀ x' : A', f (g x') = x'")
    return env

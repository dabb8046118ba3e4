import itertools
import random

import pytest

from stratbench.model import Model


def make_random_model(rng: random.Random, max_states: int = 6, n_agents: int = 2) -> Model:
    """A small random model that satisfies every invariant by construction:
    the indistinguishability partition is drawn first and repertoires are
    assigned per class, so uniformity holds."""
    n_states = rng.randint(2, max_states)
    n_actions = rng.randint(2, 3)
    n_props = rng.randint(0, 2)

    indist = []
    for _a in range(n_agents):
        states = list(range(n_states))
        rng.shuffle(states)
        classes = []
        while states:
            size = rng.randint(1, min(2, len(states)))
            classes.append(tuple(sorted(states[:size])))
            states = states[size:]
        indist.append(tuple(classes))

    repertoire = {}
    for a in range(n_agents):
        for cls in indist[a]:
            k = rng.randint(1, n_actions)
            acts = tuple(sorted(rng.sample(range(n_actions), k)))
            for q in cls:
                repertoire[(a, q)] = acts

    transitions = {}
    for q in range(n_states):
        for joint in itertools.product(*(repertoire[(a, q)] for a in range(n_agents))):
            transitions[(q, joint)] = rng.randrange(n_states)

    valuation = {
        p: {q for q in range(n_states) if rng.random() < 0.4} for p in range(n_props)
    }
    return Model(
        agent_names=tuple(f"a{i}" for i in range(n_agents)),
        state_names=tuple(f"q{i}" for i in range(n_states)),
        initial=0,
        prop_names=tuple(f"p{i}" for i in range(n_props)),
        valuation=valuation,
        action_names=tuple(f"act{i}" for i in range(n_actions)),
        repertoire=repertoire,
        transitions=transitions,
        indist=tuple(indist),
    )


def fib_oracle(m: int) -> int:
    """Independent Fibonacci: matrix squaring over 2x2 integer matrices."""

    def matmul(x, y):
        return (
            x[0] * y[0] + x[1] * y[2],
            x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3],
        )

    result = (1, 0, 0, 1)
    base = (1, 1, 1, 0)
    e = m
    while e:
        if e & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        e >>= 1
    return result[1]


@pytest.fixture(scope="session")
def coffee3():
    from stratbench.templates import gen_coffee

    return gen_coffee(3)


@pytest.fixture(scope="session")
def satgame_demo():
    from stratbench.templates import Cnf, gen_satgame

    return gen_satgame(Cnf(3, [(1, -2), (-1, 3)]))


@pytest.fixture(scope="session")
def builtins():
    from stratbench.templates import builtin_strategies

    return builtin_strategies()

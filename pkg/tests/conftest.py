import numpy as np
import pytest

from clockwork.chains import is_communicating
from clockwork.config import builtin_mdp
from clockwork.mdp import Mdp


def sparse_kernel(rng, n_states, n_actions, zero_prob=0.5):
    """Random kernel with roughly ``zero_prob`` of its entries zeroed, rows renormalized."""
    k = rng.random((n_states, n_actions, n_states))
    k *= rng.random(k.shape) >= zero_prob
    for x in range(n_states):
        for a in range(n_actions):
            if k[x, a].sum() == 0:
                k[x, a, rng.integers(n_states)] = 1.0
    return k / k.sum(axis=2, keepdims=True)


def random_mdp(rng, n_states, n_actions, discount=None, zero_prob=0.5):
    k = sparse_kernel(rng, n_states, n_actions, zero_prob)
    r = rng.uniform(-1, 1, size=k.shape)
    beta = rng.uniform(0, 0.95) if discount is None else discount
    return Mdp(k, r, beta)


def random_communicating_mdp(rng, n_states, n_actions, **kw):
    while True:
        mdp = random_mdp(rng, n_states, n_actions, **kw)
        if is_communicating(mdp):
            return mdp


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_cycle():
    return builtin_mdp("two_cycle")


@pytest.fixture
def two_absorbing():
    return builtin_mdp("two_absorbing")


@pytest.fixture
def single_state():
    return builtin_mdp("single_state")


@pytest.fixture
def ref3():
    return builtin_mdp("reference_3state")


@pytest.fixture
def ref4():
    return builtin_mdp("reference_4state")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, passed, detail, elapsed, budget):
        in_time = elapsed < budget
        ok = passed and in_time
        line = (f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail} | "
                f"{elapsed:.2f}s (budget {budget:g}s)")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

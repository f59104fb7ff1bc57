import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clockwork.exploration import (
    Boltzmann,
    DecayingEps,
    EpsGreedy,
    Uniform,
    action_distribution,
    persistent_lower_bound,
    sample_action,
)


def test_boltzmann_by_hand():
    tau = 0.7
    probs = action_distribution(Boltzmann(tau), np.array([[0.0, tau * math.log(3)]]), 0)
    np.testing.assert_allclose(probs, [0.25, 0.75], rtol=1e-14)


def test_boltzmann_equal_row_is_uniform():
    np.testing.assert_allclose(action_distribution(Boltzmann(2.0), np.full((1, 5), 3.3), 0), 0.2)


def test_eps_greedy_by_hand():
    q = np.array([[0.0, 1.0, 5.0, 2.0]])
    np.testing.assert_allclose(action_distribution(EpsGreedy(0.2), q, 0), [0.05, 0.05, 0.85, 0.05])


def test_greedy_ties_go_to_lowest_index():
    probs = action_distribution(EpsGreedy(0.4), np.array([[1.0, 3.0, 3.0]]), 0)
    assert probs.argmax() == 1
    assert probs[1] > probs[2]


def test_uniform():
    np.testing.assert_array_equal(action_distribution(Uniform(), np.zeros((2, 3)), 1), [1 / 3] * 3)


def test_decaying_floor_is_per_action():
    spec = DecayingEps(0.25, 0.5)
    probs = action_distribution(spec, np.array([[0.0, 1.0]]), 0, state_clock=3)
    assert probs[0] == pytest.approx(0.25 / 2.0)


def test_non_finite_q_rejected():
    with pytest.raises(ValueError):
        action_distribution(Boltzmann(1.0), np.array([[0.0, np.nan]]), 0)


@pytest.mark.parametrize("bad", [lambda: EpsGreedy(0.0), lambda: EpsGreedy(1.5), lambda: Boltzmann(0.0),
                                 lambda: DecayingEps(0.0, 0.1), lambda: DecayingEps(0.5, -1.0)])
def test_parameter_ranges(bad):
    with pytest.raises(ValueError):
        bad()


class TestFloor:
    def test_eps_greedy(self):
        assert persistent_lower_bound(EpsGreedy(0.2), 10.0, 4) == pytest.approx(0.05)

    def test_boltzmann(self):
        tau = 1.3
        assert persistent_lower_bound(Boltzmann(tau), tau * math.log(2), 2) == pytest.approx(0.25)

    def test_uniform(self):
        assert persistent_lower_bound(Uniform(), 0.0, 3) == pytest.approx(1 / 3)

    def test_decaying_is_not_persistent(self):
        assert persistent_lower_bound(DecayingEps(0.3, 0.5), 1.0, 2) == 0.0


policies = st.one_of(
    st.just(Uniform()),
    st.floats(0.01, 1.0).map(EpsGreedy),
    st.floats(0.05, 20.0).map(Boltzmann),
)


@settings(max_examples=300, deadline=None)
@given(policies, st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.1, 50.0))
def test_distribution_respects_floor(spec, n_a, seed, scale):
    q = np.random.default_rng(seed).uniform(-scale, scale, size=(2, n_a))
    q_range = float(q.max() - q.min())
    c = persistent_lower_bound(spec, q_range, n_a)
    for x in range(2):
        probs = action_distribution(spec, q, x)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert probs.min() >= c * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 10.0), st.integers(0, 2**32 - 1), st.floats(-100, 100))
def test_boltzmann_shift_invariance(tau, seed, shift):
    q = np.random.default_rng(seed).normal(size=(1, 4))
    np.testing.assert_allclose(
        action_distribution(Boltzmann(tau), q, 0), action_distribution(Boltzmann(tau), q + shift, 0), atol=1e-12
    )


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_greedy_mass(eps, n_a, seed):
    q = np.random.default_rng(seed).normal(size=(1, n_a))
    probs = action_distribution(EpsGreedy(eps), q, 0)
    assert probs[q[0].argmax()] == 1 - eps + eps / n_a


class TestSample:
    def test_point_mass(self, rng):
        assert all(sample_action([0.0, 1.0, 0.0], rng) == 1 for _ in range(100))

    def test_explicit_uniforms(self):
        assert sample_action([0.5, 0.5], 0.7) == 1
        assert sample_action([0.25, 0.75], 0.2) == 0
        assert sample_action([0.5, 0.0, 0.5], 0.5) == 2

    def test_rounding_shortfall_picks_last_supported_action(self):
        assert sample_action([0.3, 0.3, 0.3, 0.0], 0.95) == 2

    def test_frequencies(self):
        rng = np.random.default_rng(7)
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        n = 10**5
        counts = np.bincount([sample_action(probs, rng) for _ in range(n)], minlength=4)
        se = np.sqrt(n * probs * (1 - probs))
        assert np.all(np.abs(counts - n * probs) <= 3 * se)

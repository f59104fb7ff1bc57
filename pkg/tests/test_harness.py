import math

import numpy as np
import pytest

from clockwork.chains import induced_chain, uniform_strategy
from clockwork.errors import InadmissibleSchedule, NonPersistentPolicy, NotCommunicating
from clockwork.exploration import DecayingEps, EpsGreedy, Uniform
from clockwork.harness import (
    ExperimentSpec,
    Tolerances,
    run_seeds,
    verify,
    verify_convergence,
    verify_rm_series,
    verify_visit_bound,
)
from clockwork.mdp import solve_q
from clockwork.qlearn import QLearnConfig
from clockwork.schedules import GlobalClock, LocalPairClock, PowerProduct

from conftest import random_communicating_mdp


def spec_for(mdp, policy=Uniform(), schedule=GlobalClock(), horizon=10_000, seeds=2, **kw):
    return ExperimentSpec(QLearnConfig(mdp, policy, schedule, horizon=horizon, **kw), seed_count=seeds)


def test_spec_validation(two_cycle):
    with pytest.raises(ValueError):
        ExperimentSpec(QLearnConfig(two_cycle, Uniform(), GlobalClock()), seed_count=0)
    with pytest.raises(ValueError):
        ExperimentSpec(QLearnConfig(two_cycle, Uniform(), GlobalClock()), checks=("nope",))
    spec = spec_for(two_cycle, seeds=3, seed=7)
    assert spec.seeds == [7, 8, 9]


class TestVisitBound:
    def test_two_cycle_hits_bound(self, two_cycle):
        horizon = 20_001
        report = verify_visit_bound(spec_for(two_cycle, horizon=horizon))
        assert report.summary["bound"] == 0.5 and report.passed
        for row in report.rows:
            assert abs(row["value"] - 0.5) <= 2.0 / horizon

    def test_single_state(self, single_state):
        report = verify_visit_bound(spec_for(single_state, horizon=100))
        assert report.summary["bound"] == 1.0
        assert report.passed
        assert report.rows[0]["value"] == pytest.approx(101 / 100)

    def test_requires_communicating(self, two_absorbing):
        with pytest.raises(NotCommunicating):
            verify_visit_bound(spec_for(two_absorbing))

    def test_requires_floor(self, ref3):
        with pytest.raises(NonPersistentPolicy):
            verify_visit_bound(spec_for(ref3, policy=DecayingEps(0.3, 0.5)))

    def test_matches_stationary_distribution(self, rng):
        for _ in range(3):
            mdp = random_communicating_mdp(rng, 4, 1, zero_prob=0.4)
            p = induced_chain(mdp, uniform_strategy(mdp))
            # Cesaro-averaged power iteration, robust to periodic chains.
            mu, acc = np.full(4, 0.25), np.zeros(4)
            for _ in range(20_000):
                mu = mu @ p
                acc += mu
            pi = acc / acc.sum()
            report = verify_visit_bound(spec_for(mdp, horizon=200_000, seeds=1))
            run = run_seeds(spec_for(mdp, horizon=200_000, seeds=1))[0]
            np.testing.assert_allclose(run.visit_freq, pi, atol=0.02)
            assert report.rows[0]["value"] == pytest.approx(run.visit_freq.min())
            assert report.passed == (run.visit_freq.min() >= 0.9 * report.summary["bound"])


class TestRmSeries:
    def test_global_clock_two_cycle_exact_sums(self, two_cycle):
        horizon = 40_000
        spec = spec_for(two_cycle, schedule=GlobalClock(1, 1, 1), horizon=horizon, seeds=1)
        run = run_seeds(spec)[0]
        report = verify_rm_series(spec, [run])
        # State 0 is visited at even times, state 1 at odd times.
        for x in range(2):
            s1 = lambda t_end: math.fsum(1.0 / (1 + t) for t in range(x, t_end, 2))
            assert run.at(horizon).rate_sum[x, 0] == pytest.approx(s1(horizon), rel=1e-12)
            assert run.at(horizon // 4).rate_sum[x, 0] == pytest.approx(s1(horizon // 4), rel=1e-12)
        ratio = run.at(horizon).rate_sum / run.at(horizon // 4).rate_sum
        assert report.rows[0]["value"] == pytest.approx(ratio.min())
        assert report.summary["expected_sum_diverges"]
        assert 1.0 < ratio.min() < math.log(horizon) / math.log(horizon / 4) + 0.01

    def test_summable_schedule_fails_growth(self, ref3):
        spec = spec_for(ref3, policy=EpsGreedy(0.2), schedule=GlobalClock(1, 1, 1.4), horizon=40_000)
        with pytest.raises(InadmissibleSchedule):
            verify_rm_series(spec)
        report = verify_rm_series(spec, exploratory=True)
        assert not report.certified
        growth = [r for r in report.rows if r["metric"] == "min_pair_s1_growth"]
        assert growth and not any(r["passed"] for r in growth)
        assert report.passed  # failing growth is the expected outcome here
        assert "not certified" in report.lines()[0]

    def test_unvisited_pair_flagged(self, two_absorbing):
        spec = spec_for(two_absorbing, horizon=1000, seeds=1)
        with pytest.raises(NotCommunicating):
            verify_rm_series(spec)
        report = verify_rm_series(spec, exploratory=True)
        agree = [r for r in report.rows if r["metric"] == "agrees_with_verdict"][0]
        assert agree["unvisited_pairs"] == "(1,0)"
        assert not report.passed

    def test_admissible_schedule_agrees(self, ref4):
        spec = spec_for(ref4, policy=EpsGreedy(0.2), schedule=PowerProduct(1, 1, 0.5, 1, 1e4, 0.3),
                        horizon=200_000, seeds=1)
        assert verify_rm_series(spec).certified


class TestConvergence:
    def test_single_state(self, single_state):
        spec = spec_for(single_state, schedule=LocalPairClock(1, 0, 1), horizon=10_000, seeds=1)
        report = verify_convergence(spec)
        closed = 2.0 * math.exp(math.lgamma(10_000.5) - math.lgamma(0.5) - math.lgamma(10_001))
        assert report.rows[0]["value"] == pytest.approx(closed / 2.0, rel=1e-6)  # Q* solved to 1e-8
        assert report.passed

    def test_start_at_fixed_point(self, ref3):
        q_star = solve_q(ref3)
        spec = spec_for(ref3, policy=EpsGreedy(0.2), schedule=LocalPairClock(1, 1, 0.7), horizon=20_000,
                        seeds=3, q0=q_star)
        report = verify_convergence(spec)
        assert report.passed
        assert report.summary["max_relative_error"] < 0.05

    def test_inadmissible_raises(self, ref3):
        spec = spec_for(ref3, schedule=PowerProduct(alpha=0.8, beta=0.6))
        with pytest.raises(InadmissibleSchedule):
            verify_convergence(spec)
        assert not verify_convergence(spec, exploratory=True).certified


def test_verify_is_reproducible(ref3):
    spec = ExperimentSpec(QLearnConfig(ref3, EpsGreedy(0.2), LocalPairClock(1, 1, 0.7), horizon=20_000),
                          seed_count=3, tolerances=Tolerances())
    a, b = verify(spec), verify(spec)
    assert [r.rows for r in a] == [r.rows for r in b]
    assert [r.check for r in a] == ["visit_bound", "rm_series", "convergence"]
    python = verify(spec, backend="python")
    assert [r.rows for r in python] == [r.rows for r in a]

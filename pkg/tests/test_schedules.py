import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clockwork.errors import InconsistentClocks, PairClockNotCovered
from clockwork.exploration import DecayingEps
from clockwork.schedules import (
    GlobalClock,
    LocalPairClock,
    LogPowerProduct,
    PowerProduct,
    RmVerdict,
    StateClock,
    certified_for_convergence,
    decaying_compatibility,
    diagonal_rm_verdict,
    rate,
    theorem2_admissible,
)

GRID = range(1, 11)  # exponents k/10


class TestRate:
    def test_power_product(self):
        assert rate(PowerProduct(1, 1, 0.5, 1, 1, 0.5), 3, 3, 1) == pytest.approx(0.25)

    @pytest.mark.parametrize("j", [1, 2, 7, 100])
    def test_classic_one_over_visits(self, j):
        assert rate(LocalPairClock(a=1, b=0, p=1), 500, j + 3, j) == pytest.approx(1 / j)

    def test_global_clock(self):
        assert rate(GlobalClock(1, 1, 1), 9, 1, 1) == pytest.approx(0.1)

    def test_state_clock(self):
        assert rate(StateClock(2, 1, 1), 10, 3, 2) == pytest.approx(0.5)

    def test_log_power_product_uses_log_of_max_t_1(self):
        spec = LogPowerProduct(1, 1, 1, 1, 1, 1)
        assert rate(spec, 0, 1, 1) == rate(spec, 1, 1, 1) == 0.5
        assert rate(spec, 100, 4, 1) == pytest.approx(1 / ((1 + math.log(100)) * 5))

    @pytest.mark.parametrize("clocks", [(0, 2, 1), (5, 3, 4), (-1, 1, 1), (3, 1, 0)])
    def test_inconsistent_clocks(self, clocks):
        with pytest.raises(InconsistentClocks):
            rate(GlobalClock(), *clocks)

    @pytest.mark.parametrize("make", [
        lambda: GlobalClock(a=1, b=0, p=1),   # infinite at t = 0
        lambda: LocalPairClock(a=2, b=0, p=1),
        lambda: PowerProduct(a1=3, b1=1, alpha=0.5, a2=1, b2=1, beta=0.5),
        lambda: StateClock(a=-1),
        lambda: PowerProduct(alpha=-0.2),
    ])
    def test_construction_rejects_bad_first_rate(self, make):
        with pytest.raises(ValueError):
            make()


schedule_specs = st.one_of(
    st.builds(LocalPairClock, a=st.floats(0.1, 1), b=st.floats(0, 5), p=st.floats(0, 1.5)),
    st.builds(StateClock, a=st.floats(0.1, 1), b=st.floats(0, 5), p=st.floats(0, 1.5)),
    st.builds(GlobalClock, a=st.floats(0.1, 1), b=st.floats(1, 5), p=st.floats(0, 1.5)),
    st.builds(PowerProduct, a1=st.floats(0.1, 1), b1=st.floats(1, 5), alpha=st.floats(0, 1),
              a2=st.floats(0.1, 1), b2=st.floats(0, 5), beta=st.floats(0, 1)),
    st.builds(LogPowerProduct, a1=st.floats(0.1, 1), b1=st.floats(1, 5), alpha=st.floats(0, 1),
              a2=st.floats(0.1, 1), b2=st.floats(0, 5), beta=st.floats(0, 1)),
)


@settings(max_examples=300, deadline=None)
@given(schedule_specs, st.integers(0, 10**6), st.integers(1, 10**6), st.integers(1, 10**6),
       st.sampled_from(["t", "N", "n"]), st.integers(1, 1000))
def test_rate_in_unit_interval_and_monotone(spec, t, big_n, small_n, which, bump):
    big_n = min(big_n, t + 1)
    small_n = min(small_n, big_n)
    base = rate(spec, t, big_n, small_n)
    assert 0 < base <= 1
    bumped = {"t": (t + bump, big_n, small_n), "N": (t + bump, big_n + bump, small_n),
              "n": (t + bump, big_n + bump, small_n + bump)}[which]
    assert rate(spec, *bumped) <= base


class TestDiagonalVerdict:
    def test_power_product_interior(self):
        assert diagonal_rm_verdict(PowerProduct(alpha=0.5, beta=0.3)) == RmVerdict(True, True)

    def test_sum_converges_when_exponent_exceeds_one(self):
        assert diagonal_rm_verdict(PowerProduct(alpha=0.8, beta=0.6)) == RmVerdict(False, True)

    def test_log_power_product_interior(self):
        assert diagonal_rm_verdict(LogPowerProduct(alpha=0.8, beta=0.5)) == RmVerdict(True, True)

    def test_squares_diverge_for_small_exponent(self):
        assert diagonal_rm_verdict(PowerProduct(alpha=0.1, beta=0.2)) == RmVerdict(True, False)

    @pytest.mark.parametrize("p, expected", [(0.5, (True, False)), (0.51, (True, True)), (1.0, (True, True)),
                                             (1.01, (False, True))])
    def test_single_clock_boundaries(self, p, expected):
        for cls in (GlobalClock, StateClock, LocalPairClock):
            assert diagonal_rm_verdict(cls(a=1, b=1, p=p)) == RmVerdict(*expected)

    @pytest.mark.parametrize("alpha, beta, expected", [
        (1.0, 1.0, (True, True)),    # sum 1/(t ln t) diverges
        (1.1, 1.0, (False, True)),   # sum 1/(t (ln t)^1.1) converges
        (0.4, 0.5, (True, False)),   # squares ~ 1/(t (ln t)^0.8) diverge
        (0.6, 0.5, (True, True)),    # squares ~ 1/(t (ln t)^1.2) converge
        (0.0, 0.3, (True, False)),
    ])
    def test_log_family_bertrand_boundaries(self, alpha, beta, expected):
        assert diagonal_rm_verdict(LogPowerProduct(alpha=alpha, beta=beta)) == RmVerdict(*expected)


class TestAdmissibility:
    def test_interior_power_product(self):
        assert theorem2_admissible(PowerProduct(alpha=0.5, beta=0.3))

    def test_summable_rate_fails(self):
        assert not theorem2_admissible(PowerProduct(alpha=0.8, beta=0.6))

    def test_pair_clock_not_covered(self):
        with pytest.raises(PairClockNotCovered):
            theorem2_admissible(LocalPairClock(1, 1, 0.7))

    def test_pair_clock_certified_separately(self):
        assert certified_for_convergence(LocalPairClock(1, 1, 0.7))
        assert not certified_for_convergence(LocalPairClock(1, 1, 0.4))

    @pytest.mark.parametrize("ka, kb", list(itertools.product(GRID, GRID)))
    def test_power_product_grid_is_exact(self, ka, kb):
        spec = PowerProduct(alpha=ka / 10, beta=kb / 10)
        assert theorem2_admissible(spec) == (5 < ka + kb <= 10)

    @pytest.mark.parametrize("ka, kb", list(itertools.product(GRID, GRID)))
    def test_log_power_product_grid(self, ka, kb):
        spec = LogPowerProduct(alpha=ka / 10, beta=kb / 10)
        if 5 < ka <= 10 and 5 <= kb <= 10:
            assert theorem2_admissible(spec)
        # Bertrand series test in integer arithmetic, including points outside the guaranteed box.
        diverges = kb < 10 or ka <= 10
        sq_converges = kb > 5 or (kb == 5 and ka > 5)
        assert theorem2_admissible(spec) == (diverges and sq_converges)


class TestDecayingCompatibility:
    def test_diverges(self):
        assert decaying_compatibility(DecayingEps(0.5, 0.3), StateClock(1, 1, 0.6)) == RmVerdict(True, True)

    def test_converges(self):
        assert decaying_compatibility(DecayingEps(0.5, 0.6), StateClock(1, 1, 0.6)) == RmVerdict(False, True)

    def test_constant_floor(self):
        assert decaying_compatibility(DecayingEps(0.5, 0.0), StateClock(1, 1, 0.7)) == RmVerdict(True, True)

    def test_rejects_non_parametric(self):
        with pytest.raises(TypeError):
            decaying_compatibility(DecayingEps(0.5, 0.1), GlobalClock())


def _diagonal_partial_sums(spec, horizon):
    t = np.arange(horizon + 1, dtype=float)
    n = np.maximum(t, 1)
    terms = np.array([rate(spec, int(k), int(m), int(m)) for k, m in zip(t[:2], n[:2])])
    if isinstance(spec, PowerProduct):
        rest = (spec.a1 / (spec.b1 + t) ** spec.alpha) * (spec.a2 / (spec.b2 + n) ** spec.beta)
    else:
        rest = (spec.a1 / (spec.b1 + np.log(n)) ** spec.alpha) * (spec.a2 / (spec.b2 + n) ** spec.beta)
    np.testing.assert_allclose(rest[:2], terms)
    return np.cumsum(rest), np.cumsum(rest**2)


@pytest.mark.parametrize("spec", [
    PowerProduct(alpha=0.4, beta=0.4),
    PowerProduct(alpha=0.5, beta=0.3),
    PowerProduct(alpha=0.3, beta=0.6),
    LogPowerProduct(alpha=0.6, beta=0.7),
])
def test_partial_sum_smoke(spec):
    assert diagonal_rm_verdict(spec).robbins_monro
    s1, s2 = _diagonal_partial_sums(spec, 10**6)
    assert s1[10**6] >= 2 * s1[10**3]
    assert (s2[10**6] - s2[10**5]) / s2[10**5] < 0.01

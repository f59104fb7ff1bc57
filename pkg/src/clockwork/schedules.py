"""Learning-rate schedules driven by the global, state and pair clocks.

A schedule maps the clock triple ``(t, N, n)`` to a rate in (0, 1], where ``t``
is the step index, ``N`` the visit count of the current state and ``n`` the
visit count of the current state-action pair (both inclusive of the current
visit). Each family carries an analytic Robbins-Monro verdict along the
diagonal ``t = N``; verdicts are never inferred from partial sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InconsistentClocks, PairClockNotCovered
from .exploration import DecayingEps

# Exponent comparisons tolerate decimal grids such as 0.3 + 0.7.
EXPONENT_TOL = 1e-12


def _check_positive(**params):
    for name, value in params.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite, got {value}")


def _check_nonnegative(**params):
    for name, value in params.items():
        if not (value >= 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be nonnegative and finite, got {value}")


def _check_first_rate(spec):
    try:
        first = spec.rate(0, 1, 1)
    except ZeroDivisionError:
        first = math.inf
    if not (0 < first <= 1.0):
        raise ValueError(f"{spec!r} has rate {first} at first use; must lie in (0, 1]")


class _Schedule:
    uses_pair_clock = False

    def __post_init__(self):
        _check_first_rate(self)


@dataclass(frozen=True)
class LocalPairClock(_Schedule):
    """``a / (b + n)^p`` with ``n`` the visit count of the updated pair."""

    a: float = 1.0
    b: float = 0.0
    p: float = 1.0
    uses_pair_clock = True

    def __post_init__(self):
        _check_positive(a=self.a)
        _check_nonnegative(b=self.b, p=self.p)
        super().__post_init__()

    def rate(self, t, state_clock, pair_clock):
        return self.a / (self.b + pair_clock) ** self.p


@dataclass(frozen=True)
class StateClock(_Schedule):
    """``a / (b + N)^p`` with ``N`` the visit count of the current state."""

    a: float = 1.0
    b: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        _check_positive(a=self.a)
        _check_nonnegative(b=self.b, p=self.p)
        super().__post_init__()

    def rate(self, t, state_clock, pair_clock):
        return self.a / (self.b + state_clock) ** self.p


@dataclass(frozen=True)
class GlobalClock(_Schedule):
    """``a / (b + t)^p``, a deterministic sequence in the step index."""

    a: float = 1.0
    b: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        _check_positive(a=self.a)
        _check_nonnegative(b=self.b, p=self.p)
        super().__post_init__()

    def rate(self, t, state_clock, pair_clock):
        return self.a / (self.b + t) ** self.p


@dataclass(frozen=True)
class PowerProduct(_Schedule):
    """``[a1 / (b1 + t)^alpha] * [a2 / (b2 + N)^beta]``."""

    a1: float = 1.0
    b1: float = 1.0
    alpha: float = 0.5
    a2: float = 1.0
    b2: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        _check_positive(a1=self.a1, a2=self.a2)
        _check_nonnegative(b1=self.b1, b2=self.b2, alpha=self.alpha, beta=self.beta)
        super().__post_init__()

    def rate(self, t, state_clock, pair_clock):
        return (self.a1 / (self.b1 + t) ** self.alpha) * (self.a2 / (self.b2 + state_clock) ** self.beta)


@dataclass(frozen=True)
class LogPowerProduct(_Schedule):
    """``[a1 / (b1 + ln t)^alpha] * [a2 / (b2 + N)^beta]``, with ``ln`` taken at ``max(t, 1)``."""

    a1: float = 1.0
    b1: float = 1.0
    alpha: float = 0.8
    a2: float = 1.0
    b2: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        _check_positive(a1=self.a1, a2=self.a2)
        _check_nonnegative(b1=self.b1, b2=self.b2, alpha=self.alpha, beta=self.beta)
        super().__post_init__()

    def rate(self, t, state_clock, pair_clock):
        log_t = math.log(t) if t > 1 else 0.0
        return (self.a1 / (self.b1 + log_t) ** self.alpha) * (self.a2 / (self.b2 + state_clock) ** self.beta)


ScheduleSpec = LocalPairClock | StateClock | GlobalClock | PowerProduct | LogPowerProduct


@dataclass(frozen=True)
class RmVerdict:
    sum_diverges: bool
    sum_sq_converges: bool
    basis: str = "analytic"

    @property
    def robbins_monro(self) -> bool:
        return self.sum_diverges and self.sum_sq_converges


def rate(spec: ScheduleSpec, t: int, state_clock: int, pair_clock: int) -> float:
    """Evaluate ``spec`` at a consistent clock triple ``pair <= state <= t + 1``."""
    if t < 0 or pair_clock < 1 or not (pair_clock <= state_clock <= t + 1):
        raise InconsistentClocks(f"need 1 <= pair_clock <= state_clock <= t + 1, got t={t}, N={state_clock}, n={pair_clock}")
    return spec.rate(t, state_clock, pair_clock)


def _power_verdict(s: float) -> RmVerdict:
    return RmVerdict(sum_diverges=s <= 1 + EXPONENT_TOL, sum_sq_converges=s > 0.5 + EXPONENT_TOL)


def diagonal_rm_verdict(spec: ScheduleSpec) -> RmVerdict:
    """Classify ``sum rate(t, t, .)`` and ``sum rate(t, t, .)^2`` by the p-series tests."""
    if isinstance(spec, (LocalPairClock, StateClock, GlobalClock)):
        return _power_verdict(spec.p)
    if isinstance(spec, PowerProduct):
        return _power_verdict(spec.alpha + spec.beta)
    if isinstance(spec, LogPowerProduct):
        # Diagonal term behaves like 1 / ((ln t)^alpha t^beta).
        al, be = spec.alpha, spec.beta
        below_one = be < 1 - EXPONENT_TOL
        at_one = abs(be - 1) <= EXPONENT_TOL
        above_half = be > 0.5 + EXPONENT_TOL
        at_half = abs(be - 0.5) <= EXPONENT_TOL
        return RmVerdict(
            sum_diverges=below_one or (at_one and al <= 1 + EXPONENT_TOL),
            sum_sq_converges=above_half or (at_half and al > 0.5 + EXPONENT_TOL),
        )
    raise TypeError(f"no analytic verdict for {spec!r}")


def theorem2_admissible(spec: ScheduleSpec) -> bool:
    """Whether ``spec`` meets the monotonicity and diagonal conditions for (t, N) schedules.

    Monotonicity of ``1/rate`` in each clock holds for every family by the
    sign of the exponents, so admissibility reduces to the diagonal verdict.
    Pair-clock schedules are outside the result's scope and raise.
    """
    if spec.uses_pair_clock:
        raise PairClockNotCovered(f"{type(spec).__name__} depends on the pair clock n_t(x,a)")
    return diagonal_rm_verdict(spec).robbins_monro


def certified_for_convergence(spec: ScheduleSpec) -> bool:
    """Admissible (t, N) schedule, or a pair-clock power rate with exponent in (1/2, 1]."""
    if isinstance(spec, LocalPairClock):
        return diagonal_rm_verdict(spec).robbins_monro
    return theorem2_admissible(spec)


def decaying_compatibility(floor: DecayingEps, schedule: StateClock) -> RmVerdict:
    """Series verdict for floor ``c0/(1+j)^gamma`` against state rate ``a/(b+j)^p``.

    ``sum c(j) rate(j)`` diverges iff ``gamma + p <= 1``; squares involve the rate only.
    """
    if not isinstance(floor, DecayingEps) or not isinstance(schedule, StateClock):
        raise TypeError("need a DecayingEps floor and a StateClock rate")
    return RmVerdict(
        sum_diverges=floor.gamma + schedule.p <= 1 + EXPONENT_TOL,
        sum_sq_converges=schedule.p > 0.5 + EXPONENT_TOL,
    )

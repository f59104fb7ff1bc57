"""Q-learning along simulated trajectories with global, state and pair clocks.

Clock convention: at step ``t`` the state clock ``N(x_t)`` and the pair clock
``n(x_t, a_t)`` are incremented before the learning rate is evaluated, so the
j-th update of a pair sees ``pair_clock == j``. Each step draws two uniforms
from the run's generator, first for the action and then for the successor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _backends
from .exploration import (
    Boltzmann,
    DecayingEps,
    EpsGreedy,
    PolicySpec,
    Uniform,
    action_distribution,
    sample_action,
)
from .mdp import Mdp, check_mdp
from .schedules import (
    GlobalClock,
    LocalPairClock,
    LogPowerProduct,
    PowerProduct,
    ScheduleSpec,
    StateClock,
    rate,
)

CHUNK_STEPS = 1 << 16


@dataclass
class ClockState:
    """Visit counters and per-pair partial sums of the effective learning rate."""

    t: int
    state_counts: np.ndarray
    pair_counts: np.ndarray
    rate_sum: np.ndarray
    rate_sq_sum: np.ndarray
    state_visits: list[list[int]] | None = None
    pair_visits: dict[tuple[int, int], list[int]] | None = None

    @classmethod
    def empty(cls, n_states: int, n_actions: int, record_visits: bool = False) -> ClockState:
        return cls(
            t=0,
            state_counts=np.zeros(n_states, dtype=np.int64),
            pair_counts=np.zeros((n_states, n_actions), dtype=np.int64),
            rate_sum=np.zeros((n_states, n_actions)),
            rate_sq_sum=np.zeros((n_states, n_actions)),
            state_visits=[[] for _ in range(n_states)] if record_visits else None,
            pair_visits={} if record_visits else None,
        )

    def check(self):
        """Raise if the counting identities are broken."""
        if int(self.state_counts.sum()) != self.t:
            raise RuntimeError(f"state clocks sum to {self.state_counts.sum()} after {self.t} steps")
        if not np.array_equal(self.pair_counts.sum(axis=1), self.state_counts):
            raise RuntimeError("pair clocks do not add up to state clocks")
        if self.state_visits is not None:
            for x, times in enumerate(self.state_visits):
                if len(times) != self.state_counts[x] or any(b <= a for a, b in zip(times, times[1:])):
                    raise RuntimeError(f"visit log of state {x} is inconsistent")


@dataclass(frozen=True, eq=False)
class QLearnConfig:
    mdp: Mdp
    policy: PolicySpec
    schedule: ScheduleSpec
    initial_state: int = 0
    q0: np.ndarray | float | None = None
    horizon: int = 1000
    seed: int = 0

    def initial_q(self) -> np.ndarray:
        shape = (self.mdp.n_states, self.mdp.n_actions)
        if self.q0 is None:
            return np.zeros(shape)
        q0 = np.broadcast_to(np.asarray(self.q0, dtype=float), shape).copy()
        if not np.all(np.isfinite(q0)):
            raise ValueError("initial Q table has non-finite entries")
        return q0

    def validate(self):
        check_mdp(self.mdp)
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if not (0 <= self.initial_state < self.mdp.n_states):
            raise ValueError(f"initial state {self.initial_state} out of range")
        if isinstance(self.policy, DecayingEps) and self.policy.floor(1) * self.mdp.n_actions > 1:
            raise ValueError("decaying floor c0/2^gamma exceeds 1/|A|")
        self.initial_q()

    def q_bound(self) -> float:
        """Sup-norm bound on every iterate: ``max(||Q0||, R_max / (1 - beta))``."""
        return max(float(np.max(np.abs(self.initial_q()))), self.mdp.r_max / (1.0 - self.mdp.discount))


@dataclass(frozen=True)
class StepRecord:
    t: int
    state: int
    action: int
    next_state: int
    reward: float
    alpha: float


@dataclass(frozen=True, eq=False)
class CheckpointRecord:
    t: int
    sup_error: float
    state_freq: np.ndarray
    rate_sum: np.ndarray
    rate_sq_sum: np.ndarray

    @property
    def min_state_freq(self) -> float:
        return float(self.state_freq.min())

    @property
    def min_pair_s1(self) -> float:
        return float(self.rate_sum.min())

    @property
    def max_pair_s2(self) -> float:
        return float(self.rate_sq_sum.max())


@dataclass(eq=False)
class RunResult:
    q: np.ndarray
    checkpoints: list[CheckpointRecord]
    clocks: ClockState
    final_state: int
    visit_freq: np.ndarray
    running_inf_freq: np.ndarray
    horizon: int
    seed: int
    backend: str = field(default="python")

    @property
    def errors(self) -> np.ndarray:
        return np.array([c.sup_error for c in self.checkpoints])

    @property
    def final_error(self) -> float:
        return self.checkpoints[-1].sup_error

    def at(self, t: int) -> CheckpointRecord:
        for rec in self.checkpoints:
            if rec.t == t:
                return rec
        raise KeyError(f"no checkpoint at t={t}")


def q_update(q, x, a, y, reward, alpha, beta):
    """One Q-learning update of entry ``(x, a)``; returns a new table."""
    if not (0 < alpha <= 1):
        raise ValueError(f"learning rate must lie in (0, 1], got {alpha}")
    out = np.array(q, dtype=float)
    out[x, a] = (1.0 - alpha) * out[x, a] + alpha * (reward + beta * out[y].max())
    return out


def step(state, q, clocks, config, rng):
    """Advance the reference (unoptimized) simulation by one step.

    ``q`` and ``clocks`` are updated in place and returned alongside the
    successor state and a record of the transition.
    """
    mdp = config.mdp
    t = clocks.t
    x = int(state)
    clocks.state_counts[x] += 1
    big_n = int(clocks.state_counts[x])
    a = sample_action(action_distribution(config.policy, q, x, big_n), rng)
    clocks.pair_counts[x, a] += 1
    small_n = int(clocks.pair_counts[x, a])
    y = sample_action(mdp.kernel[x, a], rng)
    alpha = rate(config.schedule, t, big_n, small_n)
    reward = float(mdp.reward[x, a, y])
    q[x, a] = (1.0 - alpha) * q[x, a] + alpha * (reward + mdp.discount * q[y].max())
    clocks.rate_sum[x, a] += alpha
    clocks.rate_sq_sum[x, a] += alpha * alpha
    if clocks.state_visits is not None:
        clocks.state_visits[x].append(t)
        clocks.pair_visits.setdefault((x, a), []).append(t)
    clocks.t = t + 1
    return y, q, clocks, StepRecord(t, x, a, y, reward, alpha)


def default_checkpoints(horizon: int) -> list[int]:
    """0, powers of two below the horizon, and the horizon itself."""
    points = {0, horizon}
    k = 1
    while k < horizon:
        points.add(k)
        k *= 2
    return sorted(points)


def encode_policy(spec: PolicySpec) -> tuple[int, np.ndarray]:
    if isinstance(spec, Uniform):
        return 0, np.zeros(2)
    if isinstance(spec, EpsGreedy):
        return 1, np.array([spec.epsilon, 0.0])
    if isinstance(spec, Boltzmann):
        return 2, np.array([spec.tau, 0.0])
    if isinstance(spec, DecayingEps):
        return 3, np.array([spec.c0, spec.gamma])
    raise TypeError(f"unknown policy spec {spec!r}")


def encode_schedule(spec: ScheduleSpec) -> tuple[int, np.ndarray]:
    if isinstance(spec, LocalPairClock):
        return 0, np.array([spec.a, spec.b, spec.p, 0.0, 0.0, 0.0])
    if isinstance(spec, StateClock):
        return 1, np.array([spec.a, spec.b, spec.p, 0.0, 0.0, 0.0])
    if isinstance(spec, GlobalClock):
        return 2, np.array([spec.a, spec.b, spec.p, 0.0, 0.0, 0.0])
    if isinstance(spec, PowerProduct):
        return 3, np.array([spec.a1, spec.b1, spec.alpha, spec.a2, spec.b2, spec.beta])
    if isinstance(spec, LogPowerProduct):
        return 4, np.array([spec.a1, spec.b1, spec.alpha, spec.a2, spec.b2, spec.beta])
    raise TypeError(f"unknown schedule spec {spec!r}")


def _sup_error(q, q_star):
    if q_star is None:
        return math.nan
    return float(np.max(np.abs(q - q_star)))


def _observe(k, x, q, q_star, clocks):
    counts = clocks.state_counts.astype(float)
    counts[x] += 1.0
    return CheckpointRecord(
        t=k,
        sup_error=_sup_error(q, q_star),
        state_freq=counts / max(k, 1),
        rate_sum=clocks.rate_sum.copy(),
        rate_sq_sum=clocks.rate_sq_sum.copy(),
    )


def run(config: QLearnConfig, q_star=None, checkpoints=None, *, backend=None,
        record_visits=False, inf_start=None) -> RunResult:
    """Simulate ``config.horizon`` steps from ``config.initial_state``.

    The error against ``q_star`` and the per-pair partial sums are recorded at
    each checkpoint (steps already taken). ``running_inf_freq`` holds, per
    state, the infimum of ``N_t(x)/t`` over ``inf_start <= t <= T``
    (``inf_start`` defaults to ``T // 2``). Deterministic given the seed.
    With ``record_visits`` the per-step reference path is used and visit-time
    logs are kept.
    """
    config.validate()
    mdp = config.mdp
    horizon = config.horizon
    points = sorted({int(c) for c in (checkpoints if checkpoints is not None else default_checkpoints(horizon))
                     if 0 <= c <= horizon} | {horizon})
    inf_start = max(1, horizon // 2 if inf_start is None else int(inf_start))
    rng = np.random.default_rng(config.seed)
    q = config.initial_q()
    clocks = ClockState.empty(mdp.n_states, mdp.n_actions, record_visits)
    running_inf = np.full(mdp.n_states, np.inf)
    x = config.initial_state
    records = []

    if record_visits:
        impl_name = "reference"
        for k in range(horizon + 1):
            if k == points[len(records)]:
                clocks.check()
                records.append(_observe(k, x, q, q_star, clocks))
            if k == horizon:
                break
            if k - 1 >= inf_start and k >= 2:
                running_inf[x] = min(running_inf[x], clocks.state_counts[x] / (k - 1))
            x, q, clocks, _ = step(x, q, clocks, config, rng)
    else:
        impl = _backends.get(backend)
        impl_name = impl.NAME
        cdf = np.ascontiguousarray(np.cumsum(mdp.kernel, axis=2))
        reward = np.ascontiguousarray(mdp.reward)
        p_code, p_params = encode_policy(config.policy)
        s_code, s_params = encode_schedule(config.schedule)
        work = np.zeros(mdp.n_actions)
        k = 0
        for target in points:
            while k < target:
                m = min(CHUNK_STEPS, target - k)
                uniforms = rng.random(2 * m)
                x = impl.simulate_segment(
                    cdf, reward, mdp.discount, p_code, p_params, s_code, s_params,
                    q, clocks.state_counts, clocks.pair_counts, clocks.rate_sum, clocks.rate_sq_sum,
                    running_inf, inf_start, x, k, m, uniforms, work,
                )
                k += m
                clocks.t = k
            clocks.check()
            records.append(_observe(k, x, q, q_star, clocks))

    final_freq = records[-1].state_freq
    if horizon >= inf_start:
        running_inf = np.minimum(running_inf, final_freq)
    return RunResult(
        q=q,
        checkpoints=records,
        clocks=clocks,
        final_state=int(x),
        visit_freq=final_freq,
        running_inf_freq=running_inf,
        horizon=horizon,
        seed=config.seed,
        backend=impl_name,
    )

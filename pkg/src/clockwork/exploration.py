"""Learning strategies: uniform, epsilon-greedy, Boltzmann and decaying epsilon.

Each policy maps the current Q row (and, for the decaying variant, the visit
count of the current state) to a distribution over actions. Persistent
policies also report a certified floor ``c`` with ``pi_t(a) >= c`` for all t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class EpsGreedy:
    """Greedy action w.p. ``1 - epsilon``, uniform over all actions w.p. ``epsilon``."""

    epsilon: float

    def __post_init__(self):
        if not (0 < self.epsilon <= 1):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class Boltzmann:
    tau: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"temperature must be positive, got {self.tau}")


@dataclass(frozen=True)
class DecayingEps:
    """Epsilon-greedy whose per-action floor is ``c0 / (1 + N)^gamma``.

    ``N`` is the visit count of the current state, so the floor shrinks as the
    state is revisited. This policy is not persistent for ``gamma > 0``.
    """

    c0: float
    gamma: float

    def __post_init__(self):
        if not (0 < self.c0 <= 1):
            raise ValueError(f"c0 must lie in (0, 1], got {self.c0}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    def floor(self, state_clock: int) -> float:
        return self.c0 / (1.0 + state_clock) ** self.gamma


PolicySpec = Uniform | EpsGreedy | Boltzmann | DecayingEps


def greedy_action(q_row) -> int:
    """Index of the largest entry; ties go to the lowest index."""
    return int(np.argmax(q_row))


def action_distribution(spec: PolicySpec, q: np.ndarray, state: int, state_clock: int = 1) -> np.ndarray:
    row = np.asarray(q, dtype=float)[state]
    if not np.all(np.isfinite(row)):
        raise ValueError(f"non-finite Q values in state {state}")
    n_a = row.size
    if isinstance(spec, Uniform):
        return np.full(n_a, 1.0 / n_a)
    if isinstance(spec, Boltzmann):
        w = np.exp((row - row.max()) / spec.tau)
        return w / w.sum()
    if isinstance(spec, EpsGreedy):
        eps = spec.epsilon
    elif isinstance(spec, DecayingEps):
        if state_clock < 1:
            raise ValueError("state clock must be >= 1")
        eps = spec.floor(state_clock) * n_a
        if eps > 1.0:
            raise ValueError(f"floor {spec.floor(state_clock):g} exceeds 1/|A| = {1.0 / n_a:g}")
    else:
        raise TypeError(f"unknown policy spec {spec!r}")
    probs = np.full(n_a, eps / n_a)
    probs[greedy_action(row)] += 1.0 - eps
    return probs


def persistent_lower_bound(spec: PolicySpec, q_range: float, n_actions: int) -> float:
    """Floor ``c`` with ``pi_t(a) >= c`` whenever ``max Q - min Q <= q_range``.

    The decaying policy has no uniform floor unless its exponent is zero.
    """
    if q_range < 0:
        raise ValueError("q_range must be nonnegative")
    if isinstance(spec, Uniform):
        return 1.0 / n_actions
    if isinstance(spec, EpsGreedy):
        return spec.epsilon / n_actions
    if isinstance(spec, Boltzmann):
        return math.exp(-q_range / spec.tau) / n_actions
    if isinstance(spec, DecayingEps):
        return spec.c0 if spec.gamma == 0 else 0.0
    raise TypeError(f"unknown policy spec {spec!r}")


def sample_action(dist, rng) -> int:
    """Inverse-CDF sampling in action-index order.

    ``rng`` is a ``numpy.random.Generator`` or an explicit uniform in [0, 1).
    """
    u = rng.random() if hasattr(rng, "random") else float(rng)
    cdf = np.cumsum(dist)
    idx = int(np.searchsorted(cdf, u, side="right"))
    if idx >= len(cdf):
        idx = int(np.flatnonzero(np.asarray(dist) > 0)[-1])
    return idx

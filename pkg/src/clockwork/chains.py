"""Markov chains induced by stationary strategies and the communicating property.

The main product is the certificate ``(n, delta)``: the smallest horizon ``n``
such that ``P + P^2 + ... + P^n`` of the uniform-strategy chain is strictly
positive, together with its minimal entry ``delta``. It drives the lower bound
``(c|A|)^n delta / n`` on the long-run visit frequency of every state under any
learning strategy whose action probabilities never drop below ``c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    CertificateSearchExhausted,
    InstanceTooLarge,
    NotCommunicating,
)
from .mdp import ROW_SUM_TOL, Mdp, check_mdp

SUPPORT_TOL = 1e-12
BRUTE_FORCE_LIMIT = 10**6
LEMMA_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StationaryStrategy:
    """Action distribution ``g(a|x)`` that depends on the current state only."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2:
            raise ValueError("strategy must be a |X| x |A| array")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("every strategy row must be a probability distribution")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def completely_mixed(self) -> bool:
        return bool(np.min(self.probs) > 0)

    @property
    def deterministic(self) -> bool:
        return bool(np.all(np.max(self.probs, axis=1) == 1.0))

    @classmethod
    def from_actions(cls, actions, n_actions: int) -> StationaryStrategy:
        """Deterministic strategy playing ``actions[x]`` in state ``x``."""
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, n_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)


@dataclass(frozen=True)
class CommunicationCertificate:
    n: int
    delta: float


@dataclass(frozen=True)
class CheckReport:
    """Outcome of an exact inequality check, one slack value per (x, a)."""

    lhs: np.ndarray
    rhs: float
    slack: np.ndarray
    min_slack: float
    passed: bool


def induced_chain(mdp: Mdp, g: StationaryStrategy) -> np.ndarray:
    """Transition matrix ``P(x, y) = sum_a q(y|x,a) g(a|x)``."""
    if g.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(
            f"strategy shape {g.probs.shape} does not match MDP {(mdp.n_states, mdp.n_actions)}"
        )
    return np.einsum("xay,xa->xy", mdp.kernel, g.probs)


def uniform_strategy(mdp: Mdp) -> StationaryStrategy:
    return StationaryStrategy(np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions))


def is_irreducible(p: np.ndarray) -> bool:
    """Strong connectivity of the digraph ``{(x, y): P(x, y) > 1e-12}``."""
    p = np.asarray(p, dtype=float)
    if p.shape[0] == 1:
        return True
    n_comp, _ = connected_components(p > SUPPORT_TOL, directed=True, connection="strong")
    return n_comp == 1


def is_communicating(mdp: Mdp) -> bool:
    check_mdp(mdp)
    return is_irreducible(induced_chain(mdp, uniform_strategy(mdp)))


def _reach_within(adj: np.ndarray, steps: int) -> np.ndarray:
    """Boolean matrix of pairs joined by a walk of length 1..steps."""
    adj = adj.astype(np.int64)
    power = adj.copy()
    reach = adj > 0
    for _ in range(steps - 1):
        power = np.minimum(power @ adj, 1)
        reach |= power > 0
    return reach


def brute_force_communicating(mdp: Mdp) -> bool:
    """Check accessibility by enumerating every deterministic stationary strategy.

    For each ordered pair ``(x, y)`` some deterministic strategy must reach
    ``y`` from ``x`` in at most ``|X|`` steps. Exponential in ``|X|``.
    """
    check_mdp(mdp)
    n_x, n_a = mdp.n_states, mdp.n_actions
    if n_a**n_x > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{n_a}^{n_x} deterministic strategies exceed {BRUTE_FORCE_LIMIT}")
    reached = np.zeros((n_x, n_x), dtype=bool)
    rows = np.arange(n_x)
    for actions in itertools.product(range(n_a), repeat=n_x):
        support = mdp.kernel[rows, list(actions), :] > SUPPORT_TOL
        reached |= _reach_within(support, n_x)
        if reached.all():
            return True
    return bool(reached.all())


def communication_certificate(mdp: Mdp) -> CommunicationCertificate:
    if not is_communicating(mdp):
        raise NotCommunicating("the uniform-strategy chain is not irreducible")
    p = induced_chain(mdp, uniform_strategy(mdp))
    n_x = mdp.n_states
    power = np.eye(n_x)
    total = np.zeros((n_x, n_x))
    for n in range(1, n_x * n_x + 1):
        power = power @ p
        total += power
        if np.all(total > 0):
            return CommunicationCertificate(n=n, delta=float(total.min()))
    raise CertificateSearchExhausted(f"no horizon n <= {n_x * n_x} found")


def power_sum(p: np.ndarray, n: int) -> np.ndarray:
    """``P + P^2 + ... + P^n`` (zero matrix for ``n = 0``)."""
    power = np.eye(p.shape[0])
    total = np.zeros_like(power)
    for _ in range(n):
        power = power @ p
        total += power
    return total


def visit_rate_lower_bound(cert: CommunicationCertificate, c: float, num_actions: int) -> float:
    """Long-run lower bound ``(c|A|)^n delta / n`` on every state's visit frequency."""
    if not (0 < c <= 1.0 / num_actions + 1e-12):
        raise ValueError(f"exploration floor c={c} must lie in (0, 1/|A|] with |A|={num_actions}")
    return (c * num_actions) ** cert.n * cert.delta / cert.n


def lemma1_exact_check(
    mdp: Mdp,
    g: StationaryStrategy,
    c: float,
    f,
    cert: CommunicationCertificate,
) -> CheckReport:
    """Exact check of the n-step conditional-expectation bound for a stationary strategy.

    Conditioning on the current pair ``(x_t, a_t) = (x, a)``, the left side
    ``sum_{j=1..n} E[f(x_{t+j+1})]`` equals
    ``sum_j sum_z q(z|x,a) (P(g)^j f)(z)``; it must dominate
    ``(c|A|)^n delta sum_y f(y)``.
    """
    if c <= 0 or np.min(g.probs) < c:
        raise ValueError(f"strategy floor {np.min(g.probs):g} is below c={c:g}")
    f = np.asarray(f, dtype=float)
    if f.shape != (mdp.n_states,) or np.any(f < 0):
        raise ValueError("f must be a nonnegative vector over states")
    p = induced_chain(mdp, g)
    lhs = mdp.kernel @ (power_sum(p, cert.n) @ f)
    rhs = (c * mdp.n_actions) ** cert.n * cert.delta * float(f.sum())
    slack = lhs - rhs
    min_slack = float(slack.min())
    return CheckReport(lhs=lhs, rhs=rhs, slack=slack, min_slack=min_slack, passed=min_slack >= -LEMMA_TOL)

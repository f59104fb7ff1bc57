"""Finite discounted MDPs and exact solution of the Q fixed-point equation.

Transition probabilities and rewards are dense arrays indexed ``[x, a, y]``.
The same action set is available at every state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMdp

ROW_SUM_TOL = 1e-12


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mdp:
    """A finite MDP with kernel ``q(y|x,a)``, reward ``r(x,a,y)`` and discount ``beta``.

    Arrays are copied and made read-only, so instances can be shared freely.
    Construction does not validate; use :func:`validate_mdp` or :func:`check_mdp`.
    """

    kernel: np.ndarray
    reward: np.ndarray
    discount: float
    _expected_reward: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kernel", _frozen(self.kernel))
        object.__setattr__(self, "reward", _frozen(self.reward))
        object.__setattr__(self, "discount", float(self.discount))
        if self.kernel.shape == self.reward.shape and self.kernel.ndim == 3:
            rbar = np.einsum("xay,xay->xa", self.kernel, self.reward)
        else:
            rbar = np.full((0, 0), np.nan)
        object.__setattr__(self, "_expected_reward", _frozen(rbar))

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.reward))) if self.reward.size else 0.0

    @property
    def expected_reward(self) -> np.ndarray:
        """``sum_y q(y|x,a) r(x,a,y)``; derived, never the storage format."""
        return self._expected_reward

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.discount == other.discount
            and np.array_equal(self.kernel, other.kernel)
            and np.array_equal(self.reward, other.reward)
        )

    __hash__ = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_mdp(mdp: Mdp) -> ValidationReport:
    """List every violated invariant of ``mdp``; an empty report means valid."""
    problems = []
    k, r = mdp.kernel, mdp.reward
    if k.ndim != 3 or k.shape[0] != k.shape[2]:
        problems.append(f"kernel must have shape (|X|, |A|, |X|), got {k.shape}")
        return ValidationReport(tuple(problems))
    if k.shape[0] < 1 or k.shape[1] < 1:
        problems.append("need at least one state and one action")
    if r.shape != k.shape:
        problems.append(f"reward shape {r.shape} does not match kernel shape {k.shape}")
    elif not np.all(np.isfinite(r)):
        problems.append("reward has non-finite entries")
    if not np.all(np.isfinite(k)):
        problems.append("kernel has non-finite entries")
    else:
        for x, a, y in zip(*np.nonzero(k < 0)):
            problems.append(f"negative probability q(y={y}|x={x},a={a}) = {k[x, a, y]:g}")
        sums = k.sum(axis=2)
        for x, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)):
            problems.append(f"row (x={x},a={a}) sums to {sums[x, a]:.12g}")
    if not (0.0 <= mdp.discount < 1.0):
        problems.append(f"discount out of range [0, 1): {mdp.discount!r}")
    return ValidationReport(tuple(problems))


def check_mdp(mdp: Mdp) -> Mdp:
    report = validate_mdp(mdp)
    if not report.ok:
        raise InvalidMdp(report.violations)
    return mdp


def _backup(mdp: Mdp, q: np.ndarray) -> np.ndarray:
    v = q.max(axis=1)
    return mdp.expected_reward + mdp.discount * (mdp.kernel @ v)


def q_backup(mdp: Mdp, q_in: np.ndarray) -> np.ndarray:
    """Apply the Q Bellman map once.

    Returns ``(x, a) -> sum_y q(y|x,a) (r(x,a,y) + beta * max_b q_in(y, b))``.
    """
    check_mdp(mdp)
    q_in = np.asarray(q_in, dtype=float)
    if q_in.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"Q table shape {q_in.shape} does not match MDP {(mdp.n_states, mdp.n_actions)}")
    if not np.all(np.isfinite(q_in)):
        raise ValueError("Q table has non-finite entries")
    return _backup(mdp, q_in)


def solve_q(mdp: Mdp, tol: float = 1e-8) -> np.ndarray:
    """Value iteration on Q from the zero table.

    Stops once successive iterates differ by at most ``tol*(1-beta)/(2*beta)``
    in sup norm, which bounds the distance to the true fixed point by ``tol``.
    """
    check_mdp(mdp)
    if not tol > 0:
        raise ValueError("tol must be positive")
    beta = mdp.discount
    threshold = np.inf if beta == 0.0 else tol * (1.0 - beta) / (2.0 * beta)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    while True:
        q_next = _backup(mdp, q)
        if np.max(np.abs(q_next - q)) <= threshold:
            return q_next
        q = q_next


def value_from_q(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("Q table has non-finite entries")
    return q.max(axis=1)


def bellman_residual(mdp: Mdp, q: np.ndarray) -> float:
    """Sup-norm residual ``||T(q) - q||``."""
    return float(np.max(np.abs(q_backup(mdp, q) - q)))

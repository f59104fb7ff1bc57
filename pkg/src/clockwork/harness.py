"""Finite-horizon Monte Carlo checks of the asymptotic visit-rate and step-size claims.

Three checks share one batch of seeded runs:

* ``visit_bound``: the final visit frequency of the least visited state
  against ``(c|A|)^n delta / n``;
* ``rm_series``: growth of the per-pair sums of rates and saturation of the
  sums of squared rates, compared with the schedule's analytic verdict;
* ``convergence``: the distance of the final Q table from the exact solution.

Pass thresholds are conventions (see :class:`Tolerances`), not theorems.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .chains import communication_certificate, is_communicating, visit_rate_lower_bound
from .errors import InadmissibleSchedule, NonPersistentPolicy, NotCommunicating
from .exploration import persistent_lower_bound
from .mdp import solve_q
from .qlearn import QLearnConfig, RunResult, default_checkpoints, run
from .schedules import certified_for_convergence, diagonal_rm_verdict

CHECKS = ("visit_bound", "rm_series", "convergence")


@dataclass(frozen=True)
class Tolerances:
    visit_slack: float = 0.1
    visit_pass_fraction: float = 0.95
    growth_factor: float = 1.5
    saturation: float = 0.10
    convergence_rel_error: float = 0.05
    trend_fraction: float = 0.8


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    base: QLearnConfig
    seed_count: int = 1
    checks: tuple[str, ...] = CHECKS
    tolerances: Tolerances = field(default_factory=Tolerances)
    solve_tol: float = 1e-8

    def __post_init__(self):
        if self.seed_count < 1:
            raise ValueError("seed_count must be >= 1")
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise ValueError(f"unknown checks {sorted(unknown)}")

    @property
    def horizon(self) -> int:
        return self.base.horizon

    @property
    def seeds(self) -> list[int]:
        return [self.base.seed + i for i in range(self.seed_count)]

    def config_for(self, seed: int) -> QLearnConfig:
        return replace(self.base, seed=seed)


@dataclass
class VerificationReport:
    check: str
    passed: bool
    certified: bool
    summary: dict
    rows: list[dict]

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        if not self.certified:
            status += " (exploratory: not certified)"
        out = [f"[{self.check}] {status}"]
        out += [f"  {k}: {_fmt(v)}" for k, v in self.summary.items()]
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _persistent_floor(base: QLearnConfig) -> float:
    q_range = 2.0 * base.q_bound()
    return persistent_lower_bound(base.policy, q_range, base.mdp.n_actions)


def run_seeds(spec: ExperimentSpec, q_star=None, backend=None) -> list[RunResult]:
    """Run every seed; concurrent across seeds, reported in seed order."""
    horizon = spec.horizon
    points = sorted(set(default_checkpoints(horizon)) | {horizon // 4, horizon // 2, horizon})

    def one(seed):
        return run(spec.config_for(seed), q_star, points, backend=backend)

    workers = max(1, min(len(spec.seeds), os.cpu_count() or 1))
    if workers == 1:
        return [one(s) for s in spec.seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, spec.seeds))


def verify_visit_bound(spec: ExperimentSpec, runs=None) -> VerificationReport:
    """Compare ``min_x N_T(x)/T`` per seed against the certified lower bound."""
    base = spec.base
    if not is_communicating(base.mdp):
        raise NotCommunicating("visit-rate bound requires a communicating MDP")
    c = _persistent_floor(base)
    if c <= 0:
        raise NonPersistentPolicy(f"{base.policy!r} has no uniform exploration floor")
    cert = communication_certificate(base.mdp)
    bound = visit_rate_lower_bound(cert, c, base.mdp.n_actions)
    tol = spec.tolerances
    threshold = (1.0 - tol.visit_slack) * bound
    runs = runs if runs is not None else run_seeds(spec)
    rows = []
    for r in runs:
        freq = float(r.visit_freq.min())
        rows.append({
            "check": "visit_bound", "seed": r.seed, "metric": "min_state_freq",
            "value": freq, "threshold": threshold, "passed": freq >= threshold,
            "running_inf_last_half": float(r.running_inf_freq.min()),
        })
    fraction = sum(row["passed"] for row in rows) / len(rows)
    return VerificationReport(
        check="visit_bound",
        passed=fraction >= tol.visit_pass_fraction,
        certified=True,
        summary={
            "n": cert.n, "delta": cert.delta, "c": c, "bound": bound, "threshold": threshold,
            "min_freq_over_seeds": min(row["value"] for row in rows),
            "median_freq_over_seeds": float(np.median([row["value"] for row in rows])),
            "running_inf_last_half_min": min(row["running_inf_last_half"] for row in rows),
            "pass_fraction": fraction, "required_fraction": tol.visit_pass_fraction,
        },
        rows=rows,
    )


def _require_scope(spec: ExperimentSpec, exploratory: bool) -> bool:
    """Whether the configuration is inside the certified scope; raise if not and not exploratory."""
    base = spec.base
    admissible = certified_for_convergence(base.schedule)
    if not admissible and not exploratory:
        raise InadmissibleSchedule(f"{base.schedule!r} fails the Robbins-Monro diagonal conditions")
    communicating = is_communicating(base.mdp)
    if not communicating and not exploratory:
        raise NotCommunicating("certification requires a communicating MDP")
    persistent = _persistent_floor(base) > 0
    if not persistent and not exploratory:
        raise NonPersistentPolicy(f"{base.policy!r} has no uniform exploration floor")
    return admissible and communicating and persistent


def verify_rm_series(spec: ExperimentSpec, runs=None, exploratory=False) -> VerificationReport:
    """Check growth of ``S1 = sum gamma`` and saturation of ``S2 = sum gamma^2`` per pair.

    A seed agrees with the analytic verdict when ``S1(T) >= growth_factor * S1(T/4)``
    for every pair exactly when the diagonal series diverges, and the share of
    ``S2(T)`` accrued over the last half stays below ``saturation`` for every
    pair exactly when the squared series converges. Unvisited pairs are flagged.
    """
    certified = _require_scope(spec, exploratory)
    verdict = diagonal_rm_verdict(spec.base.schedule)
    tol = spec.tolerances
    horizon = spec.horizon
    runs = runs if runs is not None else run_seeds(spec)
    rows = []
    for r in runs:
        s1_end, s1_q = r.at(horizon).rate_sum, r.at(horizon // 4).rate_sum
        s2_end, s2_h = r.at(horizon).rate_sq_sum, r.at(horizon // 2).rate_sq_sum
        unvisited = [tuple(int(i) for i in p) for p in zip(*np.nonzero(s1_end == 0))]
        with np.errstate(divide="ignore", invalid="ignore"):
            growth = np.where(s1_q > 0, s1_end / s1_q, np.where(s1_end > 0, np.inf, 0.0))
            late_share = np.where(s2_end > 0, (s2_end - s2_h) / s2_end, np.inf)
        worst_growth = float(growth.min())
        worst_share = float(late_share.max())
        growth_ok = worst_growth >= tol.growth_factor
        saturated = worst_share <= tol.saturation
        agrees = (not unvisited and growth_ok == verdict.sum_diverges
                  and saturated == verdict.sum_sq_converges)
        gx, ga = np.unravel_index(int(np.argmin(growth)), growth.shape)
        sx, sa = np.unravel_index(int(np.argmax(late_share)), late_share.shape)
        rows.append({
            "check": "rm_series", "seed": r.seed, "metric": "min_pair_s1_growth",
            "value": worst_growth, "threshold": tol.growth_factor, "passed": growth_ok,
            "worst_pair": f"({gx},{ga})",
        })
        rows.append({
            "check": "rm_series", "seed": r.seed, "metric": "max_pair_s2_late_share",
            "value": worst_share, "threshold": tol.saturation, "passed": saturated,
            "worst_pair": f"({sx},{sa})",
        })
        rows.append({
            "check": "rm_series", "seed": r.seed, "metric": "agrees_with_verdict",
            "value": float(agrees), "threshold": 1.0, "passed": agrees,
            "unvisited_pairs": ";".join(f"({x},{a})" for x, a in unvisited),
        })
    agree_rows = [row for row in rows if row["metric"] == "agrees_with_verdict"]
    return VerificationReport(
        check="rm_series",
        passed=all(row["passed"] for row in agree_rows),
        certified=certified,
        summary={
            "expected_sum_diverges": verdict.sum_diverges,
            "expected_sum_sq_converges": verdict.sum_sq_converges,
            "min_s1_growth": min(row["value"] for row in rows if row["metric"] == "min_pair_s1_growth"),
            "max_s2_late_share": max(row["value"] for row in rows if row["metric"] == "max_pair_s2_late_share"),
            "seeds_agreeing": sum(row["passed"] for row in agree_rows),
            "seeds": len(agree_rows),
        },
        rows=rows,
    )


def _non_increasing_tail(result: RunResult, horizon: int) -> bool:
    # Diagnostic only: past T/4 the error is typically at its noise floor.
    errs = [c.sup_error for c in result.checkpoints if c.t >= horizon / 4]
    return all(b <= a for a, b in zip(errs, errs[1:]))


def verify_convergence(spec: ExperimentSpec, runs=None, exploratory=False, q_star=None) -> VerificationReport:
    """Mean final sup-norm error relative to ``||Q*||``.

    The fraction of seeds whose checkpoint errors are non-increasing after T/4
    is reported alongside but does not affect the verdict.
    """
    certified = _require_scope(spec, exploratory)
    base = spec.base
    tol = spec.tolerances
    if q_star is None:
        q_star = solve_q(base.mdp, spec.solve_tol)
    scale = float(np.max(np.abs(q_star)))
    scale = scale if scale > 0 else 1.0
    if runs is None or any(math.isnan(r.final_error) for r in runs):
        runs = run_seeds(spec, q_star)
    rows = []
    for r in runs:
        rel = r.final_error / scale
        rows.append({
            "check": "convergence", "seed": r.seed, "metric": "relative_sup_error",
            "value": rel, "threshold": tol.convergence_rel_error,
            "passed": rel <= tol.convergence_rel_error,
            "trend_non_increasing": _non_increasing_tail(r, spec.horizon),
        })
    mean_rel = float(np.mean([row["value"] for row in rows]))
    trend = sum(row["trend_non_increasing"] for row in rows) / len(rows)
    return VerificationReport(
        check="convergence",
        passed=mean_rel <= tol.convergence_rel_error,
        certified=certified,
        summary={
            "q_star_sup_norm": scale,
            "mean_relative_error": mean_rel,
            "max_relative_error": max(row["value"] for row in rows),
            "tolerance": tol.convergence_rel_error,
            "trend_fraction": trend,
            "trend_reference_fraction": tol.trend_fraction,
        },
        rows=rows,
    )


def verify(spec: ExperimentSpec, exploratory=False, backend=None) -> list[VerificationReport]:
    """Run the requested checks on one shared batch of runs."""
    if "rm_series" in spec.checks or "convergence" in spec.checks:
        _require_scope(spec, exploratory)
    q_star = solve_q(spec.base.mdp, spec.solve_tol) if "convergence" in spec.checks else None
    runs = run_seeds(spec, q_star, backend=backend)
    reports = []
    if "visit_bound" in spec.checks:
        reports.append(verify_visit_bound(spec, runs))
    if "rm_series" in spec.checks:
        reports.append(verify_rm_series(spec, runs, exploratory))
    if "convergence" in spec.checks:
        reports.append(verify_convergence(spec, runs, exploratory, q_star))
    return reports

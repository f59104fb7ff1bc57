"""Command-line entry point.

Exit codes: 0 success (a negative verdict is still a success), 2 input error,
3 runtime error in a component, 4 admissibility gate.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import kernel
from .chains import communication_certificate, is_communicating, visit_rate_lower_bound
from .config import ConfigError, builtin_mdp, load_config, load_mdp
from .errors import AdmissibilityError, ClockworkError, InadmissibleSchedule
from .exploration import DecayingEps
from .harness import run_seeds, verify
from .mdp import solve_q, value_from_q
from .schedules import (
    StateClock,
    decaying_compatibility,
    diagonal_rm_verdict,
    theorem2_admissible,
)

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_GATE = 0, 2, 3, 4


def _num(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _emit(lines, out_dir, filename):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_dir is not None:
        path = Path(out_dir) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _mdp_arg(ref):
    if ref.startswith("builtin:"):
        return builtin_mdp(ref[len("builtin:"):])
    return load_mdp(ref)


def _out_dir(args, file_cfg=None, default=None):
    if args.out is not None:
        return Path(args.out)
    if file_cfg is not None and file_cfg.output_dir is not None:
        return Path(file_cfg.output_dir)
    return default


def cmd_analyze(args) -> int:
    mdp = _mdp_arg(args.mdp)
    if not is_communicating(mdp):
        _emit(["communicating: false"], _out_dir(args), "analysis.txt")
        return EXIT_OK
    cert = communication_certificate(mdp)
    n_a = mdp.n_actions
    lines = [f"communicating: true, n={cert.n}, delta={cert.delta!r}"]
    for label, c in (("1/|A|", 1.0 / n_a), ("0.1/|A|", 0.1 / n_a)):
        bound = visit_rate_lower_bound(cert, c, n_a)
        lines.append(f"visit_rate_bound(c={label}={c!r}): {bound!r}")
    _emit(lines, _out_dir(args), "analysis.txt")
    return EXIT_OK


def cmd_solve(args) -> int:
    mdp = _mdp_arg(args.mdp)
    q = solve_q(mdp, args.tol)
    v = value_from_q(q)
    out = _out_dir(args, default=Path("."))
    _write_csv(out / "qstar.csv", ["state", "action", "q"],
               [[x, a, _num(q[x, a])] for x in range(mdp.n_states) for a in range(mdp.n_actions)])
    _write_csv(out / "vstar.csv", ["state", "v"], [[x, _num(v[x])] for x in range(mdp.n_states)])
    print(f"wrote {out / 'qstar.csv'} and {out / 'vstar.csv'}")
    return EXIT_OK


def cmd_schedule_check(args) -> int:
    file_cfg = load_config(args.config)
    base = file_cfg.spec.base
    sched = base.schedule
    verdict = diagonal_rm_verdict(sched)
    lines = [
        f"schedule: {sched!r}",
        f"sum_diverges: {str(verdict.sum_diverges).lower()}",
        f"sum_sq_converges: {str(verdict.sum_sq_converges).lower()}",
        f"basis: {verdict.basis}",
    ]
    if sched.uses_pair_clock:
        lines.append("theorem2_admissible: not covered (rate depends on the pair clock)")
    else:
        lines.append(f"theorem2_admissible: {str(theorem2_admissible(sched)).lower()}")
    if isinstance(base.policy, DecayingEps) and isinstance(sched, StateClock):
        comp = decaying_compatibility(base.policy, sched)
        lines.append(f"decaying_compatibility: sum_diverges={str(comp.sum_diverges).lower()}, "
                     f"sum_sq_converges={str(comp.sum_sq_converges).lower()}")
    _emit(lines, _out_dir(args, file_cfg), "schedule_check.txt")
    return EXIT_OK


def cmd_simulate(args) -> int:
    file_cfg = load_config(args.config)
    spec = file_cfg.spec
    if args.require_theorem2 and not theorem2_admissible(spec.base.schedule):
        raise InadmissibleSchedule(f"{spec.base.schedule!r} fails the diagonal Robbins-Monro conditions")
    q_star = solve_q(spec.base.mdp, spec.solve_tol)
    out = _out_dir(args, file_cfg, Path("."))
    summary = []
    for seed, result in zip(spec.seeds, run_seeds(spec, q_star)):
        rows = [[c.t, _num(c.sup_error), _num(c.min_state_freq), _num(c.min_pair_s1), _num(c.max_pair_s2)]
                for c in result.checkpoints]
        _write_csv(out / f"run_seed{seed}.csv",
                   ["checkpoint_t", "sup_error", "min_state_freq", "min_pair_S1", "max_pair_S2"], rows)
        last = result.checkpoints[-1]
        summary.append([seed, result.horizon, _num(result.checkpoints[0].sup_error), _num(last.sup_error),
                        _num(last.min_state_freq), _num(last.min_pair_s1), _num(last.max_pair_s2)])
    _write_csv(out / "summary.csv",
               ["seed", "horizon", "initial_sup_error", "final_sup_error", "min_state_freq",
                "min_pair_S1", "max_pair_S2"], summary)
    finals = [float(row[3]) for row in summary]
    print(f"{len(summary)} run(s), horizon {spec.horizon}, backend {kernel.BACKEND}; "
          f"mean final sup error {np.mean(finals):.6g}; wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    file_cfg = load_config(args.config)
    spec = file_cfg.spec
    reports = verify(spec, exploratory=args.exploratory)
    out = _out_dir(args, file_cfg, Path("."))
    lines = [f"horizon: {spec.horizon}, seeds: {spec.seeds[0]}..{spec.seeds[-1]}"]
    certified = all(r.certified for r in reports)
    if not certified:
        lines.append("exploratory: not certified")
    for r in reports:
        lines += r.lines()
    rows = []
    for r in reports:
        for row in r.rows:
            rows.append([row["check"], row["seed"], row["metric"], _num(row["value"]),
                         _num(row["threshold"]), str(bool(row["passed"])).lower()])
    _write_csv(out / "report.csv", ["check", "seed", "metric", "value", "threshold", "passed"], rows)
    _emit(lines, out, "report.txt")
    if not certified:
        return EXIT_OK
    return EXIT_OK if all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clockwork", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(func=func)
        return p

    p = add("analyze", cmd_analyze, "communicating verdict, certificate and visit-rate bounds")
    p.add_argument("mdp", help="MDP JSON file or builtin:<name>")
    p = add("solve", cmd_solve, "solve for Q* and V*")
    p.add_argument("mdp", help="MDP JSON file or builtin:<name>")
    p.add_argument("--tol", type=float, default=1e-8)
    p = add("schedule-check", cmd_schedule_check, "Robbins-Monro verdict of the configured schedule")
    p.add_argument("config")
    p = add("simulate", cmd_simulate, "run Q-learning for every seed and write CSVs")
    p.add_argument("config")
    p.add_argument("--require-theorem2", action="store_true",
                   help="refuse schedules outside the (t, N) admissible set")
    p = add("verify", cmd_verify, "run the configured verification checks")
    p.add_argument("config")
    p.add_argument("--exploratory", action="store_true",
                   help="run inadmissible configurations without certifying them")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AdmissibilityError as exc:
        print(f"admissibility gate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (ClockworkError, ValueError, RuntimeError) as exc:
        origin = getattr(exc, "__module__", "clockwork")
        tb = exc.__traceback__
        while tb is not None and tb.tb_next is not None:
            tb = tb.tb_next
        if tb is not None:
            origin = tb.tb_frame.f_globals.get("__name__", origin)
        print(f"error in {origin}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

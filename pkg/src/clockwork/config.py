"""JSON file formats: MDP definitions and experiment configs.

MDP file::

    {"states": 2, "actions": 1, "discount": 0.9,
     "kernel": [[[0.0, 1.0]], [[1.0, 0.0]]],
     "reward": [[[1.0, 1.0]], [[1.0, 1.0]]]}

Tensors are indexed ``[x][a][y]``. An experiment config names the MDP either
by path (relative to the config file), inline, or as ``"builtin:<name>"``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import exploration, schedules
from .errors import ClockworkError
from .mdp import Mdp, validate_mdp
from .harness import CHECKS, ExperimentSpec, Tolerances
from .qlearn import QLearnConfig

SEED_OVERRIDE_ENV = "CLOCKWORK_SEED_OVERRIDE"


class ConfigError(ClockworkError, ValueError):
    """Malformed input file; the message names the offending field or line."""


def _parse_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _tensor(value, shape, name, source):
    n_x, n_a, n_y = shape
    if not isinstance(value, list) or len(value) != n_x:
        raise ConfigError(f"{source}: field '{name}' must be a list of {n_x} states")
    for x, per_state in enumerate(value):
        if not isinstance(per_state, list) or len(per_state) != n_a:
            raise ConfigError(f"{source}: field '{name}[{x}]' must list {n_a} actions (same action set at every state)")
        for a, row in enumerate(per_state):
            if not isinstance(row, list) or len(row) != n_y:
                raise ConfigError(f"{source}: field '{name}[{x}][{a}]' must have {n_y} entries")
            for y, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"{source}: field '{name}[{x}][{a}][{y}]' is not a number")
    return np.array(value, dtype=float)


def mdp_from_dict(data, source="<mdp>") -> Mdp:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: MDP must be a JSON object")
    expected = {"states", "actions", "discount", "kernel", "reward"}
    unknown = set(data) - expected
    if unknown:
        raise ConfigError(f"{source}: unknown field(s) {sorted(unknown)}")
    missing = expected - set(data)
    if missing:
        raise ConfigError(f"{source}: missing field(s) {sorted(missing)}")
    n_x, n_a = data["states"], data["actions"]
    for name, v in (("states", n_x), ("actions", n_a)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"{source}: field '{name}' must be a positive integer")
    beta = data["discount"]
    if isinstance(beta, bool) or not isinstance(beta, (int, float)):
        raise ConfigError(f"{source}: field 'discount' must be a number")
    kernel = _tensor(data["kernel"], (n_x, n_a, n_x), "kernel", source)
    reward = _tensor(data["reward"], (n_x, n_a, n_x), "reward", source)
    mdp = Mdp(kernel, reward, float(beta))
    report = validate_mdp(mdp)
    if not report.ok:
        raise ConfigError(f"{source}: " + "; ".join(report.violations))
    return mdp


def mdp_to_dict(mdp: Mdp) -> dict:
    return {
        "states": mdp.n_states,
        "actions": mdp.n_actions,
        "discount": mdp.discount,
        "kernel": mdp.kernel.tolist(),
        "reward": mdp.reward.tolist(),
    }


def dumps_mdp(mdp: Mdp) -> str:
    """Canonical serialization: one ``[x][a]`` row per line."""
    def tensor(t):
        states = []
        for per_state in t.tolist():
            rows = ",\n   ".join(json.dumps(row) for row in per_state)
            states.append(f"  [{rows}]")
        return "[\n" + ",\n".join(states) + "\n ]"

    return (
        "{\n"
        f' "states": {mdp.n_states},\n'
        f' "actions": {mdp.n_actions},\n'
        f' "discount": {json.dumps(mdp.discount)},\n'
        f' "kernel": {tensor(mdp.kernel)},\n'
        f' "reward": {tensor(mdp.reward)}\n'
        "}\n"
    )


def loads_mdp(text: str, source="<mdp>") -> Mdp:
    return mdp_from_dict(_parse_json(text, source), source)


def load_mdp(path) -> Mdp:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads_mdp(text, str(path))


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("clockwork.data").iterdir() if p.name.endswith(".json"))


def builtin_mdp(name: str) -> Mdp:
    res = resources.files("clockwork.data").joinpath(f"{name}.json")
    if not res.is_file():
        raise ConfigError(f"unknown builtin MDP {name!r}; choose from {builtin_names()}")
    return loads_mdp(res.read_text(), f"builtin:{name}")


def resolve_mdp(ref, base_dir=".") -> Mdp:
    if isinstance(ref, dict):
        return mdp_from_dict(ref, "config field 'mdp'")
    if isinstance(ref, str):
        if ref.startswith("builtin:"):
            return builtin_mdp(ref[len("builtin:"):])
        return load_mdp(Path(base_dir) / ref)
    raise ConfigError("config field 'mdp' must be a path, 'builtin:<name>' or an inline object")


_POLICIES = {
    "uniform": (exploration.Uniform, ()),
    "eps_greedy": (exploration.EpsGreedy, ("epsilon",)),
    "boltzmann": (exploration.Boltzmann, ("tau",)),
    "decaying_eps": (exploration.DecayingEps, ("c0", "gamma")),
}

_SCHEDULES = {
    "pair_clock": (schedules.LocalPairClock, ("a", "b", "p")),
    "state_clock": (schedules.StateClock, ("a", "b", "p")),
    "global_clock": (schedules.GlobalClock, ("a", "b", "p")),
    "power_product": (schedules.PowerProduct, ("a1", "b1", "alpha", "a2", "b2", "beta")),
    "log_power_product": (schedules.LogPowerProduct, ("a1", "b1", "alpha", "a2", "b2", "beta")),
}


def _build(table, data, field_name):
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError(f"config field '{field_name}' must be an object with a 'type'")
    kind = data["type"]
    if kind not in table:
        raise ConfigError(f"config field '{field_name}.type': unknown {kind!r}; choose from {sorted(table)}")
    cls, allowed = table[kind]
    params = {k: v for k, v in data.items() if k != "type"}
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"config field '{field_name}': unknown key(s) {sorted(unknown)} for type {kind!r}")
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"config field '{field_name}.{k}' must be a number")
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config field '{field_name}': {exc}") from None


def policy_from_dict(data):
    return _build(_POLICIES, data, "policy")


def schedule_from_dict(data):
    return _build(_SCHEDULES, data, "schedule")


def policy_to_dict(spec) -> dict:
    for kind, (cls, names) in _POLICIES.items():
        if type(spec) is cls:
            return {"type": kind, **{n: getattr(spec, n) for n in names}}
    raise TypeError(spec)


def schedule_to_dict(spec) -> dict:
    for kind, (cls, names) in _SCHEDULES.items():
        if type(spec) is cls:
            return {"type": kind, **{n: getattr(spec, n) for n in names}}
    raise TypeError(spec)


@dataclass(frozen=True, eq=False)
class ExperimentFile:
    """A parsed experiment config: the experiment plus where to write artifacts."""

    spec: ExperimentSpec
    output_dir: str | None = None


_CONFIG_KEYS = {"mdp", "policy", "schedule", "horizon", "initial_state", "q0", "seeds",
                "checks", "output_dir", "tolerances", "solve_tol"}


def _int_field(data, key, default, minimum):
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"config field '{key}' must be an integer >= {minimum}")
    return v


def config_from_dict(data, base_dir=".", source="<config>") -> ExperimentFile:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown config key(s) {sorted(unknown)}")
    for key in ("mdp", "policy", "schedule", "horizon"):
        if key not in data:
            raise ConfigError(f"{source}: missing config field '{key}'")
    mdp = resolve_mdp(data["mdp"], base_dir)
    policy = policy_from_dict(data["policy"])
    schedule = schedule_from_dict(data["schedule"])
    horizon = _int_field(data, "horizon", None, 0)
    initial_state = _int_field(data, "initial_state", 0, 0)
    if initial_state >= mdp.n_states:
        raise ConfigError(f"{source}: config field 'initial_state' out of range")

    seeds = data.get("seeds", {})
    if not isinstance(seeds, dict) or set(seeds) - {"count", "base"}:
        raise ConfigError(f"{source}: config field 'seeds' must be an object with 'count' and 'base'")
    count = _int_field(seeds, "count", 1, 1)
    base = _int_field(seeds, "base", 0, 0)
    override = os.environ.get(SEED_OVERRIDE_ENV, "").strip()
    if override:
        try:
            base = int(override)
        except ValueError:
            raise ConfigError(f"{SEED_OVERRIDE_ENV}={override!r} is not an integer") from None

    checks = data.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError(f"{source}: config field 'checks' must be a list drawn from {list(CHECKS)}")

    tol_data = data.get("tolerances", {})
    if not isinstance(tol_data, dict):
        raise ConfigError(f"{source}: config field 'tolerances' must be an object")
    allowed = set(Tolerances.__dataclass_fields__)
    if set(tol_data) - allowed:
        raise ConfigError(f"{source}: unknown tolerance key(s) {sorted(set(tol_data) - allowed)}")
    for k, v in tol_data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"{source}: config field 'tolerances.{k}' must be a nonnegative number")
    tolerances = Tolerances(**{k: float(v) for k, v in tol_data.items()})

    q0 = data.get("q0")
    if q0 is not None:
        try:
            np.broadcast_to(np.asarray(q0, dtype=float), (mdp.n_states, mdp.n_actions))
        except (ValueError, TypeError):
            raise ConfigError(f"{source}: config field 'q0' must be a number or a |X| x |A| table") from None

    solve_tol = data.get("solve_tol", 1e-8)
    if isinstance(solve_tol, bool) or not isinstance(solve_tol, (int, float)) or solve_tol <= 0:
        raise ConfigError(f"{source}: config field 'solve_tol' must be positive")
    out = data.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"{source}: config field 'output_dir' must be a string")
    if out is not None:
        out = str(Path(base_dir) / out)  # relative to the config file, like the MDP path
    base_config = QLearnConfig(
        mdp=mdp, policy=policy, schedule=schedule, initial_state=initial_state,
        q0=None if q0 is None else np.asarray(q0, dtype=float), horizon=horizon, seed=base,
    )
    try:
        base_config.validate()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    spec = ExperimentSpec(base=base_config, seed_count=count, checks=tuple(checks),
                          tolerances=tolerances, solve_tol=float(solve_tol))
    return ExperimentFile(spec=spec, output_dir=out)


def load_config(path) -> ExperimentFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(_parse_json(text, str(path)), path.parent, str(path))

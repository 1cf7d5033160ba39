"""Experiment configuration files (YAML) and their mapping onto a Scenario.

Recognised keys::

    miners: 9                       # a count, or a list of {id, strength, role, online}
    strengths: [1.0, 1.0, 0.1]      # per-miner strengths when miners is a count
    seeds: {landscape: 7}           # optional per-component seed overrides
    episodes: 2000
    epochs: 30
    blocks: 1
    latency_ticks: 1
    departures: [{tick: 1000, miner: "@leader"}]
    joins: [{tick: 1500, id: m9, strength: 1.0}]
    lut_max: 100000
    throughput_min: 10
    noise: 0.04
    optimum_count: 4
    fee_rate: 0.02
    monitor_threshold: 0.05
    monitor_warmup: 500
    policy: collaborative           # or naive
    subspaces: partition            # or fixture, full
    learning_rate: 0.1
    claim_inflation: 0.0
    tasks: [{id: t1, difficulty: 2.0, reward: 1.0}]
    space: fixture                  # or a mapping name -> list of values

The run seed is deliberately not a config key: it is passed on the command
line so that every artifact set names the seed that produced it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from .chain import Task
from .controller import SearchBudget
from .hw import HardwareConstraints
from .pool import MinerProfile, Role
from .sim import Scenario
from .space import FULL_SPACE, SearchSpace, SpaceError

KNOWN_KEYS = {
    "miners", "strengths", "seeds", "episodes", "epochs", "blocks", "latency_ticks",
    "departures", "joins", "lut_max", "throughput_min", "noise", "optimum_count", "fee_rate",
    "monitor_threshold", "monitor_warmup", "policy", "subspaces", "learning_rate",
    "claim_inflation", "tasks", "space",
}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    return data


def parse_space(raw: Any) -> SearchSpace:
    if raw is None or raw == "fixture":
        return FULL_SPACE
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("space must be 'fixture' or a non-empty mapping of name -> values")
    try:
        return SearchSpace.from_ranges({str(k): [int(v) for v in vals] for k, vals in raw.items()})
    except (SpaceError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad space: {exc}") from exc


def _profile(entry: Any, default_id: str) -> MinerProfile:
    if not isinstance(entry, dict):
        raise ConfigError(f"miner entry must be a mapping, got {entry!r}")
    try:
        return MinerProfile(
            id=str(entry.get("id", default_id)),
            strength=float(entry.get("strength", 1.0)),
            role=Role(entry.get("role", Role.EXPLORER.value)),
            online=bool(entry.get("online", True)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad miner {entry!r}: {exc}") from exc


def parse_miners(cfg: dict) -> list[MinerProfile]:
    raw = cfg.get("miners", 1)
    strengths = cfg.get("strengths")
    if isinstance(raw, int) and not isinstance(raw, bool):
        if raw < 1:
            raise ConfigError("miners must be >= 1")
        strengths = strengths if strengths is not None else [1.0] * raw
        if len(strengths) != raw:
            raise ConfigError(f"{raw} miners but {len(strengths)} strengths")
        return [_profile({"id": f"m{i}", "strength": s}, f"m{i}") for i, s in enumerate(strengths)]
    if isinstance(raw, list) and raw:
        if strengths is not None:
            raise ConfigError("strengths only applies when miners is a count")
        return [_profile(e, f"m{i}") for i, e in enumerate(raw)]
    raise ConfigError("miners must be a positive count or a non-empty list")


def _int(cfg: dict, key: str, default: int) -> int:
    v = cfg.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return v


def _float(cfg: dict, key: str, default: float) -> float:
    v = cfg.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def scenario_from_config(cfg: dict, seed: int) -> Scenario:
    """Build a Scenario; every malformed value raises ConfigError."""
    space = parse_space(cfg.get("space"))
    try:
        hc = HardwareConstraints(_int(cfg, "lut_max", 100_000), _float(cfg, "throughput_min", 10.0))
        budget = SearchBudget(_int(cfg, "episodes", 2000), _int(cfg, "epochs", 30))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    tasks = None
    if cfg.get("tasks") is not None:
        try:
            tasks = [Task(str(t["id"]), float(t["difficulty"]), float(t["reward"]), space, hc)
                     for t in cfg["tasks"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad task list: {exc}") from exc
        if not tasks:
            raise ConfigError("tasks must not be empty")

    seeds = cfg.get("seeds") or {}
    if not isinstance(seeds, dict) or not all(isinstance(v, int) for v in seeds.values()):
        raise ConfigError("seeds must map component names to integers")

    try:
        departures = [(int(d["tick"]), str(d["miner"])) for d in cfg.get("departures") or []]
        joins = [(int(j["tick"]), _profile(j, str(j["id"]))) for j in cfg.get("joins") or []]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad departures/joins entry: {exc}") from exc

    return Scenario(
        miners=parse_miners(cfg),
        seed=seed,
        budget=budget,
        blocks=_int(cfg, "blocks", 1),
        latency=_int(cfg, "latency_ticks", 1),
        departures=departures,
        joins=joins,
        constraints=hc,
        noise=_float(cfg, "noise", 0.04),
        optimum_count=_int(cfg, "optimum_count", 4),
        fee_rate=_float(cfg, "fee_rate", 0.02),
        monitor_threshold=_float(cfg, "monitor_threshold", 0.05),
        monitor_warmup=_int(cfg, "monitor_warmup", 500),
        policy=str(cfg.get("policy", "collaborative")),
        subspaces=str(cfg.get("subspaces", "partition")),
        learning_rate=_float(cfg, "learning_rate", 0.1),
        claim_inflation=_float(cfg, "claim_inflation", 0.0),
        tasks=tasks,
        space=space,
        seeds={str(k): int(v) for k, v in seeds.items()},
    )

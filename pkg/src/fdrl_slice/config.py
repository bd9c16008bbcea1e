"""Run configuration: YAML loading, validation, serialization, digest."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .ddpg import AgentConfig
from .env import EnvConfig, MvnoScenario
from .errors import ConfigError
from .harness import DESK_PROFILE, PAPER_PROFILE, FdrlParams
from .scenarios import ScenarioSpec, get_scenario

# Desk runs see far fewer episodes, so user layouts are redrawn every episode
# and rewards are rescaled and the actor slowed for the smaller networks.
PROFILES = {
    "paper": {"federation": PAPER_PROFILE, "env": {}, "ddpg": {"hidden": (400, 300)}},
    "desk": {"federation": DESK_PROFILE, "env": {"position_reset_episodes": 1},
             "ddpg": {"hidden": (64, 48), "reward_scale": 1e-3, "actor_lr": 1e-5}},
}
TOP_KEYS = ("profile", "scenario", "seeds", "output_dir", "env", "ddpg", "federation")


@dataclass(frozen=True)
class RunConfig:
    profile: str = "paper"
    scenario: str | ScenarioSpec = "noniid-equal"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "runs/default"
    env: EnvConfig = field(default_factory=EnvConfig)
    ddpg: AgentConfig = field(default_factory=AgentConfig)
    federation: FdrlParams = PAPER_PROFILE

    def scenario_spec(self) -> ScenarioSpec:
        if isinstance(self.scenario, ScenarioSpec):
            spec = self.scenario
        else:
            spec = get_scenario(self.scenario, self.env.total_bandwidth)
        spec.check(self.env.total_bandwidth, self.env.c_max)
        return spec


def _coerce(value, hint, key):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, getattr(__import__("types"), "UnionType", None)):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {type(value).__name__}")
        elem = args[0]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, elem, f"{key}[{i}]") for i, v in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{key}: expected {len(args)} items, got {len(value)}")
        return tuple(_coerce(v, a, f"{key}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported field type {hint}")


def _build(cls, section: dict, prefix: str, base=None):
    if not isinstance(section, dict):
        raise ConfigError(f"{prefix}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{prefix}]: {', '.join(unknown)}")
    values = {k: _coerce(v, hints[k], f"{prefix}.{k}") for k, v in section.items()}
    try:
        return dataclasses.replace(base, **values) if base is not None else cls(**values)
    except ConfigError as exc:
        raise ConfigError(f"[{prefix}] {exc}") from exc


def _inline_scenario(raw: dict) -> ScenarioSpec:
    if set(raw) - {"name", "mvnos"}:
        raise ConfigError(f"unknown key(s) in [scenario]: {', '.join(sorted(set(raw) - {'name', 'mvnos'}))}")
    if not isinstance(raw.get("mvnos"), list) or not raw["mvnos"]:
        raise ConfigError("scenario.mvnos must be a non-empty list")
    mvnos = tuple(_build(MvnoScenario, m, f"scenario.mvnos[{i}]") for i, m in enumerate(raw["mvnos"]))
    return ScenarioSpec(str(raw.get("name", "inline")), mvnos)


def config_from_dict(raw: dict) -> RunConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = sorted(set(raw) - set(TOP_KEYS))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    profile = raw.get("profile", "paper")
    if profile not in PROFILES:
        raise ConfigError(f"profile: expected one of {sorted(PROFILES)}, got {profile!r}")
    defaults = PROFILES[profile]
    env = _build(EnvConfig, raw.get("env", {}), "env", EnvConfig(**defaults["env"]))
    ddpg_base = AgentConfig(f_max=env.f_max, **defaults["ddpg"])
    ddpg = _build(AgentConfig, raw.get("ddpg", {}), "ddpg", ddpg_base)
    if ddpg.f_max != env.f_max:
        raise ConfigError("ddpg.f_max must equal env.f_max")
    federation = _build(FdrlParams, raw.get("federation", {}), "federation", defaults["federation"])
    scenario = raw.get("scenario", "noniid-equal")
    if isinstance(scenario, dict):
        scenario = _inline_scenario(scenario)
    elif not isinstance(scenario, str):
        raise ConfigError("scenario must be a name or a mapping")
    seeds = _coerce(raw.get("seeds", [0, 1, 2, 3, 4]), tuple[int, ...], "seeds")
    if not seeds:
        raise ConfigError("seeds must be non-empty")
    output_dir = _coerce(raw.get("output_dir", "runs/default"), str, "output_dir")
    cfg = RunConfig(profile, scenario, seeds, output_dir, env, ddpg, federation)
    cfg.scenario_spec()  # validates names and bandwidth budget
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(raw)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def config_to_dict(cfg: RunConfig) -> dict:
    out = _plain(cfg)
    return {k: out[k] for k in TOP_KEYS}


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def config_digest(cfg: RunConfig) -> str:
    """SHA-256 over every semantic field (the output directory is excluded)."""
    d = config_to_dict(cfg)
    d.pop("output_dir")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()

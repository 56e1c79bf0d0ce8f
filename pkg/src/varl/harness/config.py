"""Experiment configuration: a strict key-value tree loaded from JSON.

Unknown keys are rejected, CLI flags override file values, and the fully
resolved tree is archived next to the run outputs so every artifact is
reproducible from its own directory.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..envs import ENV_REGISTRY, make_env
from ..shaping import ShapingConfig

ALGORITHMS = ("varl", "sac", "sac_expert_prefill")
ADVISOR_MODES = ("scripted", "remote")

ENDPOINT_ENV_VAR = "VARL_ADVISOR_ENDPOINT"
API_KEY_ENV_VAR = "VARL_ADVISOR_API_KEY"


class ConfigError(ValueError):
    pass


def _take(section: dict, key: str, default, kinds, where: str):
    value = section.pop(key, default)
    if value is None:
        return None
    if kinds is bool and not isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected bool, got {value!r}")
    if kinds is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{where}.{key}: expected int, got {value!r}")
    if kinds is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key}: expected number, got {value!r}")
        return float(value)
    if kinds is str and not isinstance(value, str):
        raise ConfigError(f"{where}.{key}: expected string, got {value!r}")
    if kinds is list and not isinstance(value, list):
        raise ConfigError(f"{where}.{key}: expected list, got {value!r}")
    if kinds is dict and not isinstance(value, dict):
        raise ConfigError(f"{where}.{key}: expected mapping, got {value!r}")
    return value


def _reject_unknown(section: dict, where: str) -> None:
    if section:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(section))}")


@dataclass
class AgentSection:
    hidden_sizes: list[int] = field(default_factory=lambda: [64, 64])
    activation: str = "tanh"
    lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2
    auto_alpha: bool = False
    batch_size: int = 128
    log_std_bounds: list[float] = field(default_factory=lambda: [-5.0, 2.0])

    @classmethod
    def from_dict(cls, d: dict) -> "AgentSection":
        d = dict(d)
        out = cls(
            hidden_sizes=_take(d, "hidden_sizes", [64, 64], list, "agent"),
            activation=_take(d, "activation", "tanh", str, "agent"),
            lr=_take(d, "lr", 3e-4, float, "agent"),
            gamma=_take(d, "gamma", 0.99, float, "agent"),
            tau=_take(d, "tau", 0.005, float, "agent"),
            alpha=_take(d, "alpha", 0.2, float, "agent"),
            auto_alpha=_take(d, "auto_alpha", False, bool, "agent"),
            batch_size=_take(d, "batch_size", 128, int, "agent"),
            log_std_bounds=_take(d, "log_std_bounds", [-5.0, 2.0], list, "agent"),
        )
        _reject_unknown(d, "agent")
        if out.activation not in ("tanh", "relu"):
            raise ConfigError(f"agent.activation must be tanh or relu, got {out.activation!r}")
        if not 0.0 < out.gamma < 1.0:
            raise ConfigError("agent.gamma must be in (0, 1)")
        if out.batch_size < 1:
            raise ConfigError("agent.batch_size must be >= 1")
        return out


@dataclass
class ShapingSection:
    guidance_weight: float = 10.0
    cutoff_step: int = 6000
    acceptance_radius: float = 1.0
    guidance_batch: int = 64

    @classmethod
    def from_dict(cls, d: dict) -> "ShapingSection":
        d = dict(d)
        out = cls(
            guidance_weight=_take(d, "guidance_weight", 10.0, float, "shaping"),
            cutoff_step=_take(d, "cutoff_step", 6000, int, "shaping"),
            acceptance_radius=_take(d, "acceptance_radius", 1.0, float, "shaping"),
            guidance_batch=_take(d, "guidance_batch", 64, int, "shaping"),
        )
        _reject_unknown(d, "shaping")
        out.to_shaping_config()  # validates ranges
        return out

    def to_shaping_config(self) -> ShapingConfig:
        try:
            return ShapingConfig(
                guidance_weight=self.guidance_weight,
                cutoff_step=self.cutoff_step,
                acceptance_radius=self.acceptance_radius,
                guidance_batch=self.guidance_batch,
            )
        except ValueError as exc:
            raise ConfigError(f"shaping: {exc}") from exc


@dataclass
class TriggerSection:
    steps: list[int] | None = None
    fractions: list[float] = field(default_factory=lambda: [0.05, 0.25, 0.5])
    recent_k: int = 500

    @classmethod
    def from_dict(cls, d: dict) -> "TriggerSection":
        d = dict(d)
        out = cls(
            steps=_take(d, "steps", None, list, "trigger"),
            fractions=_take(d, "fractions", [0.05, 0.25, 0.5], list, "trigger"),
            recent_k=_take(d, "recent_k", 500, int, "trigger"),
        )
        _reject_unknown(d, "trigger")
        if out.recent_k < 1:
            raise ConfigError("trigger.recent_k must be >= 1")
        return out


@dataclass
class AdvisorSection:
    mode: str = "scripted"
    accuracy: float = 1.0
    bias: list[float] | None = None
    noise: float = 0.0
    endpoint: str | None = None
    timeout: float = 5.0
    retries: int = 2
    parallelism: int = 4
    api_key_header: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "AdvisorSection":
        d = dict(d)
        out = cls(
            mode=_take(d, "mode", "scripted", str, "advisor"),
            accuracy=_take(d, "accuracy", 1.0, float, "advisor"),
            bias=_take(d, "bias", None, list, "advisor"),
            noise=_take(d, "noise", 0.0, float, "advisor"),
            endpoint=_take(d, "endpoint", None, str, "advisor"),
            timeout=_take(d, "timeout", 5.0, float, "advisor"),
            retries=_take(d, "retries", 2, int, "advisor"),
            parallelism=_take(d, "parallelism", 4, int, "advisor"),
            api_key_header=_take(d, "api_key_header", None, str, "advisor"),
        )
        _reject_unknown(d, "advisor")
        if out.mode not in ADVISOR_MODES:
            raise ConfigError(f"advisor.mode must be one of {ADVISOR_MODES}, got {out.mode!r}")
        if not 0.0 <= out.accuracy <= 1.0:
            raise ConfigError("advisor.accuracy must be in [0, 1]")
        return out

    def resolved_endpoint(self) -> str | None:
        return self.endpoint or os.environ.get(ENDPOINT_ENV_VAR)


@dataclass
class ExperimentConfig:
    env: str
    algo: str = "sac"
    seeds: list[int] = field(default_factory=lambda: [0])
    max_steps: int = 60000
    eval_every: int = 500
    eval_episodes: int = 10
    warmup_steps: int = 1000
    replay_capacity: int = 200000
    expert_episodes: int = 10
    out_dir: str = "runs/experiment"
    env_kwargs: dict = field(default_factory=dict)
    agent: AgentSection = field(default_factory=AgentSection)
    shaping: ShapingSection = field(default_factory=ShapingSection)
    trigger: TriggerSection = field(default_factory=TriggerSection)
    advisor: AdvisorSection = field(default_factory=AdvisorSection)
    sweep: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = copy.deepcopy(d)
        env = _take(d, "env", None, str, "config")
        if not env:
            raise ConfigError("config.env is required")
        if env not in ENV_REGISTRY:
            raise ConfigError(f"unknown env {env!r}; known: {', '.join(sorted(ENV_REGISTRY))}")
        out = cls(
            env=env,
            algo=_take(d, "algo", "sac", str, "config"),
            seeds=_take(d, "seeds", [0], list, "config"),
            max_steps=_take(d, "max_steps", 60000, int, "config"),
            eval_every=_take(d, "eval_every", 500, int, "config"),
            eval_episodes=_take(d, "eval_episodes", 10, int, "config"),
            warmup_steps=_take(d, "warmup_steps", 1000, int, "config"),
            replay_capacity=_take(d, "replay_capacity", 200000, int, "config"),
            expert_episodes=_take(d, "expert_episodes", 10, int, "config"),
            out_dir=_take(d, "out_dir", "runs/experiment", str, "config"),
            env_kwargs=_take(d, "env_kwargs", {}, dict, "config") or {},
            agent=AgentSection.from_dict(_take(d, "agent", {}, dict, "config") or {}),
            shaping=ShapingSection.from_dict(_take(d, "shaping", {}, dict, "config") or {}),
            trigger=TriggerSection.from_dict(_take(d, "trigger", {}, dict, "config") or {}),
            advisor=AdvisorSection.from_dict(_take(d, "advisor", {}, dict, "config") or {}),
            sweep=_take(d, "sweep", {}, dict, "config") or {},
        )
        _reject_unknown(d, "config")
        try:
            make_env(out.env, **out.env_kwargs)
        except TypeError as exc:
            raise ConfigError(f"env_kwargs not accepted by {out.env}: {exc}") from exc
        if out.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}, got {out.algo!r}")
        if not out.seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in out.seeds):
            raise ConfigError("seeds must be a nonempty list of integers")
        if len(set(out.seeds)) != len(out.seeds):
            raise ConfigError("seeds must be distinct")
        for key in ("max_steps", "eval_every", "eval_episodes"):
            if getattr(out, key) < 1:
                raise ConfigError(f"{key} must be >= 1")
        if out.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")
        if out.expert_episodes < 0:
            raise ConfigError("expert_episodes must be >= 0")
        if out.algo == "varl" and out.advisor.mode == "remote" and not out.advisor.resolved_endpoint():
            raise ConfigError(
                f"advisor.mode=remote needs advisor.endpoint or ${ENDPOINT_ENV_VAR}"
            )
        return out

    def to_dict(self) -> dict:
        return {
            "env": self.env,
            "env_kwargs": copy.deepcopy(self.env_kwargs),
            "algo": self.algo,
            "seeds": list(self.seeds),
            "max_steps": self.max_steps,
            "eval_every": self.eval_every,
            "eval_episodes": self.eval_episodes,
            "warmup_steps": self.warmup_steps,
            "replay_capacity": self.replay_capacity,
            "expert_episodes": self.expert_episodes,
            "out_dir": self.out_dir,
            "agent": vars(self.agent).copy(),
            "shaping": vars(self.shaping).copy(),
            "trigger": vars(self.trigger).copy(),
            "advisor": vars(self.advisor).copy(),
            "sweep": copy.deepcopy(self.sweep),
        }


def load_config_dict(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return d


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    d = load_config_dict(path)
    if overrides:
        d = merge_overrides(d, overrides)
    return ExperimentConfig.from_dict(d)


def merge_overrides(base: dict, overrides: dict) -> dict:
    """Overrides use dotted paths ("shaping.guidance_weight") or plain top
    level keys; None values are ignored."""
    out = copy.deepcopy(base)
    for path, value in overrides.items():
        if value is None:
            continue
        node = out
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {path!r} conflicts with a scalar value")
        node[parts[-1]] = value
    return out


def expand_sweep(cfg: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """Expand the config's sweep map (dotted parameter path -> list of
    values) into the cross product of concrete configs."""
    if not cfg.sweep:
        return [("", cfg)]
    import itertools

    paths = sorted(cfg.sweep)
    for p in paths:
        if not isinstance(cfg.sweep[p], list) or not cfg.sweep[p]:
            raise ConfigError(f"sweep.{p} must be a nonempty list of values")
    base = cfg.to_dict()
    base.pop("sweep")
    out = []
    for combo in itertools.product(*(cfg.sweep[p] for p in paths)):
        label = "_".join(f"{p.split('.')[-1]}={v}" for p, v in zip(paths, combo))
        d = merge_overrides(base, dict(zip(paths, combo)))
        d["out_dir"] = str(Path(cfg.out_dir) / label)
        out.append((label, ExperimentConfig.from_dict(d)))
    return out

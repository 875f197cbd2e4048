"""Experiment configuration: dataclass, validation and TOML loading.

A config file looks like::

    seed = 42
    horizon = 100000
    realizations = 20
    trajectories = 5
    agents = ["hucrl", "joint", "flat_ucrl", "oracle_known_state"]
    out = "results"

    [setup]
    preset = "1a"

    [confidence]
    alpha = 3.1

    [perturbation]
    epsilon = 0.5
    alpha_eps = 1.5
    gamma = 1.0

``[setup]`` takes exactly one of ``preset = NAME``, ``random = {...}`` with
keys ``num_states, num_arms, dim, thetas_per_set, grid_low, grid_high`` or
``spec_file = PATH`` pointing to a JSON environment spec (relative paths are
resolved against the config file).
"""
from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..env import EnvironmentSpec
from ..exceptions import ConfigurationError
from ..geometry import PerturbationSchedule
from ..validation import check_alpha
from .presets import SetupRecipe, load_preset, random_recipe
from .seeds import AGENT_CODES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

AGENTS = tuple(AGENT_CODES)

PROFILES = {
    "desk": dict(horizon=100_000, realizations=20, trajectories=5),
    "full": dict(horizon=1_000_000, realizations=100, trajectories=20),
}

_TOP_KEYS = {"seed", "horizon", "realizations", "trajectories", "agents", "out", "jobs",
             "setup", "confidence", "perturbation"}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a Monte Carlo batch.

    ``setup`` is a :class:`SetupRecipe` (θ drawn per realization) or a fixed
    :class:`EnvironmentSpec`; ``setup_info`` is the plain description echoed
    into the metadata file.
    """

    setup: object
    horizon: int = PROFILES["desk"]["horizon"]
    realizations: int = PROFILES["desk"]["realizations"]
    trajectories: int = PROFILES["desk"]["trajectories"]
    agents: tuple = AGENTS
    seed: int = 0
    alpha: float = 3.1
    epsilon: float = 0.5
    alpha_eps: float = 1.5
    gamma: float = 1.0
    out: str = "results"
    jobs: int = 1
    setup_info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.setup, (SetupRecipe, EnvironmentSpec)):
            raise ConfigurationError("setup must be a preset, a random recipe or an environment spec")
        for name in ("horizon", "realizations", "trajectories", "jobs"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1 (got {value!r})")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigurationError(f"seed must be a non-negative integer (got {self.seed!r})")
        self.agents = tuple(self.agents)
        if not self.agents:
            raise ConfigurationError("at least one agent is required")
        unknown = [a for a in self.agents if a not in AGENT_CODES]
        if unknown:
            raise ConfigurationError(f"unknown agent(s) {unknown}; choose from {list(AGENTS)}")
        if len(set(self.agents)) != len(self.agents):
            raise ConfigurationError("agents must not repeat")
        check_alpha(self.alpha)
        PerturbationSchedule(self.epsilon, self.alpha_eps, self.gamma)
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "setup": self.setup_info,
            "horizon": int(self.horizon),
            "realizations": int(self.realizations),
            "trajectories": int(self.trajectories),
            "agents": list(self.agents),
            "seed": int(self.seed),
            "confidence": {"alpha": float(self.alpha)},
            "perturbation": {"epsilon": float(self.epsilon), "alpha_eps": float(self.alpha_eps),
                             "gamma": float(self.gamma)},
        }


def setup_from_preset(name):
    return load_preset(name), {"preset": name}


def setup_from_table(table, base_dir=Path("."), seed=0):
    """Build the setup object from a ``[setup]`` table."""
    if not isinstance(table, dict):
        raise ConfigurationError("[setup] must be a table")
    kinds = [k for k in ("preset", "random", "spec_file") if k in table]
    if len(kinds) != 1:
        raise ConfigurationError("[setup] needs exactly one of preset, random, spec_file")
    kind = kinds[0]
    if kind == "preset":
        return setup_from_preset(table["preset"])
    if kind == "spec_file":
        path = (Path(base_dir) / table["spec_file"]).resolve()
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read spec file {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"spec file {path} is not valid JSON: {exc.msg}") from None
        return EnvironmentSpec.from_dict(data), {"spec": data}
    params = dict(table["random"])
    required = ("num_states", "num_arms", "dim", "thetas_per_set", "grid_low", "grid_high")
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigurationError(f"[setup.random] is missing {missing}")
    extra = set(params) - set(required)
    if extra:
        raise ConfigurationError(f"[setup.random] has unknown keys {sorted(extra)}")
    # the recipe's own randomness (transition rows, θ probabilities) hangs off the master seed
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(3,)))
    recipe = random_recipe(*(int(params[k]) for k in required), rng=rng)
    return recipe, {"random": {k: int(params[k]) for k in required}}


def load_config(path, overrides=None) -> ExperimentConfig:
    """Read a TOML config file; ``overrides`` (already parsed CLI values) win."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid TOML: {exc}") from None
    return config_from_dict(raw, base_dir=path.parent, overrides=overrides)


def config_from_dict(raw, base_dir=Path("."), overrides=None) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    seed = overrides.get("seed", raw.get("seed", 0))
    if "preset" in overrides:
        setup, info = setup_from_preset(overrides.pop("preset"))
    elif "setup" in raw:
        setup, info = setup_from_table(raw["setup"], base_dir, seed)
    else:
        raise ConfigurationError("config has no [setup] table")
    conf = raw.get("confidence", {})
    pert = raw.get("perturbation", {})
    for name, table, keys in (("confidence", conf, {"alpha"}),
                              ("perturbation", pert, {"epsilon", "alpha_eps", "gamma"})):
        extra = set(table) - keys
        if extra:
            raise ConfigurationError(f"[{name}] has unknown keys {sorted(extra)}")
    kwargs = dict(
        setup=setup, setup_info=info, seed=seed,
        horizon=raw.get("horizon", PROFILES["desk"]["horizon"]),
        realizations=raw.get("realizations", PROFILES["desk"]["realizations"]),
        trajectories=raw.get("trajectories", PROFILES["desk"]["trajectories"]),
        agents=tuple(raw.get("agents", AGENTS)),
        out=str(raw.get("out", "results")),
        jobs=raw.get("jobs", 1),
        alpha=conf.get("alpha", 3.1),
        epsilon=pert.get("epsilon", 0.5),
        alpha_eps=pert.get("alpha_eps", 1.5),
        gamma=pert.get("gamma", 1.0),
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)

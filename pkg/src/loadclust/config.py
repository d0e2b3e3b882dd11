"""Run configuration: defaults, YAML file, and dotted-name flag overrides.

Precedence is flags > file > defaults; the ``LOADCLUST_SEED`` environment
variable replaces the built-in default seed (and is itself overridden by a
file value or the ``--seed`` flag).
"""

from __future__ import annotations

import copy
import os

import yaml

from .compare import DEFAULT_FRAMEWORKS, FrameworkSpec
from .errors import ConfigError

SEED_ENV_VAR = "LOADCLUST_SEED"

DEFAULTS: dict = {
    "seed": 0,
    "data": {
        "source": "synthetic",  # synthetic | csv
        "csv_path": None,
        "resolution": 1,
        "synthetic": {
            "n_households": 27,
            "n_days": 90,
            "archetypes": 4,
            "noise_sigma": 0.3,
        },
    },
    "frameworks": "default",
    "reduction": {"pca_target": "auto", "fa_target": "auto"},
    "clustering": {"k": "auto", "m": "auto", "knn": None, "restarts": 10},
    "tuning": {"k_max": 10, "n_refs": 20},
    "validation": {"p": [2, 3], "trials": 100},
    "compare": {"workers": 1},
    "timing": {"enabled": False, "trials": 100, "k": 5},
    "output": {"dir": "out", "plots": False},
}


def load_config(path: str | None = None, overrides: dict[str, object] | None = None) -> dict:
    """Resolve the effective configuration document."""
    config = copy.deepcopy(DEFAULTS)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc

    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path!r}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a key-value mapping")
        _merge(config, loaded, prefix="")

    for dotted, value in (overrides or {}).items():
        _apply_override(config, dotted, value)
    return config


def _merge(base: dict, update: dict, prefix: str) -> None:
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, prefix=f"{dotted}.")
        else:
            base[key] = value


def _apply_override(config: dict, dotted: str, value: object) -> None:
    if isinstance(value, str):
        value = yaml.safe_load(value)
    parts = dotted.split(".")
    node = config
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    if isinstance(node[leaf], dict):
        raise ConfigError(f"config key {dotted!r} is a section, not a value")
    node[leaf] = value


def framework_specs(config: dict) -> list[FrameworkSpec]:
    """Materialize the framework list from the configuration."""
    clustering = config["clustering"]
    reduction = config["reduction"]

    def build(reducer: str, clusterer: str, extra: dict | None = None) -> FrameworkSpec:
        extra = extra or {}
        target = extra.get(
            "target",
            {"pca": reduction["pca_target"], "fa": reduction["fa_target"]}.get(reducer, "auto"),
        )
        try:
            return FrameworkSpec(
                reducer=reducer,
                clusterer=clusterer,
                reducer_target=target,
                k=extra.get("k", clustering["k"]),
                m=extra.get("m", clustering["m"]),
                knn=extra.get("knn", clustering["knn"]),
                restarts=int(extra.get("restarts", clustering["restarts"])),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad framework entry {reducer}+{clusterer}: {exc}") from exc

    entries = config["frameworks"]
    if entries == "default":
        return [build(r, c) for r, c in DEFAULT_FRAMEWORKS]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("frameworks must be 'default' or a non-empty list")

    specs = []
    for entry in entries:
        if isinstance(entry, str):
            parts = entry.split("+")
            if len(parts) != 2:
                raise ConfigError(f"framework {entry!r} must look like 'pca+kmc'")
            specs.append(build(parts[0].strip(), parts[1].strip()))
        elif isinstance(entry, dict):
            if "reducer" not in entry or "clusterer" not in entry:
                raise ConfigError(f"framework entry {entry!r} needs reducer and clusterer")
            known = {"reducer", "clusterer", "target", "k", "m", "knn", "restarts"}
            unknown = set(entry) - known
            if unknown:
                raise ConfigError(f"unknown framework fields {sorted(unknown)}")
            specs.append(build(entry["reducer"], entry["clusterer"], entry))
        else:
            raise ConfigError(f"bad framework entry {entry!r}")
    return specs

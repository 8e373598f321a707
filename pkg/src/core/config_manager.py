"""Configuration Manager for genmeter sweeps"""

from __future__ import annotations

import copy
import logging
from pathlib import Path
from typing import Any

import yaml

from core.errors import ConfigError
from core.measures.settings import MeasureSettings
from core.robustness.settings import StatsSettings
from core.sweep.grid import HyperGrid
from core.training.constants import DEFAULT_EPOCHS

SECTIONS = ("dataset", "model", "train", "grid", "measures", "stats")

DEFAULTS: dict[str, Any] = {
    "dataset": {
        "kind": "blobs",
        "n_per_split": 200,
        "num_classes": 2,
        "noise": 0.5,
        "generator_seed": 0,
        "input_dim": 2,
        "shift": "rotate",
    },
    "model": {
        "hidden_widths": [16],
        "dropout_p": 0.0,
        "init_scheme": "he",
        "activation": "relu",
    },
    "train": {
        "optimizer": "sgd",
        "learning_rate": 0.1,
        "batch_size": 32,
        "weight_decay": 0.0,
        "epochs": DEFAULT_EPOCHS,
        "seed": 0,
    },
    "measures": {},
    "stats": {},
}


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


class ConfigManager:
    """Loads a sweep config and merges it over the package defaults"""

    def __init__(self, config_path: str | Path | None = None, data: dict[str, Any] | None = None):
        self.config_path = Path(config_path) if config_path else None
        raw = data if data is not None else self._load_yaml(self.config_path) if self.config_path else {}
        unknown = sorted(set(raw) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(unknown)} (expected {', '.join(SECTIONS)})")
        self.raw = raw
        self.settings = _merge(DEFAULTS, raw)

    def _load_yaml(self, file_path: Path) -> dict[str, Any]:
        """Load YAML configuration file"""
        if not file_path.exists():
            raise ConfigError(f"config file not found: {file_path}")
        try:
            with open(file_path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {file_path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{file_path} must hold a mapping of sections")
        logging.getLogger(__name__).debug("Loaded config %s", file_path)
        return data

    def _save_yaml(self, data: dict[str, Any], file_path: Path) -> None:
        """Save configuration to YAML file"""
        with open(file_path, "w") as f:
            yaml.dump(data, f, default_flow_style=False, sort_keys=False)

    def save(self, file_path: str | Path) -> None:
        self._save_yaml(self.raw, Path(file_path))

    def get_setting(self, key: str, default: Any = None) -> Any:
        """Get a setting value with optional default

        Args:
            key: Setting key (supports nested keys with dot notation, e.g., 'measures.sam_rho')
            default: Default value if setting not found

        Returns:
            Setting value or default
        """
        keys = key.split(".")
        value: Any = self.settings

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default

        return value if value is not None else default

    def section(self, name: str) -> dict[str, Any]:
        return copy.deepcopy(self.settings.get(name) or {})

    def base_sections(self) -> dict[str, Any]:
        """The dataset/model/train sections every run starts from."""
        return {name: self.section(name) for name in ("dataset", "model", "train")}

    def grid(self) -> HyperGrid:
        axes = self.get_setting("grid.axes")
        if axes is None:
            raise ConfigError("config needs a grid.axes section")
        return HyperGrid.from_mapping(axes)

    def measure_settings(self) -> MeasureSettings:
        return MeasureSettings.from_mapping(self.section("measures"))

    def measure_selection(self) -> str | None:
        only = self.get_setting("measures.only")
        if isinstance(only, list):
            return ",".join(str(o) for o in only)
        return only

    def stats_settings(self) -> StatsSettings:
        return StatsSettings.from_mapping(self.section("stats"))

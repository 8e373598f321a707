"""Hyperparameter grids, run ids and per-run setup resolution.

Axis values are exact string tokens. They are parsed to numbers only when a
run's dataset/model/training specs are built, so grouping and equality
downstream always compare the tokens as written in the config.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields, replace
from itertools import product
from typing import Any

from core.errors import ConfigError
from core.training.datasets import DatasetSpec
from core.training.models import ModelSpec, TrainConfig

RUN_ID_LENGTH = 16
SEED_AXIS = "seed"

# Short axis names accepted in grid.axes
AXIS_ALIASES = {
    "lr": "learning_rate",
    "wd": "weight_decay",
    "dropout": "dropout_p",
    "width": "hidden_width",
}


def _token(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (list, tuple)):
        return "x".join(_token(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class HyperGrid:
    """Ordered axes, each a tuple of distinct tokens."""

    axes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        if not self.axes:
            raise ConfigError("grid needs at least one axis")
        names = [name for name, _ in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate axis names in {names}")
        for name, values in self.axes:
            if not values:
                raise ConfigError(f"grid axis '{name}' is empty")
            if len(set(values)) != len(values):
                raise ConfigError(f"grid axis '{name}' repeats a value: {list(values)}")

    @classmethod
    def from_mapping(cls, axes: dict[str, Any]) -> HyperGrid:
        """Build from ``grid.axes``; YAML scalars become tokens with ``str()``."""
        if not isinstance(axes, dict) or not axes:
            raise ConfigError("grid.axes must be a non-empty mapping of axis -> list of values")
        out = []
        for name, values in axes.items():
            values = values if isinstance(values, list) else [values]
            out.append((str(name), tuple(_token(v) for v in values)))
        return cls(tuple(out))

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.axes]

    @property
    def size(self) -> int:
        total = 1
        for _, values in self.axes:
            total *= len(values)
        return total

    def with_seed_offset(self, offset: int) -> HyperGrid:
        """Shift every seed token by ``offset``."""
        if offset == 0 or SEED_AXIS not in self.names:
            return self
        try:
            return replace(self, axes=tuple(
                (name, tuple(str(int(v) + offset) for v in values) if name == SEED_AXIS else values)
                for name, values in self.axes
            ))
        except ValueError as e:
            raise ConfigError(f"seed tokens must be integers to apply an offset: {e}") from e

    def to_dict(self) -> dict[str, list[str]]:
        return {name: list(values) for name, values in self.axes}


def expand_grid(grid: HyperGrid) -> list[dict[str, str]]:
    """Cartesian product in declared axis order, the last axis varying fastest."""
    names = grid.names
    return [dict(zip(names, combo, strict=True)) for combo in product(*(values for _, values in grid.axes))]


def run_id(assignment: dict[str, str]) -> str:
    """First 16 hex digits of sha256 over the canonical JSON of the assignment."""
    canonical = json.dumps({str(k): str(v) for k, v in assignment.items()}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:RUN_ID_LENGTH]


@dataclass(frozen=True)
class RunSetup:
    run_id: str
    assignment: dict[str, str]
    dataset: DatasetSpec
    model: ModelSpec
    train: TrainConfig

    def setup_dict(self) -> dict[str, Any]:
        return {"dataset": self.dataset.to_dict(), "model": self.model.to_dict(), "train": self.train.to_dict()}


def _parse(field_type: Any, token: str, axis: str) -> Any:
    try:
        if field_type in (int, "int"):
            return int(token)
        if field_type in (float, "float"):
            return float(token)
    except ValueError as e:
        raise ConfigError(f"axis '{axis}' value '{token}' is not a valid {field_type}") from e
    return token


def _field_types(cls: type) -> dict[str, Any]:
    return {f.name: f.type for f in fields(cls)}


def resolve_setup(
    assignment: dict[str, str],
    dataset: dict[str, Any],
    model: dict[str, Any],
    train: dict[str, Any],
) -> RunSetup:
    """Overlay one grid assignment on the base config sections.

    Each axis names a field of the dataset, model or train section (or one
    of the short aliases). ``hidden_widths`` tokens look like ``16x16``;
    ``hidden_width`` replaces every hidden width, ``depth`` sets the number
    of hidden layers.
    """
    dataset_fields = _field_types(DatasetSpec)
    model_fields = _field_types(ModelSpec)
    train_fields = _field_types(TrainConfig)
    ds, md, tr = dict(dataset), dict(model), dict(train)

    for axis, token in assignment.items():
        name = AXIS_ALIASES.get(axis, axis)
        if name in train_fields:
            tr[name] = _parse(train_fields[name], token, axis)
        elif name == "hidden_widths":
            md[name] = [int(w) for w in token.split("x")] if token else []
        elif name == "hidden_width":
            md["hidden_widths"] = [int(token)] * max(1, len(md.get("hidden_widths", [1])))
        elif name == "depth":
            widths = md.get("hidden_widths") or [16]
            md["hidden_widths"] = [widths[0]] * int(token)
        elif name in model_fields:
            md[name] = _parse(model_fields[name], token, axis)
        elif name in dataset_fields:
            ds[name] = _parse(dataset_fields[name], token, axis)
        else:
            raise ConfigError(f"grid axis '{axis}' does not match any dataset, model or train setting")

    try:
        dataset_spec = DatasetSpec(**ds)
        md.setdefault("input_dim", dataset_spec.input_dim)
        md.setdefault("num_classes", dataset_spec.num_classes)
        model_spec = ModelSpec.from_dict(md)
        train_cfg = TrainConfig(**tr)
    except TypeError as e:
        raise ConfigError(f"bad run setup for {assignment}: {e}") from e
    return RunSetup(run_id(assignment), dict(assignment), dataset_spec, model_spec, train_cfg)

"""Model family and training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from core.autodiff.network import Network
from core.autodiff.params import ParamVector
from core.errors import ConfigError

from .constants import ACTIVATIONS, INIT_SCHEMES, OPTIMIZERS

_INIT_STREAM = 7


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    hidden_widths: tuple[int, ...]
    num_classes: int
    dropout_p: float = 0.0
    init_scheme: str = "he"
    activation: str = "relu"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.num_classes < 2:
            raise ConfigError("model needs input_dim >= 1 and at least 2 classes")
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hidden widths must be >= 1, got {list(self.hidden_widths)}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ConfigError(f"unknown init scheme '{self.init_scheme}', expected one of {INIT_SCHEMES}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{self.activation}', expected one of {ACTIVATIONS}")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths) + 1

    def parameter_count(self) -> int:
        widths = [self.input_dim, *self.hidden_widths, self.num_classes]
        return sum(widths[i] * widths[i + 1] + widths[i + 1] for i in range(len(widths) - 1))

    def build(self) -> Network:
        return Network(self)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["hidden_widths"] = list(self.hidden_widths)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelSpec:
        return cls(**{**data, "hidden_widths": tuple(data.get("hidden_widths", ()))})


@dataclass(frozen=True)
class TrainConfig:
    """Every field is required; a run never falls back to hidden defaults."""

    optimizer: str
    learning_rate: float
    batch_size: int
    weight_decay: float
    epochs: int
    seed: int

    def __post_init__(self) -> None:
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer '{self.optimizer}', expected one of {OPTIMIZERS}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """Draw initial weights; biases start at zero.

    he      N(0, 2 / fan_in)
    glorot  U(-a, a) with a = sqrt(6 / (fan_in + fan_out))
    zeros   all-zero weights
    """
    rng = np.random.default_rng([seed, _INIT_STREAM])
    segments: list[tuple[str, np.ndarray]] = []
    for name, shape in Network(spec).segment_layout():
        if name.startswith("b") or spec.init_scheme == "zeros":
            segments.append((name, np.zeros(shape)))
            continue
        fan_in, fan_out = shape
        if spec.init_scheme == "he":
            w = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=shape)
        segments.append((name, w))
    return ParamVector.from_arrays(segments)

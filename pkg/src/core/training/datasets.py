"""Synthetic classification pools with parameterized distribution shift."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import ConfigError, ShapeMismatchError

from .constants import (
    BLOB_RADIUS,
    DATASET_KINDS,
    FEATURE_NOISE_STEP,
    MIN_SAMPLES_PER_CLASS,
    ROTATE_STEP,
    SCALE_STEP,
    SHIFT_KINDS,
    SHIFT_SEVERITIES,
    TRANSLATE_STEP,
)

logger = logging.getLogger(__name__)

# Stream tags mixed into the generator seed; never reorder.
_TRAIN_STREAM = 0
_TEST_STREAM = 1
_SHIFT_STREAM = 2


@dataclass(frozen=True)
class LabeledBatch:
    """``n x input_dim`` float64 inputs with integer labels in ``[0, num_classes)``."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        inputs = np.array(self.inputs, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if inputs.ndim != 2:
            raise ShapeMismatchError(f"inputs must be 2-D, got shape {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise ShapeMismatchError(f"{labels.shape[0]} labels for {inputs.shape[0]} inputs")
        if inputs.shape[0] < 1:
            raise ShapeMismatchError("a batch needs at least one sample")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise ShapeMismatchError(f"labels must lie in [0, {self.num_classes})")
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices: np.ndarray | list[int]) -> LabeledBatch:
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledBatch(self.inputs[idx], self.labels[idx], self.num_classes)

    def batches(self, batch_size: int) -> list[LabeledBatch]:
        """Consecutive, unshuffled minibatches; the last one may be short."""
        return [self.subset(np.arange(i, min(i + batch_size, len(self)))) for i in range(0, len(self), batch_size)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def equals(self, other: LabeledBatch) -> bool:
        return (
            self.num_classes == other.num_classes
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class DatasetBundle:
    train: LabeledBatch
    test_iid: LabeledBatch
    test_shifted: dict[int, LabeledBatch]
    generator_seed: int
    kind: str
    shift: str

    def shifted(self, severity: int) -> LabeledBatch:
        """Evaluation pool at ``severity``; severity 0 is the IID test pool."""
        if severity == 0:
            return self.test_iid
        return self.test_shifted[severity]

    @property
    def num_classes(self) -> int:
        return self.train.num_classes

    @property
    def input_dim(self) -> int:
        return self.train.input_dim


def balanced_labels(n: int, num_classes: int) -> np.ndarray:
    """``n // K`` labels per class, with one extra for each of the first ``n % K`` classes."""
    counts = np.full(num_classes, n // num_classes)
    counts[: n % num_classes] += 1
    return np.repeat(np.arange(num_classes), counts)


def _blobs(labels: np.ndarray, num_classes: int, input_dim: int, noise: float, rng: np.random.Generator) -> np.ndarray:
    angles = 2.0 * np.pi * labels / num_classes
    points = np.zeros((len(labels), input_dim))
    points[:, 0] = BLOB_RADIUS * np.cos(angles)
    points[:, 1] = BLOB_RADIUS * np.sin(angles)
    return points + noise * rng.standard_normal(points.shape)


def _moons(labels: np.ndarray, input_dim: int, noise: float, rng: np.random.Generator) -> np.ndarray:
    t = np.pi * rng.random(len(labels))
    points = np.zeros((len(labels), input_dim))
    upper = labels == 0
    points[upper, 0] = np.cos(t[upper])
    points[upper, 1] = np.sin(t[upper])
    points[~upper, 0] = 1.0 - np.cos(t[~upper])
    points[~upper, 1] = 0.5 - np.sin(t[~upper])
    return points + noise * rng.standard_normal(points.shape)


def _spiral(labels: np.ndarray, num_classes: int, input_dim: int, noise: float, rng: np.random.Generator) -> np.ndarray:
    t = 0.1 + 0.9 * rng.random(len(labels))
    angle = 2.0 * np.pi * labels / num_classes + 3.0 * t
    points = np.zeros((len(labels), input_dim))
    points[:, 0] = BLOB_RADIUS * t * np.cos(angle)
    points[:, 1] = BLOB_RADIUS * t * np.sin(angle)
    return points + noise * rng.standard_normal(points.shape)


def _sample_pool(
    kind: str, n: int, num_classes: int, input_dim: int, noise: float, rng: np.random.Generator
) -> LabeledBatch:
    labels = balanced_labels(n, num_classes)
    if kind == "blobs":
        inputs = _blobs(labels, num_classes, input_dim, noise, rng)
    elif kind == "moons":
        inputs = _moons(labels, input_dim, noise, rng)
    else:
        inputs = _spiral(labels, num_classes, input_dim, noise, rng)
    order = rng.permutation(n)
    return LabeledBatch(inputs[order], labels[order], num_classes)


def make_dataset(
    kind: str,
    n_per_split: int,
    num_classes: int,
    noise: float,
    generator_seed: int,
    input_dim: int = 2,
    shift: str = "rotate",
) -> DatasetBundle:
    """Generate train, IID test and five shifted test pools from one seed.

    Shifted pools are the IID test pool passed through ``apply_shift`` at
    severities 1..5, so label marginals match across every split.
    """
    if kind not in DATASET_KINDS:
        raise ConfigError(f"unknown dataset kind '{kind}', expected one of {DATASET_KINDS}")
    if shift not in SHIFT_KINDS:
        raise ConfigError(f"unknown shift kind '{shift}', expected one of {SHIFT_KINDS}")
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if n_per_split <= 0 or input_dim <= 0:
        raise ConfigError("dataset sizes must be positive")
    if n_per_split < MIN_SAMPLES_PER_CLASS * num_classes:
        raise ConfigError(f"n_per_split={n_per_split} is below {MIN_SAMPLES_PER_CLASS} samples per class")
    if kind == "moons" and num_classes != 2:
        raise ConfigError("moons is a two-class dataset")
    if input_dim < 2:
        raise ConfigError("synthetic datasets need input_dim >= 2")
    if noise < 0:
        raise ConfigError("noise must be non-negative")

    train = _sample_pool(kind, n_per_split, num_classes, input_dim, noise,
                         np.random.default_rng([generator_seed, _TRAIN_STREAM]))
    test = _sample_pool(kind, n_per_split, num_classes, input_dim, noise,
                        np.random.default_rng([generator_seed, _TEST_STREAM]))
    shifted = {
        s: apply_shift(test, shift, s, seed=generator_seed * 1000 + _SHIFT_STREAM) for s in SHIFT_SEVERITIES
    }
    logger.debug("Generated %s dataset: n=%d K=%d seed=%d shift=%s", kind, n_per_split, num_classes,
                 generator_seed, shift)
    return DatasetBundle(train, test, shifted, generator_seed, kind, shift)


def shift_magnitude(shift: str, severity: int) -> float:
    """Scalar size of ``shift`` at ``severity``; strictly increasing in severity."""
    if shift not in SHIFT_KINDS:
        raise ConfigError(f"unknown shift kind '{shift}', expected one of {SHIFT_KINDS}")
    step = {
        "rotate": ROTATE_STEP,
        "translate": TRANSLATE_STEP,
        "feature_noise": FEATURE_NOISE_STEP,
        "scale": SCALE_STEP,
    }[shift]
    return step * severity


def apply_shift(batch: LabeledBatch, shift: str, severity: int, seed: int) -> LabeledBatch:
    """Apply a documented corruption schedule to the inputs; labels are untouched.

    rotate         rotate the first two coordinates by ``severity * pi/20``
    translate      add ``0.25 * severity`` along the all-ones unit direction
    feature_noise  add N(0, (0.2 * severity)^2) to every feature
    scale          multiply inputs by ``1 + 0.15 * severity``
    """
    if shift not in SHIFT_KINDS:
        raise ConfigError(f"unknown shift kind '{shift}', expected one of {SHIFT_KINDS}")
    if severity not in (0, *SHIFT_SEVERITIES):
        raise ConfigError(f"severity must be in 0..{SHIFT_SEVERITIES[-1]}, got {severity}")
    if severity == 0:
        return batch

    x = batch.inputs
    magnitude = shift_magnitude(shift, severity)
    if shift == "rotate":
        if batch.input_dim < 2:
            raise ShapeMismatchError("rotation needs at least two input features")
        c, s = np.cos(magnitude), np.sin(magnitude)
        out = x.copy()
        out[:, 0] = c * x[:, 0] - s * x[:, 1]
        out[:, 1] = s * x[:, 0] + c * x[:, 1]
    elif shift == "translate":
        direction = np.ones(batch.input_dim) / np.sqrt(batch.input_dim)
        out = x + magnitude * direction
    elif shift == "feature_noise":
        rng = np.random.default_rng([seed, severity])
        out = x + magnitude * rng.standard_normal(x.shape)
    else:
        out = x * (1.0 + magnitude)
    return LabeledBatch(out, batch.labels, batch.num_classes)


def export_csv(batch: LabeledBatch, path: str | Path) -> Path:
    """Write ``f0..f{d-1},label`` with full float precision."""
    path = Path(path)
    frame = pd.DataFrame(batch.inputs, columns=[f"f{i}" for i in range(batch.input_dim)])
    frame["label"] = batch.labels
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def load_csv(path: str | Path, num_classes: int | None = None) -> LabeledBatch:
    """Read a pool written by ``export_csv`` (or any file with that header)."""
    frame = pd.read_csv(path)
    if "label" not in frame.columns:
        raise ConfigError(f"{path}: missing 'label' column")
    features = [c for c in frame.columns if c != "label"]
    expected = [f"f{i}" for i in range(len(features))]
    if features != expected:
        raise ConfigError(f"{path}: feature columns must be {expected}, got {features}")
    labels = frame["label"].to_numpy(dtype=np.int64)
    k = int(num_classes) if num_classes is not None else int(labels.max()) + 1
    return LabeledBatch(frame[features].to_numpy(dtype=np.float64), labels, k)


def bundle_from_csv(
    train_path: str | Path, test_path: str | Path, shift: str, generator_seed: int, num_classes: int | None = None
) -> DatasetBundle:
    """Imported train/test pools, shifted the same way as generated ones."""
    train = load_csv(train_path, num_classes)
    test = load_csv(test_path, train.num_classes)
    shifted = {
        s: apply_shift(test, shift, s, seed=generator_seed * 1000 + _SHIFT_STREAM) for s in SHIFT_SEVERITIES
    }
    return DatasetBundle(train, test, shifted, generator_seed, "csv", shift)


@dataclass(frozen=True)
class DatasetSpec:
    """The ``dataset`` section of a sweep config."""

    kind: str = "blobs"
    n_per_split: int = 200
    num_classes: int = 2
    noise: float = 0.5
    generator_seed: int = 0
    input_dim: int = 2
    shift: str = "rotate"
    train_csv: str | None = None
    test_csv: str | None = None

    def build(self) -> DatasetBundle:
        if self.kind == "csv":
            if not self.train_csv or not self.test_csv:
                raise ConfigError("dataset kind 'csv' needs train_csv and test_csv")
            return bundle_from_csv(self.train_csv, self.test_csv, self.shift, self.generator_seed, self.num_classes)
        return make_dataset(
            self.kind, self.n_per_split, self.num_classes, self.noise, self.generator_seed, self.input_dim, self.shift
        )

    def to_dict(self) -> dict[str, object]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

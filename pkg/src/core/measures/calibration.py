"""Calibration errors and post-hoc temperature scaling."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import log_softmax, softmax

from core.errors import InsufficientDataError

from .constants import TEMPERATURE_GRID_POINTS, TEMPERATURE_LOG_BOUND, TEMPERATURE_XTOL

if TYPE_CHECKING:
    from core.training.records import MeasureValue

    from .context import MeasureContext


@dataclass(frozen=True)
class BinnedCalibration:
    """Equal-width confidence bins on (0, 1]; only nonempty bins are kept."""

    counts: np.ndarray
    accuracy: np.ndarray
    confidence: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.accuracy - self.confidence)

    @property
    def ece(self) -> float:
        return float(np.sum(self.counts / self.counts.sum() * self.gaps))

    @property
    def mce(self) -> float:
        return float(np.max(self.gaps))

    @property
    def reliability(self) -> float:
        """Unweighted mean gap over nonempty bins."""
        return float(np.mean(self.gaps))


def bin_confidences(confidence: np.ndarray, correct: np.ndarray, bins: int) -> BinnedCalibration:
    """Assign to right-closed bins ``((m-1)/M, m/M]``."""
    if bins < 1:
        raise ValueError("need at least one bin")
    conf = np.asarray(confidence, dtype=np.float64)
    hit = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise InsufficientDataError("calibration needs at least one prediction")
    edges = np.linspace(0.0, 1.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, conf, side="left") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    acc = np.bincount(idx, weights=hit, minlength=bins)
    cnf = np.bincount(idx, weights=conf, minlength=bins)
    keep = counts > 0
    return BinnedCalibration(counts[keep], acc[keep] / counts[keep], cnf[keep] / counts[keep])


def calibration_from_probs(probs: np.ndarray, labels: np.ndarray, bins: int) -> BinnedCalibration:
    predictions = np.argmax(probs, axis=1)
    return bin_confidences(probs.max(axis=1), predictions == labels, bins)


def adaptive_calibration_error(probs: np.ndarray, labels: np.ndarray, bins: int) -> float:
    """Per-class equal-count bins on the class probability.

    Samples are ordered by (probability, label) and split into ``bins``
    contiguous chunks, the first ``N mod M`` chunks taking one extra sample.
    Empty chunks contribute nothing; the total is divided by ``K * M``.
    """
    n, num_classes = probs.shape
    if n == 0:
        raise InsufficientDataError("calibration needs at least one prediction")
    total = 0.0
    for k in range(num_classes):
        order = np.lexsort((labels, probs[:, k]))
        for chunk in np.array_split(order, bins):
            if chunk.size == 0:
                continue
            total += abs(float(np.mean(labels[chunk] == k)) - float(np.mean(probs[chunk, k])))
    return total / (num_classes * bins)


def mean_ce(logits: np.ndarray, labels: np.ndarray, temperature: float = 1.0) -> float:
    log_p = log_softmax(logits / temperature, axis=1)
    return float(-np.mean(log_p[np.arange(len(labels)), labels]))


@dataclass(frozen=True)
class TemperatureResult:
    temperature: float
    ece_before: float
    ece_after: float
    ce_before: float
    ce_after: float


def temperature_scale(logits: np.ndarray, labels: np.ndarray, bins: int) -> TemperatureResult:
    """Minimise mean CE of ``softmax(z / T)`` over ``log T`` in [-3, 3].

    A 61-point grid brackets the minimum, golden-section refines it when the
    best grid point is interior.
    """
    if len(labels) == 0:
        raise InsufficientDataError("temperature scaling needs at least one prediction")

    def objective(log_t: float) -> float:
        return mean_ce(logits, labels, float(np.exp(log_t)))

    grid = np.linspace(-TEMPERATURE_LOG_BOUND, TEMPERATURE_LOG_BOUND, TEMPERATURE_GRID_POINTS)
    values = np.array([objective(g) for g in grid])
    i = int(np.argmin(values))
    candidates = [(float(values[i]), float(grid[i])), (objective(0.0), 0.0)]
    if 0 < i < len(grid) - 1:
        try:
            res = minimize_scalar(objective, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                  options={"xtol": TEMPERATURE_XTOL})
            if np.isfinite(res.fun):
                candidates.append((float(res.fun), float(res.x)))
        except ValueError:
            pass
    ce_after, log_t = min(candidates)
    temperature = float(np.exp(log_t))
    before = calibration_from_probs(softmax(logits, axis=1), labels, bins).ece
    after = calibration_from_probs(softmax(logits / temperature, axis=1), labels, bins).ece
    return TemperatureResult(temperature, before, after, objective(0.0), ce_after)


class CalibrationMixin:
    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_calibration(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        bins = ctx.settings.calibration_bins
        labels = ctx.pool.labels
        cache: dict[str, BinnedCalibration] = {}

        def binned() -> BinnedCalibration:
            if "b" not in cache:
                cache["b"] = calibration_from_probs(ctx.probs, labels, bins)
            return cache["b"]

        def temperature() -> Any:
            result = temperature_scale(ctx.logits, labels, bins)
            return result.ece_after, {"T_opt": result.temperature, "ece_before": result.ece_before,
                                      "ce_before": result.ce_before, "ce_after": result.ce_after}

        thunks: dict[str, Callable[[], Any]] = {
            "ece": lambda: binned().ece,
            "mce": lambda: binned().mce,
            "ace": lambda: adaptive_calibration_error(ctx.probs, labels, bins),
            "reliability_diagram": lambda: (binned().reliability, {"nonempty_bins": int(binned().counts.size)}),
            "temperature_scaling": temperature,
        }
        return {name: self._guard(name, thunks[name]) for name in wanted}

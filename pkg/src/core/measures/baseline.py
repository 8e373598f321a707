"""Baseline and output-based measures."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import log_softmax

from core.errors import MeasureError

if TYPE_CHECKING:
    from core.autodiff.params import ParamVector
    from core.training.records import MeasureValue

    from .context import MeasureContext


def vcdim(parameter_count: int) -> float:
    """``W ln W`` with the natural log."""
    if parameter_count <= 0:
        raise MeasureError("parameter count must be positive")
    return float(parameter_count * math.log(parameter_count))


def negative_entropy(logits: np.ndarray) -> float:
    """Mean over samples of ``sum_k p_k log p_k``."""
    log_p = log_softmax(logits, axis=1)
    return float(np.mean(np.sum(np.exp(log_p) * log_p, axis=1)))


def baseline_formulas(
    params: ParamVector, logits: Callable[[], np.ndarray], per_sample_ce: Callable[[], np.ndarray]
) -> dict[str, Callable[[], float]]:
    """One thunk per baseline measure; ``logits`` and ``per_sample_ce`` are only called when needed."""
    w = params.total_dim
    return {
        "vcdim": lambda: vcdim(w),
        "params": lambda: float(w),
        "magnitude": params.norm,
        "cross_entropy": lambda: float(np.mean(per_sample_ce())),
        "negative_entropy": lambda: negative_entropy(logits()),
    }


def baseline_outputs(params: ParamVector, logits: np.ndarray, per_sample_ce: np.ndarray) -> dict[str, float]:
    formulas = baseline_formulas(params, lambda: logits, lambda: per_sample_ce)
    return {name: f() for name, f in formulas.items()}


class BaselineMixin:
    """Capacity and output-statistics measures.

    Expects on the composing class:
        logger: logging.Logger
        _guard: wraps a value thunk into a MeasureValue
    """

    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_baseline_output(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        thunks = baseline_formulas(ctx.params, lambda: ctx.logits, lambda: ctx.per_sample_ce)
        return {name: self._guard(name, thunks[name]) for name in wanted}

"""Gradient-statistics measures."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING, Any

import numpy as np

from core.errors import InsufficientDataError

from .constants import EPS_GNS, GRADIENT_AGGREGATES, GRADIENT_NORMS

if TYPE_CHECKING:
    from core.training.records import MeasureValue

    from .context import MeasureContext

_ORDERS = {"l1": 1, "l2": 2, "linf": np.inf}


def _stacked(grads: np.ndarray | Sequence[np.ndarray], minimum: int) -> np.ndarray:
    g = np.asarray(np.stack(list(grads)) if not isinstance(grads, np.ndarray) else grads, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < minimum:
        raise InsufficientDataError(f"need at least {minimum} gradient batches, got {g.shape[0] if g.ndim else 0}")
    return g


def mean_gradient_variance(grads: np.ndarray | Sequence[np.ndarray]) -> float:
    """Per-coordinate population variance across batches, averaged over coordinates."""
    g = _stacked(grads, 2)
    return float(np.mean(np.var(g, axis=0)))


def gradient_noise_scale(grads: np.ndarray, eps: float = EPS_GNS) -> float:
    """``(1/d) sum_i Var_i / (mean_i^2 + eps)``."""
    g = _stacked(grads, 2)
    return float(np.mean(np.var(g, axis=0) / (np.mean(g, axis=0) ** 2 + eps)))


def gradient_norm(grads: np.ndarray, norm: str = "l2", aggregate: str = "mean") -> float:
    """Configured aggregate of per-batch gradient norms."""
    if norm not in GRADIENT_NORMS:
        raise ValueError(f"unknown norm '{norm}', expected one of {GRADIENT_NORMS}")
    if aggregate not in GRADIENT_AGGREGATES:
        raise ValueError(f"unknown aggregate '{aggregate}', expected one of {GRADIENT_AGGREGATES}")
    norms = np.linalg.norm(_stacked(grads, 1), ord=_ORDERS[norm], axis=1)
    return float(getattr(np, aggregate)(norms))


class OptimizationMixin:
    """Gradient noise, gradient norms and input sensitivity.

    Expects on the composing class:
        logger: logging.Logger
        _guard: wraps a value thunk into a MeasureValue
    """

    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_optimization(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        s = ctx.settings
        snapshots = ctx.record.grad_snapshots

        def training_var() -> Any:
            return mean_gradient_variance(snapshots), {"snapshots": len(snapshots)}

        thunks: dict[str, Callable[[], Any]] = {
            "gradient_noise_var": training_var,
            "gradient_noise_final_var": lambda: (mean_gradient_variance(ctx.batch_grads),
                                                 {"batches": len(ctx.eval_batches)}),
            "gradient_noise_scale": lambda: gradient_noise_scale(ctx.batch_grads),
            "gradient_norm": lambda: (gradient_norm(ctx.batch_grads, s.gradient_norm, s.gradient_aggregate),
                                      {"norm": s.gradient_norm, "aggregate": s.gradient_aggregate}),
            "input_gradient_norm": lambda: ctx.network.input_grad_norm(ctx.params, ctx.pool),
        }
        return {name: self._guard(name, thunks[name]) for name in wanted}

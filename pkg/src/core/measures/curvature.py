"""Hessian spectrum, trace and diagonal estimates from Hessian-vector products."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from core.autodiff.objective import hvp

from .constants import DEFAULT_HUTCHINSON_SAMPLES, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL, EXACT_DIAGONAL_MAX_DIM
from .norms import PowerIterationResult

if TYPE_CHECKING:
    from core.autodiff.objective import Objective
    from core.autodiff.params import ParamVector


@dataclass(frozen=True)
class TraceResult:
    value: float
    estimates: np.ndarray


def rademacher(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.integers(0, 2, size=dim).astype(np.float64) * 2.0 - 1.0


def hessian_top_eigenvalue(
    objective: Objective,
    params: ParamVector,
    batch: Any,
    iters: int = DEFAULT_POWER_ITERS,
    tol: float = DEFAULT_POWER_TOL,
    seed: int = 0,
    method: str = "fd_central",
) -> PowerIterationResult:
    """Rayleigh quotient ``v^T H v`` after power iteration on ``H``.

    Power iteration tracks the eigenvalue of largest magnitude, so the result
    carries its sign (an indefinite Hessian can yield a negative value).
    Converged once successive quotients differ by less than ``tol * max(1, |q|)``.
    """
    rng = np.random.default_rng(seed)
    flat = rng.standard_normal(params.total_dim)
    v = params.unflatten(flat / np.linalg.norm(flat))
    previous: float | None = None
    quotient = 0.0
    for i in range(1, iters + 1):
        hv = hvp(objective, params, batch, v, method)
        quotient = v.dot(hv)
        norm = hv.norm()
        if norm == 0.0:
            return PowerIterationResult(0.0, True, i)
        if previous is not None and abs(quotient - previous) < tol * max(1.0, abs(quotient)):
            return PowerIterationResult(quotient, True, i)
        previous = quotient
        v = hv.scale(1.0 / norm)
    return PowerIterationResult(quotient, False, iters)


def hessian_trace(
    objective: Objective,
    params: ParamVector,
    batch: Any,
    samples: int = DEFAULT_HUTCHINSON_SAMPLES,
    seed: int = 0,
    method: str = "fd_central",
) -> TraceResult:
    """Hutchinson estimate ``mean_s v_s^T H v_s`` with Rademacher ``v_s``."""
    if samples < 1:
        raise ValueError("Hutchinson needs at least one sample")
    rng = np.random.default_rng(seed)
    estimates = np.empty(samples)
    for s in range(samples):
        v = params.unflatten(rademacher(rng, params.total_dim))
        estimates[s] = v.dot(hvp(objective, params, batch, v, method))
    return TraceResult(float(estimates.mean()), estimates)


def hessian_diagonal(
    objective: Objective,
    params: ParamVector,
    batch: Any,
    seed: int = 0,
    method: str = "fd_central",
    samples: int = DEFAULT_HUTCHINSON_SAMPLES,
    exact_max_dim: int = EXACT_DIAGONAL_MAX_DIM,
) -> np.ndarray:
    """Diagonal of the Hessian.

    Up to ``exact_max_dim`` parameters each entry is probed with its own unit
    vector; larger models use the Hutchinson diagonal ``mean_s v_s * (H v_s)``.
    """
    d = params.total_dim
    if d <= exact_max_dim:
        diag = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            diag[i] = hvp(objective, params, batch, params.unflatten(e), method).flatten()[i]
        return diag
    rng = np.random.default_rng(seed)
    acc = np.zeros(d)
    for _ in range(samples):
        v = rademacher(rng, d)
        acc += v * hvp(objective, params, batch, params.unflatten(v), method).flatten()
    return acc / samples

"""Margin and norm-based measures."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from core.errors import InsufficientDataError, MeasureError

from .constants import DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL, EPS_MARGIN, SPECTRAL_BLOCK

if TYPE_CHECKING:
    from core.autodiff.params import ParamVector
    from core.training.records import MeasureValue

    from .context import MeasureContext

_SPECTRAL = ("spectral_norm_per_layer", "spec_sum", "spec_prod")


@dataclass(frozen=True)
class MarginStats:
    margins: np.ndarray
    percentile: float
    quantile: float
    eps_margin: float = EPS_MARGIN


def margins(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """True-class logit minus the largest other-class logit."""
    rows = np.arange(len(labels))
    true = logits[rows, labels]
    others = logits.copy()
    others[rows, labels] = -np.inf
    return true - others.max(axis=1)


def margin_stats(logits: np.ndarray, labels: np.ndarray, p: float = 0.10, eps_margin: float = EPS_MARGIN) -> MarginStats:
    """Margins and their ``p``-quantile as an exact order statistic (lower interpolation)."""
    if len(labels) == 0:
        raise InsufficientDataError("margin statistics need at least one sample")
    m = margins(logits, labels)
    return MarginStats(m, p, float(np.quantile(m, p, method="lower")), eps_margin)


def clip_signed(z: float, eps: float) -> float:
    """``sign(z) * max(|z|, eps)`` with ``sign(0) = +1``."""
    sign = -1.0 if z < 0 else 1.0
    return sign * max(abs(z), eps)


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    converged: bool
    iterations: int


def spectral_norm(
    matrix: np.ndarray, iters: int = DEFAULT_POWER_ITERS, tol: float = DEFAULT_POWER_TOL, seed: int = 0
) -> PowerIterationResult:
    """Largest singular value by block power iteration on ``A^T A`` with a Rayleigh-Ritz step.

    Converged once the top Ritz pair ``(lam, v)`` has residual ``|A^T A v - lam v| <= tol * sigma``.
    Some eigenvalue of ``A^T A`` then lies within that residual of ``lam``, so ``sigma`` is within
    ``tol / 2`` of a singular value. The block keeps close leading singular values from stalling it.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if not np.any(a):
        return PowerIterationResult(0.0, True, 0)
    gram = a.T @ a
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((a.shape[1], min(SPECTRAL_BLOCK, a.shape[1]))))
    sigma = 0.0
    for i in range(1, iters + 1):
        basis, _ = np.linalg.qr(gram @ basis)
        evals, evecs = np.linalg.eigh(basis.T @ gram @ basis)
        lam = max(float(evals[-1]), 0.0)
        v = basis @ evecs[:, -1]
        sigma = math.sqrt(lam)
        residual = float(np.linalg.norm(gram @ v - lam * v))
        if residual <= tol * sigma:
            return PowerIterationResult(sigma, True, i)
    return PowerIterationResult(sigma, False, iters)


def spectral_summary(estimates: list[float]) -> dict[str, float]:
    """Sum, log-domain product and per-layer mean of spectral estimates."""
    sigmas = np.asarray(estimates, dtype=np.float64)
    prod = 0.0 if np.any(sigmas == 0.0) else float(np.exp(np.sum(np.log(sigmas))))
    return {
        "spec_sum": float(sigmas.sum()),
        "spec_prod": prod,
        "spectral_norm_per_layer": float(sigmas.mean()),
    }


def path_norm(params: ParamVector, input_dim: int | None = None) -> float:
    """Squared-weight forward pass of an all-ones input, summed over outputs."""
    layers = params.weight_matrices()
    if not layers:
        raise MeasureError("path norm needs at least one weight matrix")
    h = np.ones(input_dim if input_dim is not None else layers[0][1].shape[0])
    for name, w in layers:
        h = h @ (w**2)
        bias_name = "b" + name[1:]
        if bias_name in params.names:
            h = h + params[bias_name] ** 2
    return float(h.sum())


def fisher_rao_norm(theta: np.ndarray, sample_grads: np.ndarray) -> float:
    """``sqrt(mean_n (theta . g_n)^2)``."""
    return float(np.sqrt(np.mean((sample_grads @ theta) ** 2)))


def norm_margin_formulas(
    params: ParamVector,
    theta0: ParamVector | None,
    stats: Callable[[], MarginStats],
    sample_grads: Callable[[], np.ndarray],
) -> dict[str, Callable[[], Any]]:
    """One thunk per non-spectral norm/margin measure; inputs are only produced when a thunk needs them.

    ``inverse_margin_p10`` also returns the quantile as detail.
    """

    def denom() -> float:
        s = stats()
        return max(abs(s.quantile), s.eps_margin)

    def l2_over() -> float:
        return params.norm() / denom()

    def inverse_margin() -> tuple[float, dict[str, float]]:
        s = stats()
        return 1.0 / clip_signed(s.quantile, s.eps_margin), {"q": s.quantile}

    def frobenius_distance() -> float:
        if theta0 is None:
            raise MeasureError("no initial parameters stored")
        return (params - theta0).norm()

    return {
        "inverse_margin_p10": inverse_margin,
        "l2_over_margin_p10": l2_over,
        "l1_over_margin_p10": lambda: params.l1_norm() / denom(),
        "margin_normalized_param_norm": l2_over,
        "frobenius_distance": frobenius_distance,
        "path_norm": lambda: path_norm(params),
        "fisher_rao_norm": lambda: fisher_rao_norm(params.flatten(), sample_grads()),
    }


def norm_margin_measures(
    params: ParamVector,
    theta0: ParamVector | None,
    stats: MarginStats,
    spectral: list[float],
    sample_grads: np.ndarray,
) -> dict[str, float]:
    out: dict[str, float] = {}
    for name, f in norm_margin_formulas(params, theta0, lambda: stats, lambda: sample_grads).items():
        try:
            result = f()
        except MeasureError:
            out[name] = float("nan")
            continue
        out[name] = float(result[0] if isinstance(result, tuple) else result)
    out.update(spectral_summary(spectral))
    return out


class NormMarginMixin:
    """Margin-normalised norms, spectral products, path and Fisher-Rao norms."""

    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_norm_margin(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        stats_cache: dict[str, MarginStats] = {}

        def stats() -> MarginStats:
            if "m" not in stats_cache:
                stats_cache["m"] = margin_stats(ctx.logits, ctx.pool.labels, ctx.settings.margin_percentile)
            return stats_cache["m"]

        out: dict[str, MeasureValue] = {}
        if any(name in _SPECTRAL for name in wanted):
            out.update(self._spectral_values(ctx, [n for n in wanted if n in _SPECTRAL]))

        thunks = norm_margin_formulas(ctx.params, ctx.theta0, stats, lambda: ctx.per_sample_grads)
        for name in wanted:
            if name not in _SPECTRAL:
                out[name] = self._guard(name, thunks[name])
        return out

    def _spectral_values(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        s = ctx.settings
        results = [
            spectral_norm(w, s.power_iters, s.power_tol, seed=ctx.stream_seed("spec_sum") + i)
            for i, (_name, w) in enumerate(ctx.params.weight_matrices())
        ]
        unconverged = [name for (name, _), r in zip(ctx.params.weight_matrices(), results, strict=True)
                       if not r.converged]
        if unconverged:
            reason = f"power iteration did not converge for {', '.join(unconverged)}"
            self.logger.warning("Run %s: %s", ctx.record.run_id, reason)
            return {name: self._guard(name, _raiser(reason)) for name in wanted}
        summary = spectral_summary([r.value for r in results])
        per_layer = {f"sigma_{i}": r.value for i, r in enumerate(results)}
        return {name: self._guard(name, lambda n=name: (summary[n], per_layer)) for name in wanted}


def _raiser(reason: str) -> Callable[[], float]:
    def fail() -> float:
        raise MeasureError(reason)

    return fail

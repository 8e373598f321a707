"""Sharpness, PAC-Bayes and flatness measures.

The primitives take any ``Objective`` so they can be checked against closed
forms on quadratic losses; ``SharpnessMixin`` binds them to a trained network.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.stats import hmean

from core.errors import MeasureError, NonFiniteError

from .constants import (
    EPS_SCALE,
    FLATNESS_AGGREGATES,
    NOISE_AGGREGATES,
    NOISE_VARIANTS,
    PAC_BAYES_VARIANTS,
    SAM_DEGENERATE_NORM,
)
from .curvature import hessian_top_eigenvalue, hessian_trace

if TYPE_CHECKING:
    from core.autodiff.objective import Objective
    from core.autodiff.params import ParamVector
    from core.training.records import MeasureValue

    from .context import MeasureContext
    from .settings import PosteriorSpec


@dataclass(frozen=True)
class SamResult:
    value: float
    used_batches: int
    degenerate_batches: int


def sam_sharpness(objective: Objective, params: ParamVector, batches: Sequence[Any], rho: float) -> SamResult:
    """Mean over batches of ``L_b(theta + rho * g_b/|g_b|) - L_b(theta)``.

    Batches with ``|g_b| < 1e-12`` contribute 0 and are counted as degenerate.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not batches:
        raise ValueError("sharpness needs at least one batch")
    total = 0.0
    degenerate = 0
    for batch in batches:
        g = objective.grad(params, batch)
        g_norm = g.norm()
        if g_norm < SAM_DEGENERATE_NORM:
            degenerate += 1
            continue
        total += objective.loss(params + g.scale(rho / g_norm), batch) - objective.loss(params, batch)
    return SamResult(total / len(batches), len(batches) - degenerate, degenerate)


@dataclass(frozen=True)
class AdaptiveResult:
    value: float
    ratios: dict[float, float]


def adaptive_sharpness(
    objective: Objective, params: ParamVector, batches: Sequence[Any], radii: Sequence[float]
) -> AdaptiveResult:
    """``max_k sharpness(rho_k) / rho_k`` over the radii whose sharpness was defined."""
    ratios: dict[float, float] = {}
    for rho in radii:
        result = sam_sharpness(objective, params, batches, rho)
        if result.used_batches == 0:
            continue
        ratios[float(rho)] = result.value / rho
    if not ratios:
        raise MeasureError("every radius had only degenerate batches")
    return AdaptiveResult(max(ratios.values()), ratios)


@dataclass(frozen=True)
class NoiseResult:
    value: float
    raw: float
    factor: float
    deltas: list[float] = field(default_factory=list)
    discarded: int = 0


def _aggregate(values: Sequence[float], how: str) -> float:
    if how not in NOISE_AGGREGATES:
        raise ValueError(f"unknown aggregate '{how}', expected one of {NOISE_AGGREGATES}")
    return float(np.max(values)) if how == "max" else float(np.mean(values))


def noise_deltas(
    objective: Objective,
    params: ParamVector,
    batch: Any,
    variant: str,
    r: float,
    samples: int,
    seed: int,
) -> tuple[list[float], int]:
    """Loss increases under ``samples`` random perturbations.

    Draw order: for each sample, one standard-normal array per segment in
    segment order. ``magnitude`` scales segment ``p`` by ``r * std(p)``;
    ``magflat`` perturbs by ``r * z * (|theta| + 1e-3)``.
    """
    if variant not in NOISE_VARIANTS:
        raise ValueError(f"unknown noise variant '{variant}', expected one of {NOISE_VARIANTS}")
    if samples < 1 or r < 0:
        raise ValueError("noise sharpness needs samples >= 1 and r >= 0")
    rng = np.random.default_rng(seed)
    base = objective.loss(params, batch)
    deltas: list[float] = []
    discarded = 0
    for _ in range(samples):
        noise = []
        for name, arr in params:
            z = rng.standard_normal(arr.shape)
            if variant == "magflat":
                noise.append((name, r * z * (np.abs(arr) + EPS_SCALE)))
            else:
                noise.append((name, r * float(np.std(arr)) * z))
        perturbed = params + type(params).from_arrays(noise)
        try:
            delta = objective.loss(perturbed, batch) - base
        except NonFiniteError:
            delta = float("nan")
        if not math.isfinite(delta):
            discarded += 1
            continue
        deltas.append(delta)
    return deltas, discarded


def noise_sharpness(
    objective: Objective,
    params: ParamVector,
    batch: Any,
    variant: str,
    r: float,
    samples: int,
    seed: int,
    theta0: ParamVector | None = None,
    aggregate: str = "max",
) -> NoiseResult:
    """Aggregated random-perturbation sharpness times the variant's magnitude factor."""
    raw_variant = "magflat" if variant == "magflat" else "magnitude"
    deltas, discarded = noise_deltas(objective, params, batch, raw_variant, r, samples, seed)
    if not deltas:
        raise MeasureError(f"all {samples} perturbed losses were non-finite")
    raw = _aggregate(deltas, aggregate)
    factor = magnitude_factor(params, variant, theta0)
    return NoiseResult(raw * factor, raw, factor, deltas, discarded)


def magnitude_factor(params: ParamVector, variant: str, theta0: ParamVector | None = None) -> float:
    """``|theta|/sqrt(d)``, ``|theta - theta0|/sqrt(d)`` (init variant) or 1 (magflat)."""
    root_d = math.sqrt(params.total_dim)
    if variant == "magflat":
        return 1.0
    if variant == "magnitude_init" and theta0 is not None:
        return (params - theta0).norm() / root_d
    return params.norm() / root_d


def gaussian_kl(mean_diff: np.ndarray, sigma_q: np.ndarray, sigma_p: float) -> float:
    """KL(N(mu_q, diag sigma_q^2) || N(mu_p, sigma_p^2 I)) with ``mean_diff = mu_q - mu_p``."""
    ratio = (np.asarray(sigma_q, dtype=np.float64) / sigma_p) ** 2
    diff = np.asarray(mean_diff, dtype=np.float64) ** 2 / sigma_p**2
    return float(0.5 * np.sum(diff + ratio - 1.0 - np.log(ratio)))


@dataclass(frozen=True)
class PacBayesResult:
    value: float
    gibbs_risk: float
    kl: float
    complexity: float
    n: int


def pac_bayes_complexity(kl: float, n: int, delta: float) -> float:
    return math.sqrt((kl + math.log(2.0 * math.sqrt(n) / delta)) / (2.0 * n))


def pac_bayes_bound(
    error_fn: Callable[[ParamVector], float],
    params: ParamVector,
    spec: PosteriorSpec,
    variant: str,
    n: int,
    seed: int,
    theta0: ParamVector | None = None,
) -> PacBayesResult:
    """``R_G + sqrt((KL(Q||P) + ln(2 sqrt(n)/delta)) / (2n))``.

    bound           sigma_q = sigma_post everywhere, prior at 0
    magnitude       sigma_q,i = sigma_post |theta_i|, prior at 0
    magnitude_init  sigma_q as magnitude, prior centred at theta0
    magflat         samples theta * (1 + sigma_post eps), sigma_q as magnitude, prior at 0

    ``sigma_q`` is floored at ``spec.var_floor``.
    """
    if variant not in PAC_BAYES_VARIANTS:
        raise ValueError(f"unknown PAC-Bayes variant '{variant}', expected one of {PAC_BAYES_VARIANTS}")
    if n < 1:
        raise ValueError("bound sample count must be >= 1")
    theta = params.flatten()
    if variant == "bound":
        sigma_q = np.full_like(theta, spec.sigma_post)
    else:
        sigma_q = spec.sigma_post * np.abs(theta)
    sigma_q = np.maximum(sigma_q, spec.var_floor)
    prior_mean = theta0.flatten() if (variant == "magnitude_init" and theta0 is not None) else np.zeros_like(theta)

    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(spec.samples):
        eps = rng.standard_normal(theta.shape)
        sample = theta * (1.0 + spec.sigma_post * eps) if variant == "magflat" else theta + sigma_q * eps
        errors.append(error_fn(params.unflatten(sample)))
    gibbs = float(np.mean(errors))
    kl = gaussian_kl(theta - prior_mean, sigma_q, spec.sigma_prior)
    complexity = pac_bayes_complexity(kl, n, spec.delta)
    return PacBayesResult(gibbs + complexity, gibbs, kl, complexity, n)


def flatness_proxy(batch_grads: np.ndarray, lam: float, agg: str = "mean") -> float:
    """Aggregate over coordinates of ``mean_b g_{b,i}^2 + lam``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if agg not in FLATNESS_AGGREGATES:
        raise ValueError(f"unknown aggregate '{agg}', expected one of {FLATNESS_AGGREGATES}")
    grads = np.atleast_2d(np.asarray(batch_grads, dtype=np.float64))
    precision = np.mean(grads**2, axis=0) + lam
    if agg == "mean":
        return float(np.mean(precision))
    if agg == "median":
        return float(np.median(precision))
    return float(hmean(precision))


_NOISE_NAMES = {
    "sharpness_magnitude": "magnitude",
    "sharpness_magnitude_init": "magnitude_init",
    "sharpness_magflat": "magflat",
}
_PAC_NAMES = {
    "pac_bayes_bound": "bound",
    "pac_bayes_magnitude": "magnitude",
    "pac_bayes_magnitude_init": "magnitude_init",
    "pac_bayes_magflat": "magflat",
}


class SharpnessMixin:
    """Perturbation sharpness, PAC-Bayes bounds, Fisher flatness and Hessian curvature."""

    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_sharpness(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        s = ctx.settings
        net = ctx.network
        out: dict[str, MeasureValue] = {}

        def sam() -> Any:
            result = sam_sharpness(net, ctx.params, ctx.eval_batches, s.sam_rho)
            if result.used_batches == 0:
                raise MeasureError("every batch gradient was below the degenerate threshold")
            return result.value, {"degenerate_batches": result.degenerate_batches}

        def adaptive() -> Any:
            result = adaptive_sharpness(net, ctx.params, ctx.eval_batches, s.adaptive_radii)
            return result.value, {f"ratio@{rho:g}": v for rho, v in result.ratios.items()}

        raw_cache: dict[str, tuple[list[float], int]] = {}

        def noise(variant: str) -> Any:
            key = "magflat" if variant == "magflat" else "magnitude"
            if key not in raw_cache:
                # magnitude and magnitude_init share one set of draws
                raw_cache[key] = noise_deltas(net, ctx.params, ctx.pool, key, s.noise_radius, s.noise_samples,
                                              ctx.stream_seed(f"sharpness_{key}"))
            deltas, discarded = raw_cache[key]
            if not deltas:
                raise MeasureError(f"all {s.noise_samples} perturbed losses were non-finite")
            raw = _aggregate(deltas, s.noise_aggregate)
            factor = magnitude_factor(ctx.params, variant, ctx.theta0)
            return raw * factor, {"raw": raw, "factor": factor, "discarded": discarded}

        def pac(variant: str, name: str) -> Any:
            n = s.bound_n or len(ctx.pool)
            result = pac_bayes_bound(lambda p: net.error_rate(p, ctx.pool), ctx.params, s.posterior("weight_noise"),
                                     variant, n, ctx.stream_seed(name), ctx.theta0)
            return result.value, {"gibbs_risk": result.gibbs_risk, "kl": result.kl, "n": result.n}

        def top_eigenvalue() -> Any:
            result = hessian_top_eigenvalue(net, ctx.params, ctx.pool, s.power_iters, s.power_tol,
                                            ctx.stream_seed("hessian_top_eigenvalue"), s.hvp_method)
            if not result.converged:
                raise MeasureError(f"power iteration did not converge in {result.iterations} iterations",
                                   {"last_iterate": result.value})
            return result.value, {"iterations": result.iterations}

        def trace() -> Any:
            result = hessian_trace(net, ctx.params, ctx.pool, s.hutchinson_samples,
                                   ctx.stream_seed("hessian_trace"), s.hvp_method)
            return result.value, {"std_error": float(np.std(result.estimates) / math.sqrt(len(result.estimates)))}

        thunks: dict[str, Callable[[], Any]] = {
            "sharpness": sam,
            "adaptive_sharpness": adaptive,
            "flatness_proxy": lambda: flatness_proxy(ctx.batch_grads, s.flatness_lambda, s.flatness_aggregate),
            "hessian_top_eigenvalue": top_eigenvalue,
            "hessian_trace": trace,
        }
        for name, variant in _NOISE_NAMES.items():
            thunks[name] = lambda v=variant: noise(v)
        for name, variant in _PAC_NAMES.items():
            thunks[name] = lambda v=variant, n=name: pac(v, n)

        for name in wanted:
            out[name] = self._guard(name, thunks[name])
        return out

"""Information-criterion bias terms: AIC, AICc, TIC and WAIC."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.special import log_softmax, logsumexp

from core.errors import InsufficientDataError

from .constants import EPS_TIC
from .curvature import hessian_diagonal

if TYPE_CHECKING:
    from core.autodiff.network import Network
    from core.autodiff.params import ParamVector
    from core.training.datasets import LabeledBatch
    from core.training.records import MeasureValue

    from .context import MeasureContext
    from .settings import PosteriorSpec


def aic_bias(k: int) -> float:
    return 2.0 * k


def aicc_bias(k: int, n: int) -> float:
    """``2k + 2k(k+1)/(n-k-1)``; undefined unless ``n > k + 1``."""
    if n <= k + 1:
        raise InsufficientDataError(f"AICc needs more samples than parameters + 1 (n={n}, k={k})")
    return 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def tic_bias(fisher_diag: np.ndarray, hessian_diag: np.ndarray, eps: float = EPS_TIC) -> float:
    """``sum_j J_jj / (I_jj + eps)`` with J the gradient outer-product and I the Hessian diagonal."""
    return float(np.sum(np.asarray(fisher_diag) / (np.asarray(hessian_diag) + eps)))


def tic_bias_bound(fisher_diag: np.ndarray, hessian_diag: np.ndarray, eps: float = EPS_TIC) -> float:
    """``sum_j J_jj / max(min_j I_jj, eps)``."""
    return float(np.sum(fisher_diag) / max(float(np.min(hessian_diag)), eps))


def waic_terms(log_lik: np.ndarray) -> tuple[float, float]:
    """``(bias, lppd)`` from an ``S x N`` matrix of per-draw log-likelihoods.

    bias is ``2 sum_n Var_s log p(y_n | x_n, theta_s)`` with the sample
    variance; lppd is ``sum_n log mean_s p``.
    """
    ll = np.asarray(log_lik, dtype=np.float64)
    if ll.ndim != 2 or ll.shape[0] < 2:
        raise InsufficientDataError("WAIC needs at least two posterior draws")
    bias = 2.0 * float(np.sum(np.var(ll, axis=0, ddof=1)))
    lppd = float(np.sum(logsumexp(ll, axis=0) - math.log(ll.shape[0])))
    return bias, lppd


def posterior_log_likelihood(
    network: Network, params: ParamVector, pool: LabeledBatch, spec: PosteriorSpec, seed: int
) -> np.ndarray:
    """Per-draw log-likelihood of each sample's label, shape ``S x N``.

    ``mc_dropout`` keeps dropout active with one mask stream per draw;
    ``weight_noise`` adds ``sigma_post * z`` to every parameter.
    """
    rows = np.arange(len(pool))
    rng = np.random.default_rng(seed)
    draws = []
    for s in range(spec.samples):
        if spec.mode == "mc_dropout":
            logits = network.logits(params, pool.inputs, mode="train", dropout_key=(seed, s))
        else:
            noisy = params.unflatten(params.flatten() + spec.sigma_post * rng.standard_normal(params.total_dim))
            logits = network.logits(noisy, pool.inputs)
        draws.append(log_softmax(logits, axis=1)[rows, pool.labels])
    return np.stack(draws)


class InformationMixin:
    """Complexity penalties of classic information criteria."""

    logger: logging.Logger
    _guard: Callable[..., MeasureValue]

    def _measure_information_criteria(self, ctx: MeasureContext, wanted: list[str]) -> dict[str, MeasureValue]:
        s = ctx.settings
        k = ctx.params.total_dim
        n = len(ctx.pool)
        nll_sum = float(np.sum(ctx.per_sample_ce))
        cache: dict[str, np.ndarray] = {}

        def diagonals() -> tuple[np.ndarray, np.ndarray]:
            if "J" not in cache:
                cache["J"] = np.mean(ctx.per_sample_grads**2, axis=0)
                cache["I"] = hessian_diagonal(ctx.network, ctx.params, ctx.pool, ctx.stream_seed("tic_bias_term"),
                                              s.hvp_method, s.hutchinson_samples)
            return cache["J"], cache["I"]

        def tic() -> Any:
            bias = tic_bias(*diagonals())
            return bias, {"tic": nll_sum / n + bias / n}

        def waic() -> Any:
            mode = "mc_dropout" if ctx.dropout_p > 0 else "weight_noise"
            ll = posterior_log_likelihood(ctx.network, ctx.params, ctx.pool, s.posterior(mode),
                                          ctx.stream_seed("waic_bias_term"))
            bias, lppd = waic_terms(ll)
            return bias, {"posterior": mode, "lppd": lppd, "waic": -2.0 * lppd + bias}

        thunks: dict[str, Callable[[], Any]] = {
            "aic_bias_term": lambda: (aic_bias(k), {"aic": 2.0 * nll_sum + aic_bias(k)}),
            "aicc_bias_term": lambda: aicc_bias(k, n),
            "tic_bias_term": tic,
            "tic_bias_term_bound": lambda: tic_bias_bound(*diagonals()),
            "waic_bias_term": waic,
        }
        return {name: self._guard(name, thunks[name]) for name in wanted}

"""Conditional mutual information between measure and gap sign changes.

Over ordered run pairs ``(i, j)``, ``i != j``, the ternary variables
``V = sign(a_i - a_j)`` are formed for the measure and the gap. A measure is
scored by the minimum, over small sets ``S`` of hyperparameter axes, of
``I(V_mu; V_g | U_S) / H(V_g | U_S)`` where ``U_S`` labels each pair by the
two runs' tokens on ``S``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.stats import entropy

from core.errors import InsufficientDataError

from .gaps import common_runs

logger = logging.getLogger(__name__)

DEFAULT_PAIR_CAP = 50_000
DEFAULT_DEPTH = 2
DEGENERATE_ENTROPY = 1e-12


@dataclass(frozen=True)
class SignPairs:
    first: np.ndarray
    second: np.ndarray
    v_a: np.ndarray
    v_b: np.ndarray


def pair_indices(n: int, cap: int = DEFAULT_PAIR_CAP, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Ordered pairs ``i != j`` in row-major order, uniformly subsampled to ``cap`` when larger."""
    total = n * (n - 1)
    if total <= cap:
        flat = np.arange(total)
    else:
        flat = np.sort(np.random.default_rng(seed).choice(total, size=cap, replace=False))
    i = flat // (n - 1) if n > 1 else flat
    r = flat % (n - 1) if n > 1 else flat
    j = r + (r >= i)
    return i.astype(np.int64), j.astype(np.int64)


def sign_pairs(
    a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray, cap: int = DEFAULT_PAIR_CAP, seed: int = 0
) -> SignPairs:
    """Ternary sign differences of two aligned series over the same pair set."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"series lengths differ: {a.shape} vs {b.shape}")
    i, j = pair_indices(len(a), cap, seed)
    return SignPairs(i, j, np.sign(a[i] - a[j]), np.sign(b[i] - b[j]))


@dataclass(frozen=True)
class NcmiResult:
    value: float
    conditional_entropy: float
    degenerate: bool = False


def _codes(labels: np.ndarray) -> np.ndarray:
    return np.unique(labels, return_inverse=True, axis=0)[1].reshape(-1)


def ncmi(v_mu: np.ndarray, v_g: np.ndarray, strata: np.ndarray | None = None) -> NcmiResult:
    """``I(V_mu; V_g | U) / H(V_g | U)`` from plug-in frequencies, natural log, clamped to [0, 1].

    ``strata`` holds one label per pair (any array ``np.unique`` can group);
    ``None`` conditions on nothing. ``H(V_g | U) == 0`` is degenerate.
    """
    v_mu = np.asarray(v_mu)
    v_g = np.asarray(v_g)
    n = len(v_g)
    if n == 0:
        raise InsufficientDataError("no pairs to estimate from")
    u = np.zeros(n, dtype=np.int64) if strata is None else _codes(np.asarray(strata))
    info = 0.0
    h_g = 0.0
    for code in np.unique(u):
        mask = u == code
        weight = mask.sum() / n
        mu_s, g_s = v_mu[mask], v_g[mask]
        joint = np.unique(np.stack([mu_s, g_s], axis=1), axis=0, return_counts=True)[1]
        h_mu_s = entropy(np.unique(mu_s, return_counts=True)[1])
        h_g_s = entropy(np.unique(g_s, return_counts=True)[1])
        info += weight * (h_mu_s + h_g_s - entropy(joint))
        h_g += weight * h_g_s
    if h_g <= DEGENERATE_ENTROPY:
        return NcmiResult(float("nan"), float(h_g), degenerate=True)
    return NcmiResult(float(np.clip(info / h_g, 0.0, 1.0)), float(h_g))


@dataclass(frozen=True)
class CmiScore:
    k: float
    argmin_subset: tuple[str, ...]
    per_subset: dict[tuple[str, ...], float] = field(default_factory=dict)
    degenerate_subsets: tuple[tuple[str, ...], ...] = ()


def _pair_labels(tokens: np.ndarray, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    return np.concatenate([tokens[first], tokens[second]], axis=1)


def cmi_score(
    configs: dict[str, dict[str, str]],
    measure: dict[str, float],
    gap: dict[str, float],
    axes: Sequence[str],
    depth: int = DEFAULT_DEPTH,
    cap: int = DEFAULT_PAIR_CAP,
    seed: int = 0,
) -> CmiScore:
    """``K(mu)``: minimum NCMI over every axis subset of size at most ``depth``.

    Degenerate subsets are excluded from the minimum and listed; ties in
    the minimum go to the first subset in enumeration order.
    """
    runs = common_runs(measure, gap)
    if len(runs) < 2:
        raise InsufficientDataError("CMI needs at least two runs with measure and gap values")
    pairs = sign_pairs([measure[r] for r in runs], [gap[r] for r in runs], cap, seed)
    axes = list(axes)
    tokens = np.array([[configs[r].get(a, "") for a in axes] for r in runs], dtype=object).astype(str)
    per_subset: dict[tuple[str, ...], float] = {}
    degenerate: list[tuple[str, ...]] = []
    for size in range(min(depth, len(axes)) + 1):
        for subset in combinations(range(len(axes)), size):
            names = tuple(axes[k] for k in subset)
            strata = None if not subset else _pair_labels(tokens[:, list(subset)], pairs.first, pairs.second)
            result = ncmi(pairs.v_a, pairs.v_b, strata)
            if result.degenerate:
                logger.info("Conditioning set %s is degenerate (H(V_g|U) = 0)", names or "()")
                degenerate.append(names)
                continue
            per_subset[names] = result.value
    if not per_subset:
        raise InsufficientDataError("every conditioning set is degenerate")
    argmin = min(per_subset, key=lambda s: per_subset[s])
    return CmiScore(per_subset[argmin], argmin, per_subset, tuple(degenerate))

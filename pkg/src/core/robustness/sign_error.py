"""Environment-level sign error between a measure and a gap.

An environment is a pair of hyperparameter combinations (seed excluded) that
differ on exactly one axis; runs are paired across the two combinations.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Callable, Iterable
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from core.errors import InsufficientDataError

from .gaps import common_runs
from .subspaces import SEED_AXIS

logger = logging.getLogger(__name__)

DEFAULT_N_EFF_THRESHOLD = 5.0

Combo = tuple[tuple[str, str], ...]
PairWeight = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def uniform_weight(mu_i: np.ndarray, mu_j: np.ndarray, g_i: np.ndarray, g_j: np.ndarray) -> np.ndarray:
    """Every pair weighs 1."""
    return np.ones_like(mu_i, dtype=np.float64)


@dataclass(frozen=True, order=True)
class Environment:
    combo_a: Combo
    combo_b: Combo
    differing_axis: str


@dataclass(frozen=True)
class EnvironmentSignError:
    sign_error: float
    n_eff: float
    n_pairs: int


@dataclass(frozen=True)
class SignErrorSummary:
    values: tuple[float, ...]
    mean: float
    p90: float
    max: float
    n_environments: int
    n_filtered: int
    empty: bool = False


def _combo(config: dict[str, str], seed_axis: str) -> Combo:
    return tuple(sorted((a, t) for a, t in config.items() if a != seed_axis))


def _differing_axis(a: Combo, b: Combo) -> str | None:
    da, db = dict(a), dict(b)
    if da.keys() != db.keys():
        return None
    diff = [axis for axis in da if da[axis] != db[axis]]
    return diff[0] if len(diff) == 1 else None


def enumerate_environments(
    configs: dict[str, dict[str, str]], seed_axis: str = SEED_AXIS
) -> dict[Environment, tuple[list[str], list[str]]]:
    """Every combination pair differing on exactly one axis, with the run ids of each side."""
    groups: dict[Combo, list[str]] = defaultdict(list)
    for run_id in sorted(configs):
        groups[_combo(configs[run_id], seed_axis)].append(run_id)
    envs: dict[Environment, tuple[list[str], list[str]]] = {}
    for a, b in combinations(sorted(groups), 2):
        axis = _differing_axis(a, b)
        if axis is not None:
            envs[Environment(a, b, axis)] = (groups[a], groups[b])
    return envs


def sign_error_environment(
    mu_a: np.ndarray,
    g_a: np.ndarray,
    mu_b: np.ndarray,
    g_b: np.ndarray,
    weight: PairWeight = uniform_weight,
) -> EnvironmentSignError:
    """Weighted mean of ``(1 - sign(dmu) sign(dg)) / 2`` over all cross pairs.

    ``n_eff = (sum w)^2 / sum w^2``.
    """
    if len(mu_a) == 0 or len(mu_b) == 0:
        raise InsufficientDataError("environment has no cross-combination pairs")
    i, j = np.meshgrid(np.arange(len(mu_a)), np.arange(len(mu_b)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    mi, mj, gi, gj = mu_a[i], mu_b[j], g_a[i], g_b[j]
    loss = (1.0 - np.sign(mi - mj) * np.sign(gi - gj)) / 2.0
    w = np.asarray(weight(mi, mj, gi, gj), dtype=np.float64)
    total = float(w.sum())
    if total <= 0:
        raise InsufficientDataError("pair weights sum to zero")
    return EnvironmentSignError(float(np.sum(w * loss) / total), total**2 / float(np.sum(w**2)), len(loss))


def sign_error_distribution(
    configs: dict[str, dict[str, str]],
    measure: dict[str, float],
    gap: dict[str, float],
    n_eff_threshold: float = DEFAULT_N_EFF_THRESHOLD,
    weight: PairWeight = uniform_weight,
    seed_axis: str = SEED_AXIS,
) -> SignErrorSummary:
    """Sign error over environments whose ``n_eff`` reaches the threshold.

    p90 is the lower order statistic. With no surviving environment the
    summary is flagged ``empty`` and its statistics are NaN.
    """
    usable = set(common_runs(measure, gap))
    envs = enumerate_environments({r: c for r, c in configs.items() if r in usable}, seed_axis)
    kept: list[float] = []
    filtered = 0
    for runs_a, runs_b in envs.values():
        result = sign_error_environment(
            np.array([measure[r] for r in runs_a]), np.array([gap[r] for r in runs_a]),
            np.array([measure[r] for r in runs_b]), np.array([gap[r] for r in runs_b]),
            weight,
        )
        if result.n_eff < n_eff_threshold:
            filtered += 1
            continue
        kept.append(result.sign_error)
    if filtered:
        logger.info("Filtered %d of %d environments below n_eff %.3g", filtered, len(envs), n_eff_threshold)
    return replace(summarize(kept), n_environments=len(envs), n_filtered=filtered)


def summarize(values: Iterable[float]) -> SignErrorSummary:
    """Mean, lower-order-statistic p90 and max of environment sign errors."""
    v = np.array(list(values), dtype=np.float64)
    if v.size == 0:
        nan = float("nan")
        return SignErrorSummary((), nan, nan, nan, 0, 0, empty=True)
    return SignErrorSummary(tuple(float(x) for x in v), float(v.mean()),
                            float(np.quantile(v, 0.9, method="lower")), float(v.max()), int(v.size), 0)

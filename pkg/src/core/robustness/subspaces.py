"""Granulated Kendall score over single-axis subspaces of the grid."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from core.errors import InsufficientDataError

from .gaps import common_runs
from .kendall import kendall_tau

logger = logging.getLogger(__name__)

SEED_AXIS = "seed"
MIN_SUBSPACE_SIZE = 2


@dataclass(frozen=True, order=True)
class SubspaceKey:
    """Runs sharing ``fixed`` on every axis other than ``varied_axis``."""

    varied_axis: str
    fixed: tuple[tuple[str, str], ...]


def _fixed(config: dict[str, str], drop: Iterable[str]) -> tuple[tuple[str, str], ...]:
    skip = set(drop)
    return tuple(sorted((axis, token) for axis, token in config.items() if axis not in skip))


def enumerate_subspaces(
    configs: dict[str, dict[str, str]], axis: str, exclude: Iterable[str] = ()
) -> dict[SubspaceKey, list[str]]:
    """Group run ids by every axis except ``axis`` (and ``exclude``); groups smaller than 2 are dropped.

    Tokens are compared as strings, never parsed.
    """
    groups: dict[SubspaceKey, list[str]] = defaultdict(list)
    for run_id in sorted(configs):
        config = configs[run_id]
        if axis not in config:
            continue
        groups[SubspaceKey(axis, _fixed(config, {axis, *exclude}))].append(run_id)
    return {key: members for key, members in sorted(groups.items()) if len(members) >= MIN_SUBSPACE_SIZE}


@dataclass(frozen=True)
class AxisScore:
    axis: str
    mean_tau: float
    n_subspaces: int


@dataclass(frozen=True)
class PsiResult:
    per_axis: dict[str, AxisScore]
    psi: float
    absent_axes: tuple[str, ...] = ()


def _subspace_tau(members: list[str], measure: dict[str, float], gap: dict[str, float]) -> float | None:
    if len(members) < MIN_SUBSPACE_SIZE:
        return None
    x = np.array([measure[r] for r in members])
    y = np.array([gap[r] for r in members])
    return kendall_tau(x, y)


def granulated_psi(
    configs: dict[str, dict[str, str]],
    measure: dict[str, float],
    gap: dict[str, float],
    axes: Iterable[str],
    seed_conditional: bool = False,
    seed_axis: str = SEED_AXIS,
) -> PsiResult:
    """Per-axis mean of within-subspace tau and their average Psi.

    Only runs with both a measure value and a gap enter. In seed-conditional
    mode subspaces ignore the seed axis, tau is computed per seed inside each
    one and those taus are averaged first. An axis without any valid subspace
    is reported absent, never as zero.
    """
    usable = set(common_runs(measure, gap))
    configs = {r: c for r, c in configs.items() if r in usable}
    per_axis: dict[str, AxisScore] = {}
    absent: list[str] = []
    for axis in axes:
        taus: list[float] = []
        if seed_conditional and axis != seed_axis:
            for members in enumerate_subspaces(configs, axis, exclude=(seed_axis,)).values():
                by_seed: dict[str, list[str]] = defaultdict(list)
                for run_id in members:
                    by_seed[configs[run_id].get(seed_axis, "")].append(run_id)
                seed_taus = [t for s in sorted(by_seed) if (t := _subspace_tau(by_seed[s], measure, gap)) is not None]
                if seed_taus:
                    taus.append(float(np.mean(seed_taus)))
        else:
            for members in enumerate_subspaces(configs, axis).values():
                tau = _subspace_tau(members, measure, gap)
                if tau is not None:
                    taus.append(tau)
        if not taus:
            logger.info("Axis %s has no subspace with %d or more runs", axis, MIN_SUBSPACE_SIZE)
            absent.append(axis)
            continue
        per_axis[axis] = AxisScore(axis, float(np.mean(taus)), len(taus))
    if not per_axis:
        raise InsufficientDataError("no axis has a valid subspace")
    psi = float(np.mean([score.mean_tau for score in per_axis.values()]))
    return PsiResult(per_axis, psi, tuple(absent))

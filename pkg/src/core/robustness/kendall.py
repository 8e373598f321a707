"""Kendall rank correlation without tie correction."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from core.errors import InsufficientDataError


def pair_signs(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """``sign(v_i - v_j)`` for every ``i < j`` in row-major order."""
    v = np.asarray(values, dtype=np.float64)
    i, j = np.triu_indices(len(v), k=1)
    return np.sign(v[i] - v[j])


def kendall_tau(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """``2 / (N (N-1)) * sum_{i<j} sign(x_i - x_j) sign(y_i - y_j)``.

    Ties contribute 0 and are not corrected for, so a series with ties can
    never reach |tau| = 1.
    """
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"Kendall tau needs at least 2 points, got {n}")
    concordance = float(np.sum(pair_signs(x) * pair_signs(y)))
    return 2.0 * concordance / (n * (n - 1))

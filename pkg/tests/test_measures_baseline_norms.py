"""Tests for baseline, margin and norm-based measures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.autodiff.params import ParamVector
from core.errors import InsufficientDataError, MeasureError
from core.measures.baseline import baseline_outputs, negative_entropy, vcdim
from core.measures.norms import (
    clip_signed,
    fisher_rao_norm,
    margin_stats,
    margins,
    path_norm,
    spectral_norm,
    spectral_summary,
)


def test_vcdim_uses_natural_log():
    """One parameter gives 0; thirteen give 13 ln 13."""
    assert vcdim(1) == 0.0
    assert vcdim(13) == pytest.approx(13 * math.log(13))
    assert vcdim(13) == pytest.approx(33.34, abs=5e-3)
    with pytest.raises(MeasureError):
        vcdim(0)


def test_negative_entropy_of_uniform_predictor():
    """A uniform two-class predictor has negative entropy -ln 2."""
    assert negative_entropy(np.zeros((5, 2))) == pytest.approx(-math.log(2))


def test_baseline_outputs_report_size_and_loss():
    """Baseline outputs read the parameter count, norm and mean CE."""
    params = ParamVector.from_arrays([("W0", np.array([[3.0, 4.0]])), ("b0", np.zeros(2))])
    out = baseline_outputs(params, np.zeros((2, 2)), np.array([0.5, 1.5]))
    assert out["params"] == 4.0
    assert out["magnitude"] == pytest.approx(5.0)
    assert out["cross_entropy"] == pytest.approx(1.0)


def test_margins_and_lower_quantile():
    """Margins of 2 everywhere give a 10th-percentile margin of 2."""
    logits = np.array([[3.0, 1.0], [0.0, 2.0], [5.0, 3.0]])
    labels = np.array([0, 1, 0])
    assert np.allclose(margins(logits, labels), [2.0, 2.0, 2.0])
    assert margin_stats(logits, labels).quantile == 2.0


def test_margin_quantile_is_an_order_statistic():
    """The quantile is an observed margin, never an interpolation."""
    logits = np.array([[1.0, 0.0], [0.0, 3.0], [0.0, 5.0], [-1.0, 0.0]])
    labels = np.array([0, 1, 1, 0])
    stats = margin_stats(logits, labels, p=0.5)
    assert stats.quantile in set(stats.margins)


def test_margin_stats_need_samples():
    """An empty pool has no margins."""
    with pytest.raises(InsufficientDataError):
        margin_stats(np.zeros((0, 2)), np.zeros(0, dtype=int))


def test_clip_signed_keeps_sign_and_floor():
    """Small or zero margins are floored at eps, keeping their sign."""
    assert clip_signed(0.0, 1e-6) == 1e-6
    assert clip_signed(-1e-9, 1e-6) == -1e-6
    assert clip_signed(-2.0, 1e-6) == -2.0


def test_spectral_norm_of_diagonal_and_rank_one():
    """diag(2, 1) has norm 2; u v^T has norm |u||v|."""
    assert spectral_norm(np.diag([2.0, 1.0])).value == pytest.approx(2.0, abs=1e-6)
    u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    result = spectral_norm(np.outer(u, v))
    assert result.converged
    assert result.value == pytest.approx(15.0, rel=1e-9)


def test_spectral_norm_matches_svd():
    """Power iteration agrees with the SVD on a random 6x4 matrix."""
    a = np.random.default_rng(4).standard_normal((6, 4))
    result = spectral_norm(a)
    assert result.converged
    assert abs(result.value - np.linalg.svd(a, compute_uv=False)[0]) < 1e-6


@pytest.mark.parametrize("shape", [(8, 8), (8, 3), (2, 8), (5, 5)])
def test_spectral_norm_matches_svd_across_seeds(shape):
    """With the default budget every small Gaussian matrix converges to its top singular value."""
    for seed in range(200):
        a = np.random.default_rng(seed).standard_normal(shape)
        result = spectral_norm(a, seed=seed)
        assert result.converged, seed
        assert abs(result.value - np.linalg.svd(a, compute_uv=False)[0]) <= 1e-6, seed


def test_spectral_norm_with_tied_singular_values():
    """Equal leading singular values do not stall the iteration."""
    q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 8)))
    a = q @ np.diag([3.0, 3.0, 3.0 - 1e-7, 1.0, 0.5, 0.5, 0.2, 0.1])
    result = spectral_norm(a)
    assert result.converged
    assert result.value == pytest.approx(3.0, abs=1e-6)


def test_spectral_norm_reports_an_exhausted_budget():
    """One iteration on a generic matrix is not enough to converge."""
    a = np.random.default_rng(0).standard_normal((8, 8))
    result = spectral_norm(a, iters=1)
    assert not result.converged
    assert result.iterations == 1


def test_spectral_norm_of_zero_matrix():
    """A zero matrix has norm 0 without iterating."""
    result = spectral_norm(np.zeros((3, 3)))
    assert result.value == 0.0 and result.iterations == 0


def test_spectral_summary():
    """Per-layer norms {2, 1} give sum 3, product 2 and mean 1.5."""
    assert spectral_summary([2.0, 1.0]) == pytest.approx(
        {"spec_sum": 3.0, "spec_prod": 2.0, "spectral_norm_per_layer": 1.5}
    )
    assert spectral_summary([2.0, 0.0])["spec_prod"] == 0.0


def _chain(a, b):
    return ParamVector.from_arrays(
        [("W0", np.array([[a]])), ("b0", np.zeros(1)), ("W1", np.array([[b]])), ("b1", np.zeros(1))]
    )


def test_path_norm_of_scalar_chain():
    """A 1-1-1 chain with weights 2 and 3 has path norm (2*3)^2 = 36."""
    assert path_norm(_chain(2.0, 3.0)) == pytest.approx(36.0)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.1, 10.0), b=st.floats(0.1, 10.0))
def test_path_norm_scales_with_fourth_power_of_weights(a, b):
    """Doubling every weight of a bias-free chain multiplies the path norm by 16."""
    assert path_norm(_chain(2 * a, 2 * b)) == pytest.approx(16 * path_norm(_chain(a, b)), rel=1e-9)


def test_path_norm_counts_biases():
    """Squared biases enter the forward pass."""
    params = ParamVector.from_arrays([("W0", np.array([[1.0]])), ("b0", np.array([2.0]))])
    assert path_norm(params) == pytest.approx(5.0)


def test_fisher_rao_norm_vanishes_for_orthogonal_gradients():
    """Gradients orthogonal to theta give a Fisher-Rao norm of 0."""
    theta = np.array([1.0, 0.0])
    grads = np.array([[0.0, 2.0], [0.0, -1.0]])
    assert fisher_rao_norm(theta, grads) == 0.0
    assert fisher_rao_norm(theta, np.array([[3.0, 0.0], [1.0, 5.0]])) == pytest.approx(math.sqrt(5.0))

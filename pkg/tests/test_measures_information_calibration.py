"""Tests for gradient statistics, information criteria and calibration measures."""

import math

import numpy as np
import pytest
from scipy.special import softmax

from core.errors import InsufficientDataError
from core.measures.calibration import (
    adaptive_calibration_error,
    bin_confidences,
    calibration_from_probs,
    mean_ce,
    temperature_scale,
)
from core.measures.information import aic_bias, aicc_bias, tic_bias, tic_bias_bound, waic_terms
from core.measures.optimization import gradient_noise_scale, gradient_norm, mean_gradient_variance


def test_gradient_variance_and_noise_scale():
    """Batch gradients {0, 2} have variance 1 and noise scale about 1."""
    grads = np.array([[0.0], [2.0]])
    assert mean_gradient_variance(grads) == pytest.approx(1.0)
    assert gradient_noise_scale(grads) == pytest.approx(1.0, rel=1e-9)


def test_gradient_variance_needs_two_batches():
    """A single batch has no variance."""
    with pytest.raises(InsufficientDataError):
        mean_gradient_variance(np.ones((1, 3)))


def test_gradient_norm_aggregates():
    """Per-batch norms are aggregated with the configured statistic."""
    grads = np.array([[3.0, 4.0], [0.0, 1.0]])
    assert gradient_norm(grads) == pytest.approx(3.0)
    assert gradient_norm(grads, aggregate="max") == pytest.approx(5.0)
    assert gradient_norm(grads, norm="l1", aggregate="max") == pytest.approx(7.0)
    assert gradient_norm(grads, norm="linf", aggregate="median") == pytest.approx(2.5)


def test_aic_and_aicc():
    """AIC's penalty is 2k; AICc adds the small-sample correction."""
    assert aic_bias(10) == 20.0
    assert aicc_bias(10, 100) == pytest.approx(20.0 + 2 * 10 * 11 / 89)
    with pytest.raises(InsufficientDataError):
        aicc_bias(10, 11)


def test_tic_with_matching_fisher_and_hessian():
    """J = I = (2, 2) gives a TIC penalty of 2, the parameter count."""
    j = np.array([2.0, 2.0])
    assert tic_bias(j, j) == pytest.approx(2.0)
    assert tic_bias_bound(j, np.array([2.0, 4.0])) == pytest.approx(2.0)


def test_waic_with_identical_draws():
    """Identical posterior draws carry no variance penalty."""
    ll = np.tile(np.log([0.5, 0.25, 0.8]), (4, 1))
    bias, lppd = waic_terms(ll)
    assert bias == 0.0
    assert lppd == pytest.approx(float(np.sum(np.log([0.5, 0.25, 0.8]))))


def test_waic_needs_two_draws():
    """One draw cannot estimate a variance."""
    with pytest.raises(InsufficientDataError):
        waic_terms(np.zeros((1, 5)))


def test_calibrated_bin_has_no_error():
    """Confidence 0.8 with accuracy 0.8 gives zero ECE and MCE."""
    binned = bin_confidences(np.full(10, 0.8), np.array([1] * 8 + [0] * 2), bins=15)
    assert binned.ece == pytest.approx(0.0, abs=1e-12)
    assert binned.mce == pytest.approx(0.0, abs=1e-12)


def test_two_bin_calibration_errors():
    """Equal-count bins with gaps 0.1 and 0.3 give ECE 0.2, MCE 0.3, reliability 0.2."""
    conf = np.array([0.4] * 10 + [0.9] * 10)
    correct = np.array([1] * 3 + [0] * 7 + [1] * 6 + [0] * 4)
    binned = bin_confidences(conf, correct, bins=2)
    assert binned.ece == pytest.approx(0.2)
    assert binned.mce == pytest.approx(0.3)
    assert binned.reliability == pytest.approx(0.2)


def test_bins_are_right_closed():
    """A confidence of exactly 0.5 falls in the lower of two bins."""
    binned = bin_confidences(np.array([0.5, 1.0]), np.array([1, 1]), bins=2)
    assert list(binned.counts) == [1.0, 1.0]
    assert list(binned.confidence) == [0.5, 1.0]


def test_calibration_needs_predictions():
    """An empty pool is insufficient data."""
    with pytest.raises(InsufficientDataError):
        bin_confidences(np.array([]), np.array([]), bins=5)


def test_confident_correct_predictions_are_calibrated():
    """One-hot correct predictions have zero ECE and ACE."""
    labels = np.array([0, 1, 2, 1])
    probs = np.eye(3)[labels]
    assert calibration_from_probs(probs, labels, 10).ece == 0.0
    assert adaptive_calibration_error(probs, labels, 2) == 0.0


def test_ace_orders_ties_by_label():
    """Uniform predictions on balanced labels: one bin is calibrated, two bins split by label."""
    labels = np.array([0, 1, 0, 1])
    probs = np.full((4, 2), 0.5)
    assert adaptive_calibration_error(probs, labels, 1) == pytest.approx(0.0)
    assert adaptive_calibration_error(probs, labels, 2) == pytest.approx(0.5)


def _sampled_pool(scale, n=20000, seed=0):
    rng = np.random.default_rng(seed)
    logits = rng.normal(0.0, 2.0, size=(n, 3))
    p = softmax(logits, axis=1)
    labels = np.minimum((rng.random(n)[:, None] > np.cumsum(p, axis=1)).sum(axis=1), 2)
    return scale * logits, labels


def test_temperature_of_calibrated_logits_is_one():
    """Labels drawn from softmax(z) need no rescaling."""
    logits, labels = _sampled_pool(1.0)
    result = temperature_scale(logits, labels, bins=15)
    assert result.temperature == pytest.approx(1.0, rel=0.1)
    assert result.ce_after <= result.ce_before + 1e-12


def test_temperature_undoes_logit_scaling():
    """Doubling calibrated logits is undone by T about 2."""
    logits, labels = _sampled_pool(2.0)
    result = temperature_scale(logits, labels, bins=15)
    assert result.temperature == pytest.approx(2.0, rel=0.1)
    assert result.ece_after < result.ece_before
    assert result.ce_after == pytest.approx(mean_ce(logits, labels, result.temperature))


def test_mean_ce_at_unit_temperature():
    """Zero logits give ln K."""
    assert mean_ce(np.zeros((3, 4)), np.array([0, 1, 2])) == pytest.approx(math.log(4))

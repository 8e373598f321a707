"""Tests for synthetic datasets, shifts, optimizers and the training loop."""

import numpy as np
import pytest

from core.autodiff.params import ParamVector
from core.errors import ConfigError
from core.training.datasets import (
    DatasetSpec,
    LabeledBatch,
    apply_shift,
    balanced_labels,
    export_csv,
    load_csv,
    make_dataset,
    shift_magnitude,
)
from core.training.models import ModelSpec, TrainConfig, init_params
from core.training.optimizers import adam_step, init_state, rmsprop_step, sgd_step
from core.training.records import RunRecord
from core.training.trainer import evaluate, train_run


@pytest.fixture
def blobs():
    return make_dataset("blobs", 40, 2, noise=0.3, generator_seed=5)


def _cfg(**overrides):
    base = {"optimizer": "sgd", "learning_rate": 0.1, "batch_size": 8, "weight_decay": 0.0, "epochs": 3, "seed": 1}
    return TrainConfig(**{**base, **overrides})


def test_noise_free_blobs_sit_on_class_centers():
    """Without noise every sample of a class is the same point."""
    bundle = make_dataset("blobs", 40, 2, noise=0.0, generator_seed=0)
    centers = {tuple(np.round(x, 12)) for x in bundle.train.inputs}
    assert len(centers) == 2


def test_moons_are_balanced():
    """Moons with n=200 split 100/100."""
    bundle = make_dataset("moons", 200, 2, noise=0.1, generator_seed=3)
    assert list(bundle.train.class_counts()) == [100, 100]
    assert list(bundle.test_iid.class_counts()) == [100, 100]


def test_balanced_labels_spread_the_remainder():
    """The first n % K classes get one extra label."""
    assert list(np.bincount(balanced_labels(7, 3))) == [3, 2, 2]


def test_generation_is_deterministic():
    """The same generator seed reproduces every pool exactly."""
    a = make_dataset("spiral", 60, 3, noise=0.2, generator_seed=9)
    b = make_dataset("spiral", 60, 3, noise=0.2, generator_seed=9)
    assert a.train.equals(b.train)
    assert a.test_iid.equals(b.test_iid)
    assert all(a.shifted(s).equals(b.shifted(s)) for s in range(1, 6))


def test_dataset_validation():
    """Bad kinds, class counts and sizes are config errors."""
    with pytest.raises(ConfigError):
        make_dataset("rings", 40, 2, 0.1, 0)
    with pytest.raises(ConfigError):
        make_dataset("moons", 60, 3, 0.1, 0)
    with pytest.raises(ConfigError):
        make_dataset("blobs", 15, 2, 0.1, 0)


def test_rotation_preserves_norms(blobs):
    """Rotation keeps every input's norm and never touches labels."""
    for severity in range(1, 6):
        shifted = apply_shift(blobs.test_iid, "rotate", severity, seed=0)
        before = np.linalg.norm(blobs.test_iid.inputs, axis=1)
        after = np.linalg.norm(shifted.inputs, axis=1)
        assert np.max(np.abs(before - after)) < 1e-12
        assert np.array_equal(shifted.labels, blobs.test_iid.labels)


def test_severity_zero_is_identity(blobs):
    """Severity 0 returns the IID pool for every shift kind."""
    for shift in ("rotate", "translate", "feature_noise", "scale"):
        assert apply_shift(blobs.test_iid, shift, 0, seed=0).equals(blobs.test_iid)
    assert blobs.shifted(0) is blobs.test_iid


def test_shift_magnitude_increases():
    """Magnitude grows strictly with severity."""
    for shift in ("rotate", "translate", "feature_noise", "scale"):
        mags = [shift_magnitude(shift, s) for s in range(6)]
        assert all(b > a for a, b in zip(mags, mags[1:]))
    assert shift_magnitude("rotate", 1) == pytest.approx(np.pi / 20)


def test_unknown_severity_is_rejected(blobs):
    """Severities outside 0..5 are config errors."""
    with pytest.raises(ConfigError):
        apply_shift(blobs.test_iid, "rotate", 6, seed=0)


def test_csv_round_trip(tmp_path, blobs):
    """Exported pools load back bit-identical."""
    path = export_csv(blobs.train, tmp_path / "train.csv")
    assert load_csv(path, 2).equals(blobs.train)


def test_dataset_spec_builds_csv_bundles(tmp_path, blobs):
    """A csv dataset spec shifts the imported test pool."""
    train = export_csv(blobs.train, tmp_path / "train.csv")
    test = export_csv(blobs.test_iid, tmp_path / "test.csv")
    bundle = DatasetSpec(kind="csv", shift="scale", train_csv=str(train), test_csv=str(test)).build()
    assert bundle.test_iid.equals(blobs.test_iid)
    assert np.allclose(bundle.shifted(2).inputs, blobs.test_iid.inputs * 1.3)


def test_model_spec_parameter_count():
    """Parameter count sums weights and biases per layer."""
    spec = ModelSpec(input_dim=2, hidden_widths=(3,), num_classes=2)
    assert spec.parameter_count() == 2 * 3 + 3 + 3 * 2 + 2
    assert init_params(spec, 0).total_dim == spec.parameter_count()


def test_train_config_rejects_bad_values():
    """Negative learning rates and unknown optimizers are config errors."""
    with pytest.raises(ConfigError):
        _cfg(learning_rate=-1.0)
    with pytest.raises(ConfigError):
        _cfg(optimizer="lbfgs")


def test_sgd_with_constant_gradient():
    """t SGD steps with constant g move theta by t * lr * g."""
    theta0 = ParamVector.from_arrays([("W0", np.array([[1.0, -2.0]]))])
    g = theta0.unflatten(np.array([0.5, 1.5]))
    params, state = theta0, init_state("sgd", theta0)
    for _ in range(4):
        params, state = sgd_step(state, params, g, lr=0.1, weight_decay=0.0)
    assert np.allclose(params.flatten(), theta0.flatten() - 4 * 0.1 * g.flatten())
    assert state.step == 4


def test_decoupled_weight_decay_alone_shrinks_geometrically():
    """With zero gradient, decay gives theta0 * (1 - lr * wd)^t for every optimizer."""
    theta0 = ParamVector.from_arrays([("W0", np.array([[1.0, -2.0]]))])
    zero = theta0.zeros_like()
    for name, step in (("sgd", sgd_step), ("rmsprop", rmsprop_step), ("adam", adam_step)):
        params, state = theta0, init_state(name, theta0)
        for _ in range(3):
            params, state = step(state, params, zero, lr=0.1, weight_decay=0.5)
        assert np.allclose(params.flatten(), theta0.flatten() * (1 - 0.05) ** 3)


def test_adam_first_step_moves_by_learning_rate():
    """Bias correction makes the first Adam step about lr * sign(g)."""
    theta0 = ParamVector.from_arrays([("W0", np.array([[0.0, 0.0]]))])
    g = theta0.unflatten(np.array([3.0, -0.2]))
    params, _ = adam_step(init_state("adam", theta0), theta0, g, lr=0.01, weight_decay=0.0)
    assert np.allclose(params.flatten(), [-0.01, 0.01], atol=1e-8)


def test_zero_learning_rate_keeps_initial_params(blobs):
    """lr = 0 leaves the final parameters at initialization."""
    spec = ModelSpec(input_dim=2, hidden_widths=(4,), num_classes=2)
    record = train_run(blobs, spec, _cfg(learning_rate=0.0), run_id="r0")
    assert record.status == "done"
    assert record.final_params.allclose(record.init_params)


def test_training_is_deterministic(blobs):
    """Two runs with the same seed produce identical records."""
    spec = ModelSpec(input_dim=2, hidden_widths=(4,), num_classes=2, dropout_p=0.2)
    a = train_run(blobs, spec, _cfg(), run_id="a")
    b = train_run(blobs, spec, _cfg(), run_id="a")
    assert np.array_equal(a.final_params.flatten(), b.final_params.flatten())
    assert a.train_loss_history == b.train_loss_history
    assert a.test_acc_shift == b.test_acc_shift


def test_training_records_traces_and_accuracies(blobs):
    """A finished run carries per-epoch losses, step norms and all shifted accuracies."""
    spec = ModelSpec(input_dim=2, hidden_widths=(4,), num_classes=2)
    record = train_run(blobs, spec, _cfg(epochs=2), run_id="r1", assignment={"seed": "1"})
    assert len(record.train_loss_history) == 2
    assert len(record.grad_norm_trace) == 2 * 5
    assert sorted(record.test_acc_shift) == [1, 2, 3, 4, 5]
    assert 0.0 <= record.train_acc <= 1.0
    assert record.seed == "1"


def test_diverging_run_is_marked_failed(blobs):
    """A huge learning rate yields a failed record with NaN accuracies."""
    spec = ModelSpec(input_dim=2, hidden_widths=(8,), num_classes=2)
    record = train_run(blobs, spec, _cfg(learning_rate=1e300, epochs=5), run_id="boom")
    assert record.status == "failed"
    assert record.failure.startswith(("diverged", "evaluation"))
    assert np.isnan(record.test_acc_iid)


def test_constant_logits_on_balanced_pool_give_half_accuracy():
    """Ties go to class 0, so a constant predictor scores 0.5 on a balanced pool."""
    spec = ModelSpec(input_dim=2, hidden_widths=(), num_classes=2, init_scheme="zeros")
    pool = LabeledBatch(np.random.default_rng(0).standard_normal((10, 2)), balanced_labels(10, 2), 2)
    result = evaluate(spec.build(), init_params(spec, 0), pool)
    assert result.accuracy == 0.5


def test_run_record_round_trips_through_dict(blobs):
    """to_dict / from_dict preserve parameters and accuracies."""
    spec = ModelSpec(input_dim=2, hidden_widths=(3,), num_classes=2)
    record = train_run(blobs, spec, _cfg(epochs=1), run_id="rt", assignment={"seed": "1"})
    restored = RunRecord.from_dict(record.to_dict())
    assert restored.final_params.allclose(record.final_params)
    assert restored.test_acc_shift == record.test_acc_shift
    assert restored.init_digest == record.init_digest

"""Training loop and evaluation producing one ``RunRecord`` per configuration."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from core.errors import NonFiniteError

from .constants import GRAD_RESERVOIR_EPOCHS, SHIFT_SEVERITIES
from .models import ModelSpec, TrainConfig, init_params
from .optimizers import init_state, optimizer_step
from .records import RunRecord

if TYPE_CHECKING:
    from core.autodiff.network import Network
    from core.autodiff.params import ParamVector

    from .datasets import DatasetBundle, LabeledBatch

logger = logging.getLogger(__name__)

_SHUFFLE_STREAM = 11


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    mean_ce: float
    logits: np.ndarray


def evaluate(network: Network, params: ParamVector, pool: LabeledBatch) -> Evaluation:
    """Eval-mode accuracy and mean CE; argmax ties go to the lowest class index."""
    logits = network.logits(params, pool.inputs, mode="eval")
    predictions = np.argmax(logits, axis=1)
    loss = network.forward_loss(params, pool, mode="eval")
    return Evaluation(float(np.mean(predictions == pool.labels)), loss.mean, logits)


def train_run(
    dataset: DatasetBundle,
    model: ModelSpec,
    cfg: TrainConfig,
    run_id: str = "",
    assignment: dict[str, str] | None = None,
    setup: dict[str, Any] | None = None,
) -> RunRecord:
    """Train from ``init_params(model, cfg.seed)`` and evaluate on every pool.

    A non-finite loss or gradient stops training; the record is still
    returned, marked failed, with NaN accuracies.
    """
    if dataset.input_dim != model.input_dim or dataset.num_classes != model.num_classes:
        raise ValueError(
            f"dataset ({dataset.input_dim} features, {dataset.num_classes} classes) does not match "
            f"model ({model.input_dim} features, {model.num_classes} classes)"
        )

    started = time.perf_counter()
    network = model.build()
    theta0 = init_params(model, cfg.seed)
    params = theta0
    state = init_state(cfg.optimizer, params)
    rng = np.random.default_rng([cfg.seed, _SHUFFLE_STREAM])
    train = dataset.train
    n = len(train)

    loss_history: list[float] = []
    grad_norms: list[float] = []
    snapshots: list[np.ndarray] = []
    failure: str | None = None
    step = 0

    try:
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            last_grad: ParamVector | None = None
            for start in range(0, n, cfg.batch_size):
                batch = train.subset(order[start : start + cfg.batch_size])
                loss, grads = network.value_and_grad(params, batch, mode="train", dropout_key=(cfg.seed, step))
                if not np.isfinite(loss):
                    raise NonFiniteError(f"loss became {loss} at step {step}")
                grad_norms.append(grads.norm())
                epoch_loss += loss * len(batch)
                params, state = optimizer_step(state, params, grads, cfg)
                last_grad = grads
                step += 1
            loss_history.append(epoch_loss / n)
            if last_grad is not None and epoch >= cfg.epochs - GRAD_RESERVOIR_EPOCHS:
                snapshots.append(last_grad.flatten())
    except NonFiniteError as e:
        failure = f"diverged: {e}"
        logger.warning("Run %s diverged at step %d: %s", run_id or "<anon>", step, e)

    if failure is None:
        try:
            train_acc = evaluate(network, params, train).accuracy
            test_iid = evaluate(network, params, dataset.test_iid).accuracy
            test_shift = {s: evaluate(network, params, dataset.shifted(s)).accuracy for s in SHIFT_SEVERITIES}
        except NonFiniteError as e:
            failure = f"evaluation produced non-finite logits: {e}"
            logger.warning("Run %s failed during evaluation: %s", run_id or "<anon>", e)

    if failure is not None:
        train_acc = test_iid = float("nan")
        test_shift = {s: float("nan") for s in SHIFT_SEVERITIES}

    wall_time = time.perf_counter() - started
    logger.info("Run %s %s in %.2fs (train_acc=%.4f)", run_id or "<anon>",
                "failed" if failure else "done", wall_time, train_acc)
    return RunRecord(
        run_id=run_id,
        config=dict(assignment or {}),
        setup=dict(setup or {"model": model.to_dict(), "train": cfg.to_dict()}),
        status="failed" if failure else "done",
        failure=failure,
        init_params=theta0,
        final_params=params,
        train_acc=train_acc,
        test_acc_iid=test_iid,
        test_acc_shift=test_shift,
        wall_time=wall_time,
        train_loss_history=tuple(loss_history),
        grad_norm_trace=tuple(grad_norms),
        grad_snapshots=tuple(snapshots),
    )

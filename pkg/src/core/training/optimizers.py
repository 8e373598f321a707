"""Optimizer updates over ``ParamVector``.

All three optimizers apply weight decay in decoupled form, shrinking the
parameters by ``(1 - lr * wd)`` before the gradient step:

sgd      theta <- theta * (1 - lr*wd) - lr * g
rmsprop  v <- rho*v + (1 - rho) * g^2
         theta <- theta * (1 - lr*wd) - lr * g / (sqrt(v) + eps)
adam     m <- b1*m + (1 - b1) * g;  v <- b2*v + (1 - b2) * g^2
         m_hat = m / (1 - b1^t);  v_hat = v / (1 - b2^t)
         theta <- theta * (1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps)

with rho = 0.99, b1 = 0.9, b2 = 0.999, eps = 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from core.errors import NonFiniteError

from .constants import ADAM_BETA1, ADAM_BETA2, OPTIMIZER_EPS, RMSPROP_RHO

if TYPE_CHECKING:
    from core.autodiff.params import ParamVector

    from .models import TrainConfig


@dataclass(frozen=True)
class OptimizerState:
    name: str
    step: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None


def init_state(name: str, params: ParamVector) -> OptimizerState:
    d = params.total_dim
    if name == "sgd":
        return OptimizerState(name)
    if name == "rmsprop":
        return OptimizerState(name, second_moment=np.zeros(d))
    if name == "adam":
        return OptimizerState(name, first_moment=np.zeros(d), second_moment=np.zeros(d))
    raise ValueError(f"unknown optimizer '{name}'")


def _check_grads(flat_grad: np.ndarray) -> None:
    if not np.all(np.isfinite(flat_grad)):
        raise NonFiniteError("non-finite gradient passed to optimizer")


def sgd_step(
    state: OptimizerState, params: ParamVector, grads: ParamVector, lr: float, weight_decay: float
) -> tuple[ParamVector, OptimizerState]:
    g = grads.flatten()
    _check_grads(g)
    theta = params.flatten() * (1.0 - lr * weight_decay) - lr * g
    return params.unflatten(theta), replace(state, step=state.step + 1)


def rmsprop_step(
    state: OptimizerState, params: ParamVector, grads: ParamVector, lr: float, weight_decay: float
) -> tuple[ParamVector, OptimizerState]:
    g = grads.flatten()
    _check_grads(g)
    assert state.second_moment is not None
    v = RMSPROP_RHO * state.second_moment + (1.0 - RMSPROP_RHO) * g**2
    theta = params.flatten() * (1.0 - lr * weight_decay) - lr * g / (np.sqrt(v) + OPTIMIZER_EPS)
    return params.unflatten(theta), replace(state, step=state.step + 1, second_moment=v)


def adam_step(
    state: OptimizerState, params: ParamVector, grads: ParamVector, lr: float, weight_decay: float
) -> tuple[ParamVector, OptimizerState]:
    g = grads.flatten()
    _check_grads(g)
    assert state.first_moment is not None and state.second_moment is not None
    t = state.step + 1
    m = ADAM_BETA1 * state.first_moment + (1.0 - ADAM_BETA1) * g
    v = ADAM_BETA2 * state.second_moment + (1.0 - ADAM_BETA2) * g**2
    m_hat = m / (1.0 - ADAM_BETA1**t)
    v_hat = v / (1.0 - ADAM_BETA2**t)
    theta = params.flatten() * (1.0 - lr * weight_decay) - lr * m_hat / (np.sqrt(v_hat) + OPTIMIZER_EPS)
    return params.unflatten(theta), replace(state, step=t, first_moment=m, second_moment=v)


_STEPS = {"sgd": sgd_step, "rmsprop": rmsprop_step, "adam": adam_step}


def optimizer_step(
    state: OptimizerState, params: ParamVector, grads: ParamVector, cfg: TrainConfig
) -> tuple[ParamVector, OptimizerState]:
    """Dispatch one update for ``cfg.optimizer``."""
    if state.name != cfg.optimizer:
        raise ValueError(f"state belongs to '{state.name}', config asks for '{cfg.optimizer}'")
    return _STEPS[cfg.optimizer](state, params, grads, cfg.learning_rate, cfg.weight_decay)

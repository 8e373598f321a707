"""MLP forward/backward on the gradient tape.

``Network`` binds a model architecture to the tape primitives and exposes the
operations everything else is built on: losses, parameter gradients,
per-sample gradients, Hessian-vector products and input-gradient norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from core.errors import ShapeMismatchError

from . import tensor as T
from .objective import hvp as _hvp
from .params import ParamVector
from .tensor import GradTape, Tensor

if TYPE_CHECKING:
    from core.training.datasets import LabeledBatch
    from core.training.models import ModelSpec

MODES = ("train", "eval")


@dataclass(frozen=True)
class LossResult:
    mean: float
    per_sample: np.ndarray


def dropout_mask(p: float, shape: tuple[int, ...], key: tuple[int, ...], layer: int) -> np.ndarray:
    """Inverted-dropout mask drawn from the stream ``(key..., layer)``."""
    rng = np.random.default_rng([*key, layer])
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


class Network:
    """A fully connected classifier described by a ``ModelSpec``."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        widths = [spec.input_dim, *spec.hidden_widths, spec.num_classes]
        self.layer_shapes = [(widths[i], widths[i + 1]) for i in range(len(widths) - 1)]
        self.depth = len(self.layer_shapes)

    def segment_layout(self) -> list[tuple[str, tuple[int, ...]]]:
        layout: list[tuple[str, tuple[int, ...]]] = []
        for i, (fan_in, fan_out) in enumerate(self.layer_shapes):
            layout.append((f"W{i}", (fan_in, fan_out)))
            layout.append((f"b{i}", (fan_out,)))
        return layout

    def check_params(self, params: ParamVector) -> None:
        expected = self.segment_layout()
        actual = list(zip(params.names, params.shapes, strict=True))
        if actual != expected:
            raise ShapeMismatchError(f"parameter segments {actual} do not match architecture {expected}")

    def _check_batch(self, batch: LabeledBatch) -> None:
        if batch.inputs.ndim != 2 or batch.inputs.shape[1] != self.spec.input_dim:
            raise ShapeMismatchError(
                f"inputs of shape {batch.inputs.shape} do not match input_dim {self.spec.input_dim}"
            )
        if len(batch.labels) == 0:
            raise ShapeMismatchError("batch is empty")

    def _forward(
        self,
        weights: list[tuple[Tensor, Tensor]],
        inputs: Tensor,
        mode: str,
        dropout_key: tuple[int, ...] | None,
    ) -> Tensor:
        if mode not in MODES:
            raise ValueError(f"unknown mode '{mode}'")
        activation = T.tanh if self.spec.activation == "tanh" else T.relu
        h = inputs
        for layer, (w, b) in enumerate(weights):
            z = T.matmul(h, w) + b
            if layer == self.depth - 1:
                return z
            h = activation(z)
            if mode == "train" and self.spec.dropout_p > 0.0:
                key = dropout_key if dropout_key is not None else (0,)
                h = T.mask_scale(h, dropout_mask(self.spec.dropout_p, h.shape, key, layer))
        raise AssertionError("unreachable")

    def _weights(self, params: ParamVector, requires_grad: bool) -> list[tuple[Tensor, Tensor]]:
        self.check_params(params)
        return [
            (Tensor(params[f"W{i}"], requires_grad=requires_grad), Tensor(params[f"b{i}"], requires_grad=requires_grad))
            for i in range(self.depth)
        ]

    def logits(
        self,
        params: ParamVector,
        inputs: np.ndarray,
        mode: str = "eval",
        dropout_key: tuple[int, ...] | None = None,
    ) -> np.ndarray:
        return self._forward(self._weights(params, False), Tensor(inputs), mode, dropout_key).data

    def forward_loss(
        self,
        params: ParamVector,
        batch: LabeledBatch,
        mode: str = "eval",
        dropout_key: tuple[int, ...] | None = None,
    ) -> LossResult:
        """Mean and per-sample cross-entropy."""
        self._check_batch(batch)
        logits = self._forward(self._weights(params, False), Tensor(batch.inputs), mode, dropout_key)
        per_sample = T.cross_entropy(logits, batch.labels).data
        return LossResult(float(per_sample.mean()), per_sample)

    def value_and_grad(
        self,
        params: ParamVector,
        batch: LabeledBatch,
        mode: str = "eval",
        dropout_key: tuple[int, ...] | None = None,
    ) -> tuple[float, ParamVector]:
        self._check_batch(batch)
        weights = self._weights(params, True)
        with GradTape() as tape:
            logits = self._forward(weights, Tensor(batch.inputs), mode, dropout_key)
            loss = T.mean(T.cross_entropy(logits, batch.labels))
            sources = [t for pair in weights for t in pair]
            grads = tape.gradient(loss, sources)
        return float(loss.data), ParamVector(tuple(zip(params.names, grads, strict=True)))

    def grad(
        self,
        params: ParamVector,
        batch: LabeledBatch,
        mode: str = "eval",
        dropout_key: tuple[int, ...] | None = None,
    ) -> ParamVector:
        return self.value_and_grad(params, batch, mode, dropout_key)[1]

    def loss(self, params: ParamVector, batch: LabeledBatch) -> float:
        return self.forward_loss(params, batch).mean

    def per_sample_grads(self, params: ParamVector, batch: LabeledBatch) -> list[ParamVector]:
        """Eval-mode gradient of each sample's loss; their mean is ``grad``."""
        self._check_batch(batch)
        return [self.grad(params, batch.subset([i])) for i in range(len(batch.labels))]

    def hvp(self, params: ParamVector, batch: LabeledBatch, v: ParamVector, method: str = "fd_central") -> ParamVector:
        return _hvp(self, params, batch, v, method)

    def input_grad_norm(self, params: ParamVector, batch: LabeledBatch, norm: str = "l2") -> float:
        """Mean over samples of |d CE_n / d x_n|_2."""
        if norm != "l2":
            raise ValueError(f"unsupported input-gradient norm '{norm}'")
        self._check_batch(batch)
        inputs = Tensor(batch.inputs, requires_grad=True)
        with GradTape() as tape:
            logits = self._forward(self._weights(params, False), inputs, "eval", None)
            total = T.total(T.cross_entropy(logits, batch.labels))
            (g_inputs,) = tape.gradient(total, [inputs])
        return float(np.linalg.norm(g_inputs, axis=1).mean())

    def error_rate(self, params: ParamVector, batch: LabeledBatch) -> float:
        """Empirical 0-1 error with argmax ties broken toward the lowest class."""
        predictions = np.argmax(self.logits(params, batch.inputs), axis=1)
        return float(np.mean(predictions != batch.labels))

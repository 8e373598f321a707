"""Per-run inputs shared by every measure, computed lazily and at most once."""

from __future__ import annotations

from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import softmax

from .catalog import stream_tag

if TYPE_CHECKING:
    from core.autodiff.network import Network
    from core.autodiff.params import ParamVector
    from core.training.datasets import LabeledBatch
    from core.training.records import RunRecord

    from .settings import MeasureSettings

_BATCH_STREAM = 101


class MeasureContext:
    """Read-only view of one trained run plus cached derived quantities."""

    def __init__(self, record: RunRecord, network: Network, pool: LabeledBatch, settings: MeasureSettings):
        self.record = record
        self.network = network
        self.pool = pool
        self.settings = settings

    @property
    def params(self) -> ParamVector:
        return self.record.final_params

    @property
    def theta0(self) -> ParamVector:
        return self.record.init_params

    @property
    def dropout_p(self) -> float:
        return float(self.network.spec.dropout_p)

    def rng(self, measure: str) -> np.random.Generator:
        return np.random.default_rng([self.settings.seed, stream_tag(measure)])

    def stream_seed(self, measure: str) -> int:
        """Integer seed for APIs that build their own generator."""
        return int(np.random.SeedSequence([self.settings.seed, stream_tag(measure)]).generate_state(1)[0])

    @cached_property
    def logits(self) -> np.ndarray:
        return self.network.logits(self.params, self.pool.inputs, mode="eval")

    @cached_property
    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=1)

    @cached_property
    def per_sample_ce(self) -> np.ndarray:
        return self.network.forward_loss(self.params, self.pool).per_sample

    @cached_property
    def eval_batches(self) -> list[LabeledBatch]:
        """The pool shuffled once and split into ``eval_batches`` near-equal batches."""
        rng = np.random.default_rng([self.settings.seed, _BATCH_STREAM])
        order = rng.permutation(len(self.pool))
        count = min(self.settings.eval_batches, len(self.pool))
        return [self.pool.subset(chunk) for chunk in np.array_split(order, count)]

    @cached_property
    def batch_grads(self) -> np.ndarray:
        """``B x d`` matrix of eval-mode gradients of each batch's mean loss."""
        return np.stack([self.network.grad(self.params, b).flatten() for b in self.eval_batches])

    @cached_property
    def per_sample_grads(self) -> np.ndarray:
        """``N x d`` matrix of per-sample CE gradients."""
        return np.stack([g.flatten() for g in self.network.per_sample_grads(self.params, self.pool)])

"""Training sandbox: synthetic shifted data, MLPs, optimizers and the run loop."""

from .datasets import DatasetBundle, DatasetSpec, LabeledBatch, apply_shift, make_dataset
from .models import ModelSpec, TrainConfig, init_params
from .records import MeasureValue, RunRecord
from .trainer import evaluate, train_run

__all__ = [
    "DatasetBundle",
    "DatasetSpec",
    "LabeledBatch",
    "MeasureValue",
    "ModelSpec",
    "RunRecord",
    "TrainConfig",
    "apply_shift",
    "evaluate",
    "init_params",
    "make_dataset",
    "train_run",
]

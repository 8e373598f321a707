"""Shared fixtures: a tiny network, a tiny batch and a RunRecord factory."""

from collections.abc import Callable

import numpy as np
import pytest

from core.autodiff.params import ParamVector
from core.training.datasets import LabeledBatch
from core.training.models import ModelSpec, init_params
from core.training.records import MeasureValue, RunRecord


@pytest.fixture
def tiny_spec() -> ModelSpec:
    return ModelSpec(input_dim=3, hidden_widths=(4,), num_classes=3, activation="tanh")


@pytest.fixture
def tiny_params(tiny_spec: ModelSpec) -> ParamVector:
    return init_params(tiny_spec, seed=0)


@pytest.fixture
def tiny_batch() -> LabeledBatch:
    rng = np.random.default_rng(0)
    return LabeledBatch(rng.standard_normal((6, 3)), np.array([0, 1, 2, 0, 1, 2]), 3)


@pytest.fixture
def make_record() -> Callable[..., RunRecord]:
    """Build a lightweight RunRecord; ``measures`` maps name -> (category, value)."""

    def build(
        run_id: str,
        config: dict[str, str],
        train_acc: float = 1.0,
        test_acc_iid: float = 0.9,
        test_acc_shift: dict[int, float] | None = None,
        measures: dict[str, tuple[str, float]] | None = None,
        status: str = "done",
    ) -> RunRecord:
        params = ParamVector.from_arrays([("W0", np.zeros((1, 1))), ("b0", np.zeros(1))])
        values = {
            name: MeasureValue(name, category, value) for name, (category, value) in (measures or {}).items()
        }
        return RunRecord(
            run_id=run_id,
            config=dict(config),
            setup={},
            status=status,
            init_params=params,
            final_params=params,
            train_acc=train_acc,
            test_acc_iid=test_acc_iid,
            test_acc_shift=dict(test_acc_shift or {}),
            wall_time=0.0,
            measure_values=values,
            failure=None if status == "done" else "diverged",
        )

    return build

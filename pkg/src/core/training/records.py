"""Persisted result types: one ``RunRecord`` per trained configuration.

Records are immutable. Measure values are attached with ``with_measures``,
which returns a new record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from core.autodiff.params import ParamVector

MEASURE_STATUSES = ("ok", "failed")
RUN_STATUSES = ("done", "failed")


@dataclass(frozen=True)
class MeasureValue:
    name: str
    category: str
    value: float
    status: str = "ok"
    compute_seed: int = 0
    detail: dict[str, Any] = field(default_factory=dict)
    computed_at: str = ""

    def __post_init__(self) -> None:
        if self.status not in MEASURE_STATUSES:
            raise ValueError(f"unknown measure status '{self.status}'")
        if self.status == "ok" and not math.isfinite(self.value):
            raise ValueError(f"measure '{self.name}' is ok but has non-finite value {self.value}")

    @classmethod
    def failed(cls, name: str, category: str, reason: str, compute_seed: int = 0, **detail: Any) -> MeasureValue:
        return cls(name, category, float("nan"), "failed", compute_seed, {"reason": reason, **detail})

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "category": self.category,
            "value": self.value,
            "status": self.status,
            "compute_seed": self.compute_seed,
            "detail": self.detail,
            "computed_at": self.computed_at,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MeasureValue:
        return cls(
            name=data["name"],
            category=data["category"],
            value=float(data["value"]),
            status=data.get("status", "ok"),
            compute_seed=int(data.get("compute_seed", 0)),
            detail=dict(data.get("detail", {})),
            computed_at=data.get("computed_at", ""),
        )


def params_to_dict(params: ParamVector) -> dict[str, Any]:
    return {
        "names": params.names,
        "shapes": [list(s) for s in params.shapes],
        "values": [float(v) for v in params.flatten()],
    }


def params_from_dict(data: dict[str, Any]) -> ParamVector:
    flat = np.asarray(data["values"], dtype=np.float64)
    segments = []
    offset = 0
    for name, shape in zip(data["names"], data["shapes"], strict=True):
        size = int(np.prod(shape)) if shape else 1
        segments.append((name, flat[offset : offset + size].reshape(shape).copy()))
        offset += size
    return ParamVector(tuple(segments))


@dataclass(frozen=True)
class RunRecord:
    """One trained configuration.

    ``config`` holds the grid assignment as exact string tokens (seed
    included). ``setup`` holds the resolved dataset/model/train sections so a
    record can be re-materialised without the sweep config. Failed runs carry
    NaN accuracies and a ``failure`` reason.
    """

    run_id: str
    config: dict[str, str]
    setup: dict[str, Any]
    status: str
    init_params: ParamVector
    final_params: ParamVector
    train_acc: float
    test_acc_iid: float
    test_acc_shift: dict[int, float]
    wall_time: float
    train_loss_history: tuple[float, ...] = ()
    grad_norm_trace: tuple[float, ...] = ()
    grad_snapshots: tuple[np.ndarray, ...] = ()
    measure_values: dict[str, MeasureValue] = field(default_factory=dict)
    failure: str | None = None

    def __post_init__(self) -> None:
        if self.status not in RUN_STATUSES:
            raise ValueError(f"unknown run status '{self.status}'")
        if self.status == "done":
            for acc in (self.train_acc, self.test_acc_iid, *self.test_acc_shift.values()):
                if not 0.0 <= acc <= 1.0:
                    raise ValueError(f"accuracy {acc} outside [0, 1] in run {self.run_id}")

    @property
    def init_digest(self) -> str:
        return self.init_params.digest()

    @property
    def seed(self) -> str:
        return self.config.get("seed", "")

    def with_measures(self, values: dict[str, MeasureValue]) -> RunRecord:
        return replace(self, measure_values={**self.measure_values, **values})

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "config": dict(self.config),
            "setup": self.setup,
            "status": self.status,
            "failure": self.failure,
            "init_digest": self.init_digest,
            "init_params": params_to_dict(self.init_params),
            "final_params": params_to_dict(self.final_params),
            "train_acc": self.train_acc,
            "test_acc_iid": self.test_acc_iid,
            "test_acc_shift": {str(s): a for s, a in sorted(self.test_acc_shift.items())},
            "wall_time": self.wall_time,
            "train_loss_history": list(self.train_loss_history),
            "grad_norm_trace": list(self.grad_norm_trace),
            "grad_snapshots": [[float(v) for v in snap] for snap in self.grad_snapshots],
            "measure_values": {name: mv.to_dict() for name, mv in sorted(self.measure_values.items())},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunRecord:
        return cls(
            run_id=data["run_id"],
            config={str(k): str(v) for k, v in data["config"].items()},
            setup=data.get("setup", {}),
            status=data["status"],
            failure=data.get("failure"),
            init_params=params_from_dict(data["init_params"]),
            final_params=params_from_dict(data["final_params"]),
            train_acc=float(data["train_acc"]),
            test_acc_iid=float(data["test_acc_iid"]),
            test_acc_shift={int(s): float(a) for s, a in data.get("test_acc_shift", {}).items()},
            wall_time=float(data.get("wall_time", 0.0)),
            train_loss_history=tuple(float(v) for v in data.get("train_loss_history", [])),
            grad_norm_trace=tuple(float(v) for v in data.get("grad_norm_trace", [])),
            grad_snapshots=tuple(np.asarray(s, dtype=np.float64) for s in data.get("grad_snapshots", [])),
            measure_values={k: MeasureValue.from_dict(v) for k, v in data.get("measure_values", {}).items()},
        )

"""Measure engine: composes one mixin per catalog category."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable
from datetime import datetime, timezone
from functools import lru_cache
from typing import TYPE_CHECKING, Any

from core.errors import GenmeterError
from core.training.datasets import DatasetBundle, DatasetSpec
from core.training.models import ModelSpec
from core.training.records import MeasureValue

from .baseline import BaselineMixin
from .calibration import CalibrationMixin
from .catalog import MEASURE_CATALOG, MEASURE_NAMES
from .constants import CATEGORIES
from .context import MeasureContext
from .information import InformationMixin
from .norms import NormMarginMixin
from .optimization import OptimizationMixin
from .settings import MeasureSettings
from .sharpness import SharpnessMixin

if TYPE_CHECKING:
    from core.autodiff.network import Network
    from core.training.datasets import LabeledBatch
    from core.training.records import RunRecord


class MeasureEngine(
    BaselineMixin,
    NormMarginMixin,
    SharpnessMixin,
    OptimizationMixin,
    InformationMixin,
    CalibrationMixin,
):
    """Computes catalog measures on a trained run.

    A measure never raises out of ``compute``: errors and non-finite values
    become ``MeasureValue(status="failed")`` with the reason in ``detail``.
    """

    def __init__(self, settings: MeasureSettings | None = None, logger: logging.Logger | None = None):
        self.settings = settings or MeasureSettings()
        self.logger = logger or logging.getLogger(__name__)
        self._dispatch: dict[str, Callable[[MeasureContext, list[str]], dict[str, MeasureValue]]] = {
            "baseline_output": self._measure_baseline_output,
            "norm_margin": self._measure_norm_margin,
            "sharpness": self._measure_sharpness,
            "optimization": self._measure_optimization,
            "information_criteria": self._measure_information_criteria,
            "calibration": self._measure_calibration,
        }

    def _now(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")

    def _guard(self, name: str, thunk: Callable[[], Any]) -> MeasureValue:
        """Run one measure; a float or ``(float, detail)`` result becomes an ok value."""
        category = MEASURE_CATALOG[name]
        seed = self.settings.seed
        try:
            result = thunk()
            value, detail = result if isinstance(result, tuple) else (result, {})
            value = float(value)
        except (GenmeterError, ArithmeticError, ValueError, NotImplementedError) as e:
            self.logger.debug("Measure %s failed: %s", name, e)
            extra = getattr(e, "detail", {})
            failed = MeasureValue.failed(name, category, f"{type(e).__name__}: {e}", seed, **extra)
            return _stamp(failed, self._now())
        if not math.isfinite(value):
            return _stamp(MeasureValue.failed(name, category, f"non-finite value {value}", seed, **detail),
                          self._now())
        return MeasureValue(name, category, value, "ok", seed, dict(detail), self._now())

    def evaluation_pool(self, dataset: DatasetBundle) -> LabeledBatch:
        return dataset.train if self.settings.eval_split == "train" else dataset.test_iid

    def build_network(self, record: RunRecord) -> Network:
        return ModelSpec.from_dict(record.setup["model"]).build()

    def compute(
        self,
        record: RunRecord,
        dataset: DatasetBundle | LabeledBatch,
        names: Iterable[str] | None = None,
    ) -> dict[str, MeasureValue]:
        """Values for ``names`` (default: the full catalog), one entry per name."""
        wanted = list(names) if names is not None else list(MEASURE_NAMES)
        unknown = [n for n in wanted if n not in MEASURE_CATALOG]
        if unknown:
            raise ValueError(f"unknown measures: {', '.join(unknown)}")

        if record.status != "done":
            reason = f"run {record.status}: {record.failure or 'no final parameters'}"
            now = self._now()
            return {n: _stamp(MeasureValue.failed(n, MEASURE_CATALOG[n], reason, self.settings.seed), now)
                    for n in wanted}

        pool = self.evaluation_pool(dataset) if isinstance(dataset, DatasetBundle) else dataset
        ctx = MeasureContext(record, self.build_network(record), pool, self.settings)
        out: dict[str, MeasureValue] = {}
        for category in CATEGORIES:
            in_category = [n for n in wanted if MEASURE_CATALOG[n] == category]
            if not in_category:
                continue
            try:
                out.update(self._dispatch[category](ctx, in_category))
            except GenmeterError as e:
                self.logger.warning("Run %s: %s measures failed: %s", record.run_id, category, e)
                out.update({n: self._guard(n, _raise(e)) for n in in_category})

        for name in wanted:
            if name not in out:
                out[name] = _stamp(MeasureValue.failed(name, MEASURE_CATALOG[name], "not computed",
                                                       self.settings.seed), self._now())
        failed = sum(1 for v in out.values() if not v.ok)
        self.logger.info("Run %s: %d measures computed, %d failed", record.run_id, len(out), failed)
        return {n: out[n] for n in wanted}


def _stamp(value: MeasureValue, when: str) -> MeasureValue:
    return MeasureValue(value.name, value.category, value.value, value.status, value.compute_seed,
                        value.detail, when)


def _raise(error: Exception) -> Callable[[], float]:
    def fail() -> float:
        raise error

    return fail


@lru_cache(maxsize=8)
def _dataset(spec: DatasetSpec) -> DatasetBundle:
    return spec.build()


def measure_record(record: RunRecord, names: list[str], settings: MeasureSettings) -> dict[str, MeasureValue]:
    """Rebuild the run's dataset from its stored setup and compute ``names``; runs in worker processes."""
    try:
        spec = DatasetSpec(**record.setup["dataset"])
    except (KeyError, TypeError) as e:
        reason = f"run setup has no usable dataset section: {e}"
        return {n: MeasureValue.failed(n, MEASURE_CATALOG[n], reason, settings.seed) for n in names}
    return MeasureEngine(settings).compute(record, _dataset(spec), names)

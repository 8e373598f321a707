"""Generalization-gap targets and the record views the statistics work on."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from core.errors import ConfigError
from core.training.constants import SHIFT_SEVERITIES

if TYPE_CHECKING:
    from core.training.records import RunRecord

logger = logging.getLogger(__name__)

IID_TARGET = "gen_gap_iid"


def shift_target(severity: int) -> str:
    return f"gen_gap_shift_{severity}"


@dataclass(frozen=True)
class GapTarget:
    name: str
    values: dict[str, float]
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.values)


def parse_targets(spec: str) -> list[str]:
    """``"iid,shift:3"`` -> ``["gen_gap_iid", "gen_gap_shift_3"]``; ``shift`` alone means all severities."""
    names: list[str] = []
    for token in (t.strip() for t in spec.split(",")):
        if not token:
            continue
        if token == "iid":
            names.append(IID_TARGET)
        elif token == "shift":
            names.extend(shift_target(s) for s in SHIFT_SEVERITIES)
        elif token.startswith("shift:"):
            try:
                severity = int(token.split(":", 1)[1])
            except ValueError as e:
                raise ConfigError(f"bad shift severity in target '{token}'") from e
            if severity not in SHIFT_SEVERITIES:
                raise ConfigError(f"shift severity must be one of {SHIFT_SEVERITIES}, got {severity}")
            names.append(shift_target(severity))
        else:
            raise ConfigError(f"unknown target '{token}', expected 'iid', 'shift' or 'shift:<1-5>'")
    if not names:
        raise ConfigError("at least one target is required")
    return list(dict.fromkeys(names))


def compute_gap_targets(records: Iterable[RunRecord], names: list[str] | None = None) -> list[GapTarget]:
    """``train_acc - test_acc`` per run, one target per IID/shift severity.

    A run whose accuracies are missing or NaN is left out of that target with
    a note. Targets with no runs at all are dropped with a warning.
    """
    records = [r for r in records if r.status == "done"]
    wanted = names or [IID_TARGET, *(shift_target(s) for s in SHIFT_SEVERITIES)]
    targets = []
    for name in wanted:
        values: dict[str, float] = {}
        notes: list[str] = []
        for record in records:
            if name == IID_TARGET:
                test = record.test_acc_iid
            else:
                test = record.test_acc_shift.get(int(name.rsplit("_", 1)[1]), float("nan"))
            if math.isnan(record.train_acc) or math.isnan(test):
                notes.append(f"{record.run_id}: missing accuracy")
                continue
            values[record.run_id] = record.train_acc - test
        if not values:
            logger.warning("Target %s has no runs with the needed accuracies; skipped", name)
            continue
        if notes:
            logger.info("Target %s: %d runs excluded for missing accuracies", name, len(notes))
        targets.append(GapTarget(name, values, tuple(notes)))
    return targets


def run_configs(records: Iterable[RunRecord]) -> dict[str, dict[str, str]]:
    """Grid assignment tokens of every done run."""
    return {r.run_id: dict(r.config) for r in records if r.status == "done"}


def measure_series(records: Iterable[RunRecord], name: str) -> dict[str, float]:
    """Values of measure ``name`` on done runs where it computed ok."""
    out: dict[str, float] = {}
    for record in records:
        value = record.measure_values.get(name)
        if record.status == "done" and value is not None and value.ok:
            out[record.run_id] = value.value
    return out


def common_runs(*series: dict[str, float]) -> list[str]:
    """Run ids present in every series, sorted."""
    if not series:
        return []
    shared = set(series[0])
    for s in series[1:]:
        shared &= set(s)
    return sorted(shared)

"""Sweep manifest: the grid, the base config and the status of every run id."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

from core.errors import ConfigError

from .grid import HyperGrid, expand_grid, run_id

if TYPE_CHECKING:
    from .store import RunStore


class RunStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_ORDER = {RunStatus.PENDING: 0, RunStatus.RUNNING: 1, RunStatus.DONE: 2, RunStatus.FAILED: 2}
TERMINAL = (RunStatus.DONE, RunStatus.FAILED)


@dataclass
class SweepManifest:
    grid: HyperGrid
    base: dict[str, Any]
    status: dict[str, RunStatus] = field(default_factory=dict)
    assignments: dict[str, dict[str, str]] = field(default_factory=dict)

    @classmethod
    def create(cls, grid: HyperGrid, base: dict[str, Any]) -> SweepManifest:
        manifest = cls(grid, base)
        for assignment in expand_grid(grid):
            rid = run_id(assignment)
            manifest.assignments[rid] = assignment
            manifest.status[rid] = RunStatus.PENDING
        return manifest

    def transition(self, rid: str, new: RunStatus) -> None:
        """Move ``rid`` forward; going back (or between terminal states) raises."""
        if rid not in self.status:
            raise KeyError(f"run {rid} is not in the manifest")
        current = self.status[rid]
        if current == new:
            return
        if _ORDER[new] <= _ORDER[current]:
            raise ValueError(f"run {rid}: cannot move from {current.value} to {new.value}")
        self.status[rid] = new

    def counts(self) -> dict[str, int]:
        tally = Counter(s.value for s in self.status.values())
        return {s.value: tally.get(s.value, 0) for s in RunStatus}

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "base": self.base,
            "runs": {rid: {"assignment": self.assignments[rid], "status": self.status[rid].value}
                     for rid in self.assignments},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SweepManifest:
        grid = HyperGrid.from_mapping(data["grid"])
        manifest = cls(grid, data.get("base", {}))
        for rid, entry in data.get("runs", {}).items():
            manifest.assignments[rid] = {str(k): str(v) for k, v in entry["assignment"].items()}
            manifest.status[rid] = RunStatus(entry["status"])
        return manifest

    def check_compatible(self, other: SweepManifest) -> None:
        if self.grid != other.grid or self.base != other.base:
            raise ConfigError("store already holds a sweep with a different grid or base config")


def resume(manifest: SweepManifest, store: RunStore) -> list[dict[str, str]]:
    """Assignments without a persisted record, in grid order.

    Runs marked running or terminal in the manifest but missing from the
    store (a crash between status and write) are reset to pending.
    """
    persisted = store.run_ids()
    pending = []
    for rid, assignment in manifest.assignments.items():
        if rid in persisted:
            continue
        if manifest.status[rid] is not RunStatus.PENDING:
            manifest.status[rid] = RunStatus.PENDING
        pending.append(assignment)
    return pending

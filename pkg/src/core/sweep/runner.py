"""Sweep execution: train every pending grid point and persist its record.

Workers train runs in separate processes and hand the records back; the
parent process is the only writer of the store and the manifest.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING, Any

from core.training.datasets import DatasetBundle, DatasetSpec
from core.training.trainer import train_run

from .grid import HyperGrid, RunSetup, resolve_setup
from .manifest import RunStatus, SweepManifest, resume

if TYPE_CHECKING:
    from core.training.records import RunRecord

    from .store import RunStore

logger = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def _dataset(spec: DatasetSpec) -> DatasetBundle:
    return spec.build()


def train_setup(setup: RunSetup) -> RunRecord:
    """Train one resolved grid point; runs in worker processes."""
    return train_run(
        _dataset(setup.dataset),
        setup.model,
        setup.train,
        run_id=setup.run_id,
        assignment=setup.assignment,
        setup=setup.setup_dict(),
    )


@dataclass
class SweepResult:
    total: int
    done: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.failed


class SweepRunner:
    """Runs a grid against a store, resuming whatever is already persisted."""

    def __init__(
        self,
        grid: HyperGrid,
        base: dict[str, Any],
        store: RunStore,
        jobs: int = 1,
        seed_offset: int = 0,
    ):
        self.grid = grid.with_seed_offset(seed_offset)
        self.base = base
        self.store = store
        self.jobs = max(1, jobs)
        self.on_sweep_start: Callable[[int, int], None] | None = None
        self.on_run_complete: Callable[[RunRecord], None] | None = None

    def prepare(self) -> tuple[SweepManifest, list[RunSetup]]:
        """Load or create the manifest and resolve every pending run up front.

        Resolution errors surface before any training starts.
        """
        fresh = SweepManifest.create(self.grid, self.base)
        stored = self.store.read_manifest()
        if stored is not None:
            manifest = SweepManifest.from_dict(stored)
            manifest.check_compatible(fresh)
        else:
            manifest = fresh
        for record in self.store.load_runs():
            if record.run_id in manifest.status:
                manifest.status[record.run_id] = RunStatus(record.status)
        pending = resume(manifest, self.store)
        setups = [resolve_setup(a, self.base["dataset"], self.base["model"], self.base["train"]) for a in pending]
        self.store.write_manifest(manifest.to_dict())
        return manifest, setups

    def _record(self, manifest: SweepManifest, record: RunRecord, result: SweepResult) -> None:
        self.store.append_run(record)
        status = RunStatus.DONE if record.status == "done" else RunStatus.FAILED
        manifest.transition(record.run_id, status)
        self.store.write_manifest(manifest.to_dict())
        (result.done if status is RunStatus.DONE else result.failed).append(record.run_id)
        if self.on_run_complete is not None:
            self.on_run_complete(record)

    def run(self) -> SweepResult:
        """Execute pending runs; the caller holds the store lock."""
        manifest, setups = self.prepare()
        result = SweepResult(total=len(manifest.status), skipped=len(manifest.status) - len(setups))
        logger.info("Sweep: %d runs, %d already persisted, %d to train with %d job(s)",
                    result.total, result.skipped, len(setups), self.jobs)
        if self.on_sweep_start is not None:
            self.on_sweep_start(result.total, len(setups))
        for setup in setups:
            manifest.transition(setup.run_id, RunStatus.RUNNING)
        if setups:
            self.store.write_manifest(manifest.to_dict())

        if self.jobs == 1 or len(setups) <= 1:
            for setup in setups:
                self._record(manifest, train_setup(setup), result)
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as executor:
                future_to_run = {executor.submit(train_setup, setup): setup for setup in setups}
                for future in as_completed(future_to_run):
                    setup = future_to_run[future]
                    try:
                        record = future.result()
                    except Exception as e:
                        logger.error("Run %s crashed in its worker: %s", setup.run_id, e, exc_info=True)
                        manifest.transition(setup.run_id, RunStatus.FAILED)
                        self.store.write_manifest(manifest.to_dict())
                        result.failed.append(setup.run_id)
                        continue
                    self._record(manifest, record, result)

        logger.info("Sweep finished: %d done, %d failed, %d skipped",
                    len(result.done), len(result.failed), result.skipped)
        return result


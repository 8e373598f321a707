"""Grid expansion, the run store and sweep execution."""

from .grid import HyperGrid, RunSetup, expand_grid, resolve_setup, run_id
from .manifest import RunStatus, SweepManifest, resume
from .runner import SweepResult, SweepRunner, train_setup
from .store import RunStore

__all__ = [
    "HyperGrid",
    "RunSetup",
    "RunStatus",
    "RunStore",
    "SweepManifest",
    "SweepResult",
    "SweepRunner",
    "expand_grid",
    "resolve_setup",
    "resume",
    "run_id",
    "train_setup",
]

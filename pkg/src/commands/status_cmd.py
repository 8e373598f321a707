"""gm status: run and measure counts of a sweep store."""

from __future__ import annotations

import click
from rich.table import Table

from core.errors import InsufficientDataError
from core.measures import MEASURE_NAMES
from core.sweep import RunStatus, SweepManifest

from .common import console, resolve_store

_STATUS_STYLES = {
    RunStatus.PENDING: "dim",
    RunStatus.RUNNING: "yellow",
    RunStatus.DONE: "green",
    RunStatus.FAILED: "red",
}


@click.command()
@click.argument("store_path", required=False)
def status(store_path: str | None) -> None:
    """Show sweep progress of STORE_PATH"""
    store = resolve_store(store_path)
    data = store.read_manifest()
    if data is None:
        raise InsufficientDataError(f"store {store.root} has no sweep manifest")
    manifest = SweepManifest.from_dict(data)
    counts = manifest.counts()

    table = Table(title=f"Sweep {store.root}")
    table.add_column("Status")
    table.add_column("Runs", justify="right")
    for run_status in RunStatus:
        style = _STATUS_STYLES[run_status]
        table.add_row(f"[{style}]{run_status.value}[/{style}]", str(counts[run_status.value]))
    table.add_row("[bold]total[/bold]", str(len(manifest.status)))
    console.print(table)

    axes = ", ".join(f"{name} ({len(values)})" for name, values in manifest.grid.axes)
    console.print(f"Grid axes: {axes}")
    done = [r for r in store.load_runs() if r.status == "done"]
    if done:
        complete = sum(1 for r in done if all(n in r.measure_values for n in MEASURE_NAMES))
        console.print(f"Measures: {complete}/{len(done)} done runs carry the full catalog")

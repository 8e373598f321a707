"""gm sweep: train every point of a hyperparameter grid into a store."""

from __future__ import annotations

import logging
from pathlib import Path

import click
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from core.config_manager import ConfigManager
from core.sweep import RunStore, SweepRunner
from utils.logging_setup import attach_store_log

from .common import STORE_ENV, console, global_option

logger = logging.getLogger(__name__)

EXIT_FAILED_RUNS = 2


@click.group()
def sweep() -> None:
    """Train hyperparameter grids"""


@sweep.command("run")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--store", "store_path", envvar=STORE_ENV, help="Store directory (default: <config>_store beside the config)")
def run(config_path: str, store_path: str | None) -> None:
    """Train every grid point of CONFIG_PATH, resuming runs already stored"""
    config = ConfigManager(config_path)
    grid = config.grid()
    path = Path(store_path) if store_path else Path(config_path).with_name(f"{Path(config_path).stem}_store")
    store = RunStore(path)
    jobs = int(global_option("jobs", 1))

    with store:
        attach_store_log(store.root)
        runner = SweepRunner(grid, config.base_sections(), store, jobs=jobs,
                             seed_offset=int(global_option("seed_offset", 0)))
        with Progress(
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task("Training", total=None)

            def started(total: int, pending: int) -> None:
                config.save(store.config_path)
                progress.update(task, total=pending)
                console.print(f"Sweep of [cyan]{total}[/cyan] runs: {total - pending} stored, {pending} to train")

            runner.on_sweep_start = started
            runner.on_run_complete = lambda record: progress.advance(task)
            result = runner.run()

    console.print(f"[green]✓[/green] {len(result.done)} done, {result.skipped} resumed from {store.root}")
    if not result.ok:
        console.print(f"[red]✗[/red] {len(result.failed)} runs failed: {', '.join(result.failed)}")
        raise click.exceptions.Exit(EXIT_FAILED_RUNS)

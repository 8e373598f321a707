"""gm measure: compute catalog measures on stored runs, or list the catalog."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed

import click
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from core.errors import InsufficientDataError
from core.measures import CATEGORIES, MEASURE_CATALOG, measure_record, names_in_category, resolve_selection
from core.training.records import MeasureValue, RunRecord
from utils.logging_setup import attach_store_log

from .common import console, global_option, resolve_store, store_config

logger = logging.getLogger(__name__)


@click.group()
def measure() -> None:
    """Compute and list generalization measures"""


def _pending(records: list[RunRecord], names: list[str], recompute: bool) -> list[tuple[RunRecord, list[str]]]:
    work = []
    for record in records:
        todo = list(names) if recompute else [n for n in names if n not in record.measure_values]
        if todo:
            work.append((record, todo))
    return work


@measure.command("compute")
@click.argument("store_path", required=False)
@click.option("--only", help="Comma-separated measure or category names (default: full catalog)")
@click.option("--recompute", is_flag=True, help="Recompute values that are already stored")
def compute(store_path: str | None, only: str | None, recompute: bool) -> None:
    """Compute measures on every done run of STORE_PATH"""
    store = resolve_store(store_path)
    config = store_config(store)
    names = resolve_selection(only or config.measure_selection())
    settings = config.measure_settings()
    jobs = int(global_option("jobs", 1))

    with store:
        attach_store_log(store.root)
        runs = store.load_runs()
        done = [r for r in runs if r.status == "done"]
        if not done:
            raise InsufficientDataError(f"store {store.root} has no done runs")
        if len(done) < len(runs):
            logger.info("Skipping %d failed runs", len(runs) - len(done))
        work = _pending(done, names, recompute)
        console.print(f"{len(names)} measures over {len(done)} runs; {len(work)} runs need computation")

        failed = 0
        with Progress(TextColumn("[bold blue]{task.description}"), BarColumn(), MofNCompleteColumn(),
                      TimeElapsedColumn(), console=console, transient=True) as progress:
            task = progress.add_task("Measuring", total=len(work))

            def persist(run_id: str, values: dict[str, MeasureValue]) -> None:
                nonlocal failed
                store.append_measures(run_id, values)
                failed += sum(1 for v in values.values() if not v.ok)
                progress.advance(task)

            if jobs == 1 or len(work) <= 1:
                for record, todo in work:
                    persist(record.run_id, measure_record(record, todo, settings))
            else:
                with ProcessPoolExecutor(max_workers=jobs) as executor:
                    future_to_run = {executor.submit(measure_record, record, todo, settings): (record, todo)
                                     for record, todo in work}
                    for future in as_completed(future_to_run):
                        record, todo = future_to_run[future]
                        try:
                            values = future.result()
                        except Exception as e:
                            logger.error("Measuring run %s crashed in its worker: %s", record.run_id, e,
                                         exc_info=True)
                            values = {n: MeasureValue.failed(n, MEASURE_CATALOG[n], f"worker crashed: {e}",
                                                             settings.seed) for n in todo}
                        persist(record.run_id, values)

    total = sum(len(todo) for _, todo in work)
    console.print(f"[green]✓[/green] {total - failed} values computed, {failed} failed")


@measure.command("list")
@click.option("--category", type=click.Choice(CATEGORIES), help="Only this category")
def list_measures(category: str | None) -> None:
    """Print the measure catalog"""
    table = Table(title="Measure catalog")
    table.add_column("#", justify="right", style="dim")
    table.add_column("Measure", style="cyan")
    table.add_column("Category", style="magenta")
    names = names_in_category(category) if category else list(MEASURE_CATALOG)
    for i, name in enumerate(names, 1):
        table.add_row(str(i), name, MEASURE_CATALOG[name])
    console.print(table)

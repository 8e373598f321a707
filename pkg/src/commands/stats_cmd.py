"""gm stats: predictivity tables for the stored measures."""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path

import click
from rich.table import Table

from core.measures import resolve_selection
from utils.logging_setup import attach_store_log
from utils.report_tables import measures_frame, runs_frame, stats_tables, write_csv

from .common import console, resolve_store, store_config

logger = logging.getLogger(__name__)


@click.command()
@click.argument("store_path", required=False)
@click.option("--targets", help='Gap targets, e.g. "iid,shift:3" (default: the config\'s stats.targets)')
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory (default: <store>/stats)")
@click.option("--only", help="Comma-separated measure or category names")
@click.option("--seed-conditional/--no-seed-conditional", default=None, help="Average tau per seed inside subspaces")
def stats(
    store_path: str | None,
    targets: str | None,
    out_dir: str | None,
    only: str | None,
    seed_conditional: bool | None,
) -> None:
    """Write psi_table.csv, sign_error.csv and cmi.csv for STORE_PATH"""
    store = resolve_store(store_path)
    attach_store_log(store.root)
    settings = store_config(store).stats_settings()
    overrides = {}
    if targets:
        overrides["targets"] = targets
    if seed_conditional is not None:
        overrides["seed_conditional"] = seed_conditional
    settings = dataclasses.replace(settings, **overrides)
    names = resolve_selection(only) if only else None

    records = store.load_runs()
    psi, sign, cmi = stats_tables(records, settings, names)
    out = Path(out_dir) if out_dir else store.root / "stats"
    written = [
        write_csv(runs_frame(records), out / "runs.csv"),
        write_csv(measures_frame(records), out / "measures.csv"),
        write_csv(psi, out / "psi_table.csv"),
        write_csv(sign, out / "sign_error.csv"),
        write_csv(cmi, out / "cmi.csv"),
    ]

    table = Table(title="Mean Psi by category")
    table.add_column("Category", style="magenta")
    for target in sorted(set(psi["target"])):
        table.add_column(target, justify="right")
    if not psi.empty:
        per_measure = psi.drop_duplicates(["measure", "target"])
        summary = per_measure.groupby(["category", "target"], sort=True)["psi"].mean().unstack("target")
        for category, row in summary.iterrows():
            table.add_row(str(category), *(f"{v:.2f}" for v in row))
    console.print(table)
    for path in written:
        console.print(f"[green]✓[/green] {path}")

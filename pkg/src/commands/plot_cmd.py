"""gm plot: scatter and sign-error figures from one or more stats directories."""

from __future__ import annotations

from pathlib import Path

import click

from utils.figures import FORMATS, render_figures

from .common import console


@click.command()
@click.argument("stats_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Figure directory (default: <first dir>/figures)")
@click.option("--format", "formats", type=click.Choice(FORMATS), multiple=True, default=("svg",), show_default=True)
@click.option("--shift-target", help="Target on the y axis (default: the first shift target present)")
def plot(stats_dirs: tuple[str, ...], out_dir: str | None, formats: tuple[str, ...], shift_target: str | None) -> None:
    """Draw figures; each STATS_DIR is one model and gets its own glyph"""
    out = Path(out_dir) if out_dir else Path(stats_dirs[0]) / "figures"
    written = render_figures(stats_dirs, out, formats, shift_target)
    console.print(f"[green]✓[/green] {len(written)} figures in {out}")

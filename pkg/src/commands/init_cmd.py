"""Copy a shipped example sweep config into a working directory (gm init)."""

import shutil
from pathlib import Path

import click
from rich.table import Table

from core.config_manager import ConfigManager
from core.errors import ConfigError

from .common import console

# Paths relative to the project root
_PROJECT_ROOT = Path(__file__).parent.parent.parent
_EXAMPLES_DIR = _PROJECT_ROOT / "config" / "examples"


def available_examples(examples_dir: Path = _EXAMPLES_DIR) -> dict[str, Path]:
    return {p.stem: p for p in sorted(examples_dir.glob("*.yaml"))}


def _show_examples(examples: dict[str, Path]) -> None:
    table = Table(title="Example sweeps")
    table.add_column("Name", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Axes")
    for name, path in examples.items():
        grid = ConfigManager(path).grid()
        table.add_row(name, str(grid.size), ", ".join(grid.names))
    console.print(table)


@click.command()
@click.argument("directory", type=click.Path(file_okay=False), default=".")
@click.option("--example", "-e", default="toy_blobs", show_default=True, help="Example config to copy")
@click.option("--list", "list_only", is_flag=True, help="List the example configs and exit")
@click.option("--force", is_flag=True, help="Overwrite an existing config")
def init(directory: str, example: str, list_only: bool, force: bool) -> None:
    """Copy an example sweep config into DIRECTORY"""
    examples = available_examples()
    if list_only:
        _show_examples(examples)
        return
    if example not in examples:
        raise ConfigError(f"unknown example '{example}', expected one of {', '.join(examples)}")

    target_dir = Path(directory)
    target_dir.mkdir(parents=True, exist_ok=True)
    target = target_dir / f"{example}.yaml"
    if target.exists() and not force:
        raise ConfigError(f"{target} already exists; pass --force to overwrite")
    shutil.copy2(examples[example], target)
    console.print(f"  Created [cyan]{target}[/]")
    console.print(f"  Next: [bold]gm sweep run {target}[/]")

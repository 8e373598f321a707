#!/usr/bin/env python3
"""Command Line Interface for genmeter"""

import sys
from pathlib import Path
from typing import Any

import click

# Add parent directory to path
sys.path.append(str(Path(__file__).parent))

from core.errors import GenmeterError
from utils.logging_setup import setup_logging

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
EXIT_ERROR = 1


class GenmeterGroup(click.Group):
    """Reports package errors as a single ``error[<kind>]: <message>`` line on stderr."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except GenmeterError as e:
            click.echo(f"error[{e.kind}]: {e}", err=True)
            ctx.exit(EXIT_ERROR)
        except OSError as e:
            click.echo(f"error[io]: {e}", err=True)
            ctx.exit(EXIT_ERROR)


@click.group(cls=GenmeterGroup)
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for training and measure computation")
@click.option("--seed-offset", type=int, default=0, show_default=True, help="Added to every seed token of the grid")
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default="WARNING",
              show_default=True, help="Console log level (the store log always records INFO)")
@click.pass_context
def cli(ctx: click.Context, jobs: int, seed_offset: int, log_level: str) -> None:
    """genmeter - generalization measures over hyperparameter sweeps"""
    setup_logging(log_level)
    ctx.obj = {"jobs": jobs, "seed_offset": seed_offset, "log_level": log_level.upper()}


# Register subcommands from commands/ package
from commands.init_cmd import init as init_command
from commands.measure_cmd import measure as measure_command
from commands.plot_cmd import plot as plot_command
from commands.stats_cmd import stats as stats_command
from commands.status_cmd import status as status_command
from commands.sweep_cmd import sweep as sweep_command

cli.add_command(init_command)
cli.add_command(sweep_command)
cli.add_command(measure_command)
cli.add_command(stats_command)
cli.add_command(plot_command)
cli.add_command(status_command)


if __name__ == "__main__":
    cli()

"""Helpers shared by the gm sub-commands."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import click
from rich.console import Console

from core.config_manager import ConfigManager
from core.errors import ConfigError
from core.sweep.store import RunStore

STORE_ENV = "GENMETER_STORE"

console = Console()


def resolve_store(store_path: str | None, must_exist: bool = True) -> RunStore:
    """``STORE`` argument, else ``$GENMETER_STORE``."""
    path = store_path or os.environ.get(STORE_ENV)
    if not path:
        raise ConfigError(f"no store given; pass STORE or set {STORE_ENV}")
    store = RunStore(Path(path))
    if must_exist and not store.exists():
        raise ConfigError(f"no sweep store at {path}")
    return store


def store_config(store: RunStore) -> ConfigManager:
    """The config a store was swept with; package defaults for stores without one."""
    if store.config_path.exists():
        return ConfigManager(store.config_path)
    return ConfigManager()


def global_option(name: str, default: Any = None) -> Any:
    ctx = click.get_current_context()
    obj = ctx.find_root().obj or {}
    return obj.get(name, default)

"""Process-wide logging for the gm command line."""

from __future__ import annotations

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_MAX_BYTES = 10 * 1024 * 1024
LOG_BACKUP_COUNT = 5
LOG_FILE_NAME = "genmeter.log"

_state: dict[str, logging.Handler] = {}


def setup_logging(level: str = "WARNING") -> logging.Logger:
    """Install the console handler once; later calls rebind it to the current stderr and set its level."""
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    if "console" not in _state:
        ch = logging.StreamHandler()
        ch.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(ch)
        _state["console"] = ch
    console = _state["console"]
    if isinstance(console, logging.StreamHandler):
        console.setStream(sys.stderr)
    console.setLevel(getattr(logging, level.upper(), logging.WARNING))
    return root


def attach_store_log(store_root: str | Path) -> Path:
    """Add a rotating INFO file handler under ``<store>/logs`` (10MB max, keep 5 backup files)."""
    log_dir = Path(store_root) / "logs"
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / LOG_FILE_NAME
    previous = _state.get("file")
    if isinstance(previous, RotatingFileHandler) and Path(previous.baseFilename) == log_file.resolve():
        return log_file
    root = logging.getLogger()
    if previous is not None:
        root.removeHandler(previous)
        previous.close()
    fh = RotatingFileHandler(log_file, maxBytes=LOG_MAX_BYTES, backupCount=LOG_BACKUP_COUNT, encoding="utf-8")
    fh.setLevel(logging.INFO)
    fh.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(fh)
    _state["file"] = fh
    return log_file


def detach_store_log() -> None:
    fh = _state.pop("file", None)
    if fh is not None:
        logging.getLogger().removeHandler(fh)
        fh.close()

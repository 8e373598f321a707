"""Append-only run store.

Layout of a store directory::

    runs.jsonl      one RunRecord per line, written once per run id
    measures.jsonl  {"run_id", "values": {name: MeasureValue}} lines; later lines win per name
    manifest.json   sweep manifest, replaced atomically
    sweep.yaml      the sweep config the store was created from
    logs/           rotating log files
    .store.lock     advisory lock held by the single writer

Floats are written with full precision (``repr``); NaN and infinities are
encoded as ``{"__float__": "nan" | "inf" | "-inf"}``.
"""

from __future__ import annotations

import fcntl
import json
import logging
import math
import os
import tempfile
from collections.abc import Iterator
from pathlib import Path
from typing import Any

from core.errors import DuplicateRunError, StoreCorruptError, StoreLockError
from core.training.records import MeasureValue, RunRecord

logger = logging.getLogger(__name__)

RUNS_FILE = "runs.jsonl"
MEASURES_FILE = "measures.jsonl"
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "sweep.yaml"
LOCK_FILE = ".store.lock"
LOG_DIR = "logs"
FLOAT_SENTINEL = "__float__"


def encode_floats(obj: Any) -> Any:
    """Replace non-finite floats with sentinel objects, recursively."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return {FLOAT_SENTINEL: "nan"}
        if math.isinf(obj):
            return {FLOAT_SENTINEL: "inf" if obj > 0 else "-inf"}
        return obj
    if isinstance(obj, dict):
        return {str(k): encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode_floats(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return encode_floats(obj.item())
    return obj


def decode_floats(obj: Any) -> Any:
    if isinstance(obj, dict):
        if set(obj) == {FLOAT_SENTINEL}:
            return float(obj[FLOAT_SENTINEL])
        return {k: decode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode_floats(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(encode_floats(obj), allow_nan=False, separators=(",", ":"))


def _atomic_json_write(path: Path, data: dict[str, Any]) -> None:
    """Write JSON atomically: write to temp file, then rename."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(encode_floats(data), f, indent=2, allow_nan=False)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


class RunStore:
    """Line-delimited persistence of run records and measure values."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.runs_path = self.root / RUNS_FILE
        self.measures_path = self.root / MEASURES_FILE
        self.manifest_path = self.root / MANIFEST_FILE
        self.config_path = self.root / CONFIG_FILE
        self.log_dir = self.root / LOG_DIR
        self._lock_fd: int | None = None
        self._known_ids: set[str] | None = None

    def init(self) -> RunStore:
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_dir.mkdir(exist_ok=True)
        return self

    def exists(self) -> bool:
        return self.runs_path.exists() or self.manifest_path.exists()

    # Locking

    def acquire(self) -> None:
        """Take the writer lock without blocking; a second writer gets StoreLockError."""
        self.init()
        fd = os.open(self.root / LOCK_FILE, os.O_CREAT | os.O_RDWR, 0o600)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError as e:
            os.close(fd)
            raise StoreLockError(f"store {self.root} is locked by another writer") from e
        self._lock_fd = fd

    def release(self) -> None:
        if self._lock_fd is not None:
            fcntl.flock(self._lock_fd, fcntl.LOCK_UN)
            os.close(self._lock_fd)
            self._lock_fd = None

    def __enter__(self) -> RunStore:
        self.acquire()
        return self

    def __exit__(self, *exc: object) -> None:
        self.release()

    # Reading

    def _read_lines(self, path: Path) -> Iterator[dict[str, Any]]:
        """Parsed lines of ``path``; an unparsable final line is quarantined.

        Any other unparsable line raises ``StoreCorruptError`` naming the file and line number.
        """
        if not path.exists():
            return
        with open(path) as f:
            lines = f.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                yield decode_floats(json.loads(line))
            except json.JSONDecodeError as e:
                if i == len(lines) - 1:
                    self._quarantine(path, line)
                    return
                raise StoreCorruptError(f"{path}:{i + 1}: unparsable line ({e.msg})") from e

    def _quarantine(self, path: Path, line: str) -> None:
        """Move a corrupt trailing line aside and truncate the file to its last good line."""
        logger.warning("Quarantining corrupt trailing line in %s (%d bytes)", path, len(line))
        with open(path.with_suffix(path.suffix + ".quarantine"), "a") as q:
            q.write(line + "\n")
        with open(path, "rb+") as f:
            data = f.read()
            cut = data.rstrip(b"\n").rfind(b"\n")
            f.truncate(cut + 1 if cut >= 0 else 0)

    def load_runs(self) -> list[RunRecord]:
        """Records in write order with their latest measure values merged in."""
        records = [RunRecord.from_dict(d) for d in self._read_lines(self.runs_path)]
        measures = self.load_measures()
        return [r.with_measures(measures[r.run_id]) if r.run_id in measures else r for r in records]

    def load_measures(self) -> dict[str, dict[str, MeasureValue]]:
        out: dict[str, dict[str, MeasureValue]] = {}
        for entry in self._read_lines(self.measures_path):
            values = {name: MeasureValue.from_dict(v) for name, v in entry["values"].items()}
            out.setdefault(entry["run_id"], {}).update(values)
        return out

    def run_ids(self) -> set[str]:
        if self._known_ids is None:
            self._known_ids = {d["run_id"] for d in self._read_lines(self.runs_path)}
        return set(self._known_ids)

    # Writing

    def _append(self, path: Path, entry: dict[str, Any]) -> None:
        self.init()
        prefix = ""
        if path.exists() and not self._ends_with_newline(path):
            for _ in self._read_lines(path):
                pass
            prefix = "" if self._ends_with_newline(path) else "\n"
        with open(path, "a") as f:
            f.write(prefix + dumps(entry) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def append_run(self, record: RunRecord) -> None:
        """Persist a record once; measure values go to the measures file."""
        known = self.run_ids()
        if record.run_id in known:
            raise DuplicateRunError(f"run {record.run_id} is already in the store")
        entry = record.to_dict()
        measures = entry.pop("measure_values")
        entry["measure_values"] = {}
        self._append(self.runs_path, entry)
        self._known_ids = known | {record.run_id}
        if measures:
            self._append(self.measures_path, {"run_id": record.run_id, "values": measures})

    def append_measures(self, run_id: str, values: dict[str, MeasureValue]) -> None:
        if not values:
            return
        self._append(self.measures_path, {"run_id": run_id,
                                          "values": {n: v.to_dict() for n, v in sorted(values.items())}})

    def write_manifest(self, data: dict[str, Any]) -> None:
        self.init()
        _atomic_json_write(self.manifest_path, data)

    def read_manifest(self) -> dict[str, Any] | None:
        if not self.manifest_path.exists():
            return None
        with open(self.manifest_path) as f:
            return decode_floats(json.load(f))

    @staticmethod
    def _ends_with_newline(path: Path) -> bool:
        """True for an empty file: nothing needs separating."""
        if path.stat().st_size == 0:
            return True
        with open(path, "rb") as f:
            f.seek(-1, os.SEEK_END)
            return f.read(1) == b"\n"

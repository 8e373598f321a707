"""Exception hierarchy shared by every genmeter package."""


class GenmeterError(Exception):
    """Base class; ``kind`` is the short tag printed by the CLI as ``error[<kind>]``."""

    kind = "genmeter"


class ShapeMismatchError(GenmeterError, ValueError):
    kind = "shape"


class NonFiniteError(GenmeterError, FloatingPointError):
    kind = "non-finite"


class ConfigError(GenmeterError, ValueError):
    kind = "config"


class DuplicateRunError(GenmeterError, ValueError):
    kind = "duplicate"


class StoreLockError(GenmeterError, RuntimeError):
    kind = "lock"


class StoreCorruptError(GenmeterError, ValueError):
    """A store file has an unparsable line before its last one."""

    kind = "store"


class MeasureError(GenmeterError, RuntimeError):
    """A measure could not be computed; ``detail`` is stored on the failed value."""

    kind = "measure"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = dict(detail or {})


class InsufficientDataError(GenmeterError, ValueError):
    kind = "insufficient-data"


class ReportError(GenmeterError, ValueError):
    """A stats table is missing or malformed."""

    kind = "report"

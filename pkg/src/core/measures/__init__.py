"""Generalization measures over trained runs, grouped into six categories."""

from .catalog import MEASURE_CATALOG, MEASURE_NAMES, names_in_category, resolve_selection
from .constants import CATEGORIES
from .context import MeasureContext
from .engine import MeasureEngine, measure_record
from .settings import MeasureSettings, PosteriorSpec

__all__ = [
    "CATEGORIES",
    "MEASURE_CATALOG",
    "MEASURE_NAMES",
    "MeasureContext",
    "MeasureEngine",
    "MeasureSettings",
    "PosteriorSpec",
    "measure_record",
    "names_in_category",
    "resolve_selection",
]

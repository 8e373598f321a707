"""Tabular artifacts: measures.csv, psi_table.csv, sign_error.csv and cmi.csv."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING

import pandas as pd

from core.errors import InsufficientDataError, ReportError
from core.measures.catalog import MEASURE_CATALOG, MEASURE_NAMES
from core.robustness import (
    cmi_score,
    compute_gap_targets,
    granulated_psi,
    measure_series,
    run_configs,
    sign_error_distribution,
)
from core.robustness.subspaces import SEED_AXIS

if TYPE_CHECKING:
    from core.robustness.settings import StatsSettings
    from core.training.records import RunRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
PSI_COLUMNS = ["measure", "category", "axis", "target", "mean_tau", "psi"]
SIGN_ERROR_COLUMNS = ["measure", "target", "mean", "p90", "max", "n_env", "n_filtered", "empty"]
CMI_COLUMNS = ["measure", "target", "K", "argmin_subset"]
MEASURE_COLUMNS = ["run_id", "measure", "category", "value", "status"]


def write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_csv(path: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    """Read a stats table, checking its header."""
    try:
        df = pd.read_csv(path, keep_default_na=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ReportError(f"cannot read {path}: {e}") from e
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ReportError(f"{path} is missing columns {missing}")
    return df


def measures_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    """Long table of every stored measure value, runs in store order, measures in catalog order."""
    rows = []
    for record in records:
        for name in MEASURE_NAMES:
            value = record.measure_values.get(name)
            if value is not None:
                rows.append([record.run_id, name, value.category, value.value, value.status])
    return pd.DataFrame(rows, columns=MEASURE_COLUMNS)


def runs_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    """One row per run: grid tokens, status and accuracies."""
    rows = []
    for record in records:
        row: dict[str, object] = {"run_id": record.run_id, "status": record.status}
        row.update(record.config)
        row["train_acc"] = record.train_acc
        row["test_acc_iid"] = record.test_acc_iid
        for severity, acc in sorted(record.test_acc_shift.items()):
            row[f"test_acc_shift_{severity}"] = acc
        row["wall_time"] = record.wall_time
        rows.append(row)
    return pd.DataFrame(rows)


def _axes(records: Sequence[RunRecord], settings: StatsSettings) -> list[str]:
    if settings.axes is not None:
        return list(settings.axes)
    seen: dict[str, None] = {}
    for record in records:
        for axis in record.config:
            if axis != SEED_AXIS:
                seen.setdefault(axis)
    return list(seen)


def stats_tables(
    records: Sequence[RunRecord],
    settings: StatsSettings,
    measures: Sequence[str] | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Psi, sign-error and CMI tables, rows ordered by measure (catalog order) then target."""
    done = [r for r in records if r.status == "done"]
    if not done:
        raise InsufficientDataError("the store has no done runs")
    names = [n for n in MEASURE_NAMES if measures is None or n in measures]
    targets = compute_gap_targets(done, settings.target_names)
    configs = run_configs(done)
    axes = _axes(done, settings)

    psi_rows, sign_rows, cmi_rows = [], [], []
    for name in names:
        series = measure_series(done, name)
        if not series:
            logger.info("Measure %s has no ok values; skipped", name)
            continue
        for target in targets:
            try:
                psi = granulated_psi(configs, series, target.values, axes, settings.seed_conditional)
                for axis, score in psi.per_axis.items():
                    psi_rows.append([name, MEASURE_CATALOG[name], axis, target.name, score.mean_tau, psi.psi])
            except InsufficientDataError as e:
                logger.info("Psi for %s on %s: %s", name, target.name, e)

            summary = sign_error_distribution(configs, series, target.values, settings.n_eff_threshold)
            sign_rows.append([name, target.name, summary.mean, summary.p90, summary.max,
                              summary.n_environments, summary.n_filtered, summary.empty])

            try:
                score = cmi_score(configs, series, target.values, axes, settings.cmi_depth,
                                  settings.pair_cap, settings.pair_seed)
                cmi_rows.append([name, target.name, score.k, "+".join(score.argmin_subset) or "()"])
            except InsufficientDataError as e:
                logger.info("CMI for %s on %s: %s", name, target.name, e)
                cmi_rows.append([name, target.name, float("nan"), ""])

    return (
        pd.DataFrame(psi_rows, columns=PSI_COLUMNS),
        pd.DataFrame(sign_rows, columns=SIGN_ERROR_COLUMNS),
        pd.DataFrame(cmi_rows, columns=CMI_COLUMNS),
    )

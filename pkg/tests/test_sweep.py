"""Tests for grid expansion, the run store, the manifest and the sweep runner."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.config_manager import ConfigManager
from core.errors import ConfigError, DuplicateRunError, StoreCorruptError, StoreLockError
from core.sweep import (
    HyperGrid,
    RunStatus,
    RunStore,
    SweepManifest,
    SweepRunner,
    expand_grid,
    resolve_setup,
    resume,
    run_id,
)
from core.training.records import MeasureValue

TINY = {
    "dataset": {"kind": "blobs", "n_per_split": 20, "num_classes": 2, "noise": 0.5, "generator_seed": 0},
    "model": {"hidden_widths": [4]},
    "train": {"optimizer": "sgd", "learning_rate": 0.1, "batch_size": 8, "epochs": 2, "seed": 0},
    "grid": {"axes": {"lr": [0.1, 0.05], "seed": [0, 1]}},
}


def test_expand_grid_order():
    """The last axis varies fastest."""
    grid = HyperGrid.from_mapping({"a": [1, 2], "b": ["x", "y"]})
    assert expand_grid(grid) == [
        {"a": "1", "b": "x"},
        {"a": "1", "b": "y"},
        {"a": "2", "b": "x"},
        {"a": "2", "b": "y"},
    ]


def test_grid_size_and_tokens():
    """Sizes multiply and list values become width tokens."""
    grid = HyperGrid.from_mapping({"lr": [0.1, 0.01, 0.001, 1e-4], "width": [8, 16, 32],
                                   "hidden_widths": [[16, 16]], "seed": [0, 1, 2, 3]})
    assert grid.size == 4 * 3 * 1 * 4
    assert grid.to_dict()["hidden_widths"] == ["16x16"]
    assert len(expand_grid(grid)) == grid.size


@settings(max_examples=40, deadline=None)
@given(axes=st.dictionaries(
    keys=st.sampled_from(["lr", "wd", "width", "seed"]),
    values=st.lists(st.integers(0, 100), min_size=1, max_size=4, unique=True),
    min_size=1,
))
def test_grid_cardinality_and_distinct_ids(axes):
    """Expansion yields the product of axis sizes, each point with its own stable id."""
    grid = HyperGrid.from_mapping(axes)
    points = expand_grid(grid)
    assert len(points) == grid.size == math.prod(len(v) for v in axes.values())
    ids = [run_id(p) for p in points]
    assert len(set(ids)) == len(ids)
    assert ids == [run_id(dict(reversed(list(p.items())))) for p in points]


@pytest.mark.parametrize("axes", [{}, {"lr": []}, {"lr": [0.1, 0.1]}])
def test_bad_grids_are_rejected(axes):
    """Empty grids, empty axes and repeated values are config errors."""
    with pytest.raises(ConfigError):
        HyperGrid.from_mapping(axes)


def test_run_id_is_canonical():
    """Key order does not change the id; values do."""
    a = run_id({"lr": "0.1", "seed": "0"})
    assert a == run_id({"seed": "0", "lr": "0.1"})
    assert a != run_id({"lr": "0.1", "seed": "1"})
    assert len(a) == 16
    int(a, 16)


def test_seed_offset_shifts_seed_tokens():
    """Offsets apply to the seed axis only."""
    grid = HyperGrid.from_mapping({"lr": [0.1], "seed": [0, 1]})
    shifted = grid.with_seed_offset(10)
    assert shifted.to_dict() == {"lr": ["0.1"], "seed": ["10", "11"]}
    assert grid.with_seed_offset(0) is grid
    with pytest.raises(ConfigError):
        HyperGrid.from_mapping({"seed": ["a"]}).with_seed_offset(1)


def test_resolve_setup_overlays_axes():
    """Aliases map onto train and model fields; input size and classes come from the dataset."""
    base = ConfigManager(data=TINY).base_sections()
    setup = resolve_setup({"lr": "0.05", "wd": "1e-4", "dropout": "0.25", "seed": "3"},
                          base["dataset"], base["model"], base["train"])
    assert setup.train.learning_rate == 0.05
    assert setup.train.weight_decay == 1e-4
    assert setup.train.seed == 3
    assert setup.model.dropout_p == 0.25
    assert setup.model.input_dim == setup.dataset.input_dim
    assert setup.model.num_classes == 2
    assert setup.run_id == run_id(setup.assignment)


def test_resolve_setup_architecture_axes():
    """Width tokens, a uniform width and a depth all reshape the hidden layers."""
    base = ConfigManager(data=TINY).base_sections()
    args = (base["dataset"], base["model"], base["train"])
    assert resolve_setup({"hidden_widths": "8x4"}, *args).model.hidden_widths == (8, 4)
    assert resolve_setup({"width": "32"}, *args).model.hidden_widths == (32,)
    assert resolve_setup({"depth": "3"}, *args).model.hidden_widths == (4, 4, 4)


def test_resolve_setup_rejects_unknown_axis():
    """An axis naming no setting is a config error."""
    base = ConfigManager(data=TINY).base_sections()
    with pytest.raises(ConfigError):
        resolve_setup({"momentum": "0.9"}, base["dataset"], base["model"], base["train"])
    with pytest.raises(ConfigError):
        resolve_setup({"lr": "fast"}, base["dataset"], base["model"], base["train"])


def test_store_round_trip(tmp_path, make_record):
    """Records come back in write order with their measures merged."""
    store = RunStore(tmp_path / "store")
    store.append_run(make_record("a", {"seed": "0"}, measures={"ece": ("calibration", 0.1)}))
    store.append_run(make_record("b", {"seed": "1"}, train_acc=float("nan"), test_acc_iid=float("nan"),
                                 status="failed"))
    records = RunStore(tmp_path / "store").load_runs()
    assert [r.run_id for r in records] == ["a", "b"]
    assert records[0].measure_values["ece"].value == 0.1
    assert math.isnan(records[1].train_acc)
    assert records[1].failure == "diverged"


def test_store_keeps_write_order(tmp_path, make_record):
    """A hundred appends read back in the same order."""
    store = RunStore(tmp_path)
    ids = [f"run-{i:03d}" for i in range(100)]
    for rid in ids:
        store.append_run(make_record(rid, {"seed": rid}))
    assert [r.run_id for r in RunStore(tmp_path).load_runs()] == ids


def test_duplicate_run_is_rejected(tmp_path, make_record):
    """A run id is written once."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    with pytest.raises(DuplicateRunError):
        store.append_run(make_record("a", {"seed": "0"}))
    with pytest.raises(DuplicateRunError):
        RunStore(tmp_path).append_run(make_record("a", {"seed": "0"}))


def test_later_measure_lines_win(tmp_path, make_record):
    """Recomputed values replace earlier ones name by name."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    store.append_measures("a", {"ece": MeasureValue("ece", "calibration", 0.3),
                                "mce": MeasureValue("mce", "calibration", 0.5)})
    store.append_measures("a", {"ece": MeasureValue("ece", "calibration", 0.2)})
    values = store.load_runs()[0].measure_values
    assert values["ece"].value == 0.2
    assert values["mce"].value == 0.5


def test_failed_measure_value_survives_nan(tmp_path, make_record):
    """Failed values keep their NaN and reason through the JSON file."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    store.append_measures("a", {"hessian_trace": MeasureValue.failed("hessian_trace", "sharpness", "non-finite")})
    value = store.load_measures()["a"]["hessian_trace"]
    assert not value.ok
    assert math.isnan(value.value)
    assert value.detail["reason"] == "non-finite"


def test_corrupt_trailing_line_is_quarantined(tmp_path, make_record):
    """A torn final line is moved aside and later appends still work."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    with open(store.runs_path, "a") as f:
        f.write('{"run_id": "b", "conf')

    reopened = RunStore(tmp_path)
    assert [r.run_id for r in reopened.load_runs()] == ["a"]
    quarantine = store.runs_path.with_suffix(store.runs_path.suffix + ".quarantine")
    assert quarantine.read_text().startswith('{"run_id": "b"')
    assert store.runs_path.read_text().endswith("\n")

    reopened.append_run(make_record("b", {"seed": "1"}))
    assert [r.run_id for r in RunStore(tmp_path).load_runs()] == ["a", "b"]


def test_corrupt_middle_line_is_a_store_error(tmp_path, make_record):
    """Damage before the last line is reported with the file and line number."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    with open(store.runs_path, "a") as f:
        f.write('{"run_id": "x", "conf\n')
    store.append_run(make_record("b", {"seed": "1"}))

    with pytest.raises(StoreCorruptError, match=r"runs\.jsonl:2"):
        RunStore(tmp_path).load_runs()
    assert not store.runs_path.with_suffix(".jsonl.quarantine").exists()


def test_append_after_quarantining_the_only_line(tmp_path, make_record):
    """A file left empty by quarantine takes the next append without a separator."""
    store = RunStore(tmp_path)
    store.append_run(make_record("a", {"seed": "0"}))
    store.measures_path.write_text('{"run_id": "a", "val')

    store.append_measures("a", {"ece": MeasureValue("ece", "calibration", 0.1)})
    assert store.measures_path.read_text().count("\n") == 1
    assert store.load_measures()["a"]["ece"].value == 0.1


def test_store_lock_is_exclusive(tmp_path):
    """A second writer fails fast; the lock is free again after release."""
    first, second = RunStore(tmp_path), RunStore(tmp_path)
    with first:
        with pytest.raises(StoreLockError):
            second.acquire()
    second.acquire()
    second.release()


def test_manifest_transitions():
    """Status only moves forward."""
    manifest = SweepManifest.create(HyperGrid.from_mapping({"seed": [0, 1]}), {})
    rid = next(iter(manifest.status))
    manifest.transition(rid, RunStatus.RUNNING)
    manifest.transition(rid, RunStatus.RUNNING)
    manifest.transition(rid, RunStatus.DONE)
    with pytest.raises(ValueError):
        manifest.transition(rid, RunStatus.PENDING)
    with pytest.raises(ValueError):
        manifest.transition(rid, RunStatus.FAILED)
    with pytest.raises(KeyError):
        manifest.transition("nope", RunStatus.DONE)
    assert manifest.counts() == {"pending": 1, "running": 0, "done": 1, "failed": 0}


def test_manifest_dict_round_trip():
    """A manifest reads back equal to itself."""
    manifest = SweepManifest.create(HyperGrid.from_mapping({"lr": [0.1, 0.2], "seed": [0]}), {"train": {"epochs": 2}})
    again = SweepManifest.from_dict(manifest.to_dict())
    assert again == manifest
    again.check_compatible(manifest)
    other = SweepManifest.create(HyperGrid.from_mapping({"lr": [0.3], "seed": [0]}), {})
    with pytest.raises(ConfigError):
        other.check_compatible(manifest)


def test_resume_returns_unpersisted_runs(tmp_path, make_record):
    """Three persisted runs out of ten leave seven, and stale statuses reset."""
    manifest = SweepManifest.create(HyperGrid.from_mapping({"seed": list(range(10))}), {})
    store = RunStore(tmp_path)
    ids = list(manifest.assignments)
    for rid in ids[:3]:
        store.append_run(make_record(rid, manifest.assignments[rid]))
        manifest.transition(rid, RunStatus.DONE)
    manifest.transition(ids[5], RunStatus.RUNNING)

    pending = resume(manifest, store)
    assert len(pending) == 7
    assert pending == [manifest.assignments[rid] for rid in ids[3:]]
    assert manifest.status[ids[5]] is RunStatus.PENDING


def _runner(tmp_path, data=TINY):
    config = ConfigManager(data=data)
    return SweepRunner(config.grid(), config.base_sections(), RunStore(tmp_path))


@pytest.mark.slow
def test_sweep_runner_trains_and_resumes(tmp_path):
    """Every grid point is trained once; a rerun trains nothing."""
    runner = _runner(tmp_path)
    completed = []
    runner.on_run_complete = completed.append
    result = runner.run()
    assert result.total == 4
    assert len(result.done) == 4 and result.ok
    assert result.skipped == 0
    assert len(completed) == 4

    store = RunStore(tmp_path)
    records = store.load_runs()
    assert {r.run_id for r in records} == set(result.done)
    assert all(r.setup["train"]["epochs"] == 2 for r in records)
    assert SweepManifest.from_dict(store.read_manifest()).counts()["done"] == 4

    again = _runner(tmp_path).run()
    assert again.done == [] and again.skipped == 4


def test_sweep_runner_refuses_a_different_grid(tmp_path):
    """A store holding another sweep is a config error."""
    _runner(tmp_path).prepare()
    changed = {**TINY, "grid": {"axes": {"lr": [0.2], "seed": [0]}}}
    with pytest.raises(ConfigError):
        _runner(tmp_path, changed).prepare()

"""Tests for Kendall tau, granulated Psi, sign error, CMI and gap targets."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.errors import ConfigError, InsufficientDataError
from core.robustness import (
    cmi_score,
    compute_gap_targets,
    enumerate_environments,
    enumerate_subspaces,
    granulated_psi,
    kendall_tau,
    measure_series,
    ncmi,
    parse_targets,
    run_configs,
    sign_error_distribution,
    sign_error_environment,
)
from core.robustness.settings import StatsSettings
from core.robustness.sign_error import summarize


def _planted(seeds=6):
    """A 3 x 2 x seeds grid with distinct, random gaps."""
    rng = np.random.default_rng(11)
    configs, gap = {}, {}
    for k, (lr, wd, seed) in enumerate(itertools.product(["0.1", "0.01", "0.001"], ["0", "1e-4"], range(seeds))):
        run_id = f"r{k:03d}"
        configs[run_id] = {"lr": lr, "wd": wd, "seed": str(seed)}
        gap[run_id] = float(rng.uniform(0.0, 0.5))
    return configs, gap


def test_kendall_tau_cases():
    """Identical order gives 1, reversed gives -1, ties give no credit."""
    assert kendall_tau([1, 2, 3], [10, 20, 30]) == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau([1, 1, 2], [1, 2, 3]) == pytest.approx(2 / 3)
    assert kendall_tau([5, 5], [1, 2]) == 0.0


def test_kendall_tau_needs_two_points():
    """A single point has no pairs."""
    with pytest.raises(InsufficientDataError):
        kendall_tau([1.0], [2.0])


@settings(max_examples=50, deadline=None)
@given(pairs=st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=2, max_size=15))
def test_kendall_tau_ignores_monotone_rescaling(pairs):
    """A strictly increasing map of either series leaves tau unchanged."""
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    tau = kendall_tau(x, y)
    assert -1.0 <= tau <= 1.0
    assert kendall_tau([3 * v + 7 for v in x], y) == pytest.approx(tau)
    assert kendall_tau(x, [v**3 for v in y]) == pytest.approx(tau)


def test_subspaces_vary_one_axis():
    """Each lr subspace fixes wd and seed and holds all three lr values."""
    configs, _ = _planted(seeds=2)
    subspaces = enumerate_subspaces(configs, "lr")
    assert len(subspaces) == 2 * 2
    for key, members in subspaces.items():
        assert key.varied_axis == "lr"
        assert len(members) == 3
        assert len({configs[r]["lr"] for r in members}) == 3


def test_psi_of_planted_measures():
    """A measure equal to the gap scores 1, its negation -1."""
    configs, gap = _planted()
    axes = ["lr", "wd", "seed"]
    assert granulated_psi(configs, dict(gap), gap, axes).psi == pytest.approx(1.0)
    negated = {r: -g for r, g in gap.items()}
    result = granulated_psi(configs, negated, gap, axes)
    assert result.psi == pytest.approx(-1.0)
    assert all(score.mean_tau == pytest.approx(-1.0) for score in result.per_axis.values())


def test_psi_reports_absent_axes():
    """An axis with no valid subspace is absent, not zero."""
    configs, gap = _planted()
    result = granulated_psi(configs, dict(gap), gap, ["lr", "dropout"])
    assert result.absent_axes == ("dropout",)
    assert set(result.per_axis) == {"lr"}


def test_psi_uses_only_runs_with_both_values():
    """Runs missing a measure value are left out."""
    configs, gap = _planted()
    measure = {r: g for r, g in gap.items() if configs[r]["seed"] != "0"}
    result = granulated_psi(configs, measure, gap, ["lr"])
    assert result.per_axis["lr"].n_subspaces == 2 * 5


def test_seed_conditional_psi():
    """Seed-conditional mode averages per-seed taus inside seed-free subspaces."""
    configs, gap = _planted()
    result = granulated_psi(configs, dict(gap), gap, ["lr", "wd"], seed_conditional=True)
    assert result.psi == pytest.approx(1.0)
    assert result.per_axis["lr"].n_subspaces == 2


def test_sign_error_of_single_environment():
    """Agreeing pairs give 0, disagreeing give 1, and n_eff counts uniform pairs."""
    mu_a, g_a = np.array([1.0, 2.0]), np.array([0.1, 0.2])
    mu_b, g_b = np.array([3.0, 4.0, 5.0]), np.array([0.3, 0.4, 0.5])
    agree = sign_error_environment(mu_a, g_a, mu_b, g_b)
    assert agree.sign_error == 0.0
    assert agree.n_eff == pytest.approx(6.0)
    assert agree.n_pairs == 6
    assert sign_error_environment(-mu_a, g_a, -mu_b, g_b).sign_error == 1.0


def test_environments_differ_on_one_axis():
    """Combination pairs differing on two axes are not environments."""
    configs, _ = _planted(seeds=1)
    envs = enumerate_environments(configs)
    # lr pairs: 3 per wd value; wd pairs: 1 per lr value
    assert len(envs) == 3 * 2 + 3
    assert {env.differing_axis for env in envs} == {"lr", "wd"}


def test_sign_error_distribution_of_planted_measures():
    """The gap itself never errs; its negation always does."""
    configs, gap = _planted()
    perfect = sign_error_distribution(configs, dict(gap), gap)
    assert perfect.max == 0.0 and perfect.mean == 0.0
    assert perfect.n_filtered == 0
    wrong = sign_error_distribution(configs, {r: -g for r, g in gap.items()}, gap)
    assert wrong.mean == 1.0


def test_sign_error_threshold_can_empty_the_distribution():
    """A threshold above every n_eff leaves an empty, flagged summary."""
    configs, gap = _planted()
    summary = sign_error_distribution(configs, dict(gap), gap, n_eff_threshold=1000)
    assert summary.empty
    assert summary.n_filtered == summary.n_environments == 9
    assert np.isnan(summary.mean)


def test_summary_statistics():
    """{0, 0, 1} has mean 1/3, lower p90 0 and max 1."""
    summary = summarize([0.0, 0.0, 1.0])
    assert summary.mean == pytest.approx(1 / 3)
    assert summary.p90 == 0.0
    assert summary.max == 1.0


def test_ncmi_cases():
    """Identical signs give 1, independent signs about 0, constant measure 0."""
    rng = np.random.default_rng(0)
    v = rng.choice([-1.0, 1.0], size=20000)
    assert ncmi(v, v).value == pytest.approx(1.0)
    independent = rng.choice([-1.0, 1.0], size=20000)
    assert ncmi(independent, v).value < 0.01
    assert ncmi(np.ones(20000), v).value == pytest.approx(0.0, abs=1e-12)


def test_ncmi_degenerate_when_gap_is_constant():
    """Zero conditional gap entropy is flagged degenerate."""
    result = ncmi(np.array([1.0, -1.0]), np.array([1.0, 1.0]))
    assert result.degenerate
    assert np.isnan(result.value)


def test_cmi_score_of_measure_equal_to_gap():
    """A measure equal to the gap keeps full information under every conditioning set."""
    configs, gap = _planted()
    score = cmi_score(configs, dict(gap), gap, ["lr", "wd"], depth=2)
    assert score.k == pytest.approx(1.0)
    assert set(score.per_subset) == {(), ("lr",), ("wd",), ("lr", "wd")}


def test_cmi_pair_cap_subsamples():
    """A small pair cap still yields a score."""
    configs, gap = _planted()
    score = cmi_score(configs, dict(gap), gap, ["lr"], depth=1, cap=50, seed=3)
    assert score.k == pytest.approx(1.0)


def test_gap_targets(make_record):
    """The IID gap is train minus test accuracy; missing shifts are excluded."""
    records = [
        make_record("a", {"seed": "0"}, train_acc=0.9, test_acc_iid=0.8, test_acc_shift={1: 0.7}),
        make_record("b", {"seed": "1"}, train_acc=1.0, test_acc_iid=0.75),
    ]
    targets = {t.name: t for t in compute_gap_targets(records, ["gen_gap_iid", "gen_gap_shift_1"])}
    assert targets["gen_gap_iid"].values == pytest.approx({"a": 0.1, "b": 0.25})
    assert targets["gen_gap_shift_1"].values == pytest.approx({"a": 0.2})
    assert targets["gen_gap_shift_1"].notes == ("b: missing accuracy",)


def test_gap_targets_skip_failed_runs(make_record):
    """Failed runs never enter a target; a target with no runs is dropped."""
    records = [make_record("x", {"seed": "0"}, train_acc=float("nan"), test_acc_iid=float("nan"), status="failed")]
    assert compute_gap_targets(records, ["gen_gap_iid"]) == []


def test_record_views(make_record):
    """Configs and measure series come from done runs with ok values only."""
    records = [
        make_record("a", {"lr": "0.1"}, measures={"ece": ("calibration", 0.2)}),
        make_record("b", {"lr": "0.2"}),
        make_record("c", {"lr": "0.3"}, measures={"ece": ("calibration", 0.4)}, status="failed",
                    train_acc=float("nan"), test_acc_iid=float("nan")),
    ]
    assert run_configs(records) == {"a": {"lr": "0.1"}, "b": {"lr": "0.2"}}
    assert measure_series(records, "ece") == {"a": 0.2}


def test_parse_targets():
    """Target specs expand shift tokens and reject unknown ones."""
    assert parse_targets("iid,shift:3") == ["gen_gap_iid", "gen_gap_shift_3"]
    assert len(parse_targets("shift")) == 5
    for bad in ("ood", "shift:9", ""):
        with pytest.raises(ConfigError):
            parse_targets(bad)


def test_stats_settings_from_mapping():
    """Target lists are joined and unknown keys rejected."""
    parsed = StatsSettings.from_mapping({"targets": ["iid", "shift:2"], "cmi_depth": 1})
    assert parsed.target_names == ["gen_gap_iid", "gen_gap_shift_2"]
    with pytest.raises(ConfigError):
        StatsSettings.from_mapping({"depth": 1})


def test_kendall_tau_matches_brute_force():
    """The vectorised tau equals the double loop on tied and untied series."""
    rng = np.random.default_rng(4)
    for k in range(200):
        n = int(rng.integers(2, 12))
        x = rng.integers(0, 4, size=n) if k % 2 else rng.normal(size=n)
        y = rng.integers(0, 4, size=n) if k % 3 else rng.normal(size=n)
        brute = sum(np.sign(x[i] - x[j]) * np.sign(y[i] - y[j]) for i in range(n) for j in range(i + 1, n))
        assert kendall_tau(x, y) == pytest.approx(2.0 * brute / (n * (n - 1)))


def test_sign_error_is_antisymmetric():
    """Negating a tie-free measure turns SE into 1 - SE."""
    rng = np.random.default_rng(8)
    mu_a, mu_b = rng.normal(size=5), rng.normal(size=7)
    g_a, g_b = rng.normal(size=5), rng.normal(size=7)
    se = sign_error_environment(mu_a, g_a, mu_b, g_b).sign_error
    assert sign_error_environment(-mu_a, g_a, -mu_b, g_b).sign_error == pytest.approx(1.0 - se)


@pytest.mark.slow
def test_independent_measure_carries_no_signal():
    """Noise unrelated to the gap scores near zero on every statistic."""
    configs, gap = _planted(seeds=300)
    rng = np.random.default_rng(21)
    noise = {r: float(rng.normal()) for r in configs}
    assert len(configs) >= 500
    assert abs(granulated_psi(configs, noise, gap, ["lr", "wd"]).psi) <= 0.1
    assert 0.4 <= sign_error_distribution(configs, noise, gap).mean <= 0.6
    assert cmi_score(configs, noise, gap, ["lr", "wd"]).k <= 0.05

"""The fixed measure catalog: every name the engine emits, tagged with its category."""

from __future__ import annotations

from core.errors import ConfigError

from .constants import CATEGORIES

MEASURE_CATALOG: dict[str, str] = {
    # baseline_output
    "vcdim": "baseline_output",
    "params": "baseline_output",
    "magnitude": "baseline_output",
    "cross_entropy": "baseline_output",
    "negative_entropy": "baseline_output",
    # norm_margin
    "inverse_margin_p10": "norm_margin",
    "l2_over_margin_p10": "norm_margin",
    "l1_over_margin_p10": "norm_margin",
    "margin_normalized_param_norm": "norm_margin",
    "spectral_norm_per_layer": "norm_margin",
    "spec_sum": "norm_margin",
    "spec_prod": "norm_margin",
    "frobenius_distance": "norm_margin",
    "path_norm": "norm_margin",
    "fisher_rao_norm": "norm_margin",
    # sharpness
    "sharpness": "sharpness",
    "adaptive_sharpness": "sharpness",
    "sharpness_magnitude": "sharpness",
    "sharpness_magnitude_init": "sharpness",
    "sharpness_magflat": "sharpness",
    "pac_bayes_bound": "sharpness",
    "pac_bayes_magnitude": "sharpness",
    "pac_bayes_magnitude_init": "sharpness",
    "pac_bayes_magflat": "sharpness",
    "flatness_proxy": "sharpness",
    "hessian_top_eigenvalue": "sharpness",
    "hessian_trace": "sharpness",
    # optimization
    "gradient_noise_var": "optimization",
    "gradient_noise_final_var": "optimization",
    "gradient_noise_scale": "optimization",
    "gradient_norm": "optimization",
    "input_gradient_norm": "optimization",
    # information_criteria
    "aic_bias_term": "information_criteria",
    "aicc_bias_term": "information_criteria",
    "tic_bias_term": "information_criteria",
    "tic_bias_term_bound": "information_criteria",
    "waic_bias_term": "information_criteria",
    # calibration
    "ece": "calibration",
    "mce": "calibration",
    "ace": "calibration",
    "reliability_diagram": "calibration",
    "temperature_scaling": "calibration",
}

MEASURE_NAMES: tuple[str, ...] = tuple(MEASURE_CATALOG)


def stream_tag(name: str) -> int:
    """Stable per-measure RNG stream index (catalog position)."""
    return MEASURE_NAMES.index(name)


def names_in_category(category: str) -> list[str]:
    return [name for name, cat in MEASURE_CATALOG.items() if cat == category]


def resolve_selection(only: str | None) -> list[str]:
    """Expand a comma-separated mix of category and measure names, in catalog order."""
    if not only:
        return list(MEASURE_NAMES)
    wanted: set[str] = set()
    for token in (t.strip() for t in only.split(",")):
        if not token:
            continue
        if token in CATEGORIES:
            wanted.update(names_in_category(token))
        elif token in MEASURE_CATALOG:
            wanted.add(token)
        else:
            raise ConfigError(
                f"unknown measure or category '{token}'. "
                f"Categories: {', '.join(CATEGORIES)}. Measures: {', '.join(MEASURE_NAMES)}"
            )
    return [name for name in MEASURE_NAMES if name in wanted]

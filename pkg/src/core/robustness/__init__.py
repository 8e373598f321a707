"""Predictivity statistics: Kendall tau, granulated Psi, sign error and CMI."""

from .cmi import CmiScore, NcmiResult, cmi_score, ncmi, sign_pairs
from .gaps import GapTarget, compute_gap_targets, measure_series, parse_targets, run_configs
from .kendall import kendall_tau
from .sign_error import (
    Environment,
    SignErrorSummary,
    enumerate_environments,
    sign_error_distribution,
    sign_error_environment,
    uniform_weight,
)
from .subspaces import PsiResult, SubspaceKey, enumerate_subspaces, granulated_psi

__all__ = [
    "CmiScore",
    "Environment",
    "GapTarget",
    "NcmiResult",
    "PsiResult",
    "SignErrorSummary",
    "SubspaceKey",
    "cmi_score",
    "compute_gap_targets",
    "enumerate_environments",
    "enumerate_subspaces",
    "granulated_psi",
    "kendall_tau",
    "measure_series",
    "ncmi",
    "parse_targets",
    "run_configs",
    "sign_error_distribution",
    "sign_error_environment",
    "sign_pairs",
    "uniform_weight",
]

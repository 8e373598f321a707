"""Tunable parameters for measure computation (the ``measures`` config section)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any

from core.errors import ConfigError

from . import constants as C


@dataclass(frozen=True)
class PosteriorSpec:
    """Gaussian posterior used by PAC-Bayes and WAIC sampling.

    ``n`` is the bound sample count; ``None`` means the evaluation-pool size.
    """

    mode: str = "weight_noise"
    samples: int = C.DEFAULT_POSTERIOR_SAMPLES
    sigma_post: float = C.DEFAULT_SIGMA_POST
    sigma_prior: float = C.DEFAULT_SIGMA_PRIOR
    delta: float = C.DEFAULT_DELTA
    n: int | None = None
    var_floor: float = C.EPS_VAR

    def __post_init__(self) -> None:
        if self.mode not in C.POSTERIOR_MODES:
            raise ConfigError(f"unknown posterior mode '{self.mode}', expected one of {C.POSTERIOR_MODES}")
        if self.samples < 2:
            raise ConfigError(f"posterior needs at least 2 samples, got {self.samples}")
        if self.sigma_post <= 0 or self.sigma_prior <= 0 or self.var_floor <= 0:
            raise ConfigError("posterior and prior scales must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"bound sample count must be >= 1, got {self.n}")


@dataclass(frozen=True)
class MeasureSettings:
    seed: int = 0
    eval_split: str = "train"
    eval_batches: int = C.DEFAULT_EVAL_BATCHES
    margin_percentile: float = C.DEFAULT_MARGIN_PERCENTILE
    sam_rho: float = C.DEFAULT_SAM_RHO
    adaptive_radii: tuple[float, ...] = C.DEFAULT_ADAPTIVE_RADII
    noise_radius: float = C.DEFAULT_NOISE_RADIUS
    noise_samples: int = C.DEFAULT_NOISE_SAMPLES
    noise_aggregate: str = "max"
    hutchinson_samples: int = C.DEFAULT_HUTCHINSON_SAMPLES
    power_iters: int = C.DEFAULT_POWER_ITERS
    power_tol: float = C.DEFAULT_POWER_TOL
    hvp_method: str = "fd_central"
    calibration_bins: int = C.DEFAULT_CALIBRATION_BINS
    flatness_lambda: float = C.DEFAULT_FLATNESS_LAMBDA
    flatness_aggregate: str = "mean"
    gradient_norm: str = "l2"
    gradient_aggregate: str = "mean"
    posterior_samples: int = C.DEFAULT_POSTERIOR_SAMPLES
    sigma_post: float = C.DEFAULT_SIGMA_POST
    sigma_prior: float = C.DEFAULT_SIGMA_PRIOR
    delta: float = C.DEFAULT_DELTA
    bound_n: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "adaptive_radii", tuple(float(r) for r in self.adaptive_radii))
        if self.eval_split not in ("train", "test_iid"):
            raise ConfigError(f"eval_split must be 'train' or 'test_iid', got '{self.eval_split}'")
        if self.eval_batches < 1:
            raise ConfigError("eval_batches must be >= 1")
        if not 0.0 < self.margin_percentile < 1.0:
            raise ConfigError("margin_percentile must lie in (0, 1)")
        if self.sam_rho <= 0 or self.noise_radius <= 0:
            raise ConfigError("perturbation radii must be positive")
        if len(self.adaptive_radii) < 2 or any(r <= 0 for r in self.adaptive_radii):
            raise ConfigError("adaptive_radii needs at least two positive radii")
        if self.noise_samples < 1 or self.hutchinson_samples < 1 or self.power_iters < 1:
            raise ConfigError("sample and iteration counts must be >= 1")
        if self.calibration_bins < 1:
            raise ConfigError("calibration_bins must be >= 1")
        if self.flatness_lambda <= 0:
            raise ConfigError("flatness_lambda must be positive")
        for value, allowed, label in (
            (self.noise_aggregate, C.NOISE_AGGREGATES, "noise_aggregate"),
            (self.flatness_aggregate, C.FLATNESS_AGGREGATES, "flatness_aggregate"),
            (self.gradient_norm, C.GRADIENT_NORMS, "gradient_norm"),
            (self.gradient_aggregate, C.GRADIENT_AGGREGATES, "gradient_aggregate"),
            (self.hvp_method, ("fd_central",), "hvp_method"),
        ):
            if value not in allowed:
                raise ConfigError(f"{label} must be one of {allowed}, got '{value}'")
        self.posterior("weight_noise")

    def posterior(self, mode: str) -> PosteriorSpec:
        return PosteriorSpec(
            mode=mode,
            samples=self.posterior_samples,
            sigma_post=self.sigma_post,
            sigma_prior=self.sigma_prior,
            delta=self.delta,
            n=self.bound_n,
        )

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["adaptive_radii"] = list(self.adaptive_radii)
        return out

    @classmethod
    def from_mapping(cls, data: dict[str, Any] | None) -> MeasureSettings:
        """Build from a config section; unknown keys are rejected."""
        data = dict(data or {})
        data.pop("only", None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown measures settings: {', '.join(unknown)}")
        return cls(**data)

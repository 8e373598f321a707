"""Constants and defaults for the measure catalog."""

CATEGORIES = (
    "baseline_output",
    "norm_margin",
    "sharpness",
    "optimization",
    "information_criteria",
    "calibration",
)

# Numerical floors
EPS_MARGIN = 1e-6
EPS_GNS = 1e-12
EPS_TIC = 1e-8
EPS_SCALE = 1e-3
EPS_VAR = 1e-8
SAM_DEGENERATE_NORM = 1e-12

# Defaults surfaced through MeasureSettings
DEFAULT_MARGIN_PERCENTILE = 0.10
DEFAULT_SAM_RHO = 0.05
DEFAULT_ADAPTIVE_RADII = (1e-3, 10**-2.5, 1e-2, 10**-1.5, 1e-1)
DEFAULT_NOISE_RADIUS = 0.1
DEFAULT_NOISE_SAMPLES = 3
DEFAULT_HUTCHINSON_SAMPLES = 50
DEFAULT_POWER_ITERS = 100
DEFAULT_POWER_TOL = 1e-6
SPECTRAL_BLOCK = 4  # block width of the subspace iteration behind spectral_norm
DEFAULT_CALIBRATION_BINS = 15
DEFAULT_POSTERIOR_SAMPLES = 8
DEFAULT_SIGMA_POST = 0.01
DEFAULT_SIGMA_PRIOR = 0.1
DEFAULT_DELTA = 0.05
DEFAULT_FLATNESS_LAMBDA = 1e-3
DEFAULT_EVAL_BATCHES = 10
EXACT_DIAGONAL_MAX_DIM = 256  # exact Hessian diagonal by coordinate probing up to this many parameters

# Temperature search over log T
TEMPERATURE_LOG_BOUND = 3.0
TEMPERATURE_GRID_POINTS = 61
TEMPERATURE_XTOL = 1e-4

FLATNESS_AGGREGATES = ("mean", "median", "harmonic_mean")
GRADIENT_NORMS = ("l1", "l2", "linf")
GRADIENT_AGGREGATES = ("mean", "max", "std", "median")
NOISE_AGGREGATES = ("max", "mean")
NOISE_VARIANTS = ("magnitude", "magnitude_init", "magflat")
PAC_BAYES_VARIANTS = ("bound", "magnitude", "magnitude_init", "magflat")
POSTERIOR_MODES = ("mc_dropout", "weight_noise")

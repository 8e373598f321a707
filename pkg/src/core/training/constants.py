"""Constants for the training sandbox."""

DATASET_KINDS = ("blobs", "moons", "spiral")
SHIFT_KINDS = ("rotate", "translate", "feature_noise", "scale")
SHIFT_SEVERITIES = (1, 2, 3, 4, 5)
MIN_SAMPLES_PER_CLASS = 10
BLOB_RADIUS = 3.0

# Per-severity shift steps; magnitude = step * severity
ROTATE_STEP = 3.141592653589793 / 20  # radians
TRANSLATE_STEP = 0.25
FEATURE_NOISE_STEP = 0.2  # added noise std
SCALE_STEP = 0.15

OPTIMIZERS = ("sgd", "rmsprop", "adam")
INIT_SCHEMES = ("he", "glorot", "zeros")
ACTIVATIONS = ("relu", "tanh")

RMSPROP_RHO = 0.99
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
OPTIMIZER_EPS = 1e-8

DEFAULT_EPOCHS = 30
GRAD_RESERVOIR_EPOCHS = 10  # last epochs whose final-minibatch gradient is kept

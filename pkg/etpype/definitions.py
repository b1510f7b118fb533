VALID_EXPERIMENTS = [
    "spdc",
    "calibrate",
    "resolution",
    "dispersion-scan",
    "gvd-slope",
    "iac",
    "rates",
    "pulse",
]


VALID_MASK_KINDS = [
    "quadratic",
    "iac",
    "timeshift",
    "pixel-window",
    "custom",
]

VALID_FIT_MODELS = [
    "gaussian",
    "lorentzian",
    "linear",
    "quadratic-through-origin",
]

VALID_ENVELOPES = [
    "gaussian",
    "flat-top",
]

VALID_STATE_MODELS = [
    "effective",
    "marginal",
]

VALID_ACCEPTANCE = [
    "gaussian-sum",
    "constant",
]

VALID_SHAPERS = [
    "slm",
    "ideal",
]


# Heater range of the SPDC crystal mount, °C.
HEATER_RANGE = 52.0

# Smallest time shift resolved by the SLM phase, fs.
MIN_TIME_SHIFT = 0.007

# Default spectral resolution of the shaper used for the aliasing limit,
# rad/fs.
FREQUENCY_RESOLUTION = 3.3e-3

# Reference up-conversion rate at the operating point, Hz.
REFERENCE_UC_RATE = 12.8

# Published measured quantum coefficient, used to log the convention
# delta of estimate_beta_q_measured.
PUBLISHED_BETA_Q_MEASURED = 4.0e-11

import math

# local approximation
default_mu = 1e-4
spectral_cutoff = 1e-12

# parameter selection
default_holdout_fraction = 0.5
default_folds = 5
grid_floor = 1e-10
lambda_floor = 1e-10

# lambda grid bases, {base^-q >= grid_floor}
grid_bases = {
    "wendland": 2,
    "gaussian": 3,
    "car": 3,
    "sgemm": 5,
}

# sigma intervals, 10 log-spaced values each
sigma_intervals = {
    "gaussian": (0.1, 10.0),
    "car": (1.0, 10.0),
    "sgemm": (1.0, 100.0),
}
sigma_count = 10

# synthetic simulations
default_train_size = 10000
default_test_size = 1000
default_noise_variance = 0.2
default_noise_std = math.sqrt(default_noise_variance)
default_trials = 10

# used-car binning
usage_time_bins = [0.0, 90.0, 180.0, 365.0, 730.0, 1095.0, 1460.0, 2190.0, 3650.0, 5475.0, math.inf]
power_bins = [
    -19.3,
    1931.2,
    3862.4,
    5793.6,
    7724.8,
    9656.0,
    11587.2,
    13518.4,
    15449.6,
    17380.8,
    19312.0,
]

# results files
results_columns = ["method", "m", "trial", "test_mse", "comm_scalars", "wall_ms"]
summary_columns = ["method", "m", "trials", "mse_mean", "mse_std_pop", "comm_scalars_mean"]
selection_columns = ["method", "m", "trial", "machine", "lambda", "sigma"]
aborted_columns = ["method", "m", "trial", "error"]
bound_columns = ["method", "m", "trial", "max_abs_prediction", "M"]
float_format = "%.17g"

method_names = [
    "AdaDKRR-holdout",
    "AdaDKRR-cv",
    "DKRR",
    "DKRRLog",
    "DKRR-best",
    "KRR-whole-data",
]

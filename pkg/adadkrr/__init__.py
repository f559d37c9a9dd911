from .approx import BasisExpansion, CoeffMatrix, eval_expansion, fit_local_approx, synthesize
from .data import bin_column, eval_target, fit_apply_minmax, gen_synthetic, load_csv, log_target
from .kernels import KernelSpec, eval_kernel, gram
from .krr import DataSet, DualEstimator, fit_krr, predict, truncate
from .qmc import CenterSet, center_count, generate_centers
from .select import ParamGrid, SplitPlan, local_cv_select, log_transform, split, validate_global
from .silo import (
    CommLedger,
    GlobalPrediction,
    Partition,
    partition_random_min,
    partition_uniform,
    run_adadkrr,
    run_baseline,
    test_mse,
)

__version__ = "0.1.0"

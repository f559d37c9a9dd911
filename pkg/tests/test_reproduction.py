"""
Desk-scale reproduction of the simulation orderings.

These runs take minutes; they are deselected by default (``pytest -m slow``).
"""
import numpy as np
import pandas as pd
import pytest

from adadkrr import constants
from adadkrr.experiment import load_config, run_experiment, summarize

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def sim3_desk():
    config = load_config("sim3-desk", threads=None)
    result = run_experiment(config, progress=False)
    assert not result.aborted
    return result


def _means(result):
    summary = summarize(result)
    return {(r.method, r.m): r.mse_mean for r in summary.itertuples()}


def test_adadkrr_beats_dkrr_at_many_machines(sim3_desk):
    means = _means(sim3_desk)
    assert means[("AdaDKRR-holdout", 160)] < means[("DKRR", 160)]
    ada_growth = means[("AdaDKRR-holdout", 160)] / means[("AdaDKRR-holdout", 10)]
    dkrr_growth = means[("DKRR", 160)] / means[("DKRR", 10)]
    assert ada_growth < dkrr_growth


def test_log_transform_shrinks_and_helps(sim3_desk):
    sel = pd.DataFrame(sim3_desk.selections, columns=constants.selection_columns)
    keys = ["m", "trial", "machine"]
    paired = sel[sel.method == "DKRR"].merge(sel[sel.method == "DKRRLog"], on=keys, suffixes=("_dkrr", "_log"))
    assert len(paired) == len(sel[sel.method == "DKRR"])
    assert (paired["lambda_log"] <= paired["lambda_dkrr"]).all()
    means = _means(sim3_desk)
    for m in (40, 80):
        assert means[("DKRRLog", m)] <= means[("DKRR", m)]


def test_rerun_is_byte_identical(sim3_desk):
    again = run_experiment(load_config("sim3-desk", threads=None), progress=False)
    first = sim3_desk.frame().to_csv(index=False, float_format=constants.float_format)
    second = again.frame().to_csv(index=False, float_format=constants.float_format)
    assert first == second


def test_adadkrr_is_robust_to_uneven_splits():
    result = run_experiment(load_config("sim4-desk", threads=None), progress=False)
    assert not result.aborted
    _assert_adadkrr_within_bound(result)
    means = _means(result)
    ada = means[("AdaDKRR-holdout{R=5}", 80)] / means[("AdaDKRR-holdout{Usplit}", 80)]
    dkrr = means[("DKRR{R=5}", 80)] / means[("DKRR{Usplit}", 80)]
    assert ada <= dkrr
    assert np.isfinite(ada)


def _assert_adadkrr_within_bound(result):
    bounds = result.bounds_frame()
    ada = bounds[bounds["method"].str.startswith("AdaDKRR")]
    assert len(ada) > 0
    assert ada["M"].notna().all()
    assert (ada["max_abs_prediction"] <= ada["M"] * (1 + 1e-12)).all()


def test_adadkrr_predictions_stay_within_bound(sim3_desk):
    _assert_adadkrr_within_bound(sim3_desk)

import json

import pandas as pd

from adadkrr import constants
from adadkrr.cli import main


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert "sim3-desk" in out
    assert "sgemm-schema" in out


def test_run_writes_outputs(tmp_path, tiny_config):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_config))
    out_dir = tmp_path / "out"
    assert main(["-q", "run", str(path), "--out-dir", str(out_dir), "--seed", "3"]) == 0
    results = pd.read_csv(out_dir / "results.csv")
    assert list(results.columns) == constants.results_columns
    assert len(results) == 2 * 2 * 2
    assert (out_dir / "plot_mse_vs_m.csv").exists()


def test_run_exit_code_on_aborted_rows(tmp_path, tiny_config):
    tiny_config.update({"methods": ["DKRR"], "m": [1000], "trials": 1})
    path = tmp_path / "too-many.json"
    path.write_text(json.dumps(tiny_config))
    assert main(["-q", "run", str(path), "--out-dir", str(tmp_path / "out")]) == 1
    aborted = pd.read_csv(tmp_path / "out" / "aborted.csv")
    assert len(aborted) == 1


def test_config_error_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2


def test_gen_data(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["gen-data", "sim3-desk", str(out), "--seed", "4"]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["x1", "x2", "x3", "y", "y_clean"]
    assert len(frame) == 5000
    assert frame[["x1", "x2", "x3"]].stack().between(0.0, 1.0).all()


def test_gen_data_rejects_csv_presets(tmp_path):
    assert main(["gen-data", "car", str(tmp_path / "x.csv")]) == 2

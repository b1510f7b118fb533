import json
import os

import pytest

from etpype.utils.io import read_table
from etpype.workflows.pipeline_et import main


def _outputs(out_dir, experiment):
    with open(os.path.join(out_dir, experiment, "manifest.json")) as f:
        manifest = json.load(f)
    return {o["path"]: o["sha256"] for o in manifest["Outputs"]}


def test_rates(mock_output_dir, capfd):
    assert main(["rates", "--out", mock_output_dir]) == 0
    outputs = _outputs(mock_output_dir, "rates")
    assert {"rates.csv", "rates.txt", "sigma_e_survey.csv"} <= set(outputs)
    df, _, _ = read_table(os.path.join(mock_output_dir, "rates", "rates.csv"))
    values = dict(zip(df["quantity"], df["value"]))
    assert values["sigma_e"] == pytest.approx(3.03e-31, rel=1e-2)
    assert "beta_q_corrected =" in capfd.readouterr().out


def test_rates_are_deterministic(tmp_path):
    first, second = str(tmp_path / "first"), str(tmp_path / "second")
    assert main(["rates", "--out", first, "-q"]) == 0
    assert main(["rates", "--out", second, "-q"]) == 0
    assert _outputs(first, "rates") == _outputs(second, "rates")


def test_run_scenario(generate_config, mock_output_dir):
    cfg_path = generate_config("rates.yaml")
    assert main(["run", str(cfg_path), "--out", mock_output_dir, "-q"]) == 0
    assert os.path.isfile(
        os.path.join(mock_output_dir, "rates", "manifest.json")
    )


def test_spdc(generate_config, mock_output_dir):
    cfg_path = generate_config("spdc.yaml", {"plots": False})
    argv = ["spdc", "--config", str(cfg_path), "--out", mock_output_dir]
    assert main(argv + ["-q"]) == 0
    outputs = _outputs(mock_output_dir, "spdc")
    assert {"marginal.csv", "jsa.csv", "spdc.csv"} <= set(outputs)
    df, _, _ = read_table(os.path.join(mock_output_dir, "spdc", "spdc.csv"))
    values = dict(zip(df["quantity"], df["value"]))
    assert values["marginal_fwhm"] == pytest.approx(98.0, abs=1.0)


def test_missing_config(mock_output_dir, capsys):
    argv = ["iac", "--config", "/no/such.yaml", "--out", mock_output_dir]
    assert main(argv) == 2
    assert "file not found" in capsys.readouterr().err


def test_bad_unit_exit_code(generate_config, mock_output_dir, capsys):
    cfg_path = generate_config(
        "rates.yaml", {"rates": {"dc_power": "120 nW*s"}}
    )
    argv = ["rates", "--config", str(cfg_path), "--out", mock_output_dir]
    assert main(argv + ["-q"]) == 2
    assert "rates.dc_power" in capsys.readouterr().err


def test_wrong_experiment(generate_config, mock_output_dir):
    cfg_path = generate_config("rates.yaml")
    argv = ["iac", "--config", str(cfg_path), "--out", mock_output_dir]
    assert main(argv + ["-q"]) == 2


def test_aliasing_is_a_physics_error(generate_config, mock_output_dir):
    cfg_path = generate_config(
        "iac.yaml",
        {"iac": {"start": -2500.0, "stop": 2500.0, "count": 64}},
    )
    argv = ["iac", "--config", str(cfg_path), "--out", mock_output_dir]
    assert main(argv + ["-q"]) == 3

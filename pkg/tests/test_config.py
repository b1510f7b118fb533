import os

import pytest

from etpype.definitions import VALID_EXPERIMENTS
from etpype.utils.config import rates_params, validate_scenario
from etpype.utils.errors import ConfigurationError
from etpype.workflows.utils import (
    check_and_update_paths,
    check_valid_experiment,
    default_scenario,
    init_and_load_cfg,
    preflight,
)


@pytest.mark.parametrize("experiment", VALID_EXPERIMENTS)
def test_shipped_scenarios(experiment):
    path = default_scenario(experiment)
    assert os.path.isfile(path)
    cfg = validate_scenario(init_and_load_cfg(path, quiet=True))
    assert cfg.experiment == experiment
    check_valid_experiment(cfg, experiment)


def test_groups_are_composed(generate_config):
    cfg = init_and_load_cfg(generate_config("dispersion_scan.yaml"))
    assert cfg["geometry"]["pixel_count"] == 640
    assert cfg["spdc"]["pump_wavelength"] == 400.0
    assert cfg["scan"]["count"] == 121


def test_prism_geometry(generate_config):
    cfg_path = generate_config(
        "resolution.yaml",
        {"defaults": [{"spdc": "default"}, {"geometry": "prism"}, "_self_"]},
    )
    cfg = validate_scenario(init_and_load_cfg(cfg_path, quiet=True))
    assert cfg.geometry.psf_fwhm == pytest.approx(6.8e-3)
    assert cfg.geometry.pixel_count == 640


def test_defaults_are_filled(generate_config):
    cfg = init_and_load_cfg(generate_config("rates.yaml"), quiet=True)
    cfg = validate_scenario(cfg, seed=11)
    assert cfg.seed == 11
    assert cfg.detector.target_rate == 12.8
    assert cfg.grid.count == 1025


def test_unknown_key(generate_config):
    cfg_path = generate_config("dispersion_scan.yaml", {"scan": {"cout": 3}})
    cfg = init_and_load_cfg(cfg_path, quiet=True)
    with pytest.raises(ConfigurationError, match="scan.cout"):
        validate_scenario(cfg)


def test_wrong_type(generate_config):
    cfg_path = generate_config(
        "dispersion_scan.yaml", {"scan": {"count": "many"}}
    )
    cfg = init_and_load_cfg(cfg_path, quiet=True)
    with pytest.raises(ConfigurationError, match="scan.count"):
        validate_scenario(cfg)


@pytest.mark.parametrize(
    "overrides, match",
    [
        ({"scan": {"shaper": "dmd"}}, "scan.shaper"),
        ({"detector": {"transmission": 1.2}}, "detector.transmission"),
        ({"spdc": {"envelope": "sech"}}, "spdc.envelope"),
        ({"scan": {"count": 1}}, "at least 2"),
        ({"geometry": {"mask_file": "/no/such/mask.csv"}}, "file not found"),
        ({"detector": {"sample": True}, "seed": None}, "seed"),
    ],
)
def test_semantic_checks(generate_config, overrides, match):
    cfg_path = generate_config("dispersion_scan.yaml", overrides)
    cfg = init_and_load_cfg(cfg_path, quiet=True)
    with pytest.raises(ConfigurationError, match=match):
        validate_scenario(cfg)


@pytest.mark.parametrize(
    "value", ["120 parsecs", "120 nW*s", "lots of power"]
)
def test_bad_unit_string(generate_config, value):
    cfg_path = generate_config("rates.yaml", {"rates": {"dc_power": value}})
    cfg = init_and_load_cfg(cfg_path, quiet=True)
    with pytest.raises(ConfigurationError, match="rates.dc_power"):
        validate_scenario(cfg)


def test_rates_units_are_converted(generate_config):
    cfg_path = generate_config(
        "rates.yaml", {"rates": {"dc_power": "0.12 uW", "focus": "3.7e-4 cm"}}
    )
    cfg = validate_scenario(init_and_load_cfg(cfg_path, quiet=True))
    params, provenance = rates_params(cfg.rates)
    assert params.dc_power == pytest.approx(120e-9)
    assert params.focus == pytest.approx(3.7)
    assert provenance["dc_power"] == "config"


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        init_and_load_cfg("/no/such/scenario.yaml")


def test_experiment_mismatch(generate_config):
    cfg = validate_scenario(
        init_and_load_cfg(generate_config("rates.yaml"), quiet=True)
    )
    with pytest.raises(ConfigurationError):
        check_valid_experiment(cfg, "iac")


def test_preflight_rejects_geometry(generate_config):
    cfg_path = generate_config(
        "dispersion_scan.yaml", {"geometry": {"center_wavelength": 2000.0}}
    )
    cfg = validate_scenario(init_and_load_cfg(cfg_path, quiet=True))
    with pytest.raises(ConfigurationError, match="geometry"):
        preflight(cfg)


def test_paths(mock_output_dir):
    out_dir, nipype_dir = check_and_update_paths(
        mock_output_dir, None, "iac"
    )
    assert out_dir == os.path.join(mock_output_dir, "iac")
    assert nipype_dir == os.path.join(mock_output_dir, "nipype")
    assert os.path.isdir(out_dir) and os.path.isdir(nipype_dir)

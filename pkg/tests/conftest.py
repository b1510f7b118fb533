# tests/conftest.py
# -*- coding: utf-8 -*-
import copy
import shutil
from pathlib import Path

import pytest
import yaml

from etpype.nodes.shaper import ShaperGeometry
from etpype.nodes.source import (
    SourceParams,
    biphoton_effective,
    classical_pulse,
)
from etpype.nodes.spectral import grid_make
from etpype.utils.units import wavelength_to_omega

CONFIG_FOLDER = Path(__file__).parent.parent / "configs"


def _deep_update(base, overrides):
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


@pytest.fixture(scope="function")
def mock_output_dir(tmp_path_factory):
    # Use pytest's tmp_path_factory
    out_base = tmp_path_factory.mktemp("output")
    print(f"Creating mock output dir at: {out_base}")
    yield str(out_base)
    print(f"Mock output dir {out_base} will be cleaned up by pytest.")


@pytest.fixture(scope="function")
def generate_config(tmp_path_factory):
    """Copy the shipped configs and write a modified scenario next to
    them, so that the hydra defaults still resolve."""

    def _generate(scenario, overrides=None):
        with open(CONFIG_FOLDER / scenario, "r") as f:
            cfg = yaml.safe_load(f)
        cfg = _deep_update(copy.deepcopy(cfg), overrides or {})

        temp_dir = tmp_path_factory.mktemp("config_test")
        shutil.copytree(CONFIG_FOLDER, temp_dir, dirs_exist_ok=True)

        config_path = temp_dir / "cfg_test.yaml"
        with open(config_path, "w") as f:
            yaml.dump(cfg, f)

        return config_path

    return _generate


@pytest.fixture(scope="session")
def geometry():
    return ShaperGeometry()


@pytest.fixture(scope="session")
def source():
    return SourceParams()


@pytest.fixture(scope="session")
def state(source):
    grid = grid_make(source.pump_frequency / 2, 0.6, 1025)
    return biphoton_effective(source, grid)


@pytest.fixture(scope="session")
def pulse():
    grid = grid_make(wavelength_to_omega(800.0), 0.6, 1025)
    return classical_pulse(grid, center_wavelength=800.0, fwhm=46.0)

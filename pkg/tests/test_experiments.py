import pytest
from omegaconf import OmegaConf

from etpype.nodes.experiments import run_iac, run_quantum_scan
from etpype.nodes.shaper import ShaperGeometry, mask_build, write_mask
from etpype.nodes.utils import build_geometry, build_mask
from etpype.utils.config import validate_scenario
from etpype.utils.errors import ConfigurationError
from etpype.utils.io import read_table
from etpype.workflows.utils import (
    default_scenario,
    init_and_load_cfg,
    preflight,
)

SECTIONS = ("spdc", "grid", "geometry", "detector", "scan", "iac")


def _sections(experiment):
    path = default_scenario(experiment)
    cfg = validate_scenario(init_and_load_cfg(path, quiet=True))
    return {n: OmegaConf.to_container(cfg[n], resolve=True) for n in SECTIONS}


def _peak(path):
    df, _, _ = read_table(path)
    return df["c2"][df["rate"].idxmax()]


@pytest.fixture
def mask_file(tmp_path):
    geometry = _sections("dispersion-scan")["geometry"]
    geom = build_geometry(geometry)
    mask = mask_build("quadratic", {"c2": 600.0}, geom)
    return str(write_mask(tmp_path / "slm_mask.csv", mask, geom))


def test_build_mask(mask_file):
    geometry = _sections("dispersion-scan")["geometry"]
    assert build_mask(geometry, build_geometry(geometry)) is None
    geometry["mask_file"] = mask_file
    mask = build_mask(geometry, build_geometry(geometry))
    assert mask.description == "quadratic(c2=600 fs^2)"
    with pytest.raises(ConfigurationError):
        build_mask(geometry, ShaperGeometry(focal_length=250.0))


def test_mask_file_shifts_quantum_scan(mask_file, tmp_path, monkeypatch):
    s = _sections("dispersion-scan")
    s["detector"]["kappa"] = 1.0
    s["scan"].update(start=-1500.0, stop=1500.0, count=61)
    args = (s["spdc"], s["grid"], s["geometry"], s["detector"], s["scan"])

    (tmp_path / "plain").mkdir()
    monkeypatch.chdir(tmp_path / "plain")
    plain_file, _ = run_quantum_scan(*args)
    assert _peak(plain_file) == pytest.approx(0.0)

    (tmp_path / "masked").mkdir()
    monkeypatch.chdir(tmp_path / "masked")
    masked_geometry = dict(s["geometry"], mask_file=mask_file)
    masked_file, summary = run_quantum_scan(
        s["spdc"], s["grid"], masked_geometry, s["detector"], s["scan"]
    )
    assert _peak(masked_file) == pytest.approx(-600.0)
    assert summary["peak"] < -300.0


def test_mask_file_lowers_iac(mask_file, tmp_path, monkeypatch):
    s = _sections("iac")
    s["detector"]["kappa"] = 1.0
    s["iac"].update(start=-20.0, stop=20.0, count=41)
    monkeypatch.chdir(tmp_path)
    plain, _, _ = read_table(
        run_iac(s["spdc"], s["grid"], s["geometry"], s["detector"], s["iac"])
    )
    masked_geometry = dict(s["geometry"], mask_file=mask_file)
    masked, _, _ = read_table(
        run_iac(s["spdc"], s["grid"], masked_geometry, s["detector"], s["iac"])
    )
    assert masked["rate"].max() < 0.9 * plain["rate"].max()


def test_mask_file_in_scenario(mask_file, generate_config):
    cfg_path = generate_config(
        "dispersion_scan.yaml", {"geometry": {"mask_file": mask_file}}
    )
    cfg = validate_scenario(init_and_load_cfg(cfg_path, quiet=True))
    preflight(cfg)
    cfg_path = generate_config(
        "dispersion_scan.yaml",
        {"geometry": {"mask_file": mask_file}, "scan": {"shaper": "ideal"}},
    )
    with pytest.raises(ConfigurationError, match="slm shaper"):
        validate_scenario(init_and_load_cfg(cfg_path, quiet=True))


def test_mask_file_for_another_geometry(tmp_path, generate_config):
    other = ShaperGeometry(focal_length=250.0)
    path = write_mask(
        tmp_path / "other.csv",
        mask_build("quadratic", {"c2": 0.0}, other),
        other,
    )
    cfg_path = generate_config(
        "dispersion_scan.yaml", {"geometry": {"mask_file": str(path)}}
    )
    cfg = validate_scenario(init_and_load_cfg(cfg_path, quiet=True))
    with pytest.raises(ConfigurationError, match="geometry"):
        preflight(cfg)

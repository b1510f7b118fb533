import numpy as np
import pytest

from etpype.nodes.optics import (
    CompressorState,
    compressor_profile,
    geometry_summary,
    gvd_per_shift,
    read_phase,
    setup_phase,
    taylor_coeffs,
    write_phase,
)
from etpype.nodes.spectral import grid_make
from etpype.utils.errors import InsufficientDataError, InvalidArgumentError


def test_gvd_per_shift(geometry):
    assert gvd_per_shift(geometry) == pytest.approx(-2926.0, rel=1e-3)


def test_geometry_summary(geometry):
    summary = geometry_summary(geometry, collimation_focal_length=50.0)
    assert summary["gamma"] == pytest.approx(4.79, rel=2e-3)
    assert summary["anamorphic_factor"] == pytest.approx(0.9016, rel=1e-3)
    assert summary["magnification"] == pytest.approx(5.38, rel=2e-3)
    assert summary["frequency_step"] > 0
    with pytest.raises(InvalidArgumentError):
        geometry_summary(geometry, collimation_focal_length=0.0)


def test_setup_phase(geometry, pulse):
    state = setup_phase(0.5, geometry, pulse.grid, orders=3)
    assert state.c2 == pytest.approx(0.5 * gvd_per_shift(geometry))
    assert len(state.coefficients) == 4
    omega = pulse.grid.omega
    expected = state.c2 / 2 * omega**2 + state.coefficients[3] / 6 * omega**3
    np.testing.assert_allclose(state.phase, expected)
    with pytest.raises(InvalidArgumentError):
        setup_phase(0.5, geometry, pulse.grid, orders=1)


def test_taylor_coeffs(pulse):
    omega = pulse.grid.omega
    phase = 500.0 / 2 * omega**2 + 2000.0 / 6 * omega**3
    coeffs = taylor_coeffs(phase, pulse.grid, 3)
    np.testing.assert_allclose(coeffs, [0, 0, 500, 2000], atol=1e-6)


def test_taylor_coeffs_needs_samples():
    grid = grid_make(2.0, 0.1, 8)
    with pytest.raises(InsufficientDataError):
        taylor_coeffs(np.zeros(8), grid, 3)


def test_imported_phase(tmp_path, geometry, pulse):
    state = setup_phase(-0.2, geometry, pulse.grid)
    path = write_phase(tmp_path / "phase.csv", state)
    omega, phase = read_phase(path)
    np.testing.assert_allclose(omega, pulse.grid.omega)
    imported = CompressorState.from_samples(geometry, pulse.grid, phase)
    assert imported.shift is None
    assert imported.c2 == pytest.approx(state.c2, rel=1e-6)


def test_shifted_compressor_stretches_pulse(geometry, pulse):
    _, compressed = compressor_profile(pulse, 0.0, geometry)
    _, stretched = compressor_profile(pulse, 0.2, geometry)
    assert stretched.max() < 0.5 * compressed.max()
    assert stretched.sum() == pytest.approx(compressed.sum(), rel=1e-9)

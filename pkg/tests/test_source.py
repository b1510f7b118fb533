import numpy as np
import pytest

from etpype.nodes.source import (
    PhaseMatching,
    SourceParams,
    biphoton_effective,
    biphoton_reduced,
    flux_metrics,
    jsa_full,
    marginal_fwhm_nm,
    marginal_half_width,
    pump_tune_temperature,
)
from etpype.nodes.spectral import grid_make
from etpype.utils.errors import (
    ConfigurationError,
    InvalidArgumentError,
    RangeError,
)


def test_effective_state_width(state):
    omega = state.grid.omega
    density = np.abs(state.psi) ** 2 * state.grid.spacing
    assert state.norm == pytest.approx(1.0, rel=1e-9)
    std = np.sqrt(np.sum(omega**2 * density))
    assert std == pytest.approx(1 / (2 * 24.4), rel=1e-3)


def test_signal_and_idler_add_up_to_pump(state):
    total = state.signal_frequency + state.idler_frequency
    np.testing.assert_allclose(total, state.pump_frequency)


def test_reduced_state_marginal_width(source):
    grid = grid_make(source.pump_frequency / 2, 1.2, 2049)
    state = biphoton_reduced(source, grid)
    assert state.norm == pytest.approx(1.0, rel=1e-9)
    assert marginal_fwhm_nm(state) == pytest.approx(98.0, abs=0.5)


def test_reduced_state_needs_span(source):
    grid = grid_make(source.pump_frequency / 2, 0.6, 1025)
    with pytest.raises(ConfigurationError):
        biphoton_reduced(source, grid)


def test_state_grid_must_be_centered(source):
    grid = grid_make(source.pump_frequency / 2 + 0.05, 0.6, 1025)
    with pytest.raises(ConfigurationError):
        biphoton_effective(source, grid)


def test_default_pair_rate_is_half_the_flux(source):
    # 120 nW at 800 nm
    assert source.effective_pair_rate == pytest.approx(4.83e11 / 2, rel=1e-2)
    assert SourceParams(pair_rate=1e6).effective_pair_rate == 1e6


def test_flux_metrics():
    metrics = flux_metrics(200e-9, 800.0, 98.0)
    assert metrics["flux"] == pytest.approx(8.05e11, rel=1e-2)
    assert metrics["mode_density"] == pytest.approx(0.0175, rel=2e-2)


def test_flux_metrics_rejects_negative_power():
    with pytest.raises(InvalidArgumentError):
        flux_metrics(-1.0, 800.0, 98.0)


def test_pump_tuning(source):
    assert pump_tune_temperature(10.0, source) == pytest.approx(399.81)
    with pytest.raises(RangeError):
        pump_tune_temperature(60.0, source)


def test_jsa_monochromatic_pump(source):
    grid = grid_make(source.pump_frequency / 2, 0.6, 129)
    state = biphoton_effective(source, grid)
    jsa = jsa_full(0.0, PhaseMatching(), grid, state=state)
    np.testing.assert_allclose(jsa.anti_diagonal(), state.psi, atol=1e-12)
    off_diagonal = jsa.amplitude - np.fliplr(
        np.diag(jsa.anti_diagonal())
    )
    assert np.abs(off_diagonal).max() == 0


def test_jsa_finite_linewidth_spreads(source):
    grid = grid_make(source.pump_frequency / 2, 0.6, 129)
    jsa = jsa_full(0.01, None, grid)
    # sum frequency of the first off-diagonal is one grid step
    assert abs(jsa.amplitude[64, 65]) > 0
    assert jsa.phase_matching == {}


def test_phase_matching_validation():
    with pytest.raises(InvalidArgumentError):
        PhaseMatching(kind="sinc")
    with pytest.raises(InvalidArgumentError):
        PhaseMatching(acceptance=0.0)
    constant = PhaseMatching(kind="constant")
    assert constant.amplitude(0.5) == 1.0


def test_source_validation():
    with pytest.raises(InvalidArgumentError):
        SourceParams(envelope="lorentzian")
    with pytest.raises(InvalidArgumentError):
        SourceParams(entanglement_time=0.0)


def test_flat_top_marginal():
    params = SourceParams(envelope="flat-top")
    grid = grid_make(params.pump_frequency / 2, 1.2, 2049)
    state = biphoton_reduced(params, grid)
    half = marginal_half_width(params.marginal_fwhm, 800.0)
    support = np.abs(grid.omega) <= half
    np.testing.assert_array_equal(np.abs(state.psi) > 0, support)
    np.testing.assert_allclose(
        state.psi[support], state.psi[support][0], rtol=1e-12
    )
    assert state.norm == pytest.approx(1.0, rel=1e-9)


def test_states_have_unit_norm(source):
    rng = np.random.default_rng(2024)
    grid = grid_make(source.pump_frequency / 2, 1.2, 2049)
    for fwhm, tau_e in zip(rng.uniform(40, 120, 10), rng.uniform(15, 40, 10)):
        params = SourceParams(marginal_fwhm=fwhm, entanglement_time=tau_e)
        assert biphoton_reduced(params, grid).norm == pytest.approx(
            1.0, rel=1e-9
        )
        assert biphoton_effective(params, grid).norm == pytest.approx(
            1.0, rel=1e-9
        )


def test_jsa_without_pump(source):
    grid = grid_make(source.pump_frequency / 2, 0.6, 129)
    jsa = jsa_full(0.01, None, grid, pump_amplitude=0.0)
    np.testing.assert_array_equal(jsa.amplitude, 0.0)

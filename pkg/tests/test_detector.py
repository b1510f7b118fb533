from dataclasses import replace

import numpy as np
import pytest

from etpype.nodes.detector import (
    DetectorParams,
    calibrate_kappa,
    coincidence_rate,
    sample_counts,
    sfg_classical,
)
from etpype.utils.errors import InvalidArgumentError


def test_detector_validation():
    with pytest.raises(InvalidArgumentError):
        DetectorParams(transmission=1.5)
    with pytest.raises(InvalidArgumentError):
        DetectorParams(acceptance_kind="sinc")
    with pytest.raises(InvalidArgumentError):
        DetectorParams(integration_time=0.0)


def test_chirp_lowers_sfg(pulse):
    detector = DetectorParams()
    compressed = sfg_classical(pulse, detector)
    chirped = sfg_classical(pulse, detector, residual_phase=500.0)
    assert chirped["photodiode"] < compressed["photodiode"]
    assert compressed["omega"].size == 2 * pulse.grid.count - 1


def test_chirp_sign_is_irrelevant(pulse):
    detector = DetectorParams()
    up = sfg_classical(pulse, detector, residual_phase=300.0)["photodiode"]
    down = sfg_classical(pulse, detector, residual_phase=-300.0)["photodiode"]
    assert up == pytest.approx(down, rel=1e-9)


def test_sampled_residual_phase_shape(pulse):
    with pytest.raises(InvalidArgumentError):
        sfg_classical(pulse, DetectorParams(), residual_phase=np.zeros(3))


def test_calibrated_kappa(state):
    detector = DetectorParams()
    kappa = calibrate_kappa(state, detector, target_rate=12.8)
    calibrated = replace(detector, kappa=kappa)
    assert coincidence_rate(state, calibrated) == pytest.approx(12.8)


def test_rate_scales_with_transmission_squared(state):
    full = coincidence_rate(state, DetectorParams(transmission=1.0))
    half = coincidence_rate(state, DetectorParams(transmission=0.5))
    assert half == pytest.approx(full / 4)


def test_sample_counts_reproducible():
    detector = DetectorParams(dark_rate=10.8, integration_time=5.0)
    rates = np.linspace(0, 20, 50)
    first = sample_counts(rates, detector, seed=42)
    second = sample_counts(rates, detector, seed=42)
    np.testing.assert_array_equal(first, second)
    assert first.dtype.kind == "i"
    draws = sample_counts(12.8, detector, seed=1, size=20000)
    assert draws.mean() == pytest.approx((12.8 + 10.8) * 5.0, rel=2e-2)


def test_dark_counts_only():
    detector = DetectorParams(dark_rate=10.8, integration_time=5.0)
    draws = sample_counts(0.0, detector, seed=7, size=1000)
    # 10.8 Hz over 5 s
    assert abs(draws.mean() - 54.0) < 3 * np.sqrt(54.0 / 1000)


def test_sample_counts_rejects_negative_rate():
    with pytest.raises(InvalidArgumentError):
        sample_counts([-1.0], DetectorParams(), seed=0)

import numpy as np
import pytest

from etpype.nodes.detector import DetectorParams, coincidence_rate
from etpype.nodes.shaper import (
    ShaperGeometry,
    SlmMask,
    apply_mask_biphoton,
    apply_mask_classical,
    compose_masks,
    effective_transfer,
    fit_pixel_map,
    frequency_step,
    mask_build,
    pixel_edges,
    pixel_map,
    read_mask,
    shape_biphoton,
    time_shift_limits,
    timeshift_transfer,
    transmission,
    write_mask,
)
from etpype.nodes.source import classical_pulse
from etpype.nodes.spectral import fwhm, grid_make
from etpype.utils.errors import (
    AliasingError,
    ConfigurationError,
    GeometryError,
    InsufficientDataError,
    InvalidArgumentError,
    RangeError,
)
from etpype.utils.units import wavelength_to_omega


def test_diffraction_angle(geometry):
    assert geometry.diffraction_angle == pytest.approx(33.16, abs=0.05)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"center_wavelength": 2000.0},
        {"order": 0},
        {"pixel_gap": 100.0},
        {"focal_length": -1.0},
    ],
)
def test_invalid_geometry(kwargs):
    with pytest.raises(GeometryError):
        ShaperGeometry(**kwargs)


def test_pixel_map(geometry):
    wavelengths = pixel_map(geometry)
    assert wavelengths.size == 640
    assert wavelengths[319] == pytest.approx(800.0, abs=1e-9)
    assert np.all(np.diff(wavelengths) > 0)
    lower, upper = pixel_edges(geometry)
    assert np.all(lower < upper)


def test_time_shift_limits(geometry):
    low, high = time_shift_limits(geometry)
    assert low == pytest.approx(0.007)
    assert high == pytest.approx(2 * np.pi / 3.3e-3)


def test_fit_pixel_map_recovers_geometry(geometry):
    truth = ShaperGeometry(
        grating_period=0.67, center_pixel=321.5, focal_length=300.0
    )
    pixels = np.arange(40, 640, 80)
    peaks = np.column_stack([pixels, pixel_map(truth)[pixels - 1]])
    params, result = fit_pixel_map(peaks, geometry)
    assert result.converged
    assert params["grating_period"] == pytest.approx(0.67, rel=1e-4)
    assert params["center_pixel"] == pytest.approx(321.5, abs=1e-2)
    assert params["focal_length"] == pytest.approx(300.0, rel=1e-3)
    assert result.residual_rms < 1e-4


def test_fit_pixel_map_needs_four_peaks(geometry):
    with pytest.raises(InsufficientDataError):
        fit_pixel_map([[100, 790.0], [300, 799.0], [500, 808.0]], geometry)


def test_quadratic_mask(geometry):
    mask = mask_build("quadratic", {"c2": 2000.0}, geometry)
    np.testing.assert_allclose(mask.magnitude, 1.0)
    assert np.all(mask.phase > -np.pi) and np.all(mask.phase <= np.pi)
    assert mask.phase[319] == pytest.approx(0.0, abs=1e-6)


def test_opposite_masks_cancel(geometry):
    up = mask_build("quadratic", {"c2": 1500.0}, geometry)
    down = mask_build("quadratic", {"c2": -1500.0}, geometry)
    np.testing.assert_allclose(
        compose_masks(up, down).phase, 0.0, atol=1e-9
    )


def test_delay_beyond_aliasing_limit(geometry):
    with pytest.raises(AliasingError):
        mask_build("iac", {"tau": 2500.0}, geometry)


def test_pixel_window(geometry):
    mask = mask_build("pixel-window", {"width": 5}, geometry)
    assert mask.magnitude.sum() == 5
    np.testing.assert_array_equal(
        np.flatnonzero(mask.magnitude) + 1, np.arange(318, 323)
    )
    with pytest.raises(InvalidArgumentError):
        mask_build("pixel-window", {"pixels": [0, 1]}, geometry)


def test_unknown_mask_kind(geometry):
    with pytest.raises(InvalidArgumentError):
        mask_build("sawtooth", {}, geometry)


def test_flat_mask_transmission(geometry):
    mask = mask_build("quadratic", {"c2": 0.0}, geometry)
    center = geometry.center_frequency
    inside = effective_transfer(mask, geometry, np.array([center]))
    # opaque gaps between the pixels
    assert 0.95 < abs(inside[0]) < 1.0
    outside = transmission(mask, geometry, np.array([center - 0.5]))
    assert outside[0] == pytest.approx(0.0, abs=1e-12)


def test_biphoton_through_flat_mask(state, geometry):
    mask = mask_build("quadratic", {"c2": 0.0}, geometry)
    shaped = apply_mask_biphoton(state, mask, geometry)
    assert 0.8 < shaped.norm < 0.95


def test_clipped_state_rejected(state):
    shifted = ShaperGeometry(center_wavelength=900.0)
    mask = mask_build("quadratic", {"c2": 0.0}, shifted)
    with pytest.raises(RangeError):
        apply_mask_biphoton(state, mask, shifted)


def test_ideal_quadratic_scan_closed_form(state, geometry):
    detector = DetectorParams()
    tau_e = state.entanglement_time
    reference = coincidence_rate(state, detector)
    shaped = shape_biphoton(
        state, "quadratic", {"c2": tau_e**2}, geometry, shaper="ideal"
    )
    ratio = coincidence_rate(shaped, detector) / reference
    assert ratio == pytest.approx(1 / np.sqrt(2), rel=1e-3)


def test_unknown_shaper(state, geometry):
    with pytest.raises(ConfigurationError):
        shape_biphoton(state, "quadratic", {"c2": 0.0}, geometry, "dmd")


def test_mask_file(tmp_path, geometry):
    mask = mask_build("quadratic", {"c2": 800.0}, geometry)
    path = write_mask(tmp_path / "mask.csv", mask, geometry)
    loaded = read_mask(path, geometry)
    np.testing.assert_allclose(loaded.coefficients, mask.coefficients)
    assert loaded.description == mask.description
    with pytest.raises(ConfigurationError):
        read_mask(path, ShaperGeometry(focal_length=250.0))


def test_pixel_map_range(geometry):
    wavelengths = pixel_map(geometry)
    assert wavelengths[0] == pytest.approx(740.0, abs=3.0)
    assert wavelengths[-1] == pytest.approx(860.0, abs=3.5)
    assert frequency_step(geometry) == pytest.approx(0.541e-3, rel=5e-2)


def test_fit_pixel_map_every_fifth_pixel():
    truth = ShaperGeometry(
        grating_period=0.67, center_pixel=321.5, focal_length=300.0
    )
    pixels = np.arange(1, 641, 5)
    # the missing peak identifies the pixels
    pixels = pixels[pixels != 321]
    peaks = np.column_stack([pixels, pixel_map(truth)[pixels - 1]])
    params, _ = fit_pixel_map(peaks, ShaperGeometry())
    assert params["grating_period"] == pytest.approx(0.67, rel=1e-3)
    assert params["center_pixel"] == pytest.approx(321.5, rel=1e-3)
    assert params["focal_length"] == pytest.approx(300.0, rel=1e-3)


def test_fit_pixel_map_with_noise(geometry):
    pixels = np.arange(1, 641, 5)
    pixels = pixels[pixels != 321]
    exact = pixel_map(geometry)[pixels - 1]
    errors = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = exact + rng.normal(0.0, 0.05, exact.size)
        params, _ = fit_pixel_map(np.column_stack([pixels, noisy]), geometry)
        errors.append(params["grating_period"] / geometry.grating_period - 1)
    assert np.median(np.abs(errors)) < 5e-3


def test_timeshift_is_quantized(geometry):
    mask = mask_build("timeshift", {"tau": 1.0036}, geometry)
    tau = 143 * 0.007
    assert mask.description == f"timeshift(tau={tau:g} fs)"
    omega = wavelength_to_omega(pixel_map(geometry))
    np.testing.assert_allclose(
        mask.coefficients, timeshift_transfer(omega, tau), atol=1e-12
    )


def test_iac_mask_at_zero_delay(geometry):
    mask = mask_build("iac", {"tau": 0.0}, geometry)
    np.testing.assert_allclose(mask.coefficients, 1.0, atol=1e-15)


def test_composed_masks_multiply(geometry):
    first = mask_build("quadratic", {"c2": 700.0}, geometry)
    second = mask_build("quadratic", {"c2": -1900.0}, geometry)
    both = mask_build("quadratic", {"c2": -1200.0}, geometry)
    np.testing.assert_allclose(
        compose_masks(first, second).coefficients,
        both.coefficients,
        atol=1e-9,
    )


def test_classical_gap_loss(pulse, geometry):
    flat = mask_build("quadratic", {"c2": 0.0}, geometry)
    shaped = apply_mask_classical(pulse, flat, geometry)
    center = np.argmin(np.abs(pulse.grid.omega))
    ratio = abs(shaped.amplitude[center] / pulse.amplitude[center])
    assert ratio == pytest.approx(0.97, rel=5e-3)
    assert shaped.photons_per_pulse / pulse.photons_per_pulse == (
        pytest.approx(0.97**2, rel=1e-2)
    )


def test_zero_mask_blocks_field(pulse, state, geometry):
    zero = SlmMask(np.zeros(geometry.pixel_count), pixel_map(geometry))
    np.testing.assert_array_equal(
        apply_mask_classical(pulse, zero, geometry).amplitude, 0.0
    )
    assert apply_mask_biphoton(state, zero, geometry).norm == 0.0


def test_five_pixel_transmission_width(geometry):
    grid = grid_make(wavelength_to_omega(800.0), 0.6, 8193)
    field = classical_pulse(grid, center_wavelength=800.0, fwhm=46.0)
    window = mask_build("pixel-window", {"width": 5}, geometry)
    transmitted = transmission(window, geometry, grid.absolute)
    assert fwhm(grid.omega, transmitted) == pytest.approx(3.30e-3, rel=0.1)
    # open/closed pixels: the field amplitude follows the transmission
    shaped = apply_mask_classical(field, window, geometry)
    np.testing.assert_allclose(
        np.abs(shaped.amplitude),
        transmitted * np.abs(field.amplitude),
        rtol=1e-12,
        atol=1e-300,
    )


def _random_mask(geometry, seed):
    rng = np.random.default_rng(seed)
    magnitude = rng.uniform(0.0, 1.0, geometry.pixel_count)
    phase = rng.uniform(-np.pi, np.pi, geometry.pixel_count)
    return SlmMask(magnitude * np.exp(1j * phase), pixel_map(geometry))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_masks_never_add_energy(pulse, state, geometry, seed):
    mask = _random_mask(geometry, seed)
    shaped = apply_mask_classical(pulse, mask, geometry)
    assert shaped.photons_per_pulse <= pulse.photons_per_pulse
    assert apply_mask_biphoton(state, mask, geometry).norm <= state.norm


def test_shaped_state_keeps_exchange_symmetry(state, geometry):
    shaped = apply_mask_biphoton(state, _random_mask(geometry, 7), geometry)
    np.testing.assert_allclose(shaped.psi, shaped.psi[::-1], rtol=1e-12)

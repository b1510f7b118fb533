"""Pixelated SLM inside the grating compressor.

A mask is a set of complex pixel coefficients. Its effective transfer at
angular frequency ω is the pixel pattern blurred by the Gaussian PSF of
the imaging onto the SLM plane:

    M_eff(ω) = Σ_p M_p·[Φ((ω − a_p)/s) − Φ((ω − b_p)/s)]

where [a_p, b_p] is the active (gap-free) frequency interval of pixel p
and s the PSF standard deviation. The continuous transfer functions can
also be applied directly (``shaper="ideal"``), without pixelation.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import curve_fit
from scipy.sparse import csr_matrix
from scipy.special import ndtr

from etpype.definitions import (
    FREQUENCY_RESOLUTION,
    MIN_TIME_SHIFT,
    VALID_MASK_KINDS,
    VALID_SHAPERS,
)
from etpype.nodes.fitting import FitResult
from etpype.utils.errors import (
    AliasingError,
    ConfigurationError,
    FitFailureError,
    GeometryError,
    InsufficientDataError,
    InvalidArgumentError,
    RangeError,
)
from etpype.utils.io import read_table, write_table
from etpype.utils.units import wavelength_to_omega

log = logging.getLogger("nipype.workflow")

FWHM_TO_STD = 1 / (2 * np.sqrt(2 * np.log(2)))

# Energy fraction outside the illuminated pixels tolerated by default.
CLIP_TOLERANCE = 1e-2


@dataclass(frozen=True)
class ShaperGeometry:
    """Grating compressor and SLM geometry.

    The diffraction angle at the center wavelength is derived from the
    grating equation m·λ_c = G·(sin α + sin β).

    Args:
        grating_period (float): Grating period G (µm).
        order (int): Diffraction order m.
        incidence_angle (float): Incidence angle α (degrees).
        center_wavelength (float): Wavelength imaged on `center_pixel` (nm).
        focal_length (float): Focal length f₂ of the compressor (mm).
        pixel_pitch (float): Pixel pitch Δx (µm).
        pixel_count (int): Number of SLM pixels.
        pixel_gap (float): Opaque gap between pixels (µm).
        psf_fwhm (float): Imaging PSF FWHM at the SLM (rad/fs).
        waist_broadening (float): Factor applied to the PSF to account for
            the finite source waist.
        center_pixel (float): Pixel p₀ where λ_c is imaged (1-based).
        frequency_resolution (float): Resolution used for the time-shift
            aliasing limit (rad/fs).
    """

    grating_period: float = 1 / 1.50376
    order: int = 1
    incidence_angle: float = 41.0
    center_wavelength: float = 800.0
    focal_length: float = 298.4
    pixel_pitch: float = 100.0
    pixel_count: int = 640
    pixel_gap: float = 3.0
    psf_fwhm: float = 7.56e-4
    waist_broadening: float = 3.4
    center_pixel: float = 320.0
    frequency_resolution: float = FREQUENCY_RESOLUTION

    def __post_init__(self):
        for name in (
            "grating_period",
            "center_wavelength",
            "focal_length",
            "pixel_pitch",
            "psf_fwhm",
            "waist_broadening",
            "frequency_resolution",
        ):
            if not getattr(self, name) > 0:
                raise GeometryError(
                    f"{name} must be positive, got {getattr(self, name)}."
                )
        if int(self.order) != self.order or self.order < 1:
            raise GeometryError(
                f"Diffraction order must be an integer >= 1, got {self.order}."
            )
        if int(self.pixel_count) != self.pixel_count or self.pixel_count < 2:
            raise GeometryError(
                f"Pixel count must be an integer >= 2, got {self.pixel_count}."
            )
        if not 0 <= self.pixel_gap < self.pixel_pitch:
            raise GeometryError(
                f"Pixel gap must lie in [0, {self.pixel_pitch}) µm, "
                f"got {self.pixel_gap}."
            )
        # raises when the grating equation has no solution
        self.diffraction_angle

    @property
    def sin_beta(self):
        return (
            self.order * self.center_wavelength * 1e-3 / self.grating_period
            - np.sin(np.deg2rad(self.incidence_angle))
        )

    @property
    def diffraction_angle(self):
        """Diffraction angle β(λ_c) in degrees."""
        sin_beta = self.sin_beta
        if abs(sin_beta) >= 1:
            raise GeometryError(
                f"No diffraction at {self.center_wavelength} nm: "
                f"sin β = {sin_beta:.4f}."
            )
        return float(np.rad2deg(np.arcsin(sin_beta)))

    @property
    def center_frequency(self):
        return float(wavelength_to_omega(self.center_wavelength))

    @property
    def effective_psf(self):
        """FWHM (rad/fs) of the blur applied to the pixel pattern."""
        return self.psf_fwhm * self.waist_broadening

    @property
    def pixels(self):
        return np.arange(1, self.pixel_count + 1)

    def with_psf_factor(self, factor):
        return replace(self, psf_fwhm=self.psf_fwhm * factor)


def geometry_hash(geometry):
    """Short digest identifying a geometry in mask files."""
    return hashlib.sha256(repr(geometry).encode("utf-8")).hexdigest()[:16]


def position_to_wavelength(x, geometry):
    """Wavelength (nm) imaged at SLM position `x` (µm from p₀)."""
    beta = np.deg2rad(geometry.diffraction_angle)
    x = np.asarray(x, dtype=float)
    angle = np.arctan(x * 1e-3 / geometry.focal_length)
    if np.any(np.abs(angle + beta) >= np.pi / 2):
        raise GeometryError(
            "The SLM extends beyond grazing diffraction for this geometry."
        )
    return (
        1e3
        * geometry.grating_period
        / geometry.order
        * (
            np.sin(angle + beta)
            + np.sin(np.deg2rad(geometry.incidence_angle))
        )
    )


def pixel_map(geometry):
    """Wavelength λ(p) (nm) at the center of each pixel p = 1..N."""
    x = (geometry.pixels - geometry.center_pixel) * geometry.pixel_pitch
    return position_to_wavelength(x, geometry)


def pixel_edges(geometry):
    """Active frequency interval of each pixel.

    Returns:
        tuple: (lower, upper) angular frequencies (rad/fs), one pair per
        pixel. Higher pixel numbers sit at lower frequencies.
    """
    x = (geometry.pixels - geometry.center_pixel) * geometry.pixel_pitch
    half = (geometry.pixel_pitch - geometry.pixel_gap) / 2
    lower = wavelength_to_omega(position_to_wavelength(x + half, geometry))
    upper = wavelength_to_omega(position_to_wavelength(x - half, geometry))
    return lower, upper


def time_shift_limits(geometry):
    """Smallest and largest time shift (fs) the SLM can impose."""
    return MIN_TIME_SHIFT, 2 * np.pi / geometry.frequency_resolution


def _pixel_model(pixels, grating_period, center_pixel, focal_length, geometry):
    sin_beta = (
        geometry.order * geometry.center_wavelength * 1e-3 / grating_period
        - np.sin(np.deg2rad(geometry.incidence_angle))
    )
    beta = np.arcsin(np.clip(sin_beta, -1, 1))
    angle = np.arctan(
        (pixels - center_pixel) * geometry.pixel_pitch * 1e-3 / focal_length
    )
    return (
        1e3
        * grating_period
        / geometry.order
        * (np.sin(angle + beta) + np.sin(np.deg2rad(geometry.incidence_angle)))
    )


def fit_pixel_map(peaks, geometry=None, maxfev=2000):
    """Fit the grating-equation pixel map to measured (pixel, λ) peaks.

    The free parameters are the grating period G, the center pixel p₀ and
    the focal length f₂. The incidence angle, the order, the pixel pitch
    and λ_c are taken from `geometry`.

    Args:
        peaks (list): (pixel, wavelength in nm) pairs.
        geometry (ShaperGeometry, optional): Nominal geometry, also used
            for the initial guess.
        maxfev (int): Maximum number of function evaluations.

    Returns:
        tuple: (dict with ``grating_period``, ``center_pixel`` and
        ``focal_length``, FitResult)
    """
    geometry = geometry or ShaperGeometry()
    peaks = np.asarray(peaks, dtype=float)
    if peaks.ndim != 2 or peaks.shape[0] < 4:
        raise InsufficientDataError(
            "At least 4 peaks are needed to fit the pixel map, got "
            f"{0 if peaks.ndim != 2 else peaks.shape[0]}."
        )
    order = np.argsort(peaks[:, 0])
    pixels, wavelengths = peaks[order, 0], peaks[order, 1]
    if np.any(np.diff(pixels) == 0):
        raise InvalidArgumentError("Peak pixels must be distinct.")

    center_guess = float(
        np.interp(geometry.center_wavelength, wavelengths, pixels)
    )
    slope = np.polyfit(pixels, wavelengths, 1)[0]
    cos_beta = np.cos(np.deg2rad(geometry.diffraction_angle))
    focal_guess = (
        geometry.grating_period
        / geometry.order
        * cos_beta
        * geometry.pixel_pitch
        / slope
    )
    p0 = [geometry.grating_period, center_guess, focal_guess]

    def model(p, grating_period, center_pixel, focal_length):
        return _pixel_model(
            p, grating_period, center_pixel, focal_length, geometry
        )

    try:
        popt, pcov, info, _, ier = curve_fit(
            model,
            pixels,
            wavelengths,
            p0=p0,
            method="lm",
            maxfev=maxfev,
            full_output=True,
        )
    except RuntimeError as e:
        raise FitFailureError(
            f"Pixel map fit did not converge: {e}",
            last_iterate=dict(
                zip(("grating_period", "center_pixel", "focal_length"), p0)
            ),
        )
    names = ("grating_period", "center_pixel", "focal_length")
    if np.all(np.isfinite(pcov)):
        errors = np.sqrt(np.abs(np.diag(pcov)))
    else:
        errors = np.full(3, np.inf)
    residuals = wavelengths - model(pixels, *popt)
    result = FitResult(
        model="pixel-map",
        params=dict(zip(names, map(float, popt))),
        errors=dict(zip(names, map(float, errors))),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
        converged=ier in (1, 2, 3, 4),
        iterations=int(info["nfev"]),
    )
    log.info(
        f"Pixel map fit: G={popt[0]:.6f} µm, p0={popt[1]:.3f}, "
        f"f2={popt[2]:.3f} mm, residual RMS {result.residual_rms:.3g} nm."
    )
    return dict(result.params), result


@dataclass(frozen=True, eq=False)
class SlmMask:
    """Complex pixel coefficients with their wavelength calibration.

    Phases are stored in (−π, π] and magnitudes in [0, 1].
    """

    coefficients: np.ndarray
    calibration: np.ndarray
    description: str = ""
    warnings: tuple = field(default_factory=tuple)

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=complex, copy=True)
        calib = np.array(self.calibration, dtype=float, copy=True)
        if coeffs.shape != calib.shape or coeffs.ndim != 1:
            raise InvalidArgumentError(
                f"Mask has {coeffs.size} coefficients for {calib.size} "
                "calibrated pixels."
            )
        if not np.all(np.isfinite(coeffs)):
            raise InvalidArgumentError("Mask contains NaN or Inf values.")
        magnitude = np.abs(coeffs)
        if np.any(magnitude > 1 + 1e-12):
            raise InvalidArgumentError(
                f"Mask magnitudes must not exceed 1, max {magnitude.max()}."
            )
        coeffs = np.minimum(magnitude, 1.0) * np.exp(
            1j * _wrap_phase(np.angle(coeffs))
        )
        coeffs.setflags(write=False)
        calib.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "calibration", calib)

    @property
    def magnitude(self):
        return np.abs(self.coefficients)

    @property
    def phase(self):
        return _wrap_phase(np.angle(self.coefficients))


def _wrap_phase(phase):
    # (−π, π]
    return np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2 * np.pi)


def quadratic_transfer(omega, c2, center):
    """M(ω) = exp(i·c₂′/2·(ω − ω_c)²)."""
    return np.exp(0.5j * c2 * (np.asarray(omega) - center) ** 2)


def iac_transfer(omega, tau):
    """M(ω) = ½(1 + exp(−iωτ)), an unbalanced interferometer of delay τ."""
    return 0.5 * (1 + np.exp(-1j * np.asarray(omega) * tau))


def timeshift_transfer(omega, tau):
    """M(ω) = exp(−iωτ)."""
    return np.exp(-1j * np.asarray(omega) * tau)


def _check_delay(tau, geometry):
    tau_max = time_shift_limits(geometry)[1]
    if abs(tau) > tau_max:
        raise AliasingError(
            f"Delay {tau} fs exceeds the aliasing limit τ_max = 2π/Δω = "
            f"{tau_max:.0f} fs."
        )


def transfer_function(kind, params, center):
    """Continuous transfer function M(ω) of a mask kind.

    Args:
        kind (str): One of quadratic, iac, timeshift, custom.
        params (dict): Kind parameters (``c2`` in fs², ``tau`` in fs,
            ``omega``/``values`` for custom).
        center (float): Reference frequency of the quadratic phase.

    Returns:
        callable: M(ω) for absolute angular frequencies.
    """
    if kind == "quadratic":
        c2 = float(params.get("c2", 0.0))
        return lambda omega: quadratic_transfer(omega, c2, center)
    if kind == "iac":
        tau = float(params.get("tau", 0.0))
        return lambda omega: iac_transfer(omega, tau)
    if kind == "timeshift":
        tau = float(params.get("tau", 0.0))
        return lambda omega: timeshift_transfer(omega, tau)
    if kind == "custom":
        src = np.asarray(params["omega"], dtype=float)
        values = np.asarray(params["values"], dtype=complex)
        if src.shape != values.shape:
            raise InvalidArgumentError(
                "Custom transfer needs as many values as frequencies."
            )
        order = np.argsort(src)
        src, values = src[order], values[order]

        def custom(omega):
            re = np.interp(omega, src, values.real, left=0.0, right=0.0)
            im = np.interp(omega, src, values.imag, left=0.0, right=0.0)
            return re + 1j * im

        return custom
    raise InvalidArgumentError(
        f"Mask kind '{kind}' has no continuous transfer function."
    )


def mask_build(kind, params, geometry):
    """Sample a transfer function on the SLM pixels.

    Args:
        kind (str): One of quadratic, iac, timeshift, pixel-window, custom.
        params (dict): Kind parameters. ``pixel-window`` takes either
            ``pixels`` (list of open 1-based pixels) or ``center`` and
            ``width`` (pixels).
        geometry (ShaperGeometry): Shaper geometry.

    Returns:
        SlmMask
    """
    if kind not in VALID_MASK_KINDS:
        raise InvalidArgumentError(
            f"Unknown mask kind '{kind}'. Valid kinds are {VALID_MASK_KINDS}."
        )
    params = dict(params or {})
    calibration = pixel_map(geometry)
    omega = wavelength_to_omega(calibration)
    warnings = []

    if kind in ("iac", "timeshift"):
        tau = float(params.get("tau", 0.0))
        _check_delay(tau, geometry)
        if kind == "timeshift":
            tau = round(tau / MIN_TIME_SHIFT) * MIN_TIME_SHIFT
            params["tau"] = tau
        description = f"{kind}(tau={tau:g} fs)"
    elif kind == "quadratic":
        description = f"quadratic(c2={float(params.get('c2', 0.0)):g} fs^2)"
    elif kind == "pixel-window":
        if "pixels" in params:
            open_pixels = np.asarray(params["pixels"], dtype=int)
        else:
            width = int(params.get("width", 5))
            start = int(round(params.get("center", geometry.center_pixel)))
            start -= (width - 1) // 2
            open_pixels = np.arange(start, start + width)
        if np.any(open_pixels < 1) or np.any(
            open_pixels > geometry.pixel_count
        ):
            raise InvalidArgumentError(
                f"Open pixels must lie in 1..{geometry.pixel_count}."
            )
        coefficients = np.isin(geometry.pixels, open_pixels).astype(complex)
        return SlmMask(
            coefficients=coefficients,
            calibration=calibration,
            description=f"pixel-window({open_pixels.min()}-"
            f"{open_pixels.max()})",
        )
    else:
        description = "custom"

    coefficients = transfer_function(kind, params, geometry.center_frequency)(
        omega
    )
    magnitude = np.abs(coefficients)
    if np.any(magnitude > 1):
        n_clamped = int(np.sum(magnitude > 1))
        message = (
            f"{n_clamped} mask coefficients with |M| > 1 "
            f"(max {magnitude.max():.4f}) clamped to 1."
        )
        log.warning(message)
        warnings.append(message)
        coefficients = np.where(
            magnitude > 1,
            coefficients / np.maximum(magnitude, 1),
            coefficients,
        )
    return SlmMask(
        coefficients=coefficients,
        calibration=calibration,
        description=description,
        warnings=tuple(warnings),
    )


def compose_masks(first, second):
    """Pointwise product of two masks on the same calibration."""
    if first.calibration.shape != second.calibration.shape or not np.allclose(
        first.calibration, second.calibration, rtol=0, atol=1e-9
    ):
        raise InvalidArgumentError("Masks have different calibrations.")
    return SlmMask(
        coefficients=first.coefficients * second.coefficients,
        calibration=first.calibration,
        description=f"{first.description}*{second.description}",
        warnings=first.warnings + second.warnings,
    )


@lru_cache(maxsize=16)
def _kernel(geometry, omega_key):
    omega = np.frombuffer(omega_key)
    lower, upper = pixel_edges(geometry)
    std = geometry.effective_psf * FWHM_TO_STD
    weights = ndtr((omega[:, None] - lower[None, :]) / std) - ndtr(
        (omega[:, None] - upper[None, :]) / std
    )
    weights[weights < 1e-15] = 0.0
    return csr_matrix(weights)


def pixel_kernel(geometry, omega):
    """Sparse (len(omega) × pixels) matrix of PSF-blurred pixel apertures."""
    omega = np.ascontiguousarray(omega, dtype=float)
    return _kernel(geometry, omega.tobytes())


def effective_transfer(mask, geometry, omega):
    """M_eff(ω) of a mask at absolute angular frequencies `omega`."""
    return pixel_kernel(geometry, omega) @ mask.coefficients


def transmission(mask, geometry, omega):
    """Power transmitted through the pixels by a frequency mode at ω."""
    return pixel_kernel(geometry, omega) @ (np.abs(mask.coefficients) ** 2)


def clipped_fraction(geometry, omega, weight):
    """Fraction of `weight` lying outside the illuminated pixel range."""
    lower, upper = pixel_edges(geometry)
    weight = np.asarray(weight, dtype=float)
    total = weight.sum()
    if total == 0:
        return 0.0
    outside = (omega < lower.min()) | (omega > upper.max())
    return float(weight[outside].sum() / total)


def _check_clipping(fraction, tolerance):
    if fraction > tolerance:
        raise RangeError(
            f"Field extends beyond the pixel range: {fraction:.3%} of the "
            f"energy is clipped (tolerance {tolerance:.3%})."
        )


def apply_mask_classical(field, mask, geometry, tolerance=CLIP_TOLERANCE):
    """E_out(Ω) = E_in(Ω)·M_eff(ω_c + Ω)."""
    omega = field.grid.absolute
    _check_clipping(
        clipped_fraction(geometry, omega, field.spectrum), tolerance
    )
    return field.with_amplitude(
        field.amplitude * effective_transfer(mask, geometry, omega)
    )


def apply_mask_biphoton(state, mask, geometry, tolerance=CLIP_TOLERANCE):
    """ψ′(Ω) = ψ(Ω)·M_eff(ω_p/2 + Ω)·M_eff(ω_p/2 − Ω).

    The state is not renormalised; its norm records the transmission.
    """
    signal = state.signal_frequency
    intensity = np.abs(state.psi) ** 2
    fraction = max(
        clipped_fraction(geometry, signal, intensity),
        clipped_fraction(geometry, state.idler_frequency, intensity),
    )
    _check_clipping(fraction, tolerance)
    m_signal = effective_transfer(mask, geometry, signal)
    # symmetric grid: idler samples are the signal samples reversed
    return state.with_psi(state.psi * m_signal * m_signal[::-1])


def apply_transfer_classical(field, transfer):
    """Apply a continuous transfer function without pixelation."""
    return field.with_amplitude(
        field.amplitude * transfer(field.grid.absolute)
    )


def apply_transfer_biphoton(state, transfer):
    """Apply a continuous transfer function to both photons."""
    return state.with_psi(
        state.psi
        * transfer(state.signal_frequency)
        * transfer(state.idler_frequency)
    )


def _check_shaper(shaper, base_mask):
    if shaper not in VALID_SHAPERS:
        raise ConfigurationError(
            f"Unknown shaper '{shaper}'. Valid shapers are {VALID_SHAPERS}."
        )
    if shaper == "ideal" and base_mask is not None:
        raise ConfigurationError(
            "A mask file can only be loaded on the slm shaper."
        )


def _slm_mask(kind, params, geometry, base_mask):
    mask = mask_build(kind, params, geometry)
    return mask if base_mask is None else compose_masks(base_mask, mask)


def shape_biphoton(
    state, kind, params, geometry, shaper="slm", base_mask=None
):
    """Shape a biphoton state with either the SLM or the ideal shaper.

    `base_mask` (e.g. read from ``geometry.mask_file``) stays on the SLM
    and multiplies every mask of the scan.
    """
    _check_shaper(shaper, base_mask)
    if shaper == "ideal":
        transfer = transfer_function(
            kind, params, geometry.center_frequency
        )
        return apply_transfer_biphoton(state, transfer)
    return apply_mask_biphoton(
        state, _slm_mask(kind, params, geometry, base_mask), geometry
    )


def shape_classical(
    field, kind, params, geometry, shaper="slm", base_mask=None
):
    """Shape a classical field with either the SLM or the ideal shaper."""
    _check_shaper(shaper, base_mask)
    if shaper == "ideal":
        transfer = transfer_function(
            kind, params, geometry.center_frequency
        )
        return apply_transfer_classical(field, transfer)
    return apply_mask_classical(
        field, _slm_mask(kind, params, geometry, base_mask), geometry
    )


def write_mask(path, mask, geometry):
    """Write a mask as CSV: pixel, magnitude, phase, wavelength."""
    return write_table(
        path,
        {
            "pixel": np.arange(1, mask.coefficients.size + 1),
            "magnitude": mask.magnitude,
            "phase": mask.phase,
            "wavelength": mask.calibration,
        },
        ["", "", "rad", "nm"],
        meta={
            "geometry": geometry_hash(geometry),
            "description": mask.description,
        },
    )


def read_mask(path, geometry=None):
    """Read a mask written by :func:`write_mask`.

    When `geometry` is given, the geometry hash stored in the file must
    match it.
    """
    df, _, meta = read_table(path)
    expected = None if geometry is None else geometry_hash(geometry)
    if expected is not None and meta.get("geometry") != expected:
        raise ConfigurationError(
            f"Mask {path} was written for geometry {meta.get('geometry')}, "
            f"expected {expected}."
        )
    return SlmMask(
        coefficients=df["magnitude"].to_numpy()
        * np.exp(1j * df["phase"].to_numpy()),
        calibration=df["wavelength"].to_numpy(),
        description=meta.get("description", ""),
    )


def frequency_step(geometry):
    """Center-frequency spacing of adjacent pixels around p₀ (rad/fs)."""
    omega = wavelength_to_omega(pixel_map(geometry))
    p = int(round(geometry.center_pixel)) - 1
    return float(abs(omega[p + 1] - omega[p - 1]) / 2)


def wavelength_step(geometry):
    """Wavelength spacing of adjacent pixels around p₀ (nm)."""
    wl = pixel_map(geometry)
    p = int(round(geometry.center_pixel)) - 1
    return float(abs(wl[p + 1] - wl[p - 1]) / 2)

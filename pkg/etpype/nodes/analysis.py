"""Scans, fits and time-frequency analysis of simulated measurements."""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import ShortTimeFFT, find_peaks
from scipy.signal.windows import hann

from etpype.nodes.detector import (
    coincidence_rate,
    rate_scale,
    sample_counts,
    sfg_classical,
)
from etpype.nodes.fitting import FitResult, fit_model
from etpype.nodes.optics import gvd_per_shift, setup_phase
from etpype.nodes.shaper import (
    CLIP_TOLERANCE,
    FWHM_TO_STD,
    _check_clipping,
    _check_delay,
    apply_transfer_biphoton,
    clipped_fraction,
    iac_transfer,
    mask_build,
    pixel_map,
    pixel_kernel,
    quadratic_transfer,
    shape_biphoton,
    shape_classical,
    transmission,
)
from etpype.nodes.source import classical_pulse
from etpype.nodes.spectral import BiphotonState, fwhm
from etpype.utils.errors import (
    ConfigurationError,
    InvalidArgumentError,
    RangeError,
)
from etpype.utils.units import (
    bandwidth_omega_to_nm,
    omega_to_wavelength,
    wavelength_to_omega,
)

log = logging.getLogger("nipype.workflow")


@dataclass
class ScanResult:
    """One-parameter scan of a detected signal.

    Args:
        parameter (str): Name of the scanned parameter.
        unit (str): Unit of the scanned parameter.
        x (array): Parameter values, strictly monotone.
        rate (array): Expected signal.
        rate_unit (str): Unit of `rate`.
        counts (array, optional): Sampled counts per integration bin.
        sigma (array, optional): Poisson standard deviation of `counts`.
        fit (FitResult, optional): Model fitted to the expected signal.
        meta (dict): Scan summary (peak position, FWHM, ...).
    """

    parameter: str
    unit: str
    x: np.ndarray
    rate: np.ndarray
    rate_unit: str = "Hz"
    counts: np.ndarray = None
    sigma: np.ndarray = None
    fit: FitResult = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.rate = np.asarray(self.rate, dtype=float)
        if self.x.shape != self.rate.shape:
            raise InvalidArgumentError("Scan x and rate sizes differ.")
        steps = np.diff(self.x)
        if self.x.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise InvalidArgumentError(
                f"Scan parameter {self.parameter} is not strictly monotone."
            )

    @property
    def peak(self):
        """Parameter value of the largest expected signal."""
        return float(self.x[np.argmax(self.rate)])

    def columns(self):
        """Columns and units for :func:`etpype.utils.io.write_table`."""
        columns = {self.parameter: self.x, "rate": self.rate}
        units = [self.unit, self.rate_unit]
        if self.counts is not None:
            columns["counts"] = self.counts
            columns["sigma"] = self.sigma
            units += ["", ""]
        return columns, units


def _summarise(scan, kind):
    """Attach a peak fit, the peak position and the FWHM to a scan."""
    scan.fit = fit_model(kind, scan.x, scan.rate)
    scan.meta["peak"] = scan.fit.params["center"]
    try:
        scan.meta["fwhm"] = fwhm(scan.x, scan.rate)
    except RangeError:
        log.warning(f"{scan.parameter} scan does not resolve its FWHM.")
        scan.meta["fwhm"] = float("nan")
    return scan


def _sample(scan, detector, seed):
    if seed is None:
        raise ConfigurationError("A seed is required to sample counts.")
    scan.counts = np.atleast_1d(sample_counts(scan.rate, detector, seed))
    scan.sigma = np.sqrt(scan.counts)
    return scan


def dispersion_scan(
    source,
    c2_values,
    detector,
    geometry,
    shaper="slm",
    setup_c2=0.0,
    sample=False,
    seed=None,
    fit=True,
    base_mask=None,
):
    """Detected signal versus the quadratic SLM phase c₂′.

    Biphoton states are counted in coincidence (Gaussian fit), classical
    fields are up-converted onto the photodiode (Lorentzian fit).

    Args:
        source (BiphotonState or ClassicalField): Light entering the
            shaper.
        c2_values (array): SLM dispersion values c₂′ (fs²).
        detector (DetectorParams): Detector.
        geometry (ShaperGeometry): Shaper geometry.
        shaper (str): ``slm`` or ``ideal``.
        setup_c2 (float): Residual setup dispersion c₂ (fs²).
        sample (bool): Draw Poisson counts (biphoton scans only).
        seed (int, optional): Seed of the count sampling.
        fit (bool): Attach a fit and the scan summary.
        base_mask (SlmMask, optional): Mask kept on the SLM under every
            scan mask.

    Returns:
        ScanResult
    """
    c2_values = np.asarray(c2_values, dtype=float)
    if isinstance(source, BiphotonState):
        if np.any(setup_c2):
            center = geometry.center_frequency
            source = apply_transfer_biphoton(
                source, lambda w: quadratic_transfer(w, setup_c2, center)
            )
        rates = [
            coincidence_rate(
                shape_biphoton(
                    source,
                    "quadratic",
                    {"c2": c2},
                    geometry,
                    shaper,
                    base_mask,
                ),
                detector,
            )
            for c2 in c2_values
        ]
        scan = ScanResult("c2", "fs^2", c2_values, rates)
        kind = "gaussian"
    else:
        rates = [
            sfg_classical(
                shape_classical(
                    source,
                    "quadratic",
                    {"c2": c2},
                    geometry,
                    shaper,
                    base_mask,
                ),
                detector,
                residual_phase=setup_c2,
            )["photodiode"]
            for c2 in c2_values
        ]
        scan = ScanResult("c2", "fs^2", c2_values, rates, rate_unit="a.u.")
        kind = "lorentzian"
    if fit:
        _summarise(scan, kind)
    if sample:
        _sample(scan, detector, seed)
    return scan


def grating_scan(
    shift,
    c2_values,
    field,
    detector,
    geometry,
    shaper="slm",
    gvd_per_mm=None,
    window=41,
    base_mask=None,
):
    """SLM dispersion c₂′ maximising the SFG signal at one grating shift.

    A Lorentzian is fitted to `window` points around the discrete maximum.

    Returns:
        tuple: (maximum position in fs², ScanResult)
    """
    if gvd_per_mm is None:
        residual = setup_phase(shift, geometry, field.grid).phase
    else:
        residual = gvd_per_mm * shift / 2 * field.grid.omega**2
    scan = dispersion_scan(
        field,
        c2_values,
        detector,
        geometry,
        shaper=shaper,
        setup_c2=residual,
        fit=False,
        base_mask=base_mask,
    )
    peak = int(np.argmax(scan.rate))
    if peak == 0 or peak == scan.x.size - 1:
        raise RangeError(
            f"Scan at g={shift} mm has no interior maximum in "
            f"[{scan.x.min():g}, {scan.x.max():g}] fs^2."
        )
    lo = max(peak - window // 2, 0)
    hi = min(peak + window // 2 + 1, scan.x.size)
    scan.fit = fit_model("lorentzian", scan.x[lo:hi], scan.rate[lo:hi])
    scan.meta["peak"] = scan.fit.params["center"]
    scan.meta["shift"] = shift
    return scan.meta["peak"], scan


def fit_gvd_slope(shifts, maxima):
    """Setup dispersion per unit shift from the scan maxima.

    The maxima sit at c₂′ = −c₂(g), so the setup slope is minus the
    fitted slope of the maxima.

    Returns:
        tuple: (slope in fs²/mm, FitResult of the maxima)
    """
    shifts = np.asarray(shifts, dtype=float)
    if shifts.size < 3:
        raise RangeError(
            "A GVD slope needs at least 3 grating positions, "
            f"got {shifts.size}."
        )
    result = fit_model("linear", shifts, maxima)
    return -result.params["slope"], result


def gvd_slope(
    shifts,
    c2_values,
    field,
    detector,
    geometry,
    shaper="slm",
    gvd_per_mm=None,
    window=41,
    base_mask=None,
):
    """GVD added per mm of grating shift, from dispersion scans.

    Args:
        shifts (array): Grating shifts g (mm), at least 3.
        c2_values (array): SLM dispersion values c₂′ (fs²) of each scan.
        field (ClassicalField): Classical pulse.
        detector (DetectorParams): Detector.
        geometry (ShaperGeometry): Shaper geometry.
        shaper (str): ``slm`` or ``ideal``.
        gvd_per_mm (float, optional): Setup dispersion per mm to inject
            instead of the analytic grating-pair value.
        window (int): Points around each maximum used by the fit.
        base_mask (SlmMask, optional): Mask kept on the SLM.

    Returns:
        tuple: (slope in fs²/mm, FitResult, list of ScanResult)
    """
    shifts = np.asarray(shifts, dtype=float)
    if shifts.size < 3:
        raise RangeError(
            "A GVD slope needs at least 3 grating positions, "
            f"got {shifts.size}."
        )
    maxima, scans = [], []
    for g in shifts:
        peak, scan = grating_scan(
            g,
            c2_values,
            field,
            detector,
            geometry,
            shaper,
            gvd_per_mm,
            window,
            base_mask,
        )
        maxima.append(peak)
        scans.append(scan)
    slope, result = fit_gvd_slope(shifts, maxima)
    expected = gvd_per_shift(geometry) if gvd_per_mm is None else gvd_per_mm
    log.info(
        f"GVD slope {slope:.1f} fs^2/mm from {shifts.size} positions "
        f"(model {expected:.1f} fs^2/mm)."
    )
    return slope, result, scans


def iac_scan(
    state,
    taus,
    detector,
    geometry,
    shaper="slm",
    sample=False,
    seed=None,
    chunk=256,
    base_mask=None,
):
    """Coincidence rate versus the delay of the interferometer mask.

    Args:
        state (BiphotonState): State entering the shaper.
        taus (array): Delays τ (fs).
        detector (DetectorParams): Detector.
        geometry (ShaperGeometry): Shaper geometry.
        shaper (str): ``slm`` or ``ideal``. Delays beyond the aliasing
            limit are rejected by the SLM.
        sample (bool): Draw Poisson counts per delay.
        seed (int, optional): Seed of the count sampling.
        chunk (int): Number of delays evaluated at once.
        base_mask (SlmMask, optional): Mask kept on the SLM under the
            interferometer mask.

    Returns:
        ScanResult
    """
    taus = np.asarray(taus, dtype=float)
    signal = state.signal_frequency
    if shaper == "slm":
        for tau in (taus.min(), taus.max()):
            _check_delay(tau, geometry)
        intensity = np.abs(state.psi) ** 2
        _check_clipping(
            max(
                clipped_fraction(geometry, signal, intensity),
                clipped_fraction(geometry, state.idler_frequency, intensity),
            ),
            CLIP_TOLERANCE,
        )
        kernel = pixel_kernel(geometry, signal)
        pixel_omega = wavelength_to_omega(pixel_map(geometry))
        base = np.ones(pixel_omega.size, dtype=complex)
        if base_mask is not None:
            base = np.asarray(base_mask.coefficients)
        if base.shape != pixel_omega.shape:
            raise InvalidArgumentError(
                f"Mask has {base.size} pixels, the SLM {pixel_omega.size}."
            )
    elif shaper != "ideal":
        raise ConfigurationError(f"Unknown shaper '{shaper}'.")
    elif base_mask is not None:
        raise ConfigurationError(
            "A mask file can only be loaded on the slm shaper."
        )

    amplitude = np.empty(taus.size, dtype=complex)
    for start in range(0, taus.size, chunk):
        block = taus[start : start + chunk]
        if shaper == "slm":
            m_signal = kernel @ (
                base[:, None]
                * iac_transfer(pixel_omega[:, None], block[None, :])
            )
        else:
            m_signal = iac_transfer(signal[:, None], block[None, :])
        # symmetric grid: idler samples are the signal samples reversed
        shaped = state.psi[:, None] * m_signal * m_signal[::-1]
        amplitude[start : start + chunk] = (
            shaped.sum(axis=0) * state.grid.spacing
        )
    rates = rate_scale(state, detector) * np.abs(amplitude) ** 2
    scan = ScanResult("tau", "fs", taus, rates)
    if sample:
        _sample(scan, detector, seed)
    return scan


def spectrogram(x, y, window=256, log_scale=False, detrend="constant"):
    """Sliding-window Fourier magnitude of a uniformly sampled scan.

    Only windows lying entirely inside the scan are kept, giving
    len(x) − window + 1 slices (hop of one sample) of window//2 + 1
    frequencies.

    Args:
        x (array): Uniform sample positions (fs).
        y (array): Samples.
        window (int): Hann window length in samples.
        log_scale (bool): Return log10 of the magnitude.
        detrend (str or None): ``constant``, ``linear`` or None.

    Returns:
        dict: ``time`` (slice centers, fs), ``omega`` (rad/fs) and
        ``magnitude`` (time × frequency).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window > y.size:
        raise InvalidArgumentError(
            f"Window of {window} samples exceeds the scan of {y.size}."
        )
    if window < 4:
        raise InvalidArgumentError(f"Window must be >= 4, got {window}.")
    dt = x[1] - x[0]
    sft = ShortTimeFFT(
        hann(window, sym=False), hop=1, fs=1 / dt, mfft=window,
        scale_to="magnitude",
    )
    p0 = sft.lower_border_end[1]
    p1 = sft.upper_border_begin(y.size)[1]
    if detrend is None:
        values = sft.stft(y, p0=p0, p1=p1)
    else:
        values = sft.stft_detrend(y, detrend, p0=p0, p1=p1)
    magnitude = np.abs(values).T
    if log_scale:
        magnitude = np.log10(np.maximum(magnitude, 1e-300))
    return {
        "time": x[0] + sft.t(y.size, p0, p1),
        "omega": 2 * np.pi * sft.f,
        "magnitude": magnitude,
    }


def spectrogram_ridges(spec, threshold=0.1, min_bin=2):
    """Frequencies (rad/fs) of the ridges of a spectrogram.

    A ridge is a local maximum of the per-frequency peak magnitude above
    `threshold` times the global maximum, ignoring the lowest `min_bin`
    bins.
    """
    magnitude = np.asarray(spec["magnitude"], dtype=float)
    profile = magnitude.max(axis=0)
    profile[:min_bin] = 0.0
    peaks, _ = find_peaks(profile, height=threshold * profile.max())
    return [float(spec["omega"][p]) for p in peaks]


def visibility(y):
    """Fringe visibility (max − min)/(max + min)."""
    y = np.asarray(y, dtype=float)
    total = y.max() + y.min()
    if total == 0:
        return 0.0
    return float((y.max() - y.min()) / total)


def matched_classical_width(entanglement_time):
    """|E|² standard deviation (rad/fs) whose classical dispersion scan
    matches the biphoton scan for a correlation time τ_e."""
    if not entanglement_time > 0:
        raise InvalidArgumentError(
            f"Entanglement time must be positive, got {entanglement_time}."
        )
    return 1 / (np.sqrt(2) * entanglement_time)


def matched_classical_field(entanglement_time, grid, **kwargs):
    """Transform-limited pulse matched to a biphoton correlation time."""
    wavelength = float(omega_to_wavelength(grid.center))
    fwhm_omega = matched_classical_width(entanglement_time) / FWHM_TO_STD
    return classical_pulse(
        grid,
        center_wavelength=wavelength,
        fwhm=bandwidth_omega_to_nm(fwhm_omega, wavelength),
        **kwargs,
    )


def resolution_spectrum(geometry, pixels=5, points=2001, span=None):
    """Spectrum transmitted by a window of open pixels around p₀.

    Returns:
        dict: ``omega`` (detuning from the window center, rad/fs),
        ``transmission``, the Gaussian ``fit`` and its ``fwhm`` (rad/fs).
    """
    mask = mask_build(
        "pixel-window",
        {"center": geometry.center_pixel, "width": pixels},
        geometry,
    )
    open_omega = wavelength_to_omega(mask.calibration[mask.magnitude > 0])
    center = float(open_omega.mean())
    if span is None:
        span = 20 * geometry.effective_psf + np.ptp(open_omega)
    detuning = np.linspace(-span / 2, span / 2, points)
    spectrum = transmission(mask, geometry, center + detuning)
    result = fit_model("gaussian", detuning, spectrum)
    width = 2 * np.sqrt(2 * np.log(2)) * result.params["sigma"]
    return {
        "omega": detuning,
        "transmission": spectrum,
        "fit": result,
        "fwhm": float(width),
    }

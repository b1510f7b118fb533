"""Biphoton and classical pulse sources.

The reduced biphoton amplitude ψ(Ω) describes pairs generated by a
monochromatic pump: signal and idler frequencies add up to ω_p. Its
marginal envelope is a model input (Gaussian by default) because the
sum-frequency acceptance of the crystal says nothing about the
difference frequency.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from etpype.definitions import (
    HEATER_RANGE,
    VALID_ACCEPTANCE,
    VALID_ENVELOPES,
)
from etpype.nodes.spectral import (
    BiphotonState,
    ClassicalField,
    Jsa2D,
    check_centered,
    fwhm,
)
from etpype.utils.errors import (
    ConfigurationError,
    InvalidArgumentError,
    RangeError,
)
from etpype.utils.units import (
    C_NM_PER_FS,
    bandwidth_nm_to_omega,
    frequency_bandwidth_hz,
    omega_to_wavelength,
    photon_flux,
    wavelength_to_omega,
)

log = logging.getLogger("nipype.workflow")

FWHM_TO_STD = 1 / (2 * np.sqrt(2 * np.log(2)))


@dataclass(frozen=True)
class PhaseMatching:
    """Sum-frequency acceptance of the down-conversion crystal.

    Args:
        kind (str): ``gaussian-sum`` or ``constant``.
        acceptance (float): Acceptance width Δω_p (rad/fs). ``inf`` gives
            a constant acceptance.
        crystal_length (float): Crystal length (mm), informational.
        temp_coefficient (float): Pump tuning ∂λ_p/∂T (nm/°C).
    """

    kind: str = "gaussian-sum"
    acceptance: float = 0.35e-3
    crystal_length: float = 17.0
    temp_coefficient: float = -0.019

    def __post_init__(self):
        if self.kind not in VALID_ACCEPTANCE:
            raise InvalidArgumentError(
                f"Unknown acceptance kind '{self.kind}'. Valid kinds are "
                f"{VALID_ACCEPTANCE}."
            )
        if not self.acceptance > 0:
            raise InvalidArgumentError(
                f"Acceptance width must be positive, got {self.acceptance}."
            )

    def amplitude(self, delta_sum):
        """f(u) for a sum-frequency mismatch `u` (rad/fs)."""
        u = np.asarray(delta_sum, dtype=float)
        if self.kind == "constant" or np.isinf(self.acceptance):
            return np.ones_like(u)
        return np.exp(-(u**2) / (2 * self.acceptance**2))

    def describe(self):
        return {
            "kind": self.kind,
            "acceptance": self.acceptance,
            "crystal_length": self.crystal_length,
            "temp_coefficient": self.temp_coefficient,
        }


@dataclass(frozen=True)
class SourceParams:
    """SPDC source parameters.

    `pair_rate` defaults to half the photon flux of the down-converted
    power, i.e. every detected photon belongs to a pair.
    """

    pump_wavelength: float = 400.0
    marginal_fwhm: float = 98.0
    envelope: str = "gaussian"
    pair_rate: float = None
    entanglement_size: float = 26.0
    entanglement_time: float = 24.4
    down_converted_power: float = 120e-9
    phase_matching: PhaseMatching = field(default_factory=PhaseMatching)

    def __post_init__(self):
        if not self.pump_wavelength > 0:
            raise InvalidArgumentError(
                "Pump wavelength must be positive, "
                f"got {self.pump_wavelength}."
            )
        if not self.marginal_fwhm > 0:
            raise InvalidArgumentError(
                f"Marginal FWHM must be positive, got {self.marginal_fwhm}."
            )
        if self.envelope not in VALID_ENVELOPES:
            raise InvalidArgumentError(
                f"Unknown envelope '{self.envelope}'. Valid envelopes are "
                f"{VALID_ENVELOPES}."
            )
        if self.pair_rate is not None and self.pair_rate < 0:
            raise InvalidArgumentError(
                f"Pair rate must be non-negative, got {self.pair_rate}."
            )
        if self.down_converted_power < 0:
            raise InvalidArgumentError(
                "Down-converted power must be non-negative, "
                f"got {self.down_converted_power}."
            )
        for name in ("entanglement_size", "entanglement_time"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(
                    f"{name} must be positive, got {getattr(self, name)}."
                )

    @property
    def pump_frequency(self):
        return float(wavelength_to_omega(self.pump_wavelength))

    @property
    def effective_pair_rate(self):
        if self.pair_rate is not None:
            return float(self.pair_rate)
        flux = photon_flux(self.down_converted_power, 2 * self.pump_wavelength)
        return flux / 2


def marginal_half_width(fwhm_nm, center_nm):
    """Half width h (rad/fs) of a marginal whose half-maximum points lie
    `fwhm_nm` apart on the wavelength axis around `center_nm`.

    Solves 2πc·(1/(ω_c − h) − 1/(ω_c + h)) = fwhm for h.
    """
    omega_c = wavelength_to_omega(center_nm)
    a = 2 * np.pi * C_NM_PER_FS
    return float(
        fwhm_nm * omega_c**2 / (a + np.sqrt(a**2 + (fwhm_nm * omega_c) ** 2))
    )


def _normalise(psi, spacing):
    norm = np.sqrt(np.sum(np.abs(psi) ** 2) * spacing)
    return psi / norm


def _gaussian_log_envelope(omega, std):
    # log-amplitude, shifted so the largest sample is 0
    log_psi = -(omega**2) / (4 * std**2)
    return np.exp(log_psi - np.max(log_psi))


def _check_span(grid, width, what):
    if grid.span < 3 * width:
        raise ConfigurationError(
            f"{what} grid span {grid.span:.4g} rad/fs is narrower than 3x "
            f"the marginal width {width:.4g} rad/fs."
        )


def biphoton_reduced(params, grid):
    """Transform-limited reduced biphoton amplitude ψ(Ω).

    The marginal |ψ|² has its half-maximum points `params.marginal_fwhm`
    apart on the wavelength axis around 2λ_p.

    Args:
        params (SourceParams): Source parameters.
        grid (FrequencyGrid): Grid centered at ω_p/2.

    Returns:
        BiphotonState: unit-norm state.
    """
    omega_p = params.pump_frequency
    check_centered(grid, omega_p / 2, "Biphoton grid")
    half = marginal_half_width(
        params.marginal_fwhm, 2 * params.pump_wavelength
    )
    _check_span(grid, 2 * half, "Biphoton")

    omega = grid.omega
    if params.envelope == "gaussian":
        psi = _gaussian_log_envelope(omega, 2 * half * FWHM_TO_STD)
    else:
        psi = (np.abs(omega) <= half).astype(float)
        if not psi.any():
            psi[np.argmin(np.abs(omega))] = 1.0
    psi = _normalise(psi.astype(complex), grid.spacing)

    log.debug(
        f"Biphoton state: λ_p={params.pump_wavelength} nm, "
        f"{params.envelope} marginal of {params.marginal_fwhm} nm."
    )
    return BiphotonState(
        grid=grid,
        psi=psi,
        pump_frequency=omega_p,
        pair_rate=params.effective_pair_rate,
        entanglement_size=params.entanglement_size,
        entanglement_time=params.entanglement_time,
    )


def biphoton_effective(params, grid):
    """Gaussian reduced state with a correlation time of rms τ_e.

    |ψ(Ω)|² has standard deviation 1/(2τ_e). This is the state measured by
    the dispersion scans and the autocorrelation through the shaper.
    """
    omega_p = params.pump_frequency
    check_centered(grid, omega_p / 2, "Biphoton grid")
    std = 1 / (2 * params.entanglement_time)
    _check_span(grid, std / FWHM_TO_STD, "Biphoton")
    psi = _normalise(
        _gaussian_log_envelope(grid.omega, std).astype(complex), grid.spacing
    )
    return BiphotonState(
        grid=grid,
        psi=psi,
        pump_frequency=omega_p,
        pair_rate=params.effective_pair_rate,
        entanglement_size=params.entanglement_size,
        entanglement_time=params.entanglement_time,
    )


def jsa_full(pump_linewidth, pm, grid, state=None, pump_amplitude=1.0):
    """Joint spectral amplitude for a pump of finite linewidth.

    Λ(Ω_s, Ω_i) = E_p(Ω_s + Ω_i)·f(Ω_s + Ω_i)·ψ((Ω_s − Ω_i)/2), with a
    Gaussian pump amplitude of width `pump_linewidth` and the difference
    envelope taken from `state` (constant when omitted).

    Args:
        pump_linewidth (float): Pump amplitude width (rad/fs); 0 puts all
            of the amplitude on the anti-diagonal.
        pm (PhaseMatching or None): Sum-frequency acceptance; None means
            no constraint.
        grid (FrequencyGrid): Signal and idler grid.
        state (BiphotonState, optional): Reduced state providing the
            difference envelope.
        pump_amplitude (float): Peak pump amplitude.

    Returns:
        Jsa2D
    """
    if pump_linewidth < 0:
        raise InvalidArgumentError(
            f"Pump linewidth must be non-negative, got {pump_linewidth}."
        )
    omega = grid.omega
    n = grid.count
    sum_freq = omega[:, None] + omega[None, :]
    diff_half = (omega[:, None] - omega[None, :]) / 2

    if pump_linewidth == 0:
        pump = np.fliplr(np.eye(n))
    else:
        pump = np.exp(-(sum_freq**2) / (2 * pump_linewidth**2))
    if pm is None:
        acceptance = np.ones_like(sum_freq)
    else:
        acceptance = pm.amplitude(sum_freq)

    if state is None:
        envelope = np.ones((n, n), dtype=complex)
    else:
        if state.grid.count != n or state.grid.spacing != grid.spacing:
            raise ConfigurationError("State and JSA grids do not match.")
        psi = state.psi
        envelope = np.interp(
            diff_half, omega, psi.real, left=0.0, right=0.0
        ) + 1j * np.interp(diff_half, omega, psi.imag, left=0.0, right=0.0)

    amplitude = pump_amplitude * pump * acceptance * envelope
    return Jsa2D(
        grid=grid,
        amplitude=amplitude,
        pump={"linewidth": pump_linewidth, "amplitude": pump_amplitude},
        phase_matching={} if pm is None else pm.describe(),
    )


def pump_tune_temperature(delta_t, params):
    """Pump wavelength after a crystal temperature change `delta_t` (°C)."""
    if abs(delta_t) > HEATER_RANGE:
        raise RangeError(
            f"Temperature change {delta_t} °C exceeds the heater range of "
            f"±{HEATER_RANGE} °C."
        )
    slope = params.phase_matching.temp_coefficient
    return params.pump_wavelength + slope * delta_t


def flux_metrics(power, wavelength, bandwidth):
    """Photon flux and spectral mode density of a beam.

    Args:
        power (float): Optical power (W).
        wavelength (float): Center wavelength (nm).
        bandwidth (float): Spectral FWHM (nm).

    Returns:
        dict: ``flux`` (photons/s) and ``mode_density`` (photons per mode).
    """
    if power < 0:
        raise InvalidArgumentError(f"Power must be non-negative, got {power}.")
    if not wavelength > 0 or not bandwidth > 0:
        raise InvalidArgumentError(
            "Wavelength and bandwidth must be positive, "
            f"got {wavelength} and {bandwidth}."
        )
    flux = photon_flux(power, wavelength)
    return {
        "flux": flux,
        "mode_density": flux / frequency_bandwidth_hz(bandwidth, wavelength),
    }


def classical_pulse(
    grid,
    center_wavelength=800.0,
    fwhm=46.0,
    repetition_rate=90e6,
    photons_per_pulse=1.0,
):
    """Transform-limited Gaussian pulse train.

    The spectral intensity FWHM is `fwhm` (nm) linearised around
    `center_wavelength`; the amplitude is scaled to `photons_per_pulse`.
    """
    if not center_wavelength > 0 or not fwhm > 0:
        raise InvalidArgumentError(
            "Center wavelength and FWHM must be positive, "
            f"got {center_wavelength} and {fwhm}."
        )
    if not repetition_rate > 0:
        raise InvalidArgumentError(
            f"Repetition rate must be positive, got {repetition_rate}."
        )
    if photons_per_pulse < 0:
        raise InvalidArgumentError(
            "Photons per pulse must be non-negative, "
            f"got {photons_per_pulse}."
        )
    std = bandwidth_nm_to_omega(fwhm, center_wavelength) * FWHM_TO_STD
    offset = wavelength_to_omega(center_wavelength) - grid.center
    amp = _gaussian_log_envelope(grid.omega - offset, std)
    amp = np.sqrt(photons_per_pulse) * _normalise(amp, grid.spacing)
    return ClassicalField(
        grid=grid,
        amplitude=amp.astype(complex),
        repetition_rate=repetition_rate,
    )


def marginal_fwhm_nm(state):
    """FWHM (nm) of the signal marginal |ψ|² on the wavelength axis."""
    wavelength = omega_to_wavelength(state.signal_frequency)[::-1]
    intensity = (np.abs(state.psi) ** 2)[::-1]
    return fwhm(wavelength, intensity)

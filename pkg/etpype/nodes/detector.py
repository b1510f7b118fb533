"""Sum-frequency detection of classical pulses and of photon pairs.

Classical pulses are up-converted in a long crystal and detected by a
spectrometer and a photodiode. Pairs are up-converted with the same
crystal and counted; along the monochromatic-pump line the sum
frequency is fixed, so the up-conversion acceptance is a constant there.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from etpype.definitions import REFERENCE_UC_RATE, VALID_ACCEPTANCE
from etpype.utils.errors import InvalidArgumentError

log = logging.getLogger("nipype.workflow")


@dataclass(frozen=True)
class DetectorParams:
    """Up-conversion detector.

    Args:
        acceptance_kind (str): ``gaussian-sum`` or ``constant``.
        acceptance (float): Sum-frequency acceptance Δω_p (rad/fs).
        transmission (float): Setup transmission T per photon.
        efficiency (float): Detector efficiency η.
        dark_rate (float): Dark count rate (Hz).
        integration_time (float): Counting time per point (s).
        kappa (float): Rate scale (Hz per pair/s and squared amplitude).
    """

    acceptance_kind: str = "gaussian-sum"
    acceptance: float = 0.35e-3
    transmission: float = 0.62
    efficiency: float = 0.17
    dark_rate: float = 10.8
    integration_time: float = 5.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.acceptance_kind not in VALID_ACCEPTANCE:
            raise InvalidArgumentError(
                f"Unknown acceptance kind '{self.acceptance_kind}'. Valid "
                f"kinds are {VALID_ACCEPTANCE}."
            )
        if not self.acceptance > 0:
            raise InvalidArgumentError(
                f"Acceptance must be positive, got {self.acceptance}."
            )
        for name in ("transmission", "efficiency"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise InvalidArgumentError(
                    f"{name} must lie in [0, 1], got {value}."
                )
        if self.dark_rate < 0:
            raise InvalidArgumentError(
                f"Dark rate must be non-negative, got {self.dark_rate}."
            )
        if not self.integration_time > 0:
            raise InvalidArgumentError(
                "Integration time must be positive, "
                f"got {self.integration_time}."
            )
        if self.kappa < 0:
            raise InvalidArgumentError(
                f"kappa must be non-negative, got {self.kappa}."
            )

    def acceptance_function(self, delta_sum):
        u = np.asarray(delta_sum, dtype=float)
        if self.acceptance_kind == "constant":
            return np.ones_like(u)
        return np.exp(-(u**2) / (2 * self.acceptance**2))


def sfg_classical(field, params, residual_phase=0.0):
    """Up-converted spectrum and photodiode signal of a classical pulse.

    S(Ω₃) = Σ_Ω E(Ω)·E(Ω₃ − Ω)·dΩ, filtered by the acceptance around
    twice the grid center, and S_PD = Σ|S(Ω₃)|²·dΩ₃.

    Args:
        field (ClassicalField): Pulse entering the crystal.
        params (DetectorParams): Detector.
        residual_phase (float or array): Setup dispersion left on the
            pulse, either c₂ (fs²) applied as c₂Ω²/2 or sampled φ(Ω).

    Returns:
        dict: ``omega`` (sum detuning, rad/fs), ``spectrum`` (complex S)
        and ``photodiode`` (S_PD).
    """
    omega = field.grid.omega
    spacing = field.grid.spacing
    if np.ndim(residual_phase) == 0:
        phase = float(residual_phase) / 2 * omega**2
    else:
        phase = np.asarray(residual_phase, dtype=float)
        if phase.shape != omega.shape:
            raise InvalidArgumentError(
                "Residual phase must be sampled on the field grid."
            )
    amplitude = field.amplitude * np.exp(1j * phase)
    spectrum = fftconvolve(amplitude, amplitude) * spacing
    n = field.grid.count
    sum_omega = (np.arange(2 * n - 1) - (n - 1)) * spacing
    spectrum = spectrum * params.acceptance_function(sum_omega)
    photodiode = float(np.sum(np.abs(spectrum) ** 2) * spacing)
    return {"omega": sum_omega, "spectrum": spectrum, "photodiode": photodiode}


def pair_amplitude(state):
    """|Σψ(Ω)·dΩ|², the squared up-conversion amplitude of a state."""
    return float(np.abs(np.sum(state.psi) * state.grid.spacing) ** 2)


def rate_scale(state, params):
    """κ·pair_rate·T²·η, the rate of a unit squared amplitude (Hz)."""
    return (
        params.kappa
        * state.pair_rate
        * params.transmission**2
        * params.efficiency
    )


def coincidence_rate(state, params):
    """Expected up-conversion count rate (Hz) of a biphoton state.

    rate = κ·pair_rate·T²·η·|∫ψ(Ω)dΩ|²; dark counts are not included.
    """
    return rate_scale(state, params) * pair_amplitude(state)


def calibrate_kappa(state, params, target_rate=REFERENCE_UC_RATE):
    """κ such that `state` is detected at `target_rate` (Hz)."""
    scale = (
        state.pair_rate
        * params.transmission**2
        * params.efficiency
        * pair_amplitude(state)
    )
    if not scale > 0:
        raise InvalidArgumentError(
            "Cannot calibrate kappa on a state with zero detection "
            "probability."
        )
    kappa = target_rate / scale
    log.info(f"Calibrated kappa = {kappa:.6e} for {target_rate} Hz.")
    return kappa


def sample_counts(rate, params, seed, size=None):
    """Poisson counts per integration bin, including dark counts.

    Args:
        rate (float or array): Expected signal rate (Hz).
        params (DetectorParams): Detector.
        seed (int): Seed of the generator; equal seeds give equal counts.
        size (int, optional): Number of draws per rate.

    Returns:
        int or array of int
    """
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0) or not np.all(np.isfinite(rate)):
        raise InvalidArgumentError(
            f"Rates must be finite and non-negative, got {rate}."
        )
    rng = np.random.default_rng(seed)
    mean = (rate + params.dark_rate) * params.integration_time
    if size is not None:
        mean = np.broadcast_to(mean, (size,) + mean.shape)
    counts = rng.poisson(mean)
    return counts if np.ndim(counts) else int(counts)

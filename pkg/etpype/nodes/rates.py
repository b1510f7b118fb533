"""Classical and entangled two-photon rates and cross sections.

The formulas accept plain floats (in any consistent unit system) or pint
quantities; with quantities the results carry their units. The report
works with pint throughout and converts to the labelled output units.
"""

import logging
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve

from etpype.definitions import PUBLISHED_BETA_Q_MEASURED
from etpype.nodes.fitting import fit_model
from etpype.utils.errors import (
    ConfigurationError,
    FitFailureError,
    InsufficientDataError,
    InvalidArgumentError,
)
from etpype.utils.units import Q_, frequency_bandwidth_hz, photon_flux

log = logging.getLogger("nipype.workflow")

# Prefactor of the pulsed SFG closed form, 8·√π·π².
PULSED_SFG_FACTOR = 8 * np.sqrt(np.pi) * np.pi**2
# Prefactor relating β_q to β_c, 4·√π·π².
QUANTUM_FACTOR = 4 * np.sqrt(np.pi) * np.pi**2


def _require_positive(**values):
    for name, value in values.items():
        if not np.all(value > 0):
            raise InvalidArgumentError(
                f"{name} must be positive, got {value}."
            )


def _require_non_negative(**values):
    for name, value in values.items():
        if not np.all(value >= 0):
            raise InvalidArgumentError(
                f"{name} must be non-negative, got {value}."
            )


def tpa_rate(flux, sigma_e, sigma_c):
    """Two-photon absorption rate R = σ_e·φ + σ_c·φ²."""
    _require_non_negative(flux=flux, sigma_e=sigma_e, sigma_c=sigma_c)
    return sigma_e * flux + sigma_c * flux**2


def crossover_flux(sigma_e, sigma_c):
    """Flux φ* = σ_e/σ_c where the linear and quadratic terms are equal."""
    _require_positive(sigma_c=sigma_c)
    return sigma_e / sigma_c


def sigma_e(sigma_c, area, time):
    """Entangled cross section σ_e = σ_c/(2·A_e·T_e)."""
    _require_positive(area=area, time=time)
    return sigma_c / (2 * area * time)


def sfg_pulsed(beta_c, repetition_rate, sigma, tau, intensity):
    """Average SFG rate of a pulse train, β_c·I²/(8√π π² σ² τ ν).

    Args:
        beta_c: Classical SFG coefficient (m²·s).
        repetition_rate: ν (Hz).
        sigma: Focus standard deviation (m).
        tau: Pulse duration (s).
        intensity: Incoming photon rate I_IR (photons/s).
    """
    _require_positive(repetition_rate=repetition_rate, sigma=sigma, tau=tau)
    return (
        beta_c
        * intensity**2
        / (PULSED_SFG_FACTOR * sigma**2 * tau * repetition_rate)
    )


def sfg_per_pulse(beta_c, sigma, tau, photons):
    """SFG photons per pulse, β_c·N²/(8√π π² σ² τ)."""
    _require_positive(sigma=sigma, tau=tau)
    return beta_c * photons**2 / (PULSED_SFG_FACTOR * sigma**2 * tau)


def sfg_per_pulse_profile(beta_c, sigma, tau, photons):
    """SFG photons per pulse by integrating β_c·I² over a Gaussian pulse.

    The photon flux density is Gaussian in r (std `sigma`) and in t
    (std `tau`). Floats only, consistent units.
    """
    _require_positive(sigma=sigma, tau=tau)
    # integrate in units of sigma and tau: r = sigma*x, t = tau*s
    radial, _ = quad(
        lambda x: 2 * np.pi * x * np.exp(-(x**2)) / (2 * np.pi) ** 2,
        0,
        np.inf,
    )
    temporal, _ = quad(
        lambda s: np.exp(-(s**2)) / (2 * np.pi),
        -np.inf,
        np.inf,
    )
    return beta_c * photons**2 * radial * temporal / (sigma**2 * tau)


def beta_q_from_beta_c(beta_c, sigma_e, tau_e):
    """Quantum SFG coefficient β_q = β_c/(4√π π² σ_e² τ_e)."""
    _require_positive(sigma_e=sigma_e, tau_e=tau_e)
    return beta_c / (QUANTUM_FACTOR * sigma_e**2 * tau_e)


def beta_c_fit(points, repetition_rate, sigma, tau):
    """β_c from a quadratic fit of SFG rate versus incoming rate.

    Args:
        points (list): (I_IR, I_SFG) pairs in photons/s.
        repetition_rate (float): ν (Hz).
        sigma (float): Focus standard deviation (m).
        tau (float): Pulse duration (s).

    Returns:
        tuple: (β_c in m²·s, FitResult of I_SFG = a·I_IR²)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 3:
        raise InsufficientDataError(
            "A quadratic fit of the SFG signal needs at least 3 points."
        )
    result = fit_model("quadratic-through-origin", points[:, 0], points[:, 1])
    curvature = result.params["curvature"]
    if curvature < 0:
        raise FitFailureError(
            f"Negative SFG curvature {curvature:.3e}.",
            last_iterate=dict(result.params),
        )
    beta_c = curvature * PULSED_SFG_FACTOR * sigma**2 * tau * repetition_rate
    return beta_c, result


def pm_factor(field, acceptance):
    """Phase-matching factor p = |∬ f·E·E| / |∬ E·E|.

    The double integral over (ω₁, ω₂) is evaluated in the sum
    coordinate u = Ω₁ + Ω₂: the inner integral is the autoconvolution of
    the spectral amplitude, sampled on the symmetric sum grid.

    Args:
        field (ClassicalField): Spectral amplitude E(Ω).
        acceptance (PhaseMatching, float or None): Acceptance function or
            its Gaussian width Δω_p (rad/fs); None or ``inf`` means no
            constraint.

    Returns:
        float
    """
    if acceptance is None:
        return 1.0
    if np.isscalar(acceptance):
        width = float(acceptance)
        if np.isinf(width):
            return 1.0

        def f(u):
            return np.exp(-(u**2) / (2 * width**2))

    else:
        width = acceptance.acceptance
        f = acceptance.amplitude
    constant = not np.isscalar(acceptance) and (
        acceptance.kind == "constant" or np.isinf(width)
    )
    spacing = field.grid.spacing
    if not constant and spacing > width / 4:
        raise ConfigurationError(
            f"Grid spacing {spacing:.3g} rad/fs does not resolve the "
            f"acceptance width {width:.3g} rad/fs (needs <= width/4)."
        )
    n = field.grid.count
    u = (np.arange(2 * n - 1) - (n - 1)) * spacing
    autoconv = fftconvolve(field.amplitude, field.amplitude) * spacing
    denominator = abs(np.sum(autoconv) * spacing)
    if denominator == 0:
        raise InvalidArgumentError("pm_factor of a zero field.")
    return float(abs(np.sum(f(u) * autoconv) * spacing) / denominator)


def estimate_beta_q_measured(
    uc_rate, dc_power, wavelength, transmission, efficiency
):
    """β_q from a measured up-conversion rate.

    β_q = (R_UC/η)/(φ·T²) with φ the photon flux of the down-converted
    power at `wavelength`: every photon is counted as a pair member and
    T applies to each photon of a pair.

    Args:
        uc_rate (float): Up-conversion rate R_UC (Hz).
        dc_power (float): Down-converted power (W).
        wavelength (float): Photon wavelength (nm).
        transmission (float): Setup transmission per photon.
        efficiency (float): Detector efficiency.

    Returns:
        float
    """
    _require_non_negative(uc_rate=uc_rate)
    _require_positive(
        dc_power=dc_power,
        wavelength=wavelength,
        transmission=transmission,
        efficiency=efficiency,
    )
    flux = photon_flux(dc_power, wavelength)
    beta_q = (uc_rate / efficiency) / (flux * transmission**2)
    if beta_q > 0:
        log.info(
            f"Measured beta_q = {beta_q:.3e} (flux {flux:.3e} photons/s); "
            f"published value {PUBLISHED_BETA_Q_MEASURED:.1e}, "
            f"convention factor {beta_q / PUBLISHED_BETA_Q_MEASURED:.2f}."
        )
    return beta_q


def sigma_e_survey(area, time, sigma_c_range=(1e-51, 1e-47), count=5):
    """σ_e and crossover flux over a range of classical cross sections.

    Args:
        area (float): Entanglement area A_e (cm²).
        time (float): Entanglement time T_e (s).
        sigma_c_range (tuple): Range of σ_c (cm⁴·s), log-spaced.
        count (int): Number of σ_c values.

    Returns:
        dict: columns ``sigma_c`` (cm⁴·s), ``sigma_e`` (cm²) and
        ``crossover_flux`` (photons/(s·cm²)).
    """
    low, high = sigma_c_range
    _require_positive(low=low, high=high)
    sigma_c = np.logspace(np.log10(low), np.log10(high), count)
    values = sigma_e(sigma_c, area, time)
    return {
        "sigma_c": sigma_c,
        "sigma_e": values,
        "crossover_flux": crossover_flux(values, sigma_c),
    }


@dataclass(frozen=True)
class RateParams:
    """Inputs of the cross-section report, in the units of `UNITS`."""

    sigma_c: float = 1e-49
    entanglement_size: float = 26.0
    entanglement_time: float = 24.4
    beta_c: float = 6.5e-35
    focus: float = 3.7
    duration: float = 15.4
    repetition_rate: float = 90e6
    photons_per_pulse: float = 1000.0
    pm_factor: float = 0.0087
    uc_rate: float = 12.8
    dc_power: float = 120e-9
    wavelength: float = 800.0
    bandwidth: float = 98.0
    transmission: float = 0.62
    efficiency: float = 0.17

    UNITS = {
        "sigma_c": "cm**4*s",
        "entanglement_size": "um",
        "entanglement_time": "fs",
        "beta_c": "m**2*s",
        "focus": "um",
        "duration": "fs",
        "repetition_rate": "Hz",
        "photons_per_pulse": "",
        "pm_factor": "",
        "uc_rate": "Hz",
        "dc_power": "W",
        "wavelength": "nm",
        "bandwidth": "nm",
        "transmission": "",
        "efficiency": "",
    }

    def quantity(self, name):
        return Q_(getattr(self, name), self.UNITS[name] or "dimensionless")


def rates_report(params, provenance=None):
    """Cross-section report with a provenance label per line.

    Args:
        params (RateParams): Report inputs.
        provenance (dict, optional): Input name to label (e.g. ``config``
            or ``default``); unlabelled inputs are reported as
            ``default``.

    Returns:
        tuple: (dict of columns ``quantity``, ``value``, ``unit``,
        ``provenance``; text summary)
    """
    provenance = provenance or {}
    q = params.quantity
    rows = []

    def add(name, value, unit, source):
        rows.append((name, float(value), unit, source))

    for item in fields(params):
        add(
            item.name,
            getattr(params, item.name),
            params.UNITS[item.name],
            provenance.get(item.name, "default"),
        )

    area = q("entanglement_size") ** 2
    s_e = sigma_e(q("sigma_c"), area, q("entanglement_time"))
    add("sigma_e", s_e.to("cm**2").magnitude, "cm**2", "sigma_c/(2 A_e T_e)")
    add(
        "crossover_flux",
        crossover_flux(s_e, q("sigma_c")).to("1/(s*cm**2)").magnitude,
        "1/(s*cm**2)",
        "sigma_e/sigma_c",
    )
    per_pulse = sfg_per_pulse(
        q("beta_c"), q("focus"), q("duration"), q("photons_per_pulse")
    )
    add(
        "sfg_per_pulse",
        per_pulse.to("dimensionless").magnitude,
        "",
        "beta_c N^2/(8 sqrt(pi) pi^2 sigma^2 tau)",
    )
    add(
        "sfg_rate",
        (per_pulse * q("repetition_rate")).to("Hz").magnitude,
        "Hz",
        "per-pulse SFG x repetition rate",
    )
    beta_q = beta_q_from_beta_c(
        q("beta_c"), q("entanglement_size"), q("entanglement_time")
    ).to("dimensionless")
    add(
        "beta_q",
        beta_q.magnitude,
        "",
        "beta_c/(4 sqrt(pi) pi^2 sigma_e^2 tau_e)",
    )
    add(
        "beta_q_corrected",
        beta_q.magnitude / params.pm_factor,
        "",
        "beta_q/p",
    )
    flux = photon_flux(params.dc_power, params.wavelength)
    add("dc_flux", flux, "1/s", "P lambda/(h c)")
    add(
        "mode_density",
        flux / frequency_bandwidth_hz(params.bandwidth, params.wavelength),
        "",
        "flux/bandwidth",
    )
    measured = estimate_beta_q_measured(
        params.uc_rate,
        params.dc_power,
        params.wavelength,
        params.transmission,
        params.efficiency,
    )
    add("beta_q_measured", measured, "", "(R_UC/eta)/(flux T^2)")
    add(
        "beta_q_measured_convention_factor",
        measured / PUBLISHED_BETA_Q_MEASURED,
        "",
        f"ratio to published {PUBLISHED_BETA_Q_MEASURED:.1e}",
    )

    columns = {
        "quantity": [r[0] for r in rows],
        "value": [r[1] for r in rows],
        "unit": [r[2] for r in rows],
        "provenance": [r[3] for r in rows],
    }
    text = "\n".join(
        f"{name} = {value:.4e} {unit}".rstrip() + f"  [{source}]"
        for name, value, unit, source in rows
    )
    return columns, text


def params_from_dict(values):
    """RateParams from a mapping of plain numbers, ignoring unknown keys."""
    known = asdict(RateParams())
    return RateParams(**{k: v for k, v in values.items() if k in known})

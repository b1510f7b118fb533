"""Unit registry and the named converters used across etpype.

Internal conventions: angular frequency in rad/fs, time in fs, wavelength
in nm, lengths at the SLM in µm, focal lengths and grating shifts in mm.
Every conversion between these and SI goes through a function of this
module.
"""

import numpy as np
from pint import UnitRegistry
from pint.errors import DimensionalityError, UndefinedUnitError
from scipy.constants import c, h

from etpype.utils.errors import ConfigurationError

ureg = UnitRegistry()
Q_ = ureg.Quantity

# Speed of light in nm/fs.
C_NM_PER_FS = c * 1e-6
# Planck constant in J·s.
PLANCK = h


def wavelength_to_omega(wavelength_nm):
    """Vacuum wavelength (nm) to angular frequency (rad/fs)."""
    return 2 * np.pi * C_NM_PER_FS / np.asarray(wavelength_nm, dtype=float)


def omega_to_wavelength(omega):
    """Angular frequency (rad/fs) to vacuum wavelength (nm)."""
    return 2 * np.pi * C_NM_PER_FS / np.asarray(omega, dtype=float)


def bandwidth_nm_to_omega(bandwidth_nm, wavelength_nm):
    """Linearised conversion of a bandwidth in nm to rad/fs."""
    return 2 * np.pi * C_NM_PER_FS * bandwidth_nm / wavelength_nm**2


def bandwidth_omega_to_nm(bandwidth, wavelength_nm):
    """Linearised conversion of a bandwidth in rad/fs to nm."""
    return bandwidth * wavelength_nm**2 / (2 * np.pi * C_NM_PER_FS)


def photon_flux(power_w, wavelength_nm):
    """Photon flux (photons/s) of a beam of power `power_w` (W)."""
    return power_w * wavelength_nm * 1e-9 / (PLANCK * c)


def frequency_bandwidth_hz(bandwidth_nm, wavelength_nm):
    """Bandwidth in Hz (cycles/s) of a spectrum of width `bandwidth_nm`."""
    return c * (bandwidth_nm * 1e-9) / (wavelength_nm * 1e-9) ** 2


def parse_quantity(text, unit, field):
    """Parse a unit string such as ``"6.5e-35 m**2*s"``.

    Args:
        text (str or float): Value with units. Bare numbers are read in
            `unit`.
        unit (str): Expected unit; the parsed value must be convertible.
        field (str): Configuration key, used in error messages.

    Returns:
        Quantity: The parsed value expressed in `unit`.
    """
    if isinstance(text, (int, float)):
        return Q_(float(text), unit)
    try:
        quantity = Q_(str(text))
    except (UndefinedUnitError, ValueError, TypeError, AttributeError) as e:
        raise ConfigurationError(
            f"Invalid unit string for '{field}': {text!r} ({e})"
        )
    if not isinstance(quantity, ureg.Quantity) or quantity.unitless:
        return Q_(float(getattr(quantity, "magnitude", quantity)), unit)
    try:
        return quantity.to(unit)
    except DimensionalityError:
        raise ConfigurationError(
            f"Invalid unit for '{field}': {text!r} is not convertible "
            f"to {unit}"
        )

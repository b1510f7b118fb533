"""Setup phase of the grating compressor.

Shifting the grating out of the symmetric 4f₂ position by g (mm) adds a
grating-pair dispersion proportional to g: positive shifts compensate
positive setup dispersion. The analytic model stops at third order;
measured or ray-traced phases can be imported from CSV instead.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from etpype.nodes.shaper import frequency_step, wavelength_step
from etpype.nodes.spectral import apply_phase, to_time_profile
from etpype.utils.errors import InsufficientDataError, InvalidArgumentError
from etpype.utils.io import read_table, write_table

log = logging.getLogger("nipype.workflow")

# Speed of light in µm/fs.
C_UM_PER_FS = 0.299792458


def grating_pair_gvd(wavelength, grating_period, order, diffraction_angle):
    """Group-delay dispersion of a grating pair per mm of separation.

    Args:
        wavelength (float): Wavelength (nm).
        grating_period (float): Grating period (µm).
        order (int): Diffraction order.
        diffraction_angle (float): Diffraction angle at `wavelength`
            (degrees).

    Returns:
        float: d c₂/dg in fs²/mm.
    """
    lam = wavelength * 1e-3
    cos_beta = np.cos(np.deg2rad(diffraction_angle))
    per_um = -(order**2) * lam**3 / (
        2 * np.pi * C_UM_PER_FS**2 * grating_period**2 * cos_beta**2
    )
    return float(per_um * 1e3)


def gvd_per_shift(geometry):
    """Setup dispersion added per mm of grating shift (fs²/mm)."""
    return grating_pair_gvd(
        geometry.center_wavelength,
        geometry.grating_period,
        geometry.order,
        geometry.diffraction_angle,
    )


def tod_per_shift(geometry):
    """Third-order dispersion added per mm of grating shift (fs³/mm).

    Obtained by differentiating the grating-pair GDD with respect to ω at
    fixed incidence; model grade only.
    """
    lam = geometry.center_wavelength * 1e-3
    beta = np.deg2rad(geometry.diffraction_angle)
    factor = 3 + 2 * geometry.order * lam * np.sin(beta) / (
        geometry.grating_period * np.cos(beta) ** 2
    )
    scale = -lam / (2 * np.pi * C_UM_PER_FS)
    return float(scale * gvd_per_shift(geometry) * factor)


@dataclass(frozen=True, eq=False)
class CompressorState:
    """Residual phase of the compressor for one grating shift.

    Args:
        geometry (ShaperGeometry): Compressor geometry.
        shift (float): Grating shift g (mm), None for imported phases.
        grid (FrequencyGrid): Sampling of the phase.
        phase (array): φ(Ω) in rad.
        coefficients (tuple): Taylor coefficients c_0..c_K (fs^k).
    """

    geometry: object
    shift: float
    grid: object
    phase: np.ndarray
    coefficients: tuple

    def __post_init__(self):
        phase = np.array(self.phase, dtype=float, copy=True)
        if phase.shape != (self.grid.count,):
            raise InvalidArgumentError(
                f"Phase has shape {phase.shape}, expected "
                f"({self.grid.count},)."
            )
        if not np.all(np.isfinite(phase)):
            raise InvalidArgumentError("Phase contains NaN or Inf values.")
        phase.setflags(write=False)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @property
    def c2(self):
        return self.coefficients[2]

    @classmethod
    def from_samples(cls, geometry, grid, phase, orders=4):
        """Wrap externally supplied phase samples."""
        return cls(
            geometry=geometry,
            shift=None,
            grid=grid,
            phase=phase,
            coefficients=taylor_coeffs(phase, grid, orders),
        )


def setup_phase(shift, geometry, grid, orders=2):
    """Residual setup phase for a grating shift.

    φ(Ω) = c₂(g)/2·Ω² (+ c₃(g)/6·Ω³ when `orders` >= 3), with Ω measured
    from the grid center.

    Args:
        shift (float): Grating shift g (mm).
        geometry (ShaperGeometry): Compressor geometry.
        grid (FrequencyGrid): Frequency sampling.
        orders (int): Highest Taylor order K >= 2.

    Returns:
        CompressorState
    """
    if orders < 2:
        raise InvalidArgumentError(f"orders must be >= 2, got {orders}.")
    c2 = gvd_per_shift(geometry) * shift
    c3 = tod_per_shift(geometry) * shift if orders >= 3 else 0.0
    omega = grid.omega
    phase = c2 / 2 * omega**2 + c3 / 6 * omega**3
    coefficients = [0.0, 0.0, c2, c3] + [0.0] * (orders - 3)
    return CompressorState(
        geometry=geometry,
        shift=shift,
        grid=grid,
        phase=phase,
        coefficients=coefficients[: orders + 1],
    )


def taylor_coeffs(phase, grid, orders):
    """Taylor coefficients c_k = k!·a_k of a degree-K polynomial fit.

    Args:
        phase (array): φ samples on `grid` (rad).
        grid (FrequencyGrid): Sampling; Ω is taken from the grid center.
        orders (int): Degree K of the fit.

    Returns:
        list: c_0..c_K in fs^k.
    """
    phase = np.asarray(phase, dtype=float)
    if orders < 0 or grid.count < 4 * max(orders, 1):
        raise InsufficientDataError(
            f"{grid.count} samples cannot determine {orders} Taylor orders."
        )
    fit = Polynomial.fit(grid.omega, phase, orders).convert()
    coef = np.zeros(orders + 1)
    coef[: fit.coef.size] = fit.coef
    return [float(math.factorial(k) * a) for k, a in enumerate(coef)]


def geometry_summary(geometry, collimation_focal_length=50.0):
    """Linearised dispersion γ, anamorphic factor b and magnification M.

    Args:
        geometry (ShaperGeometry): Compressor geometry.
        collimation_focal_length (float): Focal length f₁ of the lens
            collimating the source (mm).

    Returns:
        dict
    """
    if not collimation_focal_length > 0:
        raise InvalidArgumentError(
            "Collimation focal length must be positive, "
            f"got {collimation_focal_length}."
        )
    cos_beta = np.cos(np.deg2rad(geometry.diffraction_angle))
    gamma = (
        2
        * np.pi
        * geometry.order
        / (geometry.center_frequency * geometry.grating_period * cos_beta)
    )
    b = np.cos(np.deg2rad(geometry.incidence_angle)) / cos_beta
    return {
        "gamma": float(gamma),
        "anamorphic_factor": float(b),
        "magnification": float(
            b * geometry.focal_length / collimation_focal_length
        ),
        "diffraction_angle": geometry.diffraction_angle,
        "frequency_step": frequency_step(geometry),
        "wavelength_step": wavelength_step(geometry),
        "gvd_per_shift": gvd_per_shift(geometry),
    }


def write_phase(path, state):
    """Write φ(Ω) as CSV with its Taylor coefficients as metadata."""
    meta = {f"c{k}": f"{c:.12e}" for k, c in enumerate(state.coefficients)}
    if state.shift is not None:
        meta["shift_mm"] = f"{state.shift:.12e}"
    return write_table(
        path,
        {"omega": state.grid.omega, "phase": state.phase},
        ["rad/fs", "rad"],
        meta=meta,
    )


def read_phase(path):
    """Read Ω (rad/fs) and φ (rad) samples from a phase CSV."""
    df, _, _ = read_table(path)
    return df["omega"].to_numpy(), df["phase"].to_numpy()


def compressor_profile(field, shift, geometry, orders=3):
    """Temporal intensity of `field` after the compressor at shift g."""
    state = setup_phase(shift, geometry, field.grid, orders=orders)
    log.debug(f"Compressor at g={shift} mm: c2={state.c2:.1f} fs^2.")
    return to_time_profile(apply_phase(field, state.phase))

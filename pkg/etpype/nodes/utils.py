"""Build physics objects from the plain configuration sections passed to
the nipype nodes."""

from dataclasses import fields

import numpy as np

from etpype.nodes.detector import DetectorParams
from etpype.nodes.shaper import ShaperGeometry, read_mask
from etpype.nodes.source import (
    PhaseMatching,
    SourceParams,
    biphoton_effective,
    biphoton_reduced,
    classical_pulse,
)
from etpype.nodes.spectral import grid_make
from etpype.utils.errors import ConfigurationError, EtpypeError
from etpype.utils.units import wavelength_to_omega


def _pick(cls, section):
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in section.items() if k in names}


def _build(cls, section, name):
    try:
        return cls(**_pick(cls, section))
    except EtpypeError as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"Invalid '{name}' section: {e}")


def build_geometry(geometry, psf_factor=1.0):
    """ShaperGeometry from the ``geometry`` section."""
    result = _build(ShaperGeometry, geometry, "geometry")
    if psf_factor != 1.0:
        result = result.with_psf_factor(psf_factor)
    return result


def build_mask(geometry, geom):
    """SLM mask of ``geometry.mask_file``, or None when no file is set.

    The file must have been written for `geom`.
    """
    path = geometry.get("mask_file")
    if path is None:
        return None
    return read_mask(path, geom)


def build_source(spdc):
    """SourceParams from the ``spdc`` section."""
    pm = PhaseMatching(
        kind=spdc["acceptance_kind"],
        acceptance=spdc["acceptance"],
        crystal_length=spdc["crystal_length"],
        temp_coefficient=spdc["temp_coefficient"],
    )
    section = dict(_pick(SourceParams, spdc), phase_matching=pm)
    return _build(SourceParams, section, "spdc")


def build_detector(detector, kappa=None):
    section = dict(detector)
    section["kappa"] = kappa if kappa is not None else 1.0
    return _build(DetectorParams, section, "detector")


def build_grid(center_wavelength, grid):
    """Grid of the ``grid`` section centered at `center_wavelength` (nm)."""
    return grid_make(
        wavelength_to_omega(center_wavelength), grid["span"], grid["count"]
    )


def build_state(spdc, grid):
    """Reduced biphoton state of the configured model.

    ``effective`` gives the correlation-time state measured through the
    shaper, ``marginal`` the state with the measured marginal width.
    """
    params = build_source(spdc)
    state_grid = build_grid(2 * params.pump_wavelength, grid)
    if spdc["state_model"] == "marginal":
        return biphoton_reduced(params, state_grid)
    return biphoton_effective(params, state_grid)


def build_field(laser, grid):
    """Transform-limited pulse of the ``laser`` section."""
    return classical_pulse(
        build_grid(laser["center_wavelength"], grid),
        center_wavelength=laser["center_wavelength"],
        fwhm=laser["fwhm"],
        repetition_rate=laser["repetition_rate"],
        photons_per_pulse=laser["photons_per_pulse"],
    )


def linspace_spec(section):
    """Sample positions of a scan section with start, stop and count."""
    return np.linspace(section["start"], section["stop"], section["count"])

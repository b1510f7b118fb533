"""Structured schemas of the experiment scenarios.

Scenarios are composed by hydra from the files in ``configs/`` and then
merged into the dataclasses below, so that every key is type-checked and
unknown keys are rejected with the full name of the offending field.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional

from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from etpype.definitions import (
    VALID_ACCEPTANCE,
    VALID_ENVELOPES,
    VALID_EXPERIMENTS,
    VALID_SHAPERS,
    VALID_STATE_MODELS,
)
from etpype.utils.errors import ConfigurationError, EtpypeError
from etpype.utils.units import parse_quantity


@dataclass
class SpdcConfig:
    pump_wavelength: float = 400.0
    marginal_fwhm: float = 98.0
    envelope: str = "gaussian"
    state_model: str = "effective"
    pair_rate: Optional[float] = None
    entanglement_size: float = 26.0
    entanglement_time: float = 24.4
    down_converted_power: float = 120e-9
    acceptance_kind: str = "gaussian-sum"
    acceptance: float = 0.35e-3
    crystal_length: float = 17.0
    temp_coefficient: float = -0.019
    pump_linewidth: float = 0.0
    temperature_offset: float = 0.0


@dataclass
class LaserConfig:
    center_wavelength: float = 800.0
    fwhm: float = 46.0
    repetition_rate: float = 90e6
    photons_per_pulse: float = 1.0


@dataclass
class GeometryConfig:
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
    frequency_resolution: float = 3.3e-3
    collimation_focal_length: float = 50.0
    mask_file: Optional[str] = None


@dataclass
class DetectorConfig:
    acceptance_kind: str = "gaussian-sum"
    acceptance: float = 0.35e-3
    transmission: float = 0.62
    efficiency: float = 0.17
    dark_rate: float = 10.8
    integration_time: float = 5.0
    kappa: Optional[float] = None
    target_rate: float = 12.8
    sample: bool = False


@dataclass
class GridConfig:
    span: float = 0.6
    count: int = 1025


@dataclass
class ScanConfig:
    start: float = -3000.0
    stop: float = 3000.0
    count: int = 121
    shaper: str = "slm"
    setup_c2: float = 0.0
    classical: bool = True


@dataclass
class GvdConfig:
    shifts: List[float] = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    gvd_per_mm: Optional[float] = None
    window: int = 41


@dataclass
class IacConfig:
    start: float = -200.0
    stop: float = 200.0
    count: int = 9000
    shaper: str = "slm"
    window: int = 256
    log_scale: bool = False
    threshold: float = 0.1


@dataclass
class ResolutionConfig:
    pixels: int = 5
    points: int = 2001
    psf_factors: List[float] = field(default_factory=lambda: [1.0, 9.0])


@dataclass
class CalibrationConfig:
    peaks_file: Optional[str] = None
    peak_pixels: List[int] = field(
        default_factory=lambda: [40, 120, 200, 280, 360, 440, 520, 600]
    )
    noise: float = 0.0


@dataclass
class PulseConfig:
    shifts: List[float] = field(default_factory=lambda: [-0.1, 0.0, 0.1])
    orders: int = 3


@dataclass
class RatesConfig:
    sigma_c: Optional[str] = None
    entanglement_size: Optional[str] = None
    entanglement_time: Optional[str] = None
    beta_c: Optional[str] = None
    focus: Optional[str] = None
    duration: Optional[str] = None
    repetition_rate: Optional[str] = None
    photons_per_pulse: Optional[str] = None
    pm_factor: Optional[str] = None
    uc_rate: Optional[str] = None
    dc_power: Optional[str] = None
    wavelength: Optional[str] = None
    bandwidth: Optional[str] = None
    transmission: Optional[str] = None
    efficiency: Optional[str] = None
    survey_count: int = 5


@dataclass
class Scenario:
    experiment: str = "dispersion-scan"
    seed: Optional[int] = None
    plots: bool = False
    save_graph: bool = False
    spdc: SpdcConfig = field(default_factory=SpdcConfig)
    laser: LaserConfig = field(default_factory=LaserConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    gvd: GvdConfig = field(default_factory=GvdConfig)
    iac: IacConfig = field(default_factory=IacConfig)
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)


def _choice(value, valid, key):
    if value not in valid:
        raise ConfigurationError(
            f"Invalid value for '{key}': {value!r}. "
            f"Please choose one of {valid}."
        )


def _positive(section, names, prefix):
    for name in names:
        value = section[name]
        if value is None or not value > 0:
            raise ConfigurationError(
                f"'{prefix}.{name}' must be positive, got {value}."
            )


def _check_semantics(cfg):
    _choice(cfg.experiment, VALID_EXPERIMENTS, "experiment")
    _choice(cfg.spdc.envelope, VALID_ENVELOPES, "spdc.envelope")
    _choice(cfg.spdc.state_model, VALID_STATE_MODELS, "spdc.state_model")
    _choice(cfg.spdc.acceptance_kind, VALID_ACCEPTANCE, "spdc.acceptance_kind")
    _choice(
        cfg.detector.acceptance_kind,
        VALID_ACCEPTANCE,
        "detector.acceptance_kind",
    )
    _choice(cfg.scan.shaper, VALID_SHAPERS, "scan.shaper")
    _choice(cfg.iac.shaper, VALID_SHAPERS, "iac.shaper")
    _positive(
        cfg.spdc,
        ["pump_wavelength", "marginal_fwhm", "acceptance"],
        "spdc",
    )
    _positive(cfg.laser, ["center_wavelength", "fwhm"], "laser")
    _positive(cfg.grid, ["span", "count"], "grid")
    _positive(cfg.detector, ["integration_time", "target_rate"], "detector")
    for name in ("transmission", "efficiency"):
        value = cfg.detector[name]
        if not 0 <= value <= 1:
            raise ConfigurationError(
                f"'detector.{name}' must lie in [0, 1], got {value}."
            )
    if cfg.scan.count < 2 or cfg.iac.count < 2:
        raise ConfigurationError("Scans need at least 2 points.")
    shaper = {"iac": cfg.iac.shaper}.get(cfg.experiment, cfg.scan.shaper)
    if cfg.geometry.mask_file is not None and shaper == "ideal":
        raise ConfigurationError(
            "'geometry.mask_file' needs the slm shaper, the scenario "
            "uses the ideal one."
        )
    for key in ("geometry.mask_file", "calibration.peaks_file"):
        section, name = key.split(".")
        path = cfg[section][name]
        if path is not None and not os.path.exists(path):
            raise ConfigurationError(f"'{key}': file not found: {path}")
    if cfg.detector.sample and cfg.seed is None:
        raise ConfigurationError(
            "A seed is required when 'detector.sample' is enabled; set "
            "'seed' in the scenario or pass --seed."
        )


def validate_scenario(cfg, seed=None):
    """Merge a composed configuration into the scenario schema.

    Args:
        cfg (DictConfig): Configuration composed by hydra.
        seed (int, optional): Seed overriding the scenario seed.

    Returns:
        DictConfig: Typed configuration with every default filled in.
    """
    try:
        schema = OmegaConf.structured(Scenario)
        merged = OmegaConf.merge(schema, cfg)
        if seed is not None:
            merged.seed = seed
    except OmegaConfBaseException as e:
        key = getattr(e, "full_key", None) or "<root>"
        raise ConfigurationError(
            f"Invalid configuration at '{key}': {str(e).splitlines()[0]}"
        )
    _check_semantics(merged)
    rates_params(merged.rates)
    return merged


def rates_params(rates):
    """RateParams and provenance labels from a ``rates`` section.

    Every value is a unit string parsed with pint and converted to the
    unit the report works in; unset values keep their defaults.

    Returns:
        tuple: (RateParams, dict of provenance labels)
    """
    from etpype.nodes.rates import RateParams, params_from_dict

    values, provenance = {}, {}
    for name, unit in RateParams.UNITS.items():
        text = rates.get(name)
        if text is None:
            continue
        quantity = parse_quantity(
            text, unit or "dimensionless", f"rates.{name}"
        )
        values[name] = float(quantity.magnitude)
        provenance[name] = "config"
    try:
        params = params_from_dict(values)
    except EtpypeError as e:
        raise ConfigurationError(f"Invalid 'rates' section: {e}")
    return params, provenance

import nipype.interfaces.utility as niu
import nipype.pipeline.engine as pe
from omegaconf import OmegaConf

from ..nodes.experiments import (
    run_calibrate,
    run_classical_scan,
    run_gvd_fit,
    run_grating_scan,
    run_iac,
    run_pulse,
    run_quantum_scan,
    run_rates,
    run_resolution,
    run_resolution_summary,
    run_scan_summary,
    run_spdc,
    run_spectrogram,
)
from ..utils.units import wavelength_to_omega

# Samples per axis of the joint spectral amplitude table.
JSA_COUNT = 201


def _section(cfg, name):
    return OmegaConf.to_container(cfg[name], resolve=True)


def _function_node(function, input_names, output_names, name, **inputs):
    node = pe.Node(
        interface=niu.Function(
            input_names=input_names,
            output_names=output_names,
            function=function,
        ),
        name=name,
    )
    for key, value in inputs.items():
        setattr(node.inputs, key, value)
    return node


def _output_node(fields):
    return pe.Node(niu.IdentityInterface(fields=fields), name="outputnode")


def create_spdc_pipeline(cfg):
    """
    Create the source workflow: reduced state, joint spectral amplitude
    and source metrics.

    Args:
        cfg: Validated scenario.

    Returns:
        pe.Workflow with an ``outputnode.out_files`` field.
    """
    pipe = pe.Workflow(name="spdc")
    spdc = _function_node(
        run_spdc,
        ["spdc", "grid", "jsa_count"],
        ["out_files"],
        "Spdc",
        spdc=_section(cfg, "spdc"),
        grid=_section(cfg, "grid"),
        jsa_count=JSA_COUNT,
    )
    output = _output_node(["out_files"])
    pipe.connect(spdc, "out_files", output, "out_files")
    return pipe


def create_calibrate_pipeline(cfg):
    """Create the pixel-map and κ calibration workflow."""
    pipe = pe.Workflow(name="calibrate")
    calibrate = _function_node(
        run_calibrate,
        ["geometry", "calibration", "spdc", "grid", "detector", "seed"],
        ["out_files"],
        "Calibrate",
        geometry=_section(cfg, "geometry"),
        calibration=_section(cfg, "calibration"),
        spdc=_section(cfg, "spdc"),
        grid=_section(cfg, "grid"),
        detector=_section(cfg, "detector"),
        seed=cfg.seed,
    )
    output = _output_node(["out_files"])
    pipe.connect(calibrate, "out_files", output, "out_files")
    return pipe


def create_resolution_pipeline(cfg):
    """
    Create the resolution workflow.

    One five-pixel transmission spectrum is computed per PSF factor
    (grating and prism compressors) in a MapNode, then the fitted widths
    are compared.
    """
    pipe = pe.Workflow(name="resolution")
    factors = list(cfg.resolution.psf_factors)
    resolution = pe.MapNode(
        interface=niu.Function(
            input_names=[
                "geometry",
                "psf_factor",
                "pixels",
                "points",
            ],
            output_names=["out_file", "fwhm"],
            function=run_resolution,
        ),
        iterfield=["psf_factor"],
        name="Resolution",
    )
    resolution.inputs.geometry = _section(cfg, "geometry")
    resolution.inputs.psf_factor = factors
    resolution.inputs.pixels = cfg.resolution.pixels
    resolution.inputs.points = cfg.resolution.points

    compare = _function_node(
        run_resolution_summary,
        ["psf_factors", "widths"],
        ["out_file"],
        "CompareResolution",
        psf_factors=factors,
    )
    merge = pe.Node(niu.Merge(2, ravel_inputs=True), name="MergeOutputs")
    output = _output_node(["out_files"])
    pipe.connect(
        [
            (resolution, compare, [("fwhm", "widths")]),
            (resolution, merge, [("out_file", "in1")]),
            (compare, merge, [("out_file", "in2")]),
            (merge, output, [("out", "out_files")]),
        ]
    )
    return pipe


def create_dispersion_scan_pipeline(cfg):
    """
    Create the dispersion-scan workflow.

    The quantum scan and, when ``scan.classical`` is set, the classical
    scan run as independent nodes; their fits are collected in one table.
    """
    pipe = pe.Workflow(name="dispersion_scan")
    quantum = _function_node(
        run_quantum_scan,
        [
            "spdc",
            "grid",
            "geometry",
            "detector",
            "scan",
            "seed",
        ],
        ["out_file", "summary"],
        "QuantumScan",
        spdc=_section(cfg, "spdc"),
        grid=_section(cfg, "grid"),
        geometry=_section(cfg, "geometry"),
        detector=_section(cfg, "detector"),
        scan=_section(cfg, "scan"),
        seed=cfg.seed,
    )
    n_scans = 2 if cfg.scan.classical else 1
    summaries = pe.Node(niu.Merge(n_scans), name="MergeSummaries")
    files = pe.Node(niu.Merge(n_scans + 1), name="MergeOutputs")
    collect = _function_node(
        run_scan_summary, ["summaries"], ["out_file"], "ScanSummary"
    )
    output = _output_node(["out_files"])
    pipe.connect(
        [
            (quantum, summaries, [("summary", "in1")]),
            (quantum, files, [("out_file", "in1")]),
            (summaries, collect, [("out", "summaries")]),
            (collect, files, [("out_file", f"in{n_scans + 1}")]),
            (files, output, [("out", "out_files")]),
        ]
    )
    if cfg.scan.classical:
        classical = _function_node(
            run_classical_scan,
            ["laser", "grid", "geometry", "detector", "scan"],
            ["out_file", "summary"],
            "ClassicalScan",
            laser=_section(cfg, "laser"),
            grid=_section(cfg, "grid"),
            geometry=_section(cfg, "geometry"),
            detector=_section(cfg, "detector"),
            scan=_section(cfg, "scan"),
        )
        pipe.connect(
            [
                (classical, summaries, [("summary", "in2")]),
                (classical, files, [("out_file", "in2")]),
            ]
        )
    return pipe


def create_gvd_slope_pipeline(cfg):
    """
    Create the GVD-slope workflow: one classical dispersion scan per
    grating shift (MapNode), then a linear fit of the maxima.
    """
    pipe = pe.Workflow(name="gvd_slope")
    shifts = list(cfg.gvd.shifts)
    scans = pe.MapNode(
        interface=niu.Function(
            input_names=[
                "shift",
                "laser",
                "grid",
                "geometry",
                "detector",
                "scan",
                "gvd",
            ],
            output_names=["out_file", "maximum"],
            function=run_grating_scan,
        ),
        iterfield=["shift"],
        name="GratingScan",
    )
    scans.inputs.shift = shifts
    scans.inputs.laser = _section(cfg, "laser")
    scans.inputs.grid = _section(cfg, "grid")
    scans.inputs.geometry = _section(cfg, "geometry")
    scans.inputs.detector = _section(cfg, "detector")
    scans.inputs.scan = _section(cfg, "scan")
    scans.inputs.gvd = _section(cfg, "gvd")

    fit = _function_node(
        run_gvd_fit,
        ["shifts", "maxima", "geometry", "gvd"],
        ["out_file"],
        "FitSlope",
        shifts=shifts,
        geometry=_section(cfg, "geometry"),
        gvd=_section(cfg, "gvd"),
    )
    merge = pe.Node(niu.Merge(2, ravel_inputs=True), name="MergeOutputs")
    output = _output_node(["out_files"])
    pipe.connect(
        [
            (scans, fit, [("maximum", "maxima")]),
            (scans, merge, [("out_file", "in1")]),
            (fit, merge, [("out_file", "in2")]),
            (merge, output, [("out", "out_files")]),
        ]
    )
    return pipe


def create_iac_pipeline(cfg):
    """Create the interferometric autocorrelation workflow."""
    pipe = pe.Workflow(name="iac")
    iac = _function_node(
        run_iac,
        ["spdc", "grid", "geometry", "detector", "iac", "seed"],
        ["out_file"],
        "IacScan",
        spdc=_section(cfg, "spdc"),
        grid=_section(cfg, "grid"),
        geometry=_section(cfg, "geometry"),
        detector=_section(cfg, "detector"),
        iac=_section(cfg, "iac"),
        seed=cfg.seed,
    )
    spectrogram = _function_node(
        run_spectrogram,
        ["iac_file", "iac", "pump_frequency"],
        ["out_files"],
        "Spectrogram",
        iac=_section(cfg, "iac"),
        pump_frequency=float(wavelength_to_omega(cfg.spdc.pump_wavelength)),
    )
    merge = pe.Node(niu.Merge(2, ravel_inputs=True), name="MergeOutputs")
    output = _output_node(["out_files"])
    pipe.connect(
        [
            (iac, spectrogram, [("out_file", "iac_file")]),
            (iac, merge, [("out_file", "in1")]),
            (spectrogram, merge, [("out_files", "in2")]),
            (merge, output, [("out", "out_files")]),
        ]
    )
    return pipe


def create_rates_pipeline(cfg):
    """Create the cross-section report workflow."""
    pipe = pe.Workflow(name="rates")
    rates = _function_node(
        run_rates,
        ["rates", "survey_count"],
        ["out_files"],
        "Rates",
        rates=_section(cfg, "rates"),
        survey_count=cfg.rates.survey_count,
    )
    output = _output_node(["out_files"])
    pipe.connect(rates, "out_files", output, "out_files")
    return pipe


def create_pulse_pipeline(cfg):
    """Create the compressor pulse-profile workflow, one node per shift."""
    pipe = pe.Workflow(name="pulse")
    pulse = pe.MapNode(
        interface=niu.Function(
            input_names=[
                "shift",
                "laser",
                "grid",
                "geometry",
                "orders",
            ],
            output_names=["out_file"],
            function=run_pulse,
        ),
        iterfield=["shift"],
        name="CompressorProfile",
    )
    pulse.inputs.shift = list(cfg.pulse.shifts)
    pulse.inputs.laser = _section(cfg, "laser")
    pulse.inputs.grid = _section(cfg, "grid")
    pulse.inputs.geometry = _section(cfg, "geometry")
    pulse.inputs.orders = cfg.pulse.orders
    output = _output_node(["out_files"])
    pipe.connect(pulse, "out_file", output, "out_files")
    return pipe


PIPELINES = {
    "spdc": create_spdc_pipeline,
    "calibrate": create_calibrate_pipeline,
    "resolution": create_resolution_pipeline,
    "dispersion-scan": create_dispersion_scan_pipeline,
    "gvd-slope": create_gvd_slope_pipeline,
    "iac": create_iac_pipeline,
    "rates": create_rates_pipeline,
    "pulse": create_pulse_pipeline,
}


def create_experiment_pipeline(cfg):
    """Workflow of the experiment named by ``cfg.experiment``."""
    return PIPELINES[cfg.experiment](cfg)

"""Callables wrapped by the nipype Function nodes of each experiment.

Every function imports what it needs, writes its tables into the node
working directory and returns absolute paths, so that nipype can run it
in a separate process and the DataSink can collect the outputs.
"""


def run_spdc(spdc, grid, jsa_count):
    """
    Simulate the down-conversion source.

    Writes the marginal of the reduced state, the joint spectral
    amplitude on a coarser grid and a summary of the source metrics.

    Args:
        spdc (dict): ``spdc`` configuration section.
        grid (dict): ``grid`` configuration section.
        jsa_count (int): Samples per axis of the joint spectral amplitude.

    Returns:
        list: Paths of the written tables.
    """
    import os
    import numpy as np
    from etpype.nodes.source import (
        biphoton_effective,
        biphoton_reduced,
        flux_metrics,
        jsa_full,
        marginal_fwhm_nm,
        pump_tune_temperature,
    )
    from etpype.nodes.utils import build_grid, build_source
    from etpype.utils.io import write_summary, write_table
    from etpype.utils.units import omega_to_wavelength

    params = build_source(spdc)
    center = 2 * params.pump_wavelength
    state_grid = build_grid(center, grid)
    reduced = biphoton_reduced(params, state_grid)
    effective = biphoton_effective(params, state_grid)

    marginal = write_table(
        os.path.join(os.getcwd(), "marginal.csv"),
        {
            "omega": state_grid.omega,
            "wavelength": omega_to_wavelength(reduced.signal_frequency),
            "marginal": np.abs(reduced.psi) ** 2,
            "effective": np.abs(effective.psi) ** 2,
        },
        ["rad/fs", "nm", "fs", "fs"],
    )

    jsa_grid = build_grid(center, dict(grid, count=jsa_count))
    jsa = jsa_full(
        spdc["pump_linewidth"],
        params.phase_matching,
        jsa_grid,
        state=biphoton_reduced(params, jsa_grid),
    )
    omega_s, omega_i = np.meshgrid(
        jsa_grid.omega, jsa_grid.omega, indexing="ij"
    )
    jsa_file = write_table(
        os.path.join(os.getcwd(), "jsa.csv"),
        {
            "omega_signal": omega_s.ravel(),
            "omega_idler": omega_i.ravel(),
            "magnitude": np.abs(jsa.amplitude).ravel(),
        },
        ["rad/fs", "rad/fs", ""],
        meta={"pump_linewidth": spdc["pump_linewidth"]},
    )

    metrics = flux_metrics(
        params.down_converted_power, center, params.marginal_fwhm
    )
    rows = [
        ("marginal_fwhm", marginal_fwhm_nm(reduced), "nm"),
        ("effective_fwhm", marginal_fwhm_nm(effective), "nm"),
        ("pair_rate", params.effective_pair_rate, "Hz"),
        ("flux", metrics["flux"], "1/s"),
        ("mode_density", metrics["mode_density"], ""),
        ("pump_wavelength", params.pump_wavelength, "nm"),
        (
            "pump_wavelength_tuned",
            pump_tune_temperature(spdc["temperature_offset"], params),
            "nm",
        ),
    ]
    summary = write_summary(os.path.join(os.getcwd(), "spdc.csv"), rows)

    return [marginal, jsa_file, summary]


def run_calibrate(geometry, calibration, spdc, grid, detector, seed=None):
    """
    Calibrate the SLM pixel map and the detection scale κ.

    The pixel map is fitted to measured (pixel, wavelength) peaks read
    from ``calibration.peaks_file``, or to peaks synthesised from the
    nominal geometry with Gaussian wavelength noise.

    Returns:
        list: Paths of the pixel map and the calibration summary.
    """
    import os
    from dataclasses import replace
    import numpy as np
    from etpype.nodes.detector import calibrate_kappa
    from etpype.nodes.optics import geometry_summary
    from etpype.nodes.shaper import fit_pixel_map, pixel_map
    from etpype.nodes.utils import (
        build_detector,
        build_geometry,
        build_state,
    )
    from etpype.utils.errors import ConfigurationError
    from etpype.utils.io import read_table, write_summary, write_table

    geom = build_geometry(geometry)
    nominal = pixel_map(geom)
    if calibration["peaks_file"] is not None:
        df, _, _ = read_table(calibration["peaks_file"])
        peaks = df[["pixel", "wavelength"]].to_numpy()
    else:
        pixels = np.asarray(calibration["peak_pixels"], dtype=int)
        wavelengths = nominal[pixels - 1]
        if calibration["noise"] > 0:
            if seed is None:
                raise ConfigurationError(
                    "A seed is required for noisy calibration peaks."
                )
            rng = np.random.default_rng(seed)
            wavelengths = wavelengths + rng.normal(
                0.0, calibration["noise"], wavelengths.size
            )
        peaks = np.column_stack([pixels, wavelengths])

    fitted, result = fit_pixel_map(peaks, geom)
    fitted_geom = replace(geom, **fitted)
    map_file = write_table(
        os.path.join(os.getcwd(), "pixel_map.csv"),
        {
            "pixel": geom.pixels,
            "nominal": nominal,
            "fitted": pixel_map(fitted_geom),
        },
        ["", "nm", "nm"],
    )

    state = build_state(spdc, grid)
    kappa = calibrate_kappa(
        state, build_detector(detector), detector["target_rate"]
    )
    fit = result.summary("fit_")
    fit.pop("fit_model")
    rows = [(k, v, "") for k, v in fit.items()]
    summary = geometry_summary(geom, geometry["collimation_focal_length"])
    units = {
        "gamma": "fs/um",
        "diffraction_angle": "deg",
        "frequency_step": "rad/fs",
        "wavelength_step": "nm",
        "gvd_per_shift": "fs^2/mm",
    }
    rows += [(k, v, units.get(k, "")) for k, v in summary.items()]
    rows.append(("kappa", kappa, ""))
    calib_file = write_summary(
        os.path.join(os.getcwd(), "calibration.csv"),
        rows,
        meta={"peaks": len(peaks)},
    )
    return [map_file, calib_file]


def run_resolution(geometry, psf_factor, pixels, points):
    """
    Spectrum transmitted by a window of open pixels.

    Args:
        geometry (dict): ``geometry`` configuration section.
        psf_factor (float): Factor applied to the imaging PSF (9 for the
            prism compressor).
        pixels (int): Number of open pixels.
        points (int): Frequency samples of the spectrum.

    Returns:
        tuple: (path of the spectrum table, fitted FWHM in rad/fs)
    """
    import os
    from etpype.nodes.analysis import resolution_spectrum
    from etpype.nodes.utils import build_geometry
    from etpype.utils.io import write_table

    geom = build_geometry(geometry, psf_factor)
    res = resolution_spectrum(geom, pixels=pixels, points=points)
    meta = res["fit"].summary("fit_")
    meta["fwhm"] = res["fwhm"]
    meta["psf_factor"] = psf_factor
    out_file = write_table(
        os.path.join(os.getcwd(), f"resolution_psf-{psf_factor:g}.csv"),
        {
            "omega": res["omega"],
            "transmission": res["transmission"],
            "fit": res["fit"](res["omega"]),
        },
        ["rad/fs", "", ""],
        meta=meta,
    )
    return out_file, res["fwhm"]


def run_resolution_summary(psf_factors, widths):
    """Tabulate the transmitted FWHM per PSF and the ratio to the first."""
    import os
    from etpype.utils.io import write_table

    return write_table(
        os.path.join(os.getcwd(), "resolution.csv"),
        {
            "psf_factor": list(psf_factors),
            "fwhm": list(widths),
            "ratio": [w / widths[0] for w in widths],
        },
        ["", "rad/fs", ""],
    )


def run_quantum_scan(
    spdc, grid, geometry, detector, scan, seed=None
):
    """
    Coincidence rate of the biphoton state versus the SLM dispersion.

    κ is calibrated so that the compensated state is detected at
    ``detector.target_rate`` unless ``detector.kappa`` is set.

    Returns:
        tuple: (path of the scan table, fit summary dict)
    """
    import os
    from etpype.nodes.analysis import dispersion_scan
    from etpype.nodes.detector import calibrate_kappa
    from etpype.nodes.shaper import (
        apply_transfer_biphoton,
        quadratic_transfer,
        shape_biphoton,
    )
    from etpype.nodes.utils import (
        build_detector,
        build_geometry,
        build_mask,
        build_state,
        linspace_spec,
    )
    from etpype.utils.io import write_table

    geom = build_geometry(geometry)
    base_mask = build_mask(geometry, geom)
    state = build_state(spdc, grid)
    setup_c2 = scan["setup_c2"]
    kappa = detector["kappa"]
    if kappa is None:
        center = geom.center_frequency
        compensated = shape_biphoton(
            apply_transfer_biphoton(
                state, lambda w: quadratic_transfer(w, setup_c2, center)
            ),
            "quadratic",
            {"c2": -setup_c2},
            geom,
            scan["shaper"],
            base_mask,
        )
        kappa = calibrate_kappa(
            compensated, build_detector(detector), detector["target_rate"]
        )
    det = build_detector(detector, kappa)
    result = dispersion_scan(
        state,
        linspace_spec(scan),
        det,
        geom,
        shaper=scan["shaper"],
        setup_c2=setup_c2,
        sample=detector["sample"],
        seed=seed,
        base_mask=base_mask,
    )
    summary = dict(result.fit.summary("fit_"), **result.meta)
    summary["kappa"] = kappa
    columns, units = result.columns()
    out_file = write_table(
        os.path.join(os.getcwd(), "dispersion_quantum.csv"),
        columns,
        units,
        meta=summary,
    )
    return out_file, dict(summary, source="quantum")


def run_classical_scan(laser, grid, geometry, detector, scan):
    """
    Photodiode signal of the up-converted pulse versus the SLM dispersion.

    Returns:
        tuple: (path of the scan table, fit summary dict)
    """
    import os
    from etpype.nodes.analysis import dispersion_scan
    from etpype.nodes.utils import (
        build_detector,
        build_field,
        build_geometry,
        build_mask,
        linspace_spec,
    )
    from etpype.utils.io import write_table

    geom = build_geometry(geometry)
    result = dispersion_scan(
        build_field(laser, grid),
        linspace_spec(scan),
        build_detector(detector),
        geom,
        shaper=scan["shaper"],
        setup_c2=scan["setup_c2"],
        base_mask=build_mask(geometry, geom),
    )
    summary = dict(result.fit.summary("fit_"), **result.meta)
    columns, units = result.columns()
    out_file = write_table(
        os.path.join(os.getcwd(), "dispersion_classical.csv"),
        columns,
        units,
        meta=summary,
    )
    return out_file, dict(summary, source="classical")


def run_scan_summary(summaries):
    """Collect the fit summaries of the dispersion scans in one table."""
    import os
    import numpy as np
    from etpype.utils.io import write_table

    rows = {
        "source": [],
        "model": [],
        "center": [],
        "center_err": [],
        "width": [],
        "width_err": [],
        "fwhm": [],
        "residual_rms": [],
    }
    for s in summaries:
        width = "fit_sigma" if s["fit_model"] == "gaussian" else "fit_gamma"
        rows["source"].append(s["source"])
        rows["model"].append(s["fit_model"])
        rows["center"].append(s["fit_center"])
        rows["center_err"].append(s["fit_center_err"])
        rows["width"].append(s[width])
        rows["width_err"].append(s[f"{width}_err"])
        rows["fwhm"].append(s.get("fwhm", np.nan))
        rows["residual_rms"].append(s["fit_residual_rms"])
    return write_table(
        os.path.join(os.getcwd(), "fits.csv"),
        rows,
        ["", "", "fs^2", "fs^2", "fs^2", "fs^2", "fs^2", ""],
    )


def run_grating_scan(
    shift, laser, grid, geometry, detector, scan, gvd
):
    """
    Dispersion scan of the classical pulse at one grating shift.

    Returns:
        tuple: (path of the scan table, c₂′ of the maximum in fs²)
    """
    import os
    from etpype.nodes.analysis import grating_scan
    from etpype.nodes.utils import (
        build_detector,
        build_field,
        build_geometry,
        build_mask,
        linspace_spec,
    )
    from etpype.utils.io import write_table

    geom = build_geometry(geometry)
    maximum, result = grating_scan(
        shift,
        linspace_spec(scan),
        build_field(laser, grid),
        build_detector(detector),
        geom,
        shaper=scan["shaper"],
        gvd_per_mm=gvd["gvd_per_mm"],
        window=gvd["window"],
        base_mask=build_mask(geometry, geom),
    )
    columns, units = result.columns()
    out_file = write_table(
        os.path.join(os.getcwd(), f"grating_scan_g{shift:+.3f}.csv"),
        columns,
        units,
        meta=dict(result.fit.summary("fit_"), **result.meta),
    )
    return out_file, maximum


def run_gvd_fit(shifts, maxima, geometry, gvd):
    """
    Linear fit of the scan maxima versus the grating shift.

    Returns:
        str: Path of the table of maxima, with the slope as metadata.
    """
    import os
    from etpype.nodes.analysis import fit_gvd_slope
    from etpype.nodes.optics import gvd_per_shift
    from etpype.nodes.utils import build_geometry
    from etpype.utils.io import write_table

    slope, result = fit_gvd_slope(shifts, maxima)
    model = gvd["gvd_per_mm"]
    if model is None:
        model = gvd_per_shift(build_geometry(geometry))
    meta = result.summary("fit_")
    meta.update(
        {"gvd_slope": slope, "gvd_slope_err": result.errors["slope"]}
    )
    meta["model_gvd_slope"] = model
    meta["relative_error"] = (slope - model) / model
    out_file = write_table(
        os.path.join(os.getcwd(), "gvd_slope.csv"),
        {"shift": list(shifts), "maximum": list(maxima)},
        ["mm", "fs^2"],
        meta=meta,
    )
    return out_file


def run_iac(spdc, grid, geometry, detector, iac, seed=None):
    """
    Interferometric autocorrelation of the biphoton state.

    Returns:
        str: Path of the scan table.
    """
    import os
    from etpype.nodes.analysis import iac_scan, visibility
    from etpype.nodes.detector import calibrate_kappa
    from etpype.nodes.shaper import shape_biphoton
    from etpype.nodes.utils import (
        build_detector,
        build_geometry,
        build_mask,
        build_state,
        linspace_spec,
    )
    from etpype.utils.io import write_table

    geom = build_geometry(geometry)
    base_mask = build_mask(geometry, geom)
    state = build_state(spdc, grid)
    kappa = detector["kappa"]
    if kappa is None:
        zero_delay = shape_biphoton(
            state, "iac", {"tau": 0.0}, geom, iac["shaper"], base_mask
        )
        kappa = calibrate_kappa(
            zero_delay, build_detector(detector), detector["target_rate"]
        )
    result = iac_scan(
        state,
        linspace_spec(iac),
        build_detector(detector, kappa),
        geom,
        shaper=iac["shaper"],
        sample=detector["sample"],
        seed=seed,
        base_mask=base_mask,
    )
    columns, units = result.columns()
    out_file = write_table(
        os.path.join(os.getcwd(), "iac.csv"),
        columns,
        units,
        meta={"kappa": kappa, "visibility": visibility(result.rate)},
    )
    return out_file


def run_spectrogram(iac_file, iac, pump_frequency):
    """
    Sliding-window Fourier magnitude of an autocorrelation scan.

    Sampled counts are analysed when present, the expected rate
    otherwise.

    Returns:
        list: Paths of the spectrogram and ridge tables.
    """
    import os
    import numpy as np
    from etpype.nodes.analysis import spectrogram, spectrogram_ridges
    from etpype.utils.io import read_table, write_table

    df, _, _ = read_table(iac_file)
    signal = df["counts"] if "counts" in df else df["rate"]
    spec = spectrogram(
        df["tau"].to_numpy(),
        signal.to_numpy(dtype=float),
        window=iac["window"],
        log_scale=iac["log_scale"],
    )
    time, omega = np.meshgrid(spec["time"], spec["omega"], indexing="ij")
    spec_file = write_table(
        os.path.join(os.getcwd(), "spectrogram.csv"),
        {
            "tau": time.ravel(),
            "omega": omega.ravel(),
            "magnitude": spec["magnitude"].ravel(),
        },
        ["fs", "rad/fs", "log10" if iac["log_scale"] else ""],
        meta={"window": iac["window"]},
    )
    ridges = spectrogram_ridges(spec, threshold=iac["threshold"])
    ridge_file = write_table(
        os.path.join(os.getcwd(), "ridges.csv"),
        {
            "omega": ridges,
            "ratio_to_pump": [r / pump_frequency for r in ridges],
        },
        ["rad/fs", ""],
    )
    return [spec_file, ridge_file]


def run_rates(rates, survey_count):
    """
    Cross-section report and σ_e survey.

    Returns:
        list: Paths of the report table, its text form and the survey.
    """
    import os
    from etpype.nodes.rates import rates_report, sigma_e_survey
    from etpype.utils.config import rates_params
    from etpype.utils.io import write_table
    from etpype.utils.units import Q_

    params, provenance = rates_params(rates)
    columns, text = rates_report(params, provenance)
    report = write_table(
        os.path.join(os.getcwd(), "rates.csv"),
        columns,
        ["", "", "", ""],
    )
    text_file = os.path.join(os.getcwd(), "rates.txt")
    with open(text_file, "w", encoding="utf-8") as f:
        f.write(text + "\n")

    area = Q_(params.entanglement_size, "um") ** 2
    survey = sigma_e_survey(
        area.to("cm**2").magnitude,
        Q_(params.entanglement_time, "fs").to("s").magnitude,
        count=survey_count,
    )
    survey_file = write_table(
        os.path.join(os.getcwd(), "sigma_e_survey.csv"),
        survey,
        ["cm**4*s", "cm**2", "1/(s*cm**2)"],
    )
    return [report, text_file, survey_file]


def run_pulse(shift, laser, grid, geometry, orders):
    """
    Temporal intensity of the pulse after the compressor at one shift.

    Returns:
        str: Path of the profile table.
    """
    import os
    from etpype.nodes.optics import compressor_profile, setup_phase
    from etpype.nodes.spectral import fwhm
    from etpype.nodes.utils import build_field, build_geometry
    from etpype.utils.errors import RangeError
    from etpype.utils.io import write_table

    field = build_field(laser, grid)
    geom = build_geometry(geometry)
    t, intensity = compressor_profile(field, shift, geom, orders=orders)
    state = setup_phase(shift, geom, field.grid, orders=orders)
    try:
        duration = fwhm(t, intensity)
    except RangeError:
        duration = float("nan")
    meta = {f"c{k}": c for k, c in enumerate(state.coefficients)}
    meta.update({"shift": shift, "duration_fwhm": duration})
    out_file = write_table(
        os.path.join(os.getcwd(), f"pulse_g{shift:+.3f}.csv"),
        {"t": t, "intensity": intensity},
        ["fs", "1/fs"],
        meta=meta,
    )
    return out_file

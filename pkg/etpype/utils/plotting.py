"""SVG rendering of result tables."""

import fnmatch
import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "etpype"
import matplotlib.pyplot as plt  # noqa: E402

from etpype.utils.io import read_table  # noqa: E402


def render_svg(table, x, y, path=None, logy=False, title=None):
    """Plot columns `y` against `x` of a CSV table and save it as SVG.

    Args:
        table (str): Table written by :func:`etpype.utils.io.write_table`.
        x (str): Column used as abscissa.
        y (str or list): Column(s) to plot.
        path (str, optional): Output path, defaults to the table path
            with an ``.svg`` suffix.
        logy (bool): Logarithmic ordinate.
        title (str, optional): Figure title.

    Returns:
        str: Path to the SVG file.
    """
    df, units, _ = read_table(table)
    columns = [y] if isinstance(y, str) else list(y)
    if path is None:
        path = os.path.splitext(table)[0] + ".svg"

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in columns:
        ax.plot(df[x], df[name], label=name)
    ax.set_xlabel(f"{x} [{units[x]}]" if units[x] else x)
    ax.set_ylabel(", ".join(columns))
    if logy:
        ax.set_yscale("log")
    if len(columns) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    # fixed metadata keeps the file byte-identical between runs
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# Table name pattern: (abscissa, plotted columns)
PLOT_SPECS = {
    "marginal.csv": ("wavelength", ["marginal", "effective"]),
    "resolution_psf-*.csv": ("omega", ["transmission", "fit"]),
    "dispersion_*.csv": ("c2", ["rate"]),
    "grating_scan_g*.csv": ("c2", ["rate"]),
    "gvd_slope.csv": ("shift", ["maximum"]),
    "iac.csv": ("tau", ["rate"]),
    "pulse_g*.csv": ("t", ["intensity"]),
}


def render_plots(out_dir):
    """Render an SVG next to every result table listed in `PLOT_SPECS`.

    Returns:
        list: Paths of the rendered files.
    """
    rendered = []
    for name in sorted(os.listdir(out_dir)):
        for pattern, (x, y) in PLOT_SPECS.items():
            if fnmatch.fnmatch(name, pattern):
                rendered.append(render_svg(os.path.join(out_dir, name), x, y))
                break
    return rendered

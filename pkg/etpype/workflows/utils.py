import argparse
import os

import hydra
from hydra.errors import HydraException
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException
from yaml import YAMLError

from etpype.definitions import VALID_EXPERIMENTS
from etpype.utils.errors import ConfigurationError, EtpypeError

CONFIG_DIR = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "..", "..", "configs"
)


# (flags, argparse keywords) shared by every subcommand
COMMON_ARGUMENTS = [
    (
        ["--config"],
        dict(
            dest="cfg_path",
            default=None,
            help="Scenario yaml file (default: configs/<experiment>.yaml).",
        ),
    ),
    (
        ["--out"],
        dict(
            default="results",
            help="Results directory; tables go to <out>/<experiment>.",
        ),
    ),
    (
        ["--nipype_dir"],
        dict(
            default=None,
            help="Nipype working directory (default: <out>/nipype).",
        ),
    ),
    (
        ["--seed"],
        dict(
            type=int,
            default=None,
            help="Seed of the count sampling; overrides the scenario.",
        ),
    ),
    (
        ["--nprocs"],
        dict(type=int, default=1, help="Processes given to MultiProc."),
    ),
    (
        ["--quiet", "-q"],
        dict(action="store_true", help="Print errors only."),
    ),
    (
        ["--debug"],
        dict(action="store_true", help="Log at DEBUG level."),
    ),
    (
        ["--verbose", "-v"],
        dict(
            action="store_true",
            help=(
                "Echo the run log (INFO, or DEBUG with --debug) on the "
                "console. The full log is kept in "
                "<nipype_dir>/logs/<timestamp>/pypeline.log."
            ),
        ),
    ),
]


def add_common_arguments(parser):
    """Options accepted by every subcommand."""
    for flags, kwargs in COMMON_ARGUMENTS:
        parser.add_argument(*flags, **kwargs)
    return parser


def get_default_parser(desc):
    """Parser with one subcommand per experiment and ``run <scenario>``."""
    parser = argparse.ArgumentParser(prog="etpype", description=desc)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for experiment in VALID_EXPERIMENTS:
        sub = subparsers.add_parser(
            experiment, help=f"Run the {experiment} experiment."
        )
        add_common_arguments(sub)
    run = subparsers.add_parser(
        "run", help="Run the experiment named in a scenario file."
    )
    run.add_argument("scenario", type=str, help="Scenario yaml file.")
    add_common_arguments(run)
    return parser


def default_scenario(experiment):
    """Path of the scenario shipped for an experiment."""
    name = experiment.replace("-", "_") + ".yaml"
    return os.path.abspath(os.path.join(CONFIG_DIR, name))


def init_and_load_cfg(cfg_path, quiet=False):
    """
    Initialize hydra and compose a scenario file.
    Args:
        cfg_path (str): Path to the scenario file.
        quiet (bool): Do not echo the composed configuration.
    Returns:
        cfg: Composed configuration.
    """
    if not os.path.isfile(cfg_path):
        raise FileNotFoundError(f"file not found: {cfg_path}")
    # hydra resolves config_path relative to this file
    current_dir = os.path.dirname(os.path.abspath(__file__))
    cfg_path = os.path.abspath(cfg_path)
    cfg_path = os.path.relpath(cfg_path, current_dir)
    cfg_dir = os.path.dirname(cfg_path)
    cfg_file = os.path.basename(cfg_path)

    try:
        with hydra.initialize(config_path=cfg_dir, version_base="1.2"):
            cfg = hydra.compose(config_name=cfg_file)
    except (HydraException, OmegaConfBaseException, YAMLError) as e:
        raise ConfigurationError(f"Cannot load {cfg_file}: {e}")
    if not quiet:
        print(OmegaConf.to_yaml(cfg))
    return cfg


def check_and_update_paths(out_dir, nipype_dir, experiment):
    """
    Create the output and nipype directories.
    Args:
        out_dir (str): Path to the output directory.
        nipype_dir (str): Path to the nipype directory, defaults to
            `out_dir`.
        experiment (str): Name of the experiment.
    Returns:
        tuple: Updated paths for out_dir and nipype_dir.
    """
    if nipype_dir is None:
        nipype_dir = out_dir

    out_dir = os.path.join(os.path.abspath(out_dir), experiment)
    os.makedirs(out_dir, exist_ok=True)

    # working directory
    nipype_dir = os.path.join(os.path.abspath(nipype_dir), "nipype")
    os.makedirs(nipype_dir, exist_ok=True)

    return out_dir, nipype_dir


def check_valid_experiment(cfg, experiment=None):
    """
    Check that the scenario describes the requested experiment.
    Args:
        cfg: Validated scenario.
        experiment (str, optional): Experiment requested on the command
            line; None accepts the one named in the scenario.
    """
    if cfg.experiment not in VALID_EXPERIMENTS:
        raise ConfigurationError(
            f"Invalid experiment: {cfg.experiment}. "
            f"Please choose one of {VALID_EXPERIMENTS}"
        )
    if experiment is not None and cfg.experiment != experiment:
        raise ConfigurationError(
            f"Scenario describes the '{cfg.experiment}' experiment, "
            f"not '{experiment}'."
        )


def preflight(cfg):
    """
    Build the objects every node will build, in the main process.

    Grid, geometry, mask file and detector errors are raised here with
    their own type instead of surfacing as node crashes.
    """
    from etpype.nodes.utils import (
        build_detector,
        build_field,
        build_geometry,
        build_mask,
        build_state,
    )

    sections = {
        name: OmegaConf.to_container(cfg[name], resolve=True)
        for name in ("spdc", "laser", "geometry", "detector", "grid")
    }
    try:
        geom = build_geometry(sections["geometry"])
        build_mask(sections["geometry"], geom)
        build_detector(sections["detector"])
        if cfg.experiment in ("spdc", "calibrate", "dispersion-scan", "iac"):
            build_state(sections["spdc"], sections["grid"])
        if cfg.experiment in ("dispersion-scan", "gvd-slope", "pulse"):
            build_field(sections["laser"], sections["grid"])
    except ConfigurationError:
        raise
    except EtpypeError as e:
        raise ConfigurationError(f"Invalid scenario: {e}")

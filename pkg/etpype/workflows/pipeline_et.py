import logging
import os
import sys

import nipype.interfaces.io as nio
import nipype.pipeline.engine as pe

from etpype.pipelines.experiments import create_experiment_pipeline
from etpype.utils.config import validate_scenario
from etpype.utils.errors import EtpypeError, exit_code_for
from etpype.utils.io import create_manifest
from etpype.utils.logging import crash_messages, setup_logging, status_line
from etpype.utils.plotting import render_plots
from etpype.workflows.utils import (
    check_and_update_paths,
    check_valid_experiment,
    default_scenario,
    get_default_parser,
    init_and_load_cfg,
    preflight,
)

log = logging.getLogger("nipype.workflow")


class NodeFailureError(EtpypeError):
    """An experiment node crashed; the message carries its error."""


def create_experiment_workflow(
    cfg_path,
    out_dir,
    nipype_dir=None,
    experiment=None,
    seed=None,
    nprocs=1,
    quiet=False,
    debug=False,
    verbose=False,
):
    """
    Instantiates and runs the workflow of one experiment.

    Args:
        cfg_path (str):
            Path to a hydra scenario file (YAML).
        out_dir (str):
            Path to the output directory (will be created if not already
            existing). Results are written to <out_dir>/<experiment>.
        nipype_dir (str, optional):
            Path to the nipype directory.
        experiment (str, optional):
            Experiment requested on the command line; the scenario must
            describe it.
        seed (int, optional):
            Seed overriding the scenario seed.
        nprocs (int):
            Number of processes to be launched by MultiProc.
        quiet (bool):
            Only report errors on the console.
        debug (bool):
            Whether to enable debug mode.
        verbose (bool):
            Whether to enable verbose mode.

    Returns:
        str: Path to the manifest of the outputs.
    """
    cfg = init_and_load_cfg(cfg_path, quiet=quiet)
    cfg = validate_scenario(cfg, seed=seed)
    check_valid_experiment(cfg, experiment)
    preflight(cfg)

    out_dir, nipype_dir = check_and_update_paths(
        out_dir, nipype_dir, cfg.experiment
    )
    log_dir = setup_logging(
        base_dir=nipype_dir,
        debug=debug,
        verbose=verbose,
        capture_prints=True,
    )

    name = cfg.experiment.replace("-", "_")
    main_workflow = pe.Workflow(name=name)
    main_workflow.base_dir = nipype_dir
    experiment_pipe = create_experiment_pipeline(cfg)

    datasink = pe.Node(
        nio.DataSink(base_directory=out_dir, parameterization=False),
        name="datasink",
    )
    main_workflow.connect(
        experiment_pipe, "outputnode.out_files", datasink, "@results"
    )

    if cfg.save_graph:
        main_workflow.write_graph(
            graph2use="colored",
            format="png",
            simple_form=True,
        )

    plugin_args = {"n_procs": nprocs}
    if not quiet:
        plugin_args["status_callback"] = status_line
    try:
        main_workflow.run(plugin="MultiProc", plugin_args=plugin_args)
    except RuntimeError:
        messages = crash_messages(log_dir) or [
            f"workflow {name} failed, see {log_dir}"
        ]
        error = NodeFailureError("\n".join(messages))
        if any("ConfigurationError" in m for m in messages):
            error.exit_code = 2
        raise error

    if cfg.plots:
        render_plots(out_dir)
    manifest = create_manifest(
        out_dir, cfg.experiment, cfg_path=cfg_path, cfg=cfg
    )
    log.info(f"Outputs of {cfg.experiment} written to {out_dir}.")
    if cfg.experiment == "rates" and not quiet:
        with open(os.path.join(out_dir, "rates.txt"), encoding="utf-8") as f:
            sys.__stdout__.write(f.read())
        sys.__stdout__.flush()
    return manifest


def main(argv=None):
    # Command line parser
    parser = get_default_parser(
        "Simulate entangled two-photon spectroscopy experiments -- "
        "source, pulse shaper, up-conversion detection and analysis."
    )
    args = parser.parse_args(argv)

    if args.command == "run":
        cfg_path, experiment = args.scenario, None
    else:
        cfg_path = args.cfg_path or default_scenario(args.command)
        experiment = args.command

    streams = (sys.stdout, sys.stderr, sys.excepthook)
    try:
        create_experiment_workflow(
            cfg_path=cfg_path,
            out_dir=args.out,
            nipype_dir=args.nipype_dir,
            experiment=experiment,
            seed=args.seed,
            nprocs=args.nprocs,
            quiet=args.quiet,
            debug=args.debug,
            verbose=args.verbose,
        )
    except (EtpypeError, FileNotFoundError) as e:
        print(f"etpype: error: {e}", file=streams[1])
        return exit_code_for(e)
    finally:
        # setup_logging redirects the standard streams
        sys.stdout, sys.stderr, sys.excepthook = streams
    return 0


if __name__ == "__main__":
    sys.exit(main())

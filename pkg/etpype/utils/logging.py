"""Logging of the experiment runs.

Nipype writes the workflow log and the crash files of a run into
``<nipype_dir>/logs/<timestamp>/``. The console only shows one status line
per node and the errors, unless ``--verbose`` is given.
"""

import glob
import logging
import os
import re
import sys
import time

from nipype import config
from nipype import logging as nlogging

LOG_NAME = "pypeline.log"

_node_started = {}


class LineLogger:
    """File-like object logging every complete line written to it.

    The standard streams are replaced by two of these while a workflow
    runs, so that prints of the physics code end up in the run log.

    Args:
        logger (logging.Logger): Destination logger.
        level (int): Level of the logged lines.
    """

    def __init__(self, logger, level):
        self.logger = logger
        self.level = level
        self._pending = ""

    def write(self, text):
        if not text:
            return 0
        lines = (self._pending + text.replace("\r\n", "\n")).split("\n")
        self._pending = lines.pop()
        for line in lines:
            if line:
                self.logger.log(self.level, line)
        return len(text)

    def flush(self):
        if self._pending:
            self.logger.log(self.level, self._pending)
        self._pending = ""


def console_level(verbose=False, debug=False):
    """Console threshold: errors only, unless verbose."""
    if not verbose:
        return logging.ERROR
    return logging.DEBUG if debug else logging.INFO


def nipype_settings(log_dir, debug=False):
    """Nipype config sections sending logs and crash files to `log_dir`."""
    level = "DEBUG" if debug else "INFO"
    return {
        "logging": {
            "log_to_file": True,
            "log_directory": log_dir,
            "log_size": str(50 * 1024 * 1024),
            "log_rotate": "5",
            "workflow_level": level,
            "interface_level": level,
            "utils_level": level,
        },
        "execution": {
            "crashdump_dir": log_dir,
            "crashfile_format": "txt",
        },
    }


def _is_console(handler):
    return isinstance(handler, logging.StreamHandler) and not isinstance(
        handler, logging.FileHandler
    )


def setup_logging(base_dir, debug=False, verbose=False, capture_prints=True):
    """
    Route the logs of an experiment run.

    Args:
        base_dir (str): Nipype directory of the experiment.
        debug (bool): Log at DEBUG level to the run log.
        verbose (bool): Show INFO (DEBUG with `debug`) messages on the
            console instead of errors only.
        capture_prints (bool): Send stdout and stderr to the run log.

    Returns:
        str: Run directory holding the log file and the crash files.
    """
    log_dir = os.path.join(base_dir, "logs", time.strftime("%Y%m%d-%H%M%S"))
    os.makedirs(log_dir, exist_ok=True)
    log_file = os.path.join(log_dir, LOG_NAME)
    if os.path.exists(log_file):
        os.remove(log_file)

    config.update_config(nipype_settings(log_dir, debug))
    nlogging.update_logging(config)

    level = console_level(verbose, debug)
    for handler in logging.getLogger("nipype").handlers:
        if _is_console(handler):
            handler.setLevel(level)
            handler.setFormatter(logging.Formatter("%(message)s"))
            handler.stream = sys.__stdout__

    workflow_log = logging.getLogger("nipype.workflow")
    workflow_log.propagate = True
    if capture_prints:
        sys.stdout = LineLogger(workflow_log, logging.INFO)
        sys.stderr = LineLogger(workflow_log, logging.ERROR)
    # numpy RuntimeWarnings and fit warnings land in the run log
    logging.captureWarnings(True)

    def _log_uncaught(exc_type, exc, tb):
        workflow_log.error("Uncaught exception", exc_info=(exc_type, exc, tb))
        sys.__excepthook__(exc_type, exc, tb)

    sys.excepthook = _log_uncaught
    return log_dir


def _map_index(name):
    """Index of a MapNode sub-node, e.g. 2 for ``_GratingScan2``."""
    match = re.search(r"\._\w+?(\d+)$", name)
    return match.group(1) if match else None


def status_line(node, status, **_):
    """MultiProc status callback printing one line per node event."""
    name = getattr(node, "fullname", str(node))
    index = _map_index(name)
    label = name if index is None else f"{name} [{index}]"
    if status == "start":
        _node_started[name] = time.monotonic()
        line = f"▶ {label}"
    elif status == "end":
        started = _node_started.pop(name, time.monotonic())
        line = f"✔ {label} ({time.monotonic() - started:.1f}s)"
    elif status == "exception":
        line = f"✖ {label} failed, see the crash file of the run"
    else:
        return
    print(line, file=sys.__stdout__, flush=True)


def crash_messages(log_dir):
    """Last line of the traceback stored in each crash file of a run."""
    messages = []
    for path in sorted(glob.glob(os.path.join(log_dir, "crash-*.txt"))):
        with open(path, "r", encoding="utf-8", errors="replace") as f:
            lines = [line.strip() for line in f if line.strip()]
        errors = [
            line
            for line in lines
            if re.match(r"^[\w.]+(Error|Exception)\b", line)
        ]
        if errors:
            messages.append(errors[-1])
    return messages

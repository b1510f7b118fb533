import logging

import pytest

from etpype.utils.logging import (
    LineLogger,
    _map_index,
    console_level,
    crash_messages,
    nipype_settings,
)


def test_line_logger_is_line_buffered(caplog):
    logger = logging.getLogger("etpype.tests")
    stream = LineLogger(logger, logging.INFO)
    with caplog.at_level(logging.INFO, logger="etpype.tests"):
        stream.write("first line\nsecond ")
        stream.write("line\r\n")
        stream.write("tail")
        stream.flush()
    messages = [r.getMessage() for r in caplog.records]
    assert messages == ["first line", "second line", "tail"]


@pytest.mark.parametrize(
    "verbose, debug, level",
    [
        (False, False, logging.ERROR),
        (False, True, logging.ERROR),
        (True, False, logging.INFO),
        (True, True, logging.DEBUG),
    ],
)
def test_console_level(verbose, debug, level):
    assert console_level(verbose, debug) == level


def test_nipype_settings_point_to_run_dir(tmp_path):
    settings = nipype_settings(str(tmp_path), debug=True)
    assert settings["logging"]["log_directory"] == str(tmp_path)
    assert settings["execution"]["crashdump_dir"] == str(tmp_path)
    assert settings["logging"]["workflow_level"] == "DEBUG"
    assert nipype_settings("x")["logging"]["workflow_level"] == "INFO"


def test_map_index():
    assert _map_index("gvd_slope.GratingScan._GratingScan2") == "2"
    assert _map_index("gvd_slope.GvdFit") is None


def test_crash_messages(tmp_path):
    (tmp_path / "crash-20260101-node.txt").write_text(
        "Node: iac.IacScan\n"
        "Traceback (most recent call last):\n"
        '  File "analysis.py", line 1, in iac_scan\n'
        "etpype.utils.errors.AliasingError: Delay 2500.0 fs exceeds the "
        "aliasing limit\n"
    )
    (tmp_path / "notes.txt").write_text("ValueError: ignored\n")
    messages = crash_messages(str(tmp_path))
    assert messages == [
        "etpype.utils.errors.AliasingError: Delay 2500.0 fs exceeds the "
        "aliasing limit"
    ]

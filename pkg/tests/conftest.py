"""Suite-wide fixtures and the acceptance-criterion result reporter.

Tests in test_acceptance.py carry an `acceptance("<criterion>")` marker;
after each one runs, a single `ACCEPTANCE: <criterion>: PASS|FAIL` line is
written to the terminal so the gate can be read off the log directly.
"""

from __future__ import annotations

from pathlib import Path

import pytest

# nodeid -> extra note appended to that test's ACCEPTANCE line
ACCEPTANCE_NOTES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one acceptance-gate criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.passed:
        status = "PASS"
    elif report.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    line = f"ACCEPTANCE: {marker.args[0]}: {status}"
    note = ACCEPTANCE_NOTES.pop(item.nodeid, None)
    if note:
        line += f" [{note}]"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(line)
    else:
        print(line)


@pytest.fixture(scope="session")
def dsp_cfg():
    from tajweed.config import DspConfig

    return DspConfig()


@pytest.fixture(scope="session")
def scoring_checkpoint(tmp_path_factory) -> Path:
    """A saved random-init checkpoint shared by service and CLI tests."""
    from helpers import build_test_checkpoint

    path = tmp_path_factory.mktemp("ckpt") / "checkpoint.ckpt"
    build_test_checkpoint(path, seed=0)
    return path


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return Path(__file__).parent / "golden"

import json
import re
from pathlib import Path

import pytest

from analogest.bundled import load_bundled
from analogest.dataset import Dataset

ASSETS = Path(__file__).parent / "assets"

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    match = re.match(r"test_p(\d+)_(\w+)", name)
    if match is None:
        return
    label = f"P{int(match.group(1))} {match.group(2).replace('_', ' ')}"
    _acceptance_outcomes[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance_outcomes, key=lambda l: int(l.split()[0][1:])):
        terminalreporter.write_line(f"{label}: {_acceptance_outcomes[label]}")


@pytest.fixture(scope="session")
def toy4() -> Dataset:
    return load_bundled("toy4")


@pytest.fixture(scope="session")
def duplicates20() -> Dataset:
    return load_bundled("duplicates20")


@pytest.fixture(scope="session")
def synthetic40() -> Dataset:
    return load_bundled("synthetic40")


@pytest.fixture(scope="session")
def demo_mixed() -> Dataset:
    return load_bundled("demo_mixed")


@pytest.fixture(scope="session")
def toy4_trace() -> dict:
    return json.loads((ASSETS / "toy4_trace.json").read_text())

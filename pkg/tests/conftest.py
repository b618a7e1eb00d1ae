import sys

import numpy as np
import pytest

from corruptkit.harness.synthetic import make_corpus

TOY = [sys.executable, "-m", "corruptkit.toys"]

_acceptance = {}


@pytest.fixture(scope="session")
def natural_image():
    """256x256 crop of a natural photograph (scikit-image sample data)."""
    from skimage import data

    return np.ascontiguousarray(data.astronaut()[96:352, 128:384])


@pytest.fixture
def random_image():
    def make(h=64, w=64, seed=0):
        return np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)

    return make


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """20-image synthetic separable corpus; returns the manifest path."""
    return make_corpus(tmp_path_factory.mktemp("corpus"), n=20, seed=0)


def toy(role, *args):
    return TOY + [role, *map(str, args)]


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance[report.nodeid] = report.outcome
    elif "test_acceptance" in report.nodeid and report.failed:
        _acceptance[report.nodeid] = "error"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _acceptance.items():
        name = nodeid.split("::")[-1]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")

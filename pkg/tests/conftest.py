import warnings

import numpy as np
import pytest

from gmacsec import ensembles


def _data(name: str) -> str:
    import importlib.resources

    return str(importlib.resources.files("gmacsec").joinpath("data", name))


@pytest.fixture(scope="session")
def eqpow_ensemble():
    return ensembles.load_ensemble(_data("mother_eqpow.txt"))


@pytest.fixture(scope="session")
def user1_ensemble():
    return ensembles.load_ensemble(_data("mother_user1_highpow.txt"))


@pytest.fixture(scope="session")
def user2_ensemble():
    return ensembles.load_ensemble(_data("mother_user2_lowpow.txt"))


@pytest.fixture(scope="session")
def eqpow_pi():
    return ensembles.load_pi(_data("pi_eqpow_design.txt"))


@pytest.fixture(scope="session")
def user1_pi():
    return ensembles.load_pi(_data("pi_user1_highpow.txt"))


@pytest.fixture(scope="session")
def user2_pi():
    return ensembles.load_pi(_data("pi_user2_lowpow.txt"))


@pytest.fixture(scope="session")
def regular36():
    return ensembles.Ensemble({3: 1.0}, {6: 1.0})


@pytest.fixture(autouse=True)
def _quiet_degraded_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*degraded regime.*")
        yield


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "acceptance" in report.keywords:
                name = report.nodeid.split("::")[-1]
                verdict = "PASS" if status == "passed" else "FAIL"
                lines.append(f"{verdict}  {name}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

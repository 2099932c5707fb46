import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--measured-dataset",
        default=None,
        help="path to a converted measured dataset (CSI1 file with sidecar) for the optional tier",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    """Store (and print) one acceptance line; shown again in the terminal summary."""
    status = "PASS" if passed else "FAIL"
    if passed is None:
        status = "SKIP"
    line = f"criterion {number}: {status}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

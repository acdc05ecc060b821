import contextlib

import numpy as np
import pytest

from excitonic.medium import OpticalResponse, refractive_indices
from excitonic.reference import lossless_medium

ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record PASS/FAIL for one acceptance criterion and echo it."""
    try:
        yield
    except BaseException:
        ACCEPTANCE[number] = ("FAIL", title)
        print(f"ACCEPTANCE {number:2d} FAIL  {title}")
        raise
    ACCEPTANCE[number] = ("PASS", title)
    print(f"ACCEPTANCE {number:2d} PASS  {title}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        verdict, title = ACCEPTANCE[number]
        terminalreporter.write_line(f"ACCEPTANCE {number:2d} {verdict}  {title}")


@pytest.fixture
def medium():
    return lossless_medium()


@pytest.fixture
def real_resp():
    """Lossless response a little below the lower resonance."""
    p = lossless_medium()
    return refractive_indices(p.omega0 - 0.7, p)


@pytest.fixture
def unit_resp():
    # n1 = 1.5, n2 = 1.4 at unit wavelength: L0 = 10
    return OpticalResponse.from_indices(1.5, 1.4, 2 * np.pi)

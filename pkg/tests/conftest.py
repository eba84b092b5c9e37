import numpy as np
import pytest

from qbc5.adam import OptOptions, p_A
from qbc5.protocol import DEFAULT_FAMILY

# Filled in by test_acceptance.py; printed after the run.
ACCEPTANCE: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_report():
    """Full p_A search for the default family (shared: it takes ~20 s)."""
    return p_A(DEFAULT_FAMILY, OptOptions(seed=0))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

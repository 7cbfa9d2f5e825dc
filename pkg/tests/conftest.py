import logging

import numpy as np
import pytest

from gfm_poisson.cases import get_case


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cases():
    logging.getLogger("gfm_poisson").setLevel(logging.ERROR)
    return {k: get_case(k) for k in "ABCD"}


@pytest.fixture(autouse=True)
def _quiet_levelset_warnings():
    logging.getLogger("gfm_poisson.interface").setLevel(logging.ERROR)
    yield


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

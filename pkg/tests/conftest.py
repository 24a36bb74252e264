import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sytet_parallel4():
    from incompat_lab.jointmeas import Configuration
    from incompat_lab.observables import sytet
    from incompat_lab.sdp import assemble_threshold_sdp, solve

    return solve(assemble_threshold_sdp(sytet(), Configuration.parallel(4)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

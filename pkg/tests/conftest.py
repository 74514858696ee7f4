import re

import pytest

from robust4ws.model import generalized_plant, linearize, nigel_params
from robust4ws.uncertainty import (affine_decomposition, enumerate_vertices,
                                   reduce_to_single_steer)
from robust4ws.synthesis import (synthesize_pole_placement, synthesize_robust)


@pytest.fixture(scope="session")
def params():
    return nigel_params()


@pytest.fixture(scope="session")
def poly(params):
    return enumerate_vertices(affine_decomposition(params))


@pytest.fixture(scope="session")
def ack_poly(poly):
    return reduce_to_single_steer(poly)


@pytest.fixture(scope="session")
def robust_ctrl(poly):
    # shared across test modules: the synthesis solve is the expensive step
    return synthesize_robust(poly)


@pytest.fixture(scope="session")
def ack_ctrl(ack_poly):
    return synthesize_robust(ack_poly)


@pytest.fixture(scope="session")
def baseline_ctrl(params):
    return synthesize_pole_placement(generalized_plant(linearize(params)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # acceptance scoreboard: one line per end-to-end criterion
    verdicts = {}
    for status, ok in (("passed", True), ("failed", False)):
        for rep in terminalreporter.stats.get(status, []):
            m = re.search(r"test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m:
                verdicts[int(m.group(1))] = ok
    for n in sorted(verdicts):
        terminalreporter.write_line(
            f"CRITERION {n}: {'PASS' if verdicts[n] else 'FAIL'}")

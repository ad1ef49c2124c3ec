from __future__ import annotations

import numpy as np
import pytest

from finslerproj import metrics as M


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def catalog():
    return {
        "euclidean": M.euclidean(2),
        "hyperbolic": M.hyperbolic_half_plane(2),
        "sphere": M.sphere(2),
        "funk": M.funk(2),
        "ball": M.hyperbolic_ball(2),
        "randers": M.randers(2, lambda x: [[1.0, 0.0], [0.0, 1.0]], lambda x: [0.5, 0.0]),
    }


#: sample regions (centre, half-width) inside each chart
REGIONS = {
    "euclidean": ((0.0, 0.0), 0.5),
    "hyperbolic": ((0.0, 1.5), 0.5),
    "sphere": ((0.0, 0.0), 0.8),
    "funk": ((0.0, 0.0), 0.5),
    "ball": ((0.0, 0.0), 0.4),
    "randers": ((0.0, 0.0), 0.5),
}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

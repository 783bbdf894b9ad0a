import numpy as np
import pytest

from dimsynth.design import DesignLayout
from dimsynth.io import load_topology

CATALOG = ["1D-M10", "RSSR", "2D-M71", "2D-M645", "3D-M1", "3D-M2", "3D-M3", "3D-M4",
           "3D-M5", "3D-M6", "3D-M7", "3D-M8", "4D-M1", "planar-2R", "planar-5R"]
PARALLEL = ["1D-M10", "RSSR", "2D-M71", "planar-5R"]


@pytest.fixture(scope="session")
def topologies():
    return {name: load_topology(name) for name in CATALOG}


def random_configuration(t, rng, task_point=None):
    """Uniform draw from the design box, task point inside the cube too."""
    layout = DesignLayout.for_topology(t)
    a = rng.uniform(0, 10, 3) if task_point is None else np.asarray(task_point, dtype=float)
    return layout.unpack(layout.sample(rng), a)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

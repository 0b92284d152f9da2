import math

import numpy as np
import pytest

from calabipack.hypgeom import WeightedPacking
from calabipack.mesh import FIXTURES, load_fixture

SURFACES = {name: load_fixture(name) for name in FIXTURES}


@pytest.fixture(params=FIXTURES)
def surface(request):
    return SURFACES[request.param]


@pytest.fixture
def genus2():
    return SURFACES["genus2"]


@pytest.fixture
def tetrahedron():
    return SURFACES["tetrahedron"]


@pytest.fixture
def octahedron():
    return SURFACES["octahedron"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_packing(surface, rng, weighted=True, lo=0.05, hi=5.0):
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), surface.n_vertices))
    phi = rng.uniform(0, math.pi / 2, surface.n_edges) if weighted else None
    if weighted:
        # make sure some edges sit exactly at the orthogonal end of the range
        phi[rng.choice(surface.n_edges, size=max(1, surface.n_edges // 4), replace=False)] = math.pi / 2
    return WeightedPacking.from_radii(surface, r, phi)


_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    if rep.when == "setup" and rep.passed:
        return
    _ACCEPTANCE[number] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}")

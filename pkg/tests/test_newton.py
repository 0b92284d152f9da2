import numpy as np
import pytest

from calabipack.errors import DimensionMismatch, DomainError, NoConvergence
from calabipack.hypgeom import WeightedPacking, curvatures
from calabipack.newton import newton_solve
from conftest import SURFACES, random_packing
from oracles import random_negative_u


@pytest.fixture(scope="module")
def solution():
    return newton_solve(SURFACES["genus2"])


def test_zero_curvature_solution(solution):
    assert solution.residual < 1e-12
    assert np.max(np.abs(curvatures(solution.packing).K)) < 1e-12
    assert solution.iterations < 20
    # residual history decreases monotonically under the line search
    assert np.all(np.diff(solution.history) < 0)


def test_returns_immediately_at_solution(solution):
    again = newton_solve(SURFACES["genus2"], u_init=solution.u)
    assert again.iterations == 0
    assert np.array_equal(again.u, solution.u)


@pytest.mark.parametrize("seed", [10, 11, 12, 13])
def test_global_rigidity(solution, seed):
    rng = np.random.default_rng(seed)
    s = SURFACES["genus2"]
    other = newton_solve(s, u_init=random_negative_u(rng, s.n_vertices, lo=0.05, hi=8.0))
    assert np.max(np.abs(other.u - solution.u)) < 1e-6


def test_prescribed_curvature_recovers_packing(surface, rng):
    # rigidity: the curvature of a packing determines the packing, on every surface
    goal = random_packing(surface, rng, lo=0.2, hi=3.0)
    res = newton_solve(surface, goal.phi, target=curvatures(goal).K, tol=1e-11)
    assert np.allclose(res.packing.r, goal.r, rtol=1e-8)


def test_sphere_has_no_zero_curvature_packing(tetrahedron):
    with pytest.raises(NoConvergence) as exc:
        newton_solve(tetrahedron, max_iter=200)
    assert exc.value.residual > 1.0


def test_torus_residual_only_vanishes_as_radii_collapse():
    # on a torus sum K = Area > 0, so K = 0 is only reached in the Euclidean limit r -> 0
    res = newton_solve(SURFACES["torus"], max_iter=200)
    geo = curvatures(res.packing)
    assert res.packing.r.max() < 1e-5
    assert geo.K.sum() == pytest.approx(geo.total_area, rel=1e-6)
    assert geo.total_area > 0


def test_input_validation(genus2):
    with pytest.raises(DimensionMismatch):
        newton_solve(genus2, target=np.zeros(3))
    with pytest.raises(DimensionMismatch):
        newton_solve(genus2, u_init=-np.ones(3))
    with pytest.raises(DomainError):
        newton_solve(genus2, u_init=np.zeros(10))


def test_result_is_a_packing(solution):
    assert isinstance(solution.packing, WeightedPacking)
    assert np.all(solution.u < 0)

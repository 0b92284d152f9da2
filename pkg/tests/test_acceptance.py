"""The twelve acceptance criteria, one test each.

A summary section with one PASS/FAIL line per criterion is printed at the
end of the pytest run (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest

from calabipack.cli import run
from calabipack.flow import FlowConfig, Termination, integrate, radius_floor_check
from calabipack.hypgeom import WeightedPacking, angle_u_jacobian, appendix_a_predicates, curvatures
from calabipack.laplacian import assemble, min_eigenvalue
from calabipack.newton import newton_solve
from calabipack.potential import properness_probe, ricci_potential
from conftest import SURFACES, random_packing
from oracles import fd_jacobian, random_negative_u

acceptance = pytest.mark.acceptance


@pytest.fixture(scope="module")
def genus2_reference():
    s = SURFACES["genus2"]
    t0 = time.perf_counter()
    traj = integrate(WeightedPacking.from_radii(s, 1.0), FlowConfig(t_max=1e4))
    elapsed = time.perf_counter() - t0
    return s, traj, elapsed, newton_solve(s)


@pytest.fixture(scope="module")
def flow_corpus(genus2_reference):
    """Every flow run used by the energy and radius-floor criteria."""
    s, traj, _, _ = genus2_reference
    runs = {"genus2 r=1": (s, traj)}
    rng = np.random.default_rng(2024)
    for k in range(3):
        runs[f"genus2 random {k}"] = (s, integrate(WeightedPacking.from_u(s, random_negative_u(rng, 10))))
    tet = SURFACES["tetrahedron"]
    runs["tetrahedron"] = (tet, integrate(WeightedPacking.from_radii(tet, 1.0), FlowConfig(t_max=1e3)))
    runs["octahedron"] = (
        SURFACES["octahedron"],
        integrate(WeightedPacking.from_radii(SURFACES["octahedron"], 0.5), FlowConfig(t_max=100)),
    )
    runs["torus"] = (SURFACES["torus"], integrate(WeightedPacking.from_radii(SURFACES["torus"], 2.0), FlowConfig(t_max=100)))
    runs["genus2 weighted"] = (s, integrate(WeightedPacking.from_radii(s, 1.0, 0.4)))
    goal = WeightedPacking.from_u(s, random_negative_u(rng, 10), rng.uniform(0, math.pi / 2, s.n_edges))
    runs["genus2 prescribed"] = (
        s,
        integrate(WeightedPacking.from_radii(s, 1.0, goal.phi), FlowConfig(target=curvatures(goal).K)),
    )
    return runs


@acceptance(1, "Gauss-Bonnet on 100 random packings per fixture, residual < 1e-10, < 5 s")
def test_gauss_bonnet():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("tetrahedron", "octahedron", "torus", "genus2"):
        s = SURFACES[name]
        for _ in range(100):
            geo = curvatures(random_packing(s, rng, lo=1e-3, hi=30.0))
            worst = max(worst, abs(geo.gauss_bonnet_residual()))
    assert worst < 1e-10
    assert time.perf_counter() - t0 < 5


@acceptance(2, "assembled L equals finite-difference dK/du to 1e-6 on 20 instances, < 30 s")
def test_jacobian():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    names = ["tetrahedron", "octahedron", "torus", "genus2"]
    for k in range(20):
        s = SURFACES[names[k % 4]]
        p = random_packing(s, rng, lo=0.1, hi=4.0)
        assert np.any(p.phi == math.pi / 2)
        L = assemble(p).dense()
        J = fd_jacobian(s, p.u, p.phi)
        for m in range(s.n_vertices):
            assert np.linalg.norm(J[:, m] - L[:, m]) <= 1e-6 * np.linalg.norm(L[:, m])
    assert time.perf_counter() - t0 < 30


@acceptance(3, "Cholesky and lambda1 > 0 on the corpus; x^T L_B x >= 0 on 1e3 random x")
def test_positivity(flow_corpus):
    rng = np.random.default_rng(3)
    packings = [random_packing(s, rng) for s in SURFACES.values() for _ in range(25)]
    for s, traj in flow_corpus.values():
        packings += [WeightedPacking.from_u(s, smp.u, traj.phi) for smp in traj.samples[:: 20]]
    for p in packings:
        lap = assemble(p)
        lap.cholesky()
        assert min_eigenvalue(lap) > 0
    LB = assemble(random_packing(SURFACES["genus2"], rng)).graph_part()
    x = rng.standard_normal((10, 1000))
    assert np.all(np.einsum("ik,ik->k", x, LB @ x) >= -1e-12)


@acceptance(4, "zero-weight bounds on 1e5 triples and 1e4 packings, < 60 s")
def test_zero_weight_bounds():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    x, y, z = np.exp(rng.uniform(np.log(1e-6), np.log(1e3), (3, 100_000)))
    assert appendix_a_predicates(x, y, z).all_hold.all()
    ch1 = math.cosh(1.0)
    names = ["tetrahedron", "octahedron", "torus", "genus2"]
    for k in range(10_000):
        s = SURFACES[names[k % 4]]
        p = WeightedPacking.from_radii(s, np.exp(rng.uniform(np.log(1e-3), np.log(30.0), s.n_vertices)))
        geo = curvatures(p)
        D = angle_u_jacobian(p, geo)
        lap = assemble(p, geo)
        cross = D[:, ~np.eye(3, dtype=bool)]
        own = -np.einsum("fcc->fc", D)
        d_area = -D.sum(axis=1)
        assert np.all((cross > 0) & (cross < 0.5))
        assert np.all((own > 0) & (own < ch1))
        assert np.all((d_area > 0) & (d_area < ch1))
        assert np.all((lap.B > 0) & (lap.B < 1))
        assert np.all((lap.A > 0) & (lap.A < s.degrees * ch1))
    assert time.perf_counter() - t0 < 60


@acceptance(5, "no accepted step raises the energy by more than 1e-12")
def test_energy_descent(flow_corpus):
    for name, (_, traj) in flow_corpus.items():
        assert np.all(np.diff(traj.energies) <= 1e-12), name
        assert len(traj.samples) > 1, name


@acceptance(6, "genus-2 from r = 1 converges, tail slope <= -0.9 * 2 lambda1^2, matches Newton, < 2 min")
def test_genus2_convergence(genus2_reference):
    s, traj, elapsed, sol = genus2_reference
    assert traj.termination is Termination.CONVERGED
    assert traj.residual < 1e-8
    lam = min_eigenvalue(assemble(sol.packing))
    assert traj.fitted_rate <= -2 * lam**2 * 0.9
    assert np.max(np.abs(traj.final.u - sol.u)) < 1e-6
    assert elapsed < 120


@acceptance(7, "three random starts of flow and Newton reach the same u* within 1e-6")
def test_rigidity(genus2_reference):
    s, _, _, sol = genus2_reference
    rng = np.random.default_rng(7)
    limits = [sol.u]
    for _ in range(3):
        u0 = random_negative_u(rng, s.n_vertices, lo=0.05, hi=8.0)
        traj = integrate(WeightedPacking.from_u(s, u0))
        assert traj.converged
        limits.append(traj.final.u)
        limits.append(newton_solve(s, u_init=u0).u)
    limits = np.array(limits)
    assert np.max(np.ptp(limits, axis=0)) < 1e-6


@acceptance(8, "tetrahedron never converges; energy stays above 16 pi^2 / N up to T = 1e3")
def test_sphere_negative_control(flow_corpus):
    _, traj = flow_corpus["tetrahedron"]
    assert traj.termination is not Termination.CONVERGED
    assert traj.final.t == pytest.approx(1e3) or traj.termination is Termination.BLOWUP_GUARD
    # sum K = 4 pi + Area > 4 pi, so by Cauchy-Schwarz sum K^2 > (4 pi)^2 / 4
    assert traj.energies.min() > 4 * math.pi**2


@acceptance(9, "finite-difference dK/dt matches -L^2 K at midpoints to 5e-3")
def test_curvature_evolution(genus2_reference):
    s, traj, _, _ = genus2_reference
    delta = 1e-4
    picks = [k for k, smp in enumerate(traj.samples) if np.max(np.abs(smp.K)) > 1e-6][::5]
    for k in picks:
        start = traj.samples[k]
        end = integrate(WeightedPacking.from_u(s, start.u), FlowConfig(h0=delta, t_max=delta, tol=1e-300)).final
        fd = (end.K - start.K) / end.t
        mid = WeightedPacking.from_u(s, 0.5 * (start.u + end.u))
        L = assemble(mid).dense()
        ref = -L @ (L @ curvatures(mid).K)
        assert np.linalg.norm(fd - ref) <= 5e-3 * np.linalg.norm(ref)


@acceptance(10, "radius floor holds at every sample of every zero-weight trajectory")
def test_radius_floor(flow_corpus):
    checked = 0
    for name, (s, traj) in flow_corpus.items():
        if np.any(traj.phi):
            continue
        rep = radius_floor_check(traj, s)
        assert rep.holds and rep.tanh_form_holds, name
        checked += 1
    assert checked >= 6


@acceptance(11, "Ricci potential: path independence, Hessian = L, Lyapunov, properness")
def test_ricci_potential():
    rng = np.random.default_rng(11)
    s = SURFACES["genus2"]
    phi = rng.uniform(0, math.pi / 2, s.n_edges)
    n = s.n_vertices
    u0, u, mid = (random_negative_u(rng, n) for _ in range(3))
    direct = ricci_potential(s, phi, u0, u).value
    assert abs(ricci_potential(s, phi, u0, u, via=[mid]).value - direct) < 1e-8

    h = 1e-3

    def f(x):
        return ricci_potential(s, phi, u0, x).value

    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
            H[i, j] = H[j, i] = (f(u + ei + ej) - f(u + ei - ej) - f(u - ei + ej) + f(u - ei - ej)) / (4 * h * h)
    L = assemble(WeightedPacking.from_u(s, u, phi)).dense()
    assert np.max(np.abs(H - L)) <= 1e-4 * np.max(np.abs(L))

    target = curvatures(WeightedPacking.from_u(s, u0, phi)).K
    traj = integrate(WeightedPacking.from_u(s, u, phi), FlowConfig(target=target))
    assert traj.converged
    values = [f(smp.u) for smp in traj.samples]
    assert np.all(np.diff(values) <= 1e-10)

    rep = properness_probe(s, phi, u0, rays=6, radius_max=20.0, n_radii=20, seed=11)
    assert rep.proper
    assert np.all(rep.values[:, 0] == 0)
    assert rep.min_second_difference >= -1e-8


@acceptance(12, "fixed seed gives byte-identical trajectory CSVs")
def test_determinism(tmp_path, capsys):
    for k in range(2):
        argv = ["flow", "--mesh", "genus2", "--radii", "rand:12", "--out", str(tmp_path / str(k)), "--quiet"]
        assert run(argv) == 0
    a = (tmp_path / "0" / "trajectory.csv").read_bytes()
    b = (tmp_path / "1" / "trajectory.csv").read_bytes()
    assert a == b and len(a.splitlines()) > 10

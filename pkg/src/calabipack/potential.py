"""The Ricci potential ``f(u) = int_{u0}^{u} sum_i (K_i - K_i(u0)) du_i``.

``K du`` is closed, so the integral does not depend on the path; it is
evaluated along straight segments with adaptive Gauss-Legendre quadrature.
``f`` is strictly convex with Hessian ``L`` and minimal at ``u0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadratureFailure
from .hypgeom import curvature_vector
from .mesh import validate_weights

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass
class RicciPotentialValue:
    value: float
    base_point: np.ndarray
    path: str
    evaluations: int = 0


def _segment_integral(fun, tol, max_depth):
    """Adaptive Gauss-Legendre on [0, 1] by interval bisection."""
    calls = 0

    def gl(a, b):
        nonlocal calls
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        calls += len(_NODES)
        return half * sum(w * fun(mid + half * x) for x, w in zip(_NODES, _WEIGHTS))

    total = 0.0
    stack = [(0.0, 1.0, gl(0.0, 1.0), 0)]
    while stack:
        a, b, whole, depth = stack.pop()
        m = 0.5 * (a + b)
        left, right = gl(a, m), gl(m, b)
        if abs(left + right - whole) <= tol * (b - a) * max(1.0, abs(whole)):
            total += left + right
        elif depth >= max_depth:
            raise QuadratureFailure(f"quadrature did not reach {tol:g} on [{a:.3g}, {b:.3g}]")
        else:
            stack.append((m, b, right, depth + 1))
            stack.append((a, m, left, depth + 1))
    return total, calls


def line_integral(surface, phi, K0, start, end, tol=1e-13, max_depth=30):
    """``int_start^end (K - K0) . du`` along the straight segment."""
    start = np.asarray(start, dtype=float)
    delta = np.asarray(end, dtype=float) - start
    if not np.any(delta):
        return 0.0, 0

    def integrand(s):
        return float((curvature_vector(surface, start + s * delta, phi) - K0) @ delta)

    return _segment_integral(integrand, tol, max_depth)


def ricci_potential(surface, weights, u0, u, via=None, tol=1e-13) -> RicciPotentialValue:
    """Evaluate ``f(u)`` with base point ``u0``.

    ``via`` is an optional sequence of waypoints; the integral then runs along
    the polygonal path ``u0 -> via[0] -> ... -> u``.
    """
    phi = validate_weights(surface, weights)
    u0 = np.asarray(u0, dtype=float)
    u = np.asarray(u, dtype=float)
    points = [u0, *(np.asarray(p, dtype=float) for p in (via or ())), u]
    for p in points:
        if p.shape != (surface.n_vertices,):
            raise DomainError(f"points must have shape ({surface.n_vertices},)")
        if np.any(p >= 0):
            raise DomainError("u-coordinates must be negative")
    K0 = curvature_vector(surface, u0, phi)
    value, calls = 0.0, 0
    for a, b in zip(points[:-1], points[1:]):
        v, c = line_integral(surface, phi, K0, a, b, tol)
        value += v
        calls += c
    path = "segment" if len(points) == 2 else f"polyline through {len(points) - 2} waypoint(s)"
    return RicciPotentialValue(value, u0, path, calls)


@dataclass
class ProperReport:
    """Samples of ``f`` along rays leaving ``u0`` into ``{u <= u0}``."""

    radii: np.ndarray
    directions: np.ndarray
    values: np.ndarray  # (rays, radii)
    increasing: np.ndarray  # per ray: nondecreasing beyond its first local minimum
    min_growth: float  # smallest last increment over all rays
    min_second_difference: float

    @property
    def proper(self) -> bool:
        return bool(np.all(self.increasing) and self.min_growth > 0)


def properness_probe(
    surface, weights, u0, rays=8, radius_max=20.0, n_radii=20, seed=0, tol=1e-12
) -> ProperReport:
    """Check numerically that ``f`` grows along rays from ``u0``.

    The first ray points along ``-(1, ..., 1)``; the others are random
    directions with all components negative, so every ray stays inside the
    negative orthant. This is a sampled check, not a proof.
    """
    phi = validate_weights(surface, weights)
    u0 = np.asarray(u0, dtype=float)
    if np.any(u0 >= 0):
        raise DomainError("u0 must be negative")
    n = surface.n_vertices
    rng = np.random.default_rng(seed)
    dirs = [-np.ones(n)] + [-np.abs(rng.standard_normal(n)) for _ in range(rays - 1)]
    dirs = np.array([d / np.linalg.norm(d) for d in dirs[:rays]])
    radii = np.linspace(0.0, radius_max, n_radii + 1)
    K0 = curvature_vector(surface, u0, phi)

    values = np.zeros((len(dirs), len(radii)))
    for k, d in enumerate(dirs):
        acc = 0.0
        for m in range(1, len(radii)):
            seg, _ = line_integral(surface, phi, K0, u0 + radii[m - 1] * d, u0 + radii[m] * d, tol)
            acc += seg
            values[k, m] = acc

    increasing = np.zeros(len(dirs), dtype=bool)
    for k, row in enumerate(values):
        diffs = np.diff(row)
        first_min = int(np.argmax(diffs > 0)) if np.any(diffs > 0) else len(diffs)
        increasing[k] = first_min < len(diffs) and np.all(diffs[first_min:] >= 0)
    growth = float(np.min(values[:, -1] - values[:, -2]))
    second = float(np.min(np.diff(values, n=2, axis=1))) if len(radii) > 2 else 0.0
    return ProperReport(radii, dirs, values, increasing, growth, second)

"""Hyperbolic triangle geometry of a weighted circle packing.

All routines are vectorised over numpy arrays. Hyperbolic functions of large
arguments are handled through ``log_sinh`` / ``log_cosh`` so that radii far
beyond ``arccosh(DBL_MAX)`` still produce finite angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import DomainError, TriangleInequalityViolation
from .mesh import TriangulatedSurface, validate_weights

LARGE_RADIUS = 30.0
_LN2 = math.log(2.0)
_DEGENERACY_BAND = 1e-14
# cos(pi/2) is 6e-17 in floating point; weights that close to pi/2 are orthogonal
_COS_ZERO = 1e-15


def log_sinh(x):
    """``log(sinh(x))`` for ``x > 0`` without overflow."""
    x = np.asarray(x, dtype=float)
    big = x > 20.0
    with np.errstate(divide="ignore", over="ignore"):
        small = np.log(np.sinh(np.where(big, 1.0, x)))
    return np.where(big, x - _LN2 + np.log1p(-np.exp(-2.0 * np.where(big, x, 20.0))), small)


def log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x - _LN2 + np.log1p(np.exp(-2.0 * x))


def u_from_r(r):
    """``u = ln tanh(r/2)``, accurate at both ends of ``(0, inf)``."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("radii must be positive")
    em = np.exp(-r)
    with np.errstate(divide="ignore"):
        small = np.log(np.tanh(r / 2.0))
    return np.where(r < 1.0, small, np.log1p(-em) - np.log1p(em))


def r_from_u(u):
    """Inverse of :func:`u_from_r`: ``r = 2 artanh(exp(u))``."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u < 0)):
        raise DomainError("u-coordinates must be negative")
    x = np.exp(u)
    with np.errstate(divide="ignore"):
        one_minus = np.where(x < 0.5, np.log1p(-x), np.log(-np.expm1(u)))
    return np.log1p(x) - one_minus


def _cos_weight(phi):
    c = np.cos(phi)
    return np.where(c < _COS_ZERO, 0.0, c)


def edge_length(ri, rj, phi=0.0):
    """Hyperbolic cosine law for two circles meeting at angle ``phi``.

    ``cosh l = cosh ri cosh rj + sinh ri sinh rj cos phi``
    """
    ri, rj, phi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (ri, rj, phi)))
    if np.any(~(ri > 0)) or np.any(~(rj > 0)):
        raise DomainError("radii must be positive")
    if np.any(~((phi >= 0) & (phi <= math.pi / 2))):
        raise DomainError("weight must lie in [0, pi/2]")
    c = _cos_weight(phi)
    if np.max(np.maximum(ri, rj), initial=0.0) <= LARGE_RADIUS:
        # cosh l - 1 as a sum of nonnegative terms, then arccosh(1 + t) via log1p
        hi, hj = np.sinh(ri / 2.0), np.sinh(rj / 2.0)
        t = 2.0 * hi * hi * np.cosh(rj) + 2.0 * hj * hj + np.sinh(ri) * np.sinh(rj) * c
        out = np.log1p(t + np.sqrt(t * (t + 2.0)))
    else:
        with np.errstate(divide="ignore"):
            logc = np.log(c)
        log_x = np.logaddexp(log_cosh(ri) + log_cosh(rj), log_sinh(ri) + log_sinh(rj) + logc)
        out = log_x + np.log1p(np.sqrt(-np.expm1(-2.0 * log_x)))
    return out if out.ndim else float(out)


def face_angles(la, lb, lc):
    """Inner angles of the hyperbolic triangle with side lengths ``la, lb, lc``.

    Returns ``(theta_a, theta_b, theta_c)`` with ``theta_a`` opposite ``la``.
    Evaluated with the half-angle tangent form, which stays accurate for
    needle-shaped and very large triangles.
    """
    la, lb, lc = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (la, lb, lc)))
    if np.any(~(la > 0)) or np.any(~(lb > 0)) or np.any(~(lc > 0)):
        raise DomainError("side lengths must be positive")
    s = 0.5 * (la + lb + lc)
    gaps = np.stack([s - la, s - lb, s - lc])
    band = _DEGENERACY_BAND * s
    bad = gaps <= -band
    if np.any(bad):
        k = int(np.flatnonzero(bad.any(axis=0))[0]) if la.ndim else None
        raise TriangleInequalityViolation(
            f"sides violate the triangle inequality (index {k})", face=k
        )
    gaps = np.maximum(gaps, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = log_sinh(gaps)
        ls = log_sinh(s)
        half = [
            np.arctan(np.exp(0.5 * (lg[1] + lg[2] - ls - lg[0]))),
            np.arctan(np.exp(0.5 * (lg[0] + lg[2] - ls - lg[1]))),
            np.arctan(np.exp(0.5 * (lg[0] + lg[1] - ls - lg[2]))),
        ]
    out = tuple(2.0 * h for h in half)
    if la.ndim == 0:
        return tuple(float(t) for t in out)
    return out


@dataclass(frozen=True, eq=False)
class WeightedPacking:
    """Radii on the vertices plus weights on the edges of ``surface``."""

    surface: TriangulatedSurface
    r: np.ndarray
    phi: np.ndarray

    @classmethod
    def from_radii(cls, surface, r, weights=None):
        r = np.broadcast_to(np.asarray(r, dtype=float), (surface.n_vertices,)).copy()
        if np.any(~(r > 0)) or not np.all(np.isfinite(r)):
            raise DomainError("radii must be finite and positive")
        return cls(surface, r, validate_weights(surface, weights))

    @classmethod
    def from_u(cls, surface, u, weights=None):
        u = np.asarray(u, dtype=float)
        if u.shape != (surface.n_vertices,):
            raise DomainError(f"u must have shape ({surface.n_vertices},)")
        return cls(surface, r_from_u(u), validate_weights(surface, weights))

    @cached_property
    def u(self) -> np.ndarray:
        return u_from_r(self.r)

    @property
    def zero_weight(self) -> bool:
        return not np.any(self.phi)


@dataclass(frozen=True, eq=False)
class GeometryState:
    """Edge lengths, per-corner angles, face areas and vertex curvatures."""

    surface: TriangulatedSurface
    lengths: np.ndarray  # (E,)
    angles: np.ndarray  # (F, 3), angle at corner c of face f
    face_areas: np.ndarray  # (F,)
    K: np.ndarray  # (N,)

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    @property
    def K_av(self) -> float:
        return (2 * math.pi * self.surface.euler_characteristic + self.total_area) / len(self.K)

    def gauss_bonnet_residual(self) -> float:
        """``sum(K) - Area - 2 pi chi``, zero up to rounding."""
        chi = self.surface.euler_characteristic
        return float(math.fsum(self.K) - math.fsum(self.face_areas) - 2 * math.pi * chi)


def edge_lengths(packing: WeightedPacking) -> np.ndarray:
    e = packing.surface.edges
    return edge_length(packing.r[e[:, 0]], packing.r[e[:, 1]], packing.phi)


def curvatures(packing: WeightedPacking) -> GeometryState:
    surface = packing.surface
    lengths = edge_lengths(packing)
    sides = lengths[surface.face_edges]
    try:
        ta, tb, tc = face_angles(sides[:, 0], sides[:, 1], sides[:, 2])
    except TriangleInequalityViolation as exc:
        f = exc.face
        where = f"face {f} {tuple(surface.faces[f].tolist())}" if f is not None else "a face"
        raise TriangleInequalityViolation(f"{where}: {exc}", face=f) from None
    angles = np.stack([ta, tb, tc], axis=1)
    areas = math.pi - angles.sum(axis=1)
    K = 2 * math.pi - np.bincount(
        surface.faces.ravel(), weights=angles.ravel(), minlength=surface.n_vertices
    )
    return GeometryState(surface, lengths, angles, areas, K)


def curvature_vector(surface, u, phi) -> np.ndarray:
    """K as a function of u-coordinates (the map the flow differentiates)."""
    return curvatures(WeightedPacking(surface, r_from_u(u), phi)).K


def angle_u_jacobian(packing: WeightedPacking, geometry: GeometryState | None = None):
    """Per-face derivatives ``D[f, c, m] = d theta_c / d u_m`` over the face corners."""
    surface = packing.surface
    if geometry is None:
        geometry = curvatures(packing)
    return face_angle_u_jacobian(
        packing.r[surface.faces],
        geometry.lengths[surface.face_edges],
        geometry.angles,
        packing.phi[surface.face_edges],
    )


def face_angle_u_jacobian(rf, lf, th, phif):
    """Batched ``d theta_c / d u_m`` for faces with corner radii ``rf``.

    ``lf[:, s]`` and ``phif[:, s]`` belong to the side opposite corner ``s``,
    ``th[:, c]`` is the angle at corner ``c``. Chain rule through the cosine
    law: ``d theta / d l`` from the angle formula, ``d l / d r`` from the
    length formula, ``d r / d u = sinh r``. Evaluated in log space, so large
    radii are safe.

    The off-diagonal entries are a difference of two nearly equal terms when
    an angle is small. They are rewritten with
    ``1 - dl/dr_m = sinh^2 r_n sin^2 phi / (sinh l (sinh l + sinh l dl/dr_m))``
    (``n`` the far end of the side), which has no cancellation.
    """
    rf, lf, th = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (rf, lf, th))
    phif = np.atleast_2d(np.asarray(phif, dtype=float))
    cphi = _cos_weight(phif)
    lsr, lcr = log_sinh(rf), log_cosh(rf)
    lsl = log_sinh(lf)
    nf = len(rf)
    with np.errstate(divide="ignore"):
        logc = np.log(cphi)
        log_sin_phi = np.log(np.sin(phif))

    # slope[s, m] = dl_s/dr_m and gap[s, m] = 1 - slope, for m an endpoint of side s
    slope = np.zeros((nf, 3, 3))
    gap = np.zeros((nf, 3, 3))
    for s in range(3):
        for m in ((s + 1) % 3, (s + 2) % 3):
            n = 3 - s - m
            log_p = np.logaddexp(lsr[:, m] + lcr[:, n], lcr[:, m] + lsr[:, n] + logc[:, s])
            slope[:, s, m] = np.exp(log_p - lsl[:, s])
            log_q = 2 * (lsr[:, n] + log_sin_phi[:, s])
            gap[:, s, m] = np.exp(log_q - lsl[:, s] - np.logaddexp(lsl[:, s], log_p))

    D = np.empty((nf, 3, 3))
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        log_own = lsl[:, c] - lsl[:, a] - lsl[:, b] - np.log(np.sin(th[:, c]))
        D[:, c, c] = -np.exp(log_own + lsr[:, c]) * (
            np.cos(th[:, b]) * slope[:, a, c] + np.cos(th[:, a]) * slope[:, b, c]
        )
        for m in (a, b):
            n = 3 - c - m
            bracket = 2 * np.sin(th[:, m] / 2) ** 2 - gap[:, c, m] + np.cos(th[:, m]) * gap[:, n, m]
            D[:, c, m] = np.exp(log_own + lsr[:, m]) * bracket
    return D


def _closed_form_parts(ri, rj, rk):
    root = np.exp(0.5 * (log_sinh(ri) + log_sinh(rj) + log_sinh(rk) - log_sinh(ri + rj + rk)))
    cross = np.exp(-log_sinh(ri + rj)) * root
    own = -np.exp(log_sinh(2 * ri + rj + rk) - log_sinh(ri + rj) - log_sinh(ri + rk)) * root
    return cross, own


def dtheta_dr(packing: WeightedPacking, face: int, at_vertex: int, wrt_vertex: int) -> float:
    """``d theta_at / d r_wrt`` inside one face (global vertex labels).

    Zero-weight faces use the closed forms
    ``dtheta_i/dr_j sinh r_j = sqrt(sinh ri sinh rj sinh rk / sinh(ri+rj+rk)) / sinh(ri+rj)``
    and its diagonal counterpart; other faces go through the cosine-law chain.
    """
    surface = packing.surface
    verts = surface.faces[face].tolist()
    if at_vertex not in verts or wrt_vertex not in verts:
        raise DomainError(f"vertices {at_vertex}, {wrt_vertex} are not both on face {face}")
    r = packing.r
    if not np.any(packing.phi[surface.face_edges[face]]):
        i, j = at_vertex, wrt_vertex
        if i == j:
            others = [v for v in verts if v != i]
            _, own = _closed_form_parts(r[i], r[others[0]], r[others[1]])
            return float(own / math.sinh(r[i]))
        k = next(v for v in verts if v not in (i, j))
        cross, _ = _closed_form_parts(r[i], r[j], r[k])
        return float(cross / math.sinh(r[j]))
    phif = packing.phi[surface.face_edges[face]]
    rf = r[verts]
    lf = np.array([edge_length(rf[(c + 1) % 3], rf[(c + 2) % 3], phif[c]) for c in range(3)])
    D = face_angle_u_jacobian(rf, lf, np.array(face_angles(*lf)), phif)[0]
    c, m = verts.index(at_vertex), verts.index(wrt_vertex)
    return float(D[c, m] / math.sinh(r[wrt_vertex]))


class AppendixBounds(NamedTuple):
    """Outcome of the four elementary sinh inequalities for ``x, y, z > 0``."""

    root_below_half: np.ndarray
    scaled_root_below_half: np.ndarray
    coth_root_below_half_cosh1: np.ndarray
    full_below_cosh1: np.ndarray
    full_value: np.ndarray

    @property
    def all_hold(self):
        return (
            self.root_below_half
            & self.scaled_root_below_half
            & self.coth_root_below_half_cosh1
            & self.full_below_cosh1
        )


def appendix_a_predicates(x, y, z) -> AppendixBounds:
    """Evaluate the four inequalities behind the zero-weight Laplacian bounds.

    With ``R = sqrt(sinh x sinh y sinh z / sinh(x+y+z))``:

    1. ``0 < R < 1/2``
    2. ``0 < R / sinh(x+y) < 1/2``
    3. ``0 < coth(x+y) R < cosh(1)/2``
    4. ``0 < sinh(2x+y+z) / (sinh(x+y) sinh(x+z)) R < cosh 1``

    Everything is compared in log space, so tiny positive values do not
    underflow to zero. For (1) the gap ``1/4 - R^2`` shrinks like
    ``exp(-2 min(x, y, z))`` and is evaluated from the exact identity
    ``1 - 4R^2 = (a(1-b) + b(1-c) + c(1-a)) / (1 - abc)``, ``a = e^{-2x}`` etc.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
    if np.any(~(x > 0)) or np.any(~(y > 0)) or np.any(~(z > 0)):
        raise DomainError("appendix bounds need x, y, z > 0")
    log_root = 0.5 * (log_sinh(x) + log_sinh(y) + log_sinh(z) - log_sinh(x + y + z))
    log_scaled = log_root - log_sinh(x + y)
    log_coth_root = log_cosh(x + y) - log_sinh(x + y) + log_root
    log_full = log_sinh(2 * x + y + z) - log_sinh(x + y) - log_sinh(x + z) + log_root

    # log of each a(1-b) term; log1p(-b) = log1p(-exp(-2y))
    def term(p, q):
        return -2.0 * p + np.log(-np.expm1(-2.0 * q))

    log_gap = np.logaddexp(np.logaddexp(term(x, y), term(y, z)), term(z, x))
    gap_positive = np.isfinite(log_gap) & (-np.expm1(-2.0 * (x + y + z)) > 0)

    ch1 = math.cosh(1.0)
    finite = np.isfinite
    return AppendixBounds(
        finite(log_root) & gap_positive,
        finite(log_scaled) & (log_scaled < -_LN2),
        finite(log_coth_root) & (log_coth_root < math.log(ch1 / 2)),
        finite(log_full) & (log_full < math.log(ch1)),
        np.exp(log_full),
    )

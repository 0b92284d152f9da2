"""Reference computations that share no code path with the library.

High-precision geometry goes through mpmath and the plain arccos cosine law
(the library uses half-angle tangents in double precision); cycles are found
by brute force over vertex tuples; derivatives by finite differences.
"""

import itertools
import math

import mpmath as mp
import numpy as np

from calabipack.hypgeom import curvature_vector

mp.mp.dps = 40


def mp_edge_length(ri, rj, phi):
    ri, rj, phi = mp.mpf(ri), mp.mpf(rj), mp.mpf(phi)
    return mp.acosh(mp.cosh(ri) * mp.cosh(rj) + mp.sinh(ri) * mp.sinh(rj) * mp.cos(phi))


def mp_angle(la, lb, lc):
    """Angle opposite ``la`` by the arccos form of the cosine law."""
    la, lb, lc = mp.mpf(la), mp.mpf(lb), mp.mpf(lc)
    return mp.acos((mp.cosh(lb) * mp.cosh(lc) - mp.cosh(la)) / (mp.sinh(lb) * mp.sinh(lc)))


def mp_curvatures(faces, r, phi_of_edge):
    """Curvatures of a packing in extended precision, face by face."""
    K = [2 * mp.pi] * len(r)
    area = mp.mpf(0)
    for a, b, c in faces:
        lab = mp_edge_length(r[a], r[b], phi_of_edge(a, b))
        lbc = mp_edge_length(r[b], r[c], phi_of_edge(b, c))
        lac = mp_edge_length(r[a], r[c], phi_of_edge(a, c))
        ta, tb, tc = mp_angle(lbc, lac, lab), mp_angle(lac, lbc, lab), mp_angle(lab, lbc, lac)
        K[a] -= ta
        K[b] -= tb
        K[c] -= tc
        area += mp.pi - ta - tb - tc
    return K, area


def brute_cycles(surface, length):
    """All simple cycles of the given length in the 1-skeleton, as frozensets of edges."""
    adj = {v: set(nb) for v, nb in enumerate(surface.neighbors)}
    found = set()
    for verts in itertools.permutations(range(surface.n_vertices), length):
        if verts[0] != min(verts):
            continue
        if all(verts[(k + 1) % length] in adj[verts[k]] for k in range(length)):
            found.add(frozenset(frozenset((verts[k], verts[(k + 1) % length])) for k in range(length)))
    return found


def fd_jacobian(surface, u, phi, h=1e-5):
    """Central-difference Jacobian of K(u), column by column."""
    n = len(u)
    J = np.empty((n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        J[:, m] = (curvature_vector(surface, u + e, phi) - curvature_vector(surface, u - e, phi)) / (2 * h)
    return J


def richardson_derivative(f, x, h=1e-2, levels=5):
    """Central differences with Richardson extrapolation over a halving h sweep."""
    table = []
    for k in range(levels):
        hk = h / 2**k
        row = [(f(x + hk) - f(x - hk)) / (2 * hk)]
        for j in range(1, k + 1):
            row.append(row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / (4**j - 1))
        table.append(row)
    return table[-1][-1]


def kahan_sum_of_squares(values):
    total, comp = 0.0, 0.0
    for v in reversed(list(values)):
        y = v * v - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def dense_min_eigen(M):
    w, V = np.linalg.eigh(M)
    return w, V


def random_negative_u(rng, n, lo=0.2, hi=4.0):
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    return np.log(np.tanh(r / 2))


def mp_angle_u_derivative(r, phi, c, m):
    """``d theta_c / d u_m`` for one face by mpmath differentiation.

    ``r[k]`` is the radius at corner ``k``; ``phi[s]`` the weight on the side
    opposite corner ``s``.
    """

    def theta(x):
        rr = [mp.mpf(v) for v in r]
        rr[m] = x
        sides = [
            mp.acosh(
                mp.cosh(rr[(s + 1) % 3]) * mp.cosh(rr[(s + 2) % 3])
                + mp.sinh(rr[(s + 1) % 3]) * mp.sinh(rr[(s + 2) % 3]) * mp.cos(mp.mpf(phi[s]))
            )
            for s in range(3)
        ]
        return mp_angle(sides[c], sides[(c + 1) % 3], sides[(c + 2) % 3])

    with mp.workdps(60):
        return mp.diff(theta, mp.mpf(r[m])) * mp.sinh(mp.mpf(r[m]))

"""Damped Newton iteration for ``K(u) = Kbar``.

``K`` is the gradient of a strictly convex potential whose Hessian is the
dual Laplacian, so the Newton system is always symmetric positive definite
and the solution, when one exists, is unique.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BlowupGuard, DimensionMismatch, DomainError, NoConvergence, TriangleInequalityViolation
from .hypgeom import WeightedPacking, curvatures, r_from_u
from .laplacian import assemble
from .mesh import validate_weights

log = logging.getLogger(__name__)


@dataclass
class NewtonResult:
    packing: WeightedPacking
    iterations: int
    residual: float
    history: list = field(default_factory=list)

    @property
    def u(self) -> np.ndarray:
        return self.packing.u


def newton_solve(
    surface,
    weights=None,
    target=None,
    u_init=None,
    tol=1e-12,
    max_iter=100,
    eps_u=1e-12,
) -> NewtonResult:
    """Solve ``K(u) = target`` (zero curvature by default) starting from ``u_init``.

    Each step solves ``L d = -(K - target)`` by Cholesky and backtracks until
    the Euclidean residual decreases and ``u`` stays below ``-eps_u``.
    Raises :class:`NoConvergence` when the residual stalls or ``max_iter``
    is exhausted, which is what happens when no solution exists.
    """
    phi = validate_weights(surface, weights)
    n = surface.n_vertices
    target = np.zeros(n) if target is None else np.asarray(target, dtype=float)
    if target.shape != (n,):
        raise DimensionMismatch(f"target has shape {target.shape}, expected ({n},)")
    u = np.full(n, np.log(np.tanh(0.5))) if u_init is None else np.array(u_init, dtype=float)
    if u.shape != (n,):
        raise DimensionMismatch(f"u_init has shape {u.shape}, expected ({n},)")
    if np.max(u) >= -eps_u:
        raise DomainError("u_init must lie strictly below -eps_u")

    def evaluate(v):
        packing = WeightedPacking(surface, r_from_u(v), phi)
        geometry = curvatures(packing)
        return packing, geometry, geometry.K - target

    packing, geometry, g = evaluate(u)
    res = float(np.max(np.abs(g)))
    history = [res]
    for it in range(max_iter + 1):
        if res < tol:
            log.debug("newton converged in %d iterations, residual %.3e", it, res)
            return NewtonResult(packing, it, res, history)
        if it == max_iter:
            break
        lap = assemble(packing, geometry)
        try:
            factor = lap.cholesky()
        except np.linalg.LinAlgError:
            # happens once radii collapse toward 0 and A_i drops below rounding
            raise NoConvergence(
                f"Laplacian numerically singular at residual {res:.3e} (min r = {packing.r.min():.3g})",
                residual=res,
                iterations=it,
                u=u,
            ) from None
        step = scipy.linalg.cho_solve(factor, -g)
        norm0 = float(np.linalg.norm(g))
        alpha, guard_hit = 1.0, False
        while True:
            trial = u + alpha * step
            if np.max(trial) < -eps_u:
                try:
                    p_new, geo_new, g_new = evaluate(trial)
                except (DomainError, TriangleInequalityViolation):
                    pass
                else:
                    if np.linalg.norm(g_new) <= (1 - 1e-4 * alpha) * norm0:
                        break
            else:
                guard_hit = True
            alpha *= 0.5
            if alpha < 1e-12:
                if guard_hit:
                    raise BlowupGuard("Newton steps are pushing u to 0", vertex=int(np.argmax(u)), u=u)
                raise NoConvergence(
                    f"line search stalled at residual {res:.3e}", residual=res, iterations=it, u=u
                )
        u, packing, geometry, g = trial, p_new, geo_new, g_new
        res = float(np.max(np.abs(g)))
        history.append(res)
    raise NoConvergence(
        f"no convergence in {max_iter} iterations, residual {res:.3e}",
        residual=res,
        iterations=max_iter,
        u=u,
    )

"""The Jacobian ``L = dK/du`` of the curvature map, stored as ``A + L_B``.

``A`` is the diagonal of area derivatives and ``L_B`` the graph Laplacian
with edge weights ``B_ij``. Only the diagonal and one coefficient per edge
are kept; ``matrix()`` and ``dense()`` build the full operator on request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ConvergenceFailure, DimensionMismatch
from .hypgeom import GeometryState, WeightedPacking, angle_u_jacobian, curvatures
from .mesh import TriangulatedSurface


@dataclass(frozen=True, eq=False)
class DualLaplacian:
    surface: TriangulatedSurface
    A: np.ndarray  # (N,)
    B: np.ndarray  # (E,), aligned with surface.edges

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def diagonal(self) -> np.ndarray:
        e = self.surface.edges
        return self.A + np.bincount(e.ravel(), weights=np.repeat(self.B, 2), minlength=self.n)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"vector of length {x.shape[0]} for a {self.n}x{self.n} operator")
        i, j = self.surface.edges[:, 0], self.surface.edges[:, 1]
        flux = self.B * (x[i] - x[j])
        return self.A * x + np.bincount(i, flux, self.n) - np.bincount(j, flux, self.n)

    __matmul__ = matvec

    def matrix(self) -> scipy.sparse.csr_matrix:
        e = self.surface.edges
        n = self.n
        rows = np.concatenate([np.arange(n), e[:, 0], e[:, 1]])
        cols = np.concatenate([np.arange(n), e[:, 1], e[:, 0]])
        vals = np.concatenate([self.diagonal, -self.B, -self.B])
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def graph_part(self) -> scipy.sparse.csr_matrix:
        """``L_B`` alone (zero row sums)."""
        return (self.matrix() - scipy.sparse.diags(self.A)).tocsr()

    def cholesky(self):
        """Cholesky factor of ``L``; raises ``numpy.linalg.LinAlgError`` if not positive definite."""
        return scipy.linalg.cho_factor(self.dense(), lower=True)

    def write_coo(self, path):
        """Dump nonzeros as ``row col value`` lines."""
        m = self.matrix().tocoo()
        order = np.lexsort((m.col, m.row))
        with open(path, "w") as fh:
            for k in order:
                fh.write(f"{m.row[k]} {m.col[k]} {m.data[k]:.17g}\n")


def assemble(packing: WeightedPacking, geometry: GeometryState | None = None) -> DualLaplacian:
    """Build ``L = dK/du`` from the per-face angle derivatives.

    ``B_ij`` sums ``d theta_i / d u_j`` over the two faces flanking edge ij.
    The two orderings ``(i, j)`` and ``(j, i)`` agree analytically; their mean
    is stored so that ``L`` is symmetric bit for bit. ``A_i`` is the
    ``sinh r_i``-scaled derivative of the total area of the faces around i.
    """
    surface = packing.surface
    if geometry is None:
        geometry = curvatures(packing)
    D = angle_u_jacobian(packing, geometry)
    faces = surface.faces
    n = surface.n_vertices

    # side s of a face joins corners (s+1)%3 and (s+2)%3
    B = np.zeros(surface.n_edges)
    for s in range(3):
        p, q = (s + 1) % 3, (s + 2) % 3
        np.add.at(B, surface.face_edges[:, s], 0.5 * (D[:, p, q] + D[:, q, p]))

    # d Area / d u_m = -(column sum of D)
    dA = -D.sum(axis=1)
    A = np.bincount(faces.ravel(), weights=dA.ravel(), minlength=n)
    return DualLaplacian(surface, A, B)


def apply_laplacian(lap: DualLaplacian, f) -> np.ndarray:
    """``Delta f = -L f``, i.e. ``sum_j B_ij (f_j - f_i) - A_i f_i``."""
    return -lap.matvec(f)


def min_eigenvalue(lap, tol=1e-10, max_iter=5000, return_vector=False):
    """Smallest eigenvalue of a symmetric positive definite operator.

    Inverse iteration on the Cholesky factor. Accepts a :class:`DualLaplacian`
    or any square array. Stops when the residual ``||L x - rho x||`` of the
    Rayleigh quotient ``rho`` falls below ``tol * rho``.
    """
    M = lap.dense() if isinstance(lap, DualLaplacian) else np.atleast_2d(np.asarray(lap, float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatch("eigenvalue solver needs a square matrix")
    factor = scipy.linalg.cho_factor(M, lower=True)
    x = np.linspace(1.0, 2.0, n)  # deterministic start with a component along every mode
    x /= np.linalg.norm(x)
    rho = float(x @ M @ x)
    for it in range(1, max_iter + 1):
        y = scipy.linalg.cho_solve(factor, x)
        x = y / np.linalg.norm(y)
        Mx = M @ x
        rho = float(x @ Mx)
        if np.linalg.norm(Mx - rho * x) <= tol * abs(rho):
            return (rho, x) if return_vector else rho
    raise ConvergenceFailure(
        f"inverse iteration did not converge in {max_iter} iterations (rho={rho:.6g})",
        iterations=max_iter,
    )

"""Hyperbolic circle packings and the combinatorial Calabi flow on closed surfaces."""

from .errors import CalabiPackError
from .flow import FlowConfig, FlowTrajectory, Termination, calabi_energy, flow_velocity, integrate, radius_floor_check
from .hypgeom import (
    GeometryState,
    WeightedPacking,
    appendix_a_predicates,
    curvatures,
    dtheta_dr,
    edge_length,
    face_angles,
    r_from_u,
    u_from_r,
)
from .laplacian import DualLaplacian, apply_laplacian, assemble, min_eigenvalue
from .mesh import TriangulatedSurface, build_surface, check_thurston_conditions, load_fixture, load_mesh
from .newton import newton_solve
from .potential import properness_probe, ricci_potential

__version__ = "0.1.0"

"""Combinatorics of closed triangulated surfaces.

A surface is given by its face list only; vertices are ``0..N-1``. Edge and
incidence tables are derived once at construction and the object is treated
as immutable afterwards.

Mesh file grammar (whitespace separated, ``#`` starts a comment)::

    N F
    i j k        # F lines, 0-based vertex indices

Weight file grammar: one line ``i j phi`` per edge, ``phi`` in radians.
Edges that are not listed get weight 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    BoundaryEdge,
    DegenerateFace,
    DomainError,
    FileError,
    MeshError,
    NonManifold,
    ParseError,
)

__all__ = [
    "TriangulatedSurface",
    "ObstructionReport",
    "build_surface",
    "load_mesh",
    "load_weights",
    "fixture_path",
    "load_fixture",
    "validate_weights",
    "check_thurston_conditions",
]

_DATA = Path(__file__).parent / "data"
FIXTURES = ("tetrahedron", "octahedron", "torus", "genus2")


@dataclass(frozen=True, eq=False)
class TriangulatedSurface:
    """Vertices, edges and faces of a closed triangulated surface.

    Attributes
    ----------
    n_vertices : int
    faces : (F, 3) int array
        Vertex triples in input order.
    edges : (E, 2) int array
        Sorted pairs ``i < j``, lexicographically ordered.
    face_edges : (F, 3) int array
        ``face_edges[f, c]`` is the edge opposite corner ``c`` of face ``f``.
    edge_faces : (E, 2) int array
        The two faces flanking each edge.
    """

    n_vertices: int
    faces: np.ndarray
    edges: np.ndarray
    face_edges: np.ndarray
    edge_faces: np.ndarray
    edge_index: dict = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    @cached_property
    def neighbors(self) -> list[frozenset]:
        nbrs = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges:
            nbrs[i].add(int(j))
            nbrs[j].add(int(i))
        return [frozenset(s) for s in nbrs]

    @cached_property
    def face_set(self) -> frozenset:
        return frozenset(frozenset(int(v) for v in f) for f in self.faces)

    def edge_id(self, i: int, j: int) -> int:
        return self.edge_index[(i, j) if i < j else (j, i)]

    def relabel(self, perm) -> "TriangulatedSurface":
        """Return the same surface with vertex ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm)
        return build_surface(perm[self.faces].tolist())


def build_surface(faces) -> TriangulatedSurface:
    """Validate a face list and derive the incidence tables."""
    try:
        arr = np.asarray(faces, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise MeshError(f"faces must be integer triples: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) == 0:
        raise MeshError("faces must be a nonempty list of vertex triples")
    if arr.min() < 0:
        raise MeshError("negative vertex index")
    n = int(arr.max()) + 1

    seen = set()
    for f in arr:
        key = frozenset(f.tolist())
        if len(key) != 3:
            raise DegenerateFace(f"face {tuple(f.tolist())} repeats a vertex")
        if key in seen:
            raise DegenerateFace(f"face {tuple(f.tolist())} listed twice")
        seen.add(key)

    incident: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(arr.tolist()):
        for p, q in ((b, c), (a, c), (a, b)):
            incident.setdefault((min(p, q), max(p, q)), []).append(fi)
    for e, fs in incident.items():
        if len(fs) == 1:
            raise BoundaryEdge(f"edge {e} lies on a single face")
        if len(fs) > 2:
            raise NonManifold(f"edge {e} lies on {len(fs)} faces")

    edge_list = sorted(incident)
    edge_index = {e: k for k, e in enumerate(edge_list)}
    edges = np.array(edge_list, dtype=np.int64)
    edge_faces = np.array([incident[e] for e in edge_list], dtype=np.int64)
    face_edges = np.empty_like(arr)
    for fi, (a, b, c) in enumerate(arr.tolist()):
        for corner, (p, q) in enumerate(((b, c), (a, c), (a, b))):
            face_edges[fi, corner] = edge_index[(min(p, q), max(p, q))]

    used = np.zeros(n, dtype=bool)
    used[arr.ravel()] = True
    if not used.all():
        raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} is on no face")

    _check_vertex_links(n, arr)

    surface = TriangulatedSurface(n, arr, edges, face_edges, edge_faces, edge_index)
    if surface.degrees.min() < 3:
        raise MeshError("every vertex needs degree >= 3")
    return surface


def _check_vertex_links(n, faces):
    # the link of each vertex must be one cycle, else the surface is pinched there
    links = [dict() for _ in range(n)]
    for a, b, c in faces.tolist():
        for v, p, q in ((a, b, c), (b, a, c), (c, a, b)):
            links[v].setdefault(p, []).append(q)
            links[v].setdefault(q, []).append(p)
    for v, adj in enumerate(links):
        start = next(iter(adj))
        prev, cur, steps = None, start, 0
        while True:
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            prev, cur = cur, nxt
            steps += 1
            if cur == start:
                break
        if steps != len(adj):
            raise NonManifold(f"link of vertex {v} is not a single cycle")


def _read_lines(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from None
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def load_mesh(path) -> TriangulatedSurface:
    rows = _read_lines(path)
    if not rows or len(rows[0]) != 2:
        raise ParseError(f"{path}: first line must be 'N F'")
    try:
        n, nf = int(rows[0][0]), int(rows[0][1])
        faces = [tuple(int(x) for x in r) for r in rows[1:]]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if len(faces) != nf or any(len(f) != 3 for f in faces):
        raise ParseError(f"{path}: expected {nf} lines of three indices")
    if any(not 0 <= v < n for f in faces for v in f):
        raise ParseError(f"{path}: vertex index out of range [0, {n})")
    surface = build_surface(faces)
    if surface.n_vertices != n:
        raise ParseError(f"{path}: header says N={n}, faces use {surface.n_vertices}")
    return surface


def fixture_path(name: str) -> Path:
    return _DATA / f"{name}.mesh"


def load_fixture(name: str) -> TriangulatedSurface:
    """One of the bundled meshes: tetrahedron, octahedron, torus, genus2."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURES}")
    return load_mesh(fixture_path(name))


def validate_weights(surface: TriangulatedSurface, weights=None) -> np.ndarray:
    """Return per-edge weights as an array aligned with ``surface.edges``.

    ``weights`` may be None (all zero), a scalar, an array of length E, or a
    mapping ``{(i, j): phi}``.
    """
    if weights is None:
        return np.zeros(surface.n_edges)
    if isinstance(weights, dict):
        phi = np.zeros(surface.n_edges)
        for (i, j), w in weights.items():
            try:
                phi[surface.edge_id(int(i), int(j))] = float(w)
            except KeyError:
                raise DomainError(f"({i}, {j}) is not an edge") from None
    else:
        phi = np.broadcast_to(np.asarray(weights, dtype=float), (surface.n_edges,)).copy()
    if not np.all(np.isfinite(phi)) or phi.min() < 0 or phi.max() > math.pi / 2:
        raise DomainError("edge weights must lie in [0, pi/2]")
    return phi


def load_weights(path, surface: TriangulatedSurface) -> np.ndarray:
    table = {}
    for r in _read_lines(path):
        if len(r) != 3:
            raise ParseError(f"{path}: weight lines are 'i j phi'")
        try:
            table[(int(r[0]), int(r[1]))] = float(r[2])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
    return validate_weights(surface, table)


@dataclass
class ObstructionReport:
    """Short cycles that break the combinatorial conditions for a zero-curvature packing.

    Each violation is ``(cycle, weight_sum)`` with the cycle given as a vertex
    tuple. Null-homotopy is not decided, so every short cycle is treated as
    contractible; on surfaces with chi < 0 a flagged cycle may be essential.
    """

    triangle_violations: list = field(default_factory=list)
    quad_violations: list = field(default_factory=list)
    note: str = (
        "conservative: flagged cycles may be essential (non-contractible) on chi<0 surfaces"
    )

    @property
    def passed(self) -> bool:
        return not self.triangle_violations and not self.quad_violations

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "triangle_violations": [[list(c), s] for c, s in self.triangle_violations],
            "quad_violations": [[list(c), s] for c, s in self.quad_violations],
            "note": self.note,
        }


def three_cycles(surface: TriangulatedSurface):
    nb = surface.neighbors
    for i, j in surface.edges.tolist():
        for k in sorted(nb[i] & nb[j]):
            if k > j:
                yield (i, j, k)


def four_cycles(surface: TriangulatedSurface):
    """Simple 4-cycles, each once, as ``(a, b, c, d)`` with ``a`` the smallest vertex."""
    nb = surface.neighbors
    for a in range(surface.n_vertices):
        for b, d in itertools.combinations(sorted(v for v in nb[a] if v > a), 2):
            for c in sorted(nb[b] & nb[d]):
                if c > a and c != b and c != d:
                    yield (a, b, c, d)


def check_thurston_conditions(surface: TriangulatedSurface, weights=None) -> ObstructionReport:
    phi = validate_weights(surface, weights)
    faces = surface.face_set
    eid = surface.edge_id
    tol = 1e-12
    report = ObstructionReport()

    for cyc in three_cycles(surface):
        i, j, k = cyc
        s = float(phi[eid(i, j)] + phi[eid(j, k)] + phi[eid(i, k)])
        if s >= math.pi - tol and frozenset(cyc) not in faces:
            report.triangle_violations.append((cyc, s))

    for cyc in four_cycles(surface):
        a, b, c, d = cyc
        s = float(phi[eid(a, b)] + phi[eid(b, c)] + phi[eid(c, d)] + phi[eid(d, a)])
        if s < 2 * math.pi - tol:
            continue
        two_faces = (
            frozenset((a, b, c)) in faces and frozenset((a, c, d)) in faces
        ) or (frozenset((a, b, d)) in faces and frozenset((b, c, d)) in faces)
        if not two_faces:
            report.quad_violations.append((cyc, s))
    return report

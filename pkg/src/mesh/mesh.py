"""
Simplicial meshes: construction with face closure, normalization, stars and
the brute-force Euler characteristic oracle.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import DegenerateMeshError
from ..utils.logger import get_logger

logger = get_logger(__name__)

Simplex = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Geometric simplicial complex in R^2 or R^3.

    ``simplices[j]`` holds the sorted vertex tuples of every j-simplex; the
    0-simplices are all vertices, including isolated ones.
    """

    vertices: np.ndarray
    simplices: Tuple[Tuple[Simplex, ...], ...]
    mesh_id: str = ""

    @property
    def dimension(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def edges(self) -> Tuple[Simplex, ...]:
        return self.simplices[1] if len(self.simplices) > 1 else ()

    @property
    def triangles(self) -> Tuple[Simplex, ...]:
        return self.simplices[2] if len(self.simplices) > 2 else ()

    def simplex_counts(self) -> List[int]:
        return [len(level) for level in self.simplices]

    @cached_property
    def simplex_arrays(self) -> Tuple[np.ndarray, ...]:
        """Per-dimension (count, dim+1) index arrays for vectorized oracles."""
        return tuple(
            np.asarray(level, dtype=np.int64).reshape(len(level), j + 1)
            for j, level in enumerate(self.simplices)
        )

    @cached_property
    def incidence(self) -> Dict[int, Tuple[Simplex, ...]]:
        cofaces: Dict[int, List[Simplex]] = {i: [] for i in range(self.n_vertices)}
        for level in self.simplices:
            for simplex in level:
                for i in simplex:
                    cofaces[i].append(simplex)
        return {i: tuple(s) for i, s in cofaces.items()}


@dataclass(frozen=True)
class Star:
    center: int
    simplices: Tuple[Simplex, ...]
    link: Tuple[int, ...] = field(default=())


def mesh_from_arrays(
    vertices: Sequence[Sequence[float]],
    faces: Iterable[Sequence[int]] = (),
    edges: Iterable[Sequence[int]] = (),
    mesh_id: Optional[str] = None,
) -> Mesh:
    """Build a mesh from vertex coordinates plus triangles and extra edges.

    Faces of every given simplex are added (face closure) and duplicates
    dropped. Coincident vertex positions are rejected.
    """
    coords = np.array(vertices, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise DegenerateMeshError("mesh needs at least one vertex")
    if coords.shape[1] not in (2, 3):
        raise DegenerateMeshError(f"unsupported ambient dimension {coords.shape[1]}")
    if not np.all(np.isfinite(coords)):
        raise DegenerateMeshError("vertex coordinates must be finite")
    if np.unique(coords, axis=0).shape[0] != coords.shape[0]:
        raise DegenerateMeshError("duplicate vertex positions")

    n = coords.shape[0]
    edge_set = set()
    triangle_set = set()

    def _checked(simplex: Sequence[int], size: int) -> Simplex:
        indices = tuple(sorted(int(i) for i in simplex))
        if len(indices) != size:
            raise DegenerateMeshError(f"expected {size} indices, got {simplex!r}")
        if len(set(indices)) != size:
            raise DegenerateMeshError(f"repeated vertex in simplex {simplex!r}")
        if indices[0] < 0 or indices[-1] >= n:
            raise DegenerateMeshError(f"vertex index out of range in {simplex!r}")
        return indices

    for face in faces:
        triangle = _checked(face, 3)
        triangle_set.add(triangle)
        edge_set.update(combinations(triangle, 2))
    for edge in edges:
        edge_set.add(_checked(edge, 2))

    simplices: Tuple[Tuple[Simplex, ...], ...] = (
        tuple((i,) for i in range(n)),
        tuple(sorted(edge_set)),
        tuple(sorted(triangle_set)),
    )
    return Mesh(vertices=coords, simplices=simplices, mesh_id=mesh_id or "")


def normalize(m: Mesh) -> Mesh:
    """Center on the vertex centroid and scale into the unit ball."""
    centered = m.vertices - m.vertices.mean(axis=0)
    radius = float(np.max(np.linalg.norm(centered, axis=1)))
    if radius < 1e-12:
        raise DegenerateMeshError(
            f"mesh {m.mesh_id!r} collapses to a point after centering"
        )
    return Mesh(vertices=centered / radius, simplices=m.simplices, mesh_id=m.mesh_id)


def euler_characteristic(m: Mesh) -> int:
    return int(sum((-1) ** j * count for j, count in enumerate(m.simplex_counts())))


def star(m: Mesh, i: int) -> Star:
    """All simplices containing vertex ``i`` and its link vertices."""
    if not 0 <= i < m.n_vertices:
        raise IndexError(f"vertex {i} out of range for mesh with {m.n_vertices} vertices")
    simplices = tuple(sorted(m.incidence[i], key=lambda s: (len(s), s)))
    link = sorted({j for s in simplices for j in s if j != i})
    return Star(center=i, simplices=simplices, link=tuple(link))


def _simplex_heights(m: Mesh, v: np.ndarray) -> List[Tuple[int, np.ndarray]]:
    heights = m.vertices @ v
    return [
        (j, heights[arr].max(axis=1))
        for j, arr in enumerate(m.simplex_arrays)
        if arr.size
    ]


def restriction_chi(m: Mesh, v: Sequence[float], h: float) -> int:
    """Euler characteristic of the simplices lying in {x : x.v <= h}."""
    v = np.asarray(v, dtype=np.float64)
    total = 0
    for j, max_heights in _simplex_heights(m, v):
        total += (-1) ** j * int(np.count_nonzero(max_heights <= h))
    return total


def euler_curve(m: Mesh, v: Sequence[float], heights: Sequence[float]) -> np.ndarray:
    """restriction_chi for one direction over a vector of heights."""
    v = np.asarray(v, dtype=np.float64)
    heights = np.asarray(heights, dtype=np.float64)
    curve = np.zeros(heights.shape, dtype=np.int64)
    for j, max_heights in _simplex_heights(m, v):
        counts = np.searchsorted(np.sort(max_heights), heights, side="right")
        curve += (-1) ** j * counts
    return curve

"""
Proto-transform of a 3D mesh: a finite sum of terms
gain * [v in P] * [h >= anchor . v] that reproduces the ECT exactly.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..geometry.arrangement import build_arrangement, merge_convex_cells
from ..geometry.sphere import (
    Cap,
    SphericalPolygon,
    bisector_circle,
    check_rotation,
    hemisphere,
    interior_point,
    polygon_contains,
)
from ..mesh.mesh import Mesh, Star, star
from ..utils.config import get_config
from ..utils.errors import (
    DegenerateMeshError,
    DimensionMismatchError,
    EctError,
    HeightTieError,
)
from ..utils.logger import LogContext, get_logger, log_execution_time
from ..utils.parallel import parallel_map

logger = get_logger(__name__)

# split circle for supports covering the whole sphere
DEFAULT_SPLIT_NORMAL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class Term:
    gain: int
    anchor: np.ndarray
    support: SphericalPolygon
    vertex: int = -1

    def __post_init__(self):
        if int(self.gain) != self.gain or self.gain == 0:
            raise ValueError(f"term gain must be a non-zero integer, got {self.gain}")
        anchor = np.array(self.anchor, dtype=np.float64)
        if anchor.shape != (3,):
            raise DimensionMismatchError(f"anchor must be a 3-vector, got {anchor.shape}")
        if np.linalg.norm(anchor) > 1.0 + 1e-9:
            raise ValueError(f"anchor {anchor} lies outside the unit ball")
        anchor.setflags(write=False)
        object.__setattr__(self, "gain", int(self.gain))
        object.__setattr__(self, "anchor", anchor)

    @cached_property
    def cap(self) -> Cap:
        return self.support.cap


@dataclass(frozen=True, eq=False)
class ProtoTransform:
    terms: Tuple[Term, ...]
    mesh_id: str = ""
    dimension: int = 3

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def gains(self) -> np.ndarray:
        return np.array([t.gain for t in self.terms], dtype=np.int64)


def local_gain(s: Star, positions: np.ndarray, v: Sequence[float]) -> int:
    """Jump of the Euler curve at the center vertex in direction v.

    A simplex of the star counts with sign (-1)^dim when all of its other
    vertices sit strictly below the center.
    """
    v = np.asarray(v, dtype=np.float64)
    heights = positions @ v
    center = heights[s.center]
    tol = get_config().tolerances.height_tie
    for j in s.link:
        if abs(heights[j] - center) <= tol:
            raise HeightTieError(
                f"vertices {s.center} and {j} tie in height along {v.tolist()}"
            )
    below = {j for j in s.link if heights[j] < center}
    gain = 0
    for simplex in s.simplices:
        if all(j == s.center or j in below for j in simplex):
            gain += (-1) ** (len(simplex) - 1)
    return gain


def _sample_point(cell: SphericalPolygon, normals: np.ndarray) -> np.ndarray:
    """Interior point of a cell kept away from every arrangement circle."""
    candidate = interior_point(cell)
    if normals.size == 0 or np.min(np.abs(normals @ candidate)) > 1e-9:
        return candidate
    # fan triangle centroids as a fallback
    first = cell.vertices[0]
    for b, c in zip(cell.vertices[1:-1], cell.vertices[2:]):
        point = first + b + c
        point /= np.linalg.norm(point)
        if polygon_contains(cell, point) and np.min(np.abs(normals @ point)) > 1e-9:
            return point
    return candidate


def full_sphere_support() -> List[SphericalPolygon]:
    return [hemisphere(DEFAULT_SPLIT_NORMAL), hemisphere(-DEFAULT_SPLIT_NORMAL)]


def vertex_regions(
    m: Mesh, i: int, merge: Optional[bool] = None
) -> List[Tuple[SphericalPolygon, int]]:
    """Non-zero-gain cells of the bisector arrangement around vertex i."""
    if merge is None:
        merge = get_config().transform.merge_terms
    s = star(m, i)
    positions = m.vertices
    if not s.link:
        gain = local_gain(s, positions, DEFAULT_SPLIT_NORMAL)
        return [(cell, gain) for cell in full_sphere_support()]

    circles = [bisector_circle(positions[i], positions[j]) for j in s.link]
    arrangement = build_arrangement(circles)
    normals = np.array([c.normal for c in arrangement.circles])

    cells: List[SphericalPolygon] = []
    gains: List[int] = []
    for cell in arrangement.cells:
        gain = local_gain(s, positions, _sample_point(cell, normals))
        cells.append(cell)
        gains.append(gain)

    if merge:
        regions = merge_convex_cells(cells, gains)
    else:
        regions = list(zip(cells, gains))
    regions = [(cell, gain) for cell, gain in regions if gain != 0]
    logger.debug(
        "Vertex regions",
        vertex=i,
        link=len(s.link),
        cells=len(arrangement.cells),
        kept=len(regions),
    )
    return regions


def _vertex_terms(args: Tuple[Mesh, int, bool]) -> List[Term]:
    m, i, merge = args
    try:
        regions = vertex_regions(m, i, merge)
    except EctError as e:
        with LogContext(logger, mesh_id=m.mesh_id, vertex=i) as log:
            log.error("Vertex region construction failed", error=str(e))
        raise type(e)(f"vertex {i}: {e}") from e
    return [Term(gain=g, anchor=m.vertices[i], support=cell, vertex=i) for cell, g in regions]


@log_execution_time(logger, "Proto-transform build")
def build_proto_transform(
    m: Mesh, merge: Optional[bool] = None, jobs: Optional[int] = 1
) -> ProtoTransform:
    """Union of the vertex regions of every vertex, ordered by vertex then cell."""
    if m.dimension != 3:
        raise DimensionMismatchError(
            f"build_proto_transform needs a 3D mesh, got dimension {m.dimension}"
        )
    if np.max(np.linalg.norm(m.vertices, axis=1)) > 1.0 + 1e-9:
        raise DegenerateMeshError(f"mesh {m.mesh_id!r} is not inside the unit ball")
    if merge is None:
        merge = get_config().transform.merge_terms

    per_vertex = parallel_map(_vertex_terms, [(m, i, merge) for i in range(m.n_vertices)], jobs)
    terms = tuple(term for terms in per_vertex for term in terms)
    logger.info("Built proto-transform", mesh_id=m.mesh_id, vertices=m.n_vertices, terms=len(terms))
    return ProtoTransform(terms=terms, mesh_id=m.mesh_id)


def evaluate_ect(t: ProtoTransform, v: Sequence[float], h: float) -> int:
    """ECT value at (v, h) with closed membership conventions.

    Points within the generic-boundary tolerance of a support edge or an
    anchor height are evaluated anyway and reported with a warning.
    """
    v = np.asarray(v, dtype=np.float64)
    tol = get_config().tolerances.generic_boundary
    value = 0
    near_boundary = False
    for term in t.terms:
        slack = float(np.min(term.support.edge_normals @ v))
        if slack < -tol:
            continue
        height = float(term.anchor @ v)
        if slack <= tol or abs(h - height) <= tol:
            near_boundary = True
        if h >= height:
            value += term.gain
    if near_boundary:
        logger.warning("ECT evaluated on a support boundary", direction=v.tolist(), height=h)
    return value


def rotate_transform(t: ProtoTransform, R: np.ndarray) -> ProtoTransform:
    """Push every term forward by the rotation R."""
    R = check_rotation(R)
    terms = tuple(
        Term(
            gain=term.gain,
            anchor=R @ term.anchor,
            support=SphericalPolygon(term.support.vertices @ R.T),
            vertex=term.vertex,
        )
        for term in t.terms
    )
    return ProtoTransform(terms=terms, mesh_id=t.mesh_id, dimension=t.dimension)


def merge_terms(t: ProtoTransform) -> ProtoTransform:
    """Glue adjacent same-vertex supports with equal gain while they stay convex."""
    groups: List[List[Term]] = []
    for term in t.terms:
        if groups and groups[-1][0].vertex == term.vertex and np.array_equal(
            groups[-1][0].anchor, term.anchor
        ):
            groups[-1].append(term)
        else:
            groups.append([term])

    merged: List[Term] = []
    for group in groups:
        regions = merge_convex_cells(
            [term.support for term in group], [term.gain for term in group]
        )
        merged.extend(
            Term(gain=gain, anchor=group[0].anchor, support=cell, vertex=group[0].vertex)
            for cell, gain in regions
        )
    logger.debug("Merged terms", before=len(t.terms), after=len(merged))
    return ProtoTransform(terms=tuple(merged), mesh_id=t.mesh_id, dimension=t.dimension)

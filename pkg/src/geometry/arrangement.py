"""
Great-circle arrangements on S^2 and merging of adjacent convex cells.

Cells are produced by splitting the two hemispheres of the first circle by
every further circle in turn, so each cell is an intersection of closed
half-spaces and therefore convex.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.config import get_config
from ..utils.logger import get_logger
from .sphere import GreatCircle, SphericalPolygon, clip_halfspace, hemisphere

logger = get_logger(__name__)

# vertices closer than this are treated as the same arrangement vertex
VERTEX_MATCH = 1e-9


@dataclass(frozen=True, eq=False)
class Arrangement:
    circles: Tuple[GreatCircle, ...]
    cells: Tuple[SphericalPolygon, ...]
    adjacency: Tuple[Tuple[int, ...], ...] = ()
    # global vertex ids per cell, parallel to each cell's vertex list
    cell_vertex_ids: Tuple[Tuple[int, ...], ...] = ()
    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    # indices of the circles each vertex lies on
    vertex_labels: Tuple[Tuple[int, ...], ...] = ()

    @property
    def is_full_sphere(self) -> bool:
        """No circles: the whole sphere is one region, left to the caller."""
        return not self.circles

    def intersection_vertices(self) -> List[Tuple[np.ndarray, Tuple[int, ...]]]:
        """Vertices lying on at least two circles, with their circle labels."""
        return [
            (self.vertices[k], labels)
            for k, labels in enumerate(self.vertex_labels)
            if len(labels) >= 2
        ]


def dedupe_circles(
    circles: Sequence[GreatCircle], tol: Optional[float] = None
) -> List[GreatCircle]:
    if tol is None:
        tol = get_config().tolerances.circle_merge
    unique: List[GreatCircle] = []
    for circle in circles:
        if not any(circle.same_as(kept, tol) for kept in unique):
            unique.append(circle)
    return unique


def cluster_points(points: np.ndarray, tol: float = VERTEX_MATCH) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy tolerance clustering; returns (ids per point, representatives)."""
    representatives: List[np.ndarray] = []
    ids = np.empty(len(points), dtype=np.int64)
    for k, point in enumerate(points):
        for r, rep in enumerate(representatives):
            if np.linalg.norm(point - rep) <= tol:
                ids[k] = r
                break
        else:
            ids[k] = len(representatives)
            representatives.append(point)
    return ids, np.array(representatives).reshape(-1, 3)


def _vertex_ids(cells: Sequence[SphericalPolygon]) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    if not cells:
        return [], np.zeros((0, 3))
    stacked = np.vstack([cell.vertices for cell in cells])
    ids, representatives = cluster_points(stacked)
    per_cell: List[Tuple[int, ...]] = []
    offset = 0
    for cell in cells:
        per_cell.append(tuple(int(i) for i in ids[offset : offset + len(cell)]))
        offset += len(cell)
    return per_cell, representatives


def _directed_edges(ids: Sequence[int]) -> List[Tuple[int, int]]:
    return [(ids[k], ids[(k + 1) % len(ids)]) for k in range(len(ids))]


def _adjacency(cell_ids: Sequence[Tuple[int, ...]]) -> Tuple[Tuple[int, ...], ...]:
    owners: Dict[Tuple[int, int], List[int]] = {}
    for c, ids in enumerate(cell_ids):
        for a, b in _directed_edges(ids):
            owners.setdefault((min(a, b), max(a, b)), []).append(c)
    neighbours: List[set] = [set() for _ in cell_ids]
    for cells in owners.values():
        for x, y in combinations(cells, 2):
            if x != y:
                neighbours[x].add(y)
                neighbours[y].add(x)
    return tuple(tuple(sorted(n)) for n in neighbours)


def build_arrangement(circles: Sequence[GreatCircle]) -> Arrangement:
    """Cell complex of the sphere cut by ``circles`` (duplicates merged)."""
    unique = dedupe_circles(circles)
    if not unique:
        return Arrangement(circles=(), cells=())

    first = unique[0].normal
    cells: List[SphericalPolygon] = [hemisphere(first), hemisphere(-first)]
    for circle in unique[1:]:
        cells = [
            part
            for cell in cells
            for side in (circle.normal, -circle.normal)
            for part in clip_halfspace(cell, side)
        ]

    cell_ids, vertices = _vertex_ids(cells)
    normals = np.array([c.normal for c in unique])
    on_circle = np.abs(vertices @ normals.T) <= get_config().tolerances.on_circle
    labels = tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in on_circle)

    logger.debug("Built arrangement", circles=len(unique), cells=len(cells))
    return Arrangement(
        circles=tuple(unique),
        cells=tuple(cells),
        adjacency=_adjacency(cell_ids),
        cell_vertex_ids=tuple(cell_ids),
        vertices=vertices,
        vertex_labels=labels,
    )


def _union_ids(a: Tuple[int, ...], b: Tuple[int, ...]) -> Optional[Tuple[int, ...]]:
    """Boundary of two cells glued along their single shared edge."""
    shared = [
        k for k, (x, y) in enumerate(_directed_edges(a)) if (y, x) in set(_directed_edges(b))
    ]
    if len(shared) != 1:
        return None
    k = shared[0]
    start, end = a[k], a[(k + 1) % len(a)]
    # walk a from `end` around to `start`, then b from after `start` back to `end`
    i = (k + 1) % len(a)
    walk_a = [a[(i + step) % len(a)] for step in range(len(a))]
    j = b.index(start)
    walk_b = [b[(j + step) % len(b)] for step in range(1, len(b) - 1)]
    if walk_b and walk_b[-1] == end:
        return None
    union = tuple(walk_a + walk_b)
    if len(set(union)) != len(union):
        return None
    return union


def _convex(polygon: SphericalPolygon) -> bool:
    angles_ok = bool(np.all(polygon.interior_angles <= np.pi + 1e-10))
    return angles_ok and polygon.area <= 2 * np.pi + 1e-9


def _drop_straight_vertices(polygon: SphericalPolygon) -> SphericalPolygon:
    vertices = list(polygon.vertices)
    changed = True
    while changed and len(vertices) > 3:
        changed = False
        current = SphericalPolygon(np.array(vertices))
        for k, angle in enumerate(current.interior_angles):
            prev, nxt = vertices[k - 1], vertices[(k + 1) % len(vertices)]
            if abs(angle - np.pi) < 1e-12 and prev @ nxt > -1.0 + 1e-6:
                del vertices[k]
                changed = True
                break
    return SphericalPolygon(np.array(vertices))


def merge_convex_cells(
    cells: Sequence[SphericalPolygon], gains: Sequence[int]
) -> List[Tuple[SphericalPolygon, int]]:
    """Repeatedly glue adjacent equal-gain cells whose union stays convex."""
    polygons = list(cells)
    labels = list(gains)
    ids, points = _vertex_ids(polygons)
    ids = list(ids)

    merged = True
    while merged:
        merged = False
        for x, y in combinations(range(len(polygons)), 2):
            if labels[x] != labels[y]:
                continue
            union = _union_ids(ids[x], ids[y])
            if union is None:
                continue
            candidate = SphericalPolygon(points[list(union)])
            if not _convex(candidate):
                continue
            polygons[x], ids[x] = candidate, union
            del polygons[y], ids[y], labels[y]
            merged = True
            break

    return [(_drop_straight_vertices(p), g) for p, g in zip(polygons, labels)]

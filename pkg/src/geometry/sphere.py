"""
Spherical computational-geometry kernel: great circles, convex spherical
polygons, half-space clipping, areas, moments and bounding caps.

Polygons are counterclockwise seen from outside the sphere, so the interior of
edge ``a -> b`` is the side ``v . (a x b) >= 0``.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from ..utils.config import get_config
from ..utils.errors import (
    DegeneratePairError,
    DegeneratePolygonError,
    InvalidRotationError,
)

TWO_PI = 2.0 * np.pi


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def canonical_normal(n: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Unit normal with its first non-negligible coordinate positive."""
    n = np.asarray(n, dtype=np.float64)
    norm = np.linalg.norm(n)
    if norm < tol:
        raise DegeneratePairError("great circle normal has zero length")
    n = n / norm
    for coordinate in n:
        if abs(coordinate) > tol:
            return n if coordinate > 0 else -n
    return n


@dataclass(frozen=True, eq=False)
class GreatCircle:
    """The circle {v : v . normal = 0}; normal is stored canonicalized."""

    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normal", canonical_normal(self.normal))

    def same_as(self, other: "GreatCircle", tol: Optional[float] = None) -> bool:
        if tol is None:
            tol = get_config().tolerances.circle_merge
        return abs(float(self.normal @ other.normal)) > 1.0 - tol


@dataclass(frozen=True)
class Cap:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not 0.0 <= self.radius <= np.pi + 1e-12:
            raise ValueError(f"cap radius {self.radius} outside [0, pi]")


@dataclass(frozen=True, eq=False)
class SphericalPolygon:
    """Ordered unit vertices joined by minor great-circle arcs."""

    vertices: np.ndarray

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64)
        if vertices.ndim != 2 or vertices.shape[1] != 3 or vertices.shape[0] < 3:
            raise DegeneratePolygonError(
                f"spherical polygon needs >= 3 vertices in R^3, got shape {vertices.shape}"
            )
        norms = np.linalg.norm(vertices, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DegeneratePolygonError("spherical polygon vertices must be unit vectors")
        # rows already unit to a few ulps are kept bit for bit
        drift = np.abs(norms - 1.0) > 4.0 * np.finfo(np.float64).eps
        vertices[drift] /= norms[drift, None]
        following = np.roll(vertices, -1, axis=0)
        tol = get_config().tolerances.antipodal
        if np.any(np.linalg.norm(vertices - following, axis=1) <= tol):
            raise DegeneratePolygonError("consecutive polygon vertices coincide")
        if np.any(np.linalg.norm(vertices + following, axis=1) <= tol):
            raise DegeneratePolygonError("consecutive polygon vertices are antipodal")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)

    def __len__(self) -> int:
        return int(self.vertices.shape[0])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Unit normals of the edge planes, pointing into the polygon."""
        cross = np.cross(self.vertices, np.roll(self.vertices, -1, axis=0))
        return cross / np.linalg.norm(cross, axis=1, keepdims=True)

    @cached_property
    def edge_angles(self) -> np.ndarray:
        following = np.roll(self.vertices, -1, axis=0)
        cross = np.linalg.norm(np.cross(self.vertices, following), axis=1)
        return np.arctan2(cross, np.sum(self.vertices * following, axis=1))

    @cached_property
    def interior_angles(self) -> np.ndarray:
        v = self.vertices
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        t_next = nxt - np.sum(nxt * v, axis=1, keepdims=True) * v
        t_prev = prev - np.sum(prev * v, axis=1, keepdims=True) * v
        sine = np.sum(v * np.cross(t_next, t_prev), axis=1)
        cosine = np.sum(t_next * t_prev, axis=1)
        return np.mod(np.arctan2(sine, cosine), TWO_PI)

    @cached_property
    def area(self) -> float:
        return float(np.sum(self.interior_angles) - (len(self) - 2) * np.pi)

    @cached_property
    def moment(self) -> np.ndarray:
        return 0.5 * (self.edge_angles @ self.edge_normals)

    @cached_property
    def cap(self) -> Cap:
        return bounding_cap(self)


def bisector_circle(x_i: Sequence[float], x_j: Sequence[float]) -> GreatCircle:
    """Directions along which x_i and x_j have equal height."""
    diff = np.asarray(x_i, dtype=np.float64) - np.asarray(x_j, dtype=np.float64)
    if np.linalg.norm(diff) <= get_config().tolerances.unit_norm:
        raise DegeneratePairError(f"coincident points {x_i!r} and {x_j!r}")
    return GreatCircle(diff)


def hemisphere(n: Sequence[float]) -> SphericalPolygon:
    """Closed hemisphere {v . n >= 0} as a 4-vertex polygon on its boundary."""
    n = _unit(np.asarray(n, dtype=np.float64))
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n)))] = 1.0
    p = _unit(helper - (helper @ n) * n)
    q = np.cross(n, p)
    return SphericalPolygon(np.array([p, q, -p, -q]))


def polygon_area(p: SphericalPolygon) -> float:
    """Area by angle excess: sum of interior angles minus (n - 2) pi."""
    area = p.area
    if area < get_config().tolerances.area_degenerate:
        raise DegeneratePolygonError(f"polygon area {area:.3e} is degenerate")
    return area


def polygon_moment(p: SphericalPolygon) -> np.ndarray:
    """Vector integral of v over the polygon, in closed form per edge."""
    return p.moment.copy()


def polygon_contains(p: SphericalPolygon, v: Sequence[float], tol: float = 0.0) -> bool:
    return bool(np.all(p.edge_normals @ np.asarray(v, dtype=np.float64) >= -tol))


def interior_point(p: SphericalPolygon) -> np.ndarray:
    """A unit vector strictly inside p (vertex centroid, else moment direction)."""
    centroid = np.sum(p.vertices, axis=0)
    if np.linalg.norm(centroid) > 1e-9:
        centroid = _unit(centroid)
        if np.min(p.edge_normals @ centroid) > 1e-12:
            return centroid
    return _unit(p.moment)


def bounding_cap(p: SphericalPolygon) -> Cap:
    """Cap around the vertex mean holding every vertex and edge of p.

    Caps wider than a hemisphere are not geodesically convex, so they are
    widened to the whole sphere.
    """
    center = np.sum(p.vertices, axis=0)
    if np.linalg.norm(center) < 1e-9:
        center = p.moment
    center = _unit(center)
    radius = float(np.max(np.arccos(np.clip(p.vertices @ center, -1.0, 1.0))))
    if radius > 0.5 * np.pi + 1e-12:
        radius = np.pi
    return Cap(center=center, radius=radius)


def caps_disjoint(c1: Cap, c2: Cap, tol: float = 1e-12) -> bool:
    gap = float(np.arccos(np.clip(c1.center @ c2.center, -1.0, 1.0)))
    return gap > c1.radius + c2.radius + tol


def _crossing(a: np.ndarray, b: np.ndarray, da: float, db: float) -> np.ndarray:
    # positive combination keeps the point on the minor arc a-b
    return _unit(abs(da) * b + abs(db) * a)


def clip_halfspace(
    p: SphericalPolygon, n: Sequence[float], eps: Optional[float] = None
) -> List[SphericalPolygon]:
    """Part of p on the side v . n >= 0 (spherical Sutherland-Hodgman).

    Vertices within ``eps`` of the circle count as on it. Stretches of the
    result running along the clip circle are split so that no edge spans a
    half circle.
    """
    tolerances = get_config().tolerances
    if eps is None:
        eps = tolerances.on_circle
    n = _unit(np.asarray(n, dtype=np.float64))
    vertices = p.vertices
    d = vertices @ n
    inside = d > eps
    outside = d < -eps

    if not outside.any():
        if inside.any():
            return [p]
        # every vertex on the circle: p is a hemisphere bounded by it
        return [p] if float(n @ p.moment) > 0.0 else []
    if not inside.any():
        return []

    points: List[np.ndarray] = []
    on_circle: List[bool] = []
    count = len(vertices)
    for i in range(count):
        current, previous = vertices[i], vertices[i - 1]
        dc, dp = d[i], d[i - 1]
        if dc >= -eps:
            if dp < -eps and dc > eps:
                points.append(_crossing(previous, current, dp, dc))
                on_circle.append(True)
            points.append(current)
            on_circle.append(not inside[i])
        elif dp > eps:
            points.append(_crossing(previous, current, dp, dc))
            on_circle.append(True)

    # drop repeats produced by crossings that land on a vertex
    merged: List[np.ndarray] = []
    merged_on: List[bool] = []
    for point, flag in zip(points, on_circle):
        if merged and np.linalg.norm(point - merged[-1]) <= tolerances.antipodal:
            merged_on[-1] = merged_on[-1] or flag
            continue
        merged.append(point)
        merged_on.append(flag)
    while len(merged) > 1 and np.linalg.norm(merged[0] - merged[-1]) <= tolerances.antipodal:
        merged_on[0] = merged_on[0] or merged_on[-1]
        merged.pop()
        merged_on.pop()

    result: List[np.ndarray] = []
    for i, point in enumerate(merged):
        result.append(point)
        j = (i + 1) % len(merged)
        if not (merged_on[i] and merged_on[j]):
            continue
        # travel counterclockwise about n from point to the next circle point
        along = np.cross(n, point)
        turn = np.mod(np.arctan2(merged[j] @ along, merged[j] @ point), TWO_PI)
        if turn >= np.pi - 1e-9:
            half = 0.5 * turn
            result.append(_unit(np.cos(half) * point + np.sin(half) * along))

    if len(result) < 3:
        return []
    try:
        clipped = SphericalPolygon(np.array(result))
    except DegeneratePolygonError:
        return []
    if clipped.area < tolerances.area_degenerate or clipped.area > 2.0 * TWO_PI - 1e-9:
        return []
    return [clipped]


def intersect_convex(p: SphericalPolygon, q: SphericalPolygon) -> List[SphericalPolygon]:
    """p intersected with q by clipping p against each edge circle of q."""
    if caps_disjoint(p.cap, q.cap):
        return []
    pieces = [p]
    previous_normal = None
    for normal in q.edge_normals:
        if previous_normal is not None and normal @ previous_normal > 1.0 - 1e-15:
            continue
        previous_normal = normal
        pieces = [piece for part in pieces for piece in clip_halfspace(part, normal)]
        if not pieces:
            return []
    return pieces


def check_rotation(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    tol = get_config().tolerances.rotation_check
    if R.shape != (3, 3):
        raise InvalidRotationError(f"rotation must be 3x3, got {R.shape}")
    if np.linalg.norm(R @ R.T - np.eye(3)) > tol:
        raise InvalidRotationError("matrix is not orthogonal")
    if np.linalg.det(R) < 0:
        raise InvalidRotationError("matrix is a reflection (det -1)")
    return R


def rotate_polygon(p: SphericalPolygon, R: np.ndarray) -> SphericalPolygon:
    R = check_rotation(R)
    return SphericalPolygon(p.vertices @ R.T)

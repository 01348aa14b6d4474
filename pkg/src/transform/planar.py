"""
Planar (2D) proto-transform: the circle of directions is cut at every
equi-height angle, and on each arc the vertex height order and the Euler
values just above each vertex are tabulated.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..mesh.mesh import Mesh, restriction_chi
from ..utils.config import get_config
from ..utils.errors import (
    DegenerateMeshError,
    DimensionMismatchError,
    NumericalConsistencyError,
)
from ..utils.logger import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * np.pi
# equi-height angles closer than this are one breakpoint
ANGLE_MERGE = 1e-12


@dataclass(frozen=True)
class PlanarArc:
    start: float
    end: float
    order: Tuple[int, ...]
    values: Tuple[int, ...]

    def contains(self, angle: float) -> bool:
        angle = float(np.mod(angle, TWO_PI))
        if self.end > TWO_PI:
            return angle >= self.start or angle < self.end - TWO_PI
        return self.start <= angle < self.end

    @property
    def gains(self) -> np.ndarray:
        """Euler-value jumps at each vertex of the order."""
        return np.diff(np.asarray(self.values, dtype=np.int64), prepend=0)


@dataclass(frozen=True, eq=False)
class ArcTable:
    arcs: Tuple[PlanarArc, ...]
    vertices: np.ndarray
    radius: float
    mesh_id: str = ""

    def arc_at(self, angle: float) -> PlanarArc:
        for arc in self.arcs:
            if arc.contains(angle):
                return arc
        return self.arcs[-1]


def _pair_angles(p: np.ndarray, q: np.ndarray) -> Tuple[float, float]:
    diff = p - q
    first = float(np.mod(np.arctan2(diff[0], -diff[1]), TWO_PI))
    return first, float(np.mod(first + np.pi, TWO_PI))


def equi_height_table(m: Mesh) -> List[Tuple[int, int, float, float]]:
    """Rows (i, j, D, theta) with D = (x_i - x_j)/(y_j - y_i), theta = atan(D)."""
    _require_planar(m)
    rows = []
    for i in range(m.n_vertices):
        for j in range(i + 1, m.n_vertices):
            (xi, yi), (xj, yj) = m.vertices[i], m.vertices[j]
            if yj == yi:
                slope = np.inf if xi > xj else -np.inf
            else:
                slope = (xi - xj) / (yj - yi)
            rows.append((i, j, float(slope), float(np.arctan(slope))))
    return rows


def _require_planar(m: Mesh):
    if m.dimension != 2:
        raise DimensionMismatchError(f"planar transform needs a 2D mesh, got {m.dimension}D")


def _order_and_values(m: Mesh, angle: float) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    v = np.array([np.cos(angle), np.sin(angle)])
    heights = m.vertices @ v
    order = np.argsort(heights, kind="stable")
    sorted_heights = heights[order]
    gaps = np.diff(sorted_heights)
    epsilon = 0.5 * float(np.min(gaps)) if gaps.size else 1.0
    values = tuple(restriction_chi(m, v, h + epsilon) for h in sorted_heights)
    return tuple(int(i) for i in order), values


def build_proto_transform_2d(m: Mesh, radius: Optional[float] = None) -> ArcTable:
    """Arc table of a planar mesh inside the disc of the given radius."""
    _require_planar(m)
    if radius is None:
        radius = get_config().transform.planar_radius
    if np.max(np.linalg.norm(m.vertices, axis=1)) > radius + 1e-12:
        raise DegenerateMeshError(f"mesh {m.mesh_id!r} leaves the disc of radius {radius}")

    angles: List[float] = []
    for i in range(m.n_vertices):
        for j in range(i + 1, m.n_vertices):
            angles.extend(_pair_angles(m.vertices[i], m.vertices[j]))
    breakpoints: List[float] = []
    for angle in sorted(angles):
        if not breakpoints or angle - breakpoints[-1] > ANGLE_MERGE:
            breakpoints.append(angle)
    if len(breakpoints) > 1 and breakpoints[0] + TWO_PI - breakpoints[-1] <= ANGLE_MERGE:
        breakpoints.pop()

    if not breakpoints:
        order, values = _order_and_values(m, 0.0)
        arcs = (PlanarArc(0.0, TWO_PI, order, values),)
    else:
        bounds = breakpoints + [breakpoints[0] + TWO_PI]
        arcs = tuple(
            PlanarArc(start, end, *_order_and_values(m, 0.5 * (start + end)))
            for start, end in zip(bounds[:-1], bounds[1:])
        )
    logger.debug("Built planar arc table", mesh_id=m.mesh_id, arcs=len(arcs))
    return ArcTable(arcs=arcs, vertices=m.vertices.copy(), radius=float(radius), mesh_id=m.mesh_id)


def arc_height_integral(arc: Sequence[float], p: Sequence[float]) -> float:
    """Integral of p . (cos t, sin t) for t over the arc [tau, theta]."""
    tau, theta = arc
    x, y = p
    return float((np.cos(tau) - np.cos(theta)) * y + (np.sin(theta) - np.sin(tau)) * x)


def evaluate_ect_2d(table: ArcTable, angle: float, h: float) -> int:
    arc = table.arc_at(angle)
    v = np.array([np.cos(angle), np.sin(angle)])
    value = 0
    for vertex, after in zip(arc.order, arc.values):
        if h < table.vertices[vertex] @ v:
            break
        value = after
    return value


def _max_height_integral(tau: float, theta: float, p: np.ndarray, q: np.ndarray) -> float:
    """Integral of max(p . v, q . v) over the arc, split where they cross."""
    diff = p - q
    cuts = [tau, theta]
    if np.any(diff):
        # p . v = q . v at the angles perpendicular to p - q
        base = np.arctan2(diff[0], -diff[1])
        for k in range(-4, 5):
            angle = base + k * np.pi
            if tau < angle < theta:
                cuts.append(angle)
    cuts.sort()
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        v = np.array([np.cos(mid), np.sin(mid)])
        top = p if p @ v >= q @ v else q
        total += arc_height_integral((lo, hi), top)
    return total


def _common_breaks(a: ArcTable, b: ArcTable) -> List[float]:
    starts = sorted({float(np.mod(arc.start, TWO_PI)) for arc in a.arcs + b.arcs})
    merged: List[float] = []
    for s in starts:
        if not merged or s - merged[-1] > ANGLE_MERGE:
            merged.append(s)
    return merged


def inner_product_2d(a: ArcTable, b: ArcTable, radius: Optional[float] = None) -> float:
    """Exact L2 pairing of two planar ECTs over the circle times [-R, R].

    On each arc of the common refinement both ECTs are sums of
    gain * [h >= vertex . v], so the pairing is a sum over vertex pairs of
    g * g' * integral of (R - max(p . v, q . v)).
    """
    if radius is None:
        radius = a.radius
    if abs(a.radius - b.radius) > 1e-12:
        logger.warning("Arc tables built for different radii", a=a.radius, b=b.radius)
    breaks = _common_breaks(a, b)
    bounds = breaks + [breaks[0] + TWO_PI]

    contributions = []
    for tau, theta in zip(bounds[:-1], bounds[1:]):
        mid = 0.5 * (tau + theta)
        arc_a, arc_b = a.arc_at(mid), b.arc_at(mid)
        for i, gain_i in zip(arc_a.order, arc_a.gains):
            if gain_i == 0:
                continue
            p = a.vertices[i]
            for j, gain_j in zip(arc_b.order, arc_b.gains):
                if gain_j == 0:
                    continue
                q = b.vertices[j]
                overlap = radius * (theta - tau) - _max_height_integral(tau, theta, p, q)
                contributions.append(gain_i * gain_j * overlap)
    return float(np.sum(np.asarray(contributions, dtype=np.float64)))


def squared_distance_2d(a: ArcTable, b: ArcTable, radius: Optional[float] = None) -> float:
    value = (
        inner_product_2d(a, a, radius)
        - 2.0 * inner_product_2d(a, b, radius)
        + inner_product_2d(b, b, radius)
    )
    tol = get_config().tolerances.distance_clamp
    if value < -tol:
        raise NumericalConsistencyError(f"negative squared distance {value:.3e}")
    return max(value, 0.0)

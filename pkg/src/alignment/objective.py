"""
Alignment objective <x, A(e) y> and its exact gradient in the Euler angles.

Rotating y by R(e) moves both its anchors and its supports. For one pair
of terms with overlap Q = P_s cap R P_t and integrand
phi = 1 - max(x_s . v, y . v), y = R x_t, an angular velocity omega changes
the pair integral by omega . G with

    G = -(y x M_t) - sum over edges of Q on R P_t of (int phi v ds) x m

where M_t is the moment of the part of Q on which y is the higher anchor
and m is the inward normal of the moving edge. Where anchors coincide or
moving edges lie on static ones, the one-sided rates are averaged, which
is the symmetric derivative central differences converge to.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..geometry.integration import integrate_height
from ..geometry.sphere import SphericalPolygon, caps_disjoint, clip_halfspace, intersect_convex
from ..metrics.inner_product import ANCHOR_MATCH, inner_product
from ..transform.proto_transform import ProtoTransform, Term, rotate_transform
from ..utils.config import get_config
from ..utils.logger import get_logger
from ..utils.parallel import parallel_sum
from .dual import angular_velocities
from .rotations import EulerAngles, euler_to_matrix

logger = get_logger(__name__)

# anchors and edge circles this close are treated as coincident
CUSP_TOLERANCE = 1e-9


class GradientResult(NamedTuple):
    gradient: np.ndarray
    non_smooth: bool = False
    finite_difference: Optional[np.ndarray] = None


def alignment_objective(
    x: ProtoTransform, y: ProtoTransform, e: EulerAngles, jobs: Optional[int] = 1
) -> float:
    return inner_product(x, rotate_transform(y, euler_to_matrix(e)), jobs)


def arc_moments(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Integrals of v and v v^T along the minor arc from a to b."""
    normal = np.cross(a, b)
    sine = np.linalg.norm(normal)
    theta = np.arctan2(sine, a @ b)
    u = np.cross(normal / sine, a)
    first = a * np.sin(theta) + u * (1.0 - np.cos(theta))
    cc = 0.5 * theta + 0.25 * np.sin(2.0 * theta)
    ss = 0.5 * theta - 0.25 * np.sin(2.0 * theta)
    cs = 0.5 * np.sin(theta) ** 2
    second = cc * np.outer(a, a) + ss * np.outer(u, u) + cs * (np.outer(a, u) + np.outer(u, a))
    return first, second


def _edge_circle(normals: np.ndarray, a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    for m in normals:
        if abs(m @ a) <= CUSP_TOLERANCE and abs(m @ b) <= CUSP_TOLERANCE:
            return m
    return None


def _boundary_rate(part: SphericalPolygon, anchor: np.ndarray, s: Term, t: Term) -> np.ndarray:
    """Transport term of the edges of ``part`` carried along by t's rotation."""
    rate = np.zeros(3)
    vertices = part.vertices
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        moving = _edge_circle(t.support.edge_normals, a, b)
        if moving is None:
            continue
        weight = 0.5 if _edge_circle(s.support.edge_normals, a, b) is not None else 1.0
        first, second = arc_moments(a, b)
        rate -= weight * np.cross(first - second @ anchor, moving)
    return rate


def pair_value_and_rate(s: Term, t: Term) -> Tuple[float, np.ndarray]:
    """Un-weighted pair integral and its rate vector G (t already rotated)."""
    value = 0.0
    rate = np.zeros(3)
    y = t.anchor
    for region in intersect_convex(s.support, t.support):
        split = s.anchor - y
        if np.linalg.norm(split) <= ANCHOR_MATCH:
            parts = [(region, s.anchor, False)]
        else:
            parts = [(part, s.anchor, False) for part in clip_halfspace(region, split)]
            parts += [(part, y, True) for part in clip_halfspace(region, -split)]

        if np.linalg.norm(split) <= CUSP_TOLERANCE:
            rate -= 0.5 * np.cross(y, region.moment)
        for part, anchor, y_side in parts:
            value += part.area - integrate_height(part, anchor)
            if y_side and np.linalg.norm(split) > CUSP_TOLERANCE:
                rate -= np.cross(y, part.moment)
            rate += _boundary_rate(part, anchor, s, t)
    return value, rate


def _row_rates(args: Tuple[Term, Sequence[Term], bool]) -> np.ndarray:
    s, others, prefilter = args
    rates = np.zeros((len(others), 3))
    for k, t in enumerate(others):
        if prefilter and caps_disjoint(s.cap, t.cap):
            continue
        _, rate = pair_value_and_rate(s, t)
        rates[k] = s.gain * t.gain * rate
    return rates


def _rate_sum(
    rows: Sequence[Term], rotated: ProtoTransform, jobs: Optional[int]
) -> np.ndarray:
    if not rows or not rotated.terms:
        return np.zeros(3)
    prefilter = get_config().metric.use_cap_prefilter
    return parallel_sum(_row_rates, [(s, rotated.terms, prefilter) for s in rows], jobs)


def analytic_gradient(
    x: ProtoTransform, y: ProtoTransform, e: EulerAngles, jobs: Optional[int] = 1
) -> np.ndarray:
    R, omegas = angular_velocities(e)
    return omegas @ _rate_sum(x.terms, rotate_transform(y, R), jobs)


def finite_difference_gradient(
    x: ProtoTransform,
    y: ProtoTransform,
    e: EulerAngles,
    step: Optional[float] = None,
    jobs: Optional[int] = 1,
) -> np.ndarray:
    """Central differences of the objective in each Euler angle."""
    if step is None:
        step = get_config().alignment.fd_step
    base = np.asarray(e, dtype=np.float64)
    gradient = np.zeros(3)
    for k in range(3):
        offset = np.zeros(3)
        offset[k] = step
        upper = alignment_objective(x, y, EulerAngles.from_array(base + offset), jobs)
        lower = alignment_objective(x, y, EulerAngles.from_array(base - offset), jobs)
        gradient[k] = (upper - lower) / (2.0 * step)
    return gradient


def objective_gradient(
    x: ProtoTransform,
    y: ProtoTransform,
    e: EulerAngles,
    jobs: Optional[int] = 1,
    validate: Optional[bool] = None,
) -> GradientResult:
    """Exact gradient, optionally checked against central differences.

    A mismatch beyond the configured relative tolerance marks the point as
    non-smooth and logs a warning; the analytic value is still returned.
    """
    settings = get_config().alignment
    if validate is None:
        validate = settings.validate_gradient
    gradient = analytic_gradient(x, y, e, jobs)
    if not validate:
        return GradientResult(gradient)

    fd = finite_difference_gradient(x, y, e, settings.fd_step, jobs)
    error = np.linalg.norm(gradient - fd) / max(np.linalg.norm(fd), 1e-6)
    non_smooth = bool(error > settings.fd_rel_tolerance)
    if non_smooth:
        logger.warning(
            "Gradient disagrees with finite differences; non-smooth point",
            angles=list(e),
            relative_error=float(error),
        )
    return GradientResult(gradient, non_smooth, fd)


def stochastic_gradient_step(
    x: ProtoTransform,
    y: ProtoTransform,
    e: EulerAngles,
    batch: Sequence[int],
    jobs: Optional[int] = 1,
) -> np.ndarray:
    """Unbiased gradient estimate from a subset of x's terms.

    Repeated indices count once per draw.
    """
    indices = np.asarray(batch, dtype=np.int64).ravel()
    if indices.size == 0:
        raise ValueError("stochastic gradient needs a non-empty batch")
    if indices.min() < 0 or indices.max() >= len(x):
        raise IndexError(f"batch indices must lie in [0, {len(x)})")
    R, omegas = angular_velocities(e)
    rows: List[Term] = [x.terms[i] for i in indices]
    rates = _rate_sum(rows, rotate_transform(y, R), jobs)
    return omegas @ rates * (len(x) / indices.size)

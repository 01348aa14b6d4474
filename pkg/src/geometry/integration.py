"""
Exact integration of the height function v -> a . v over spherical polygons.

Two closed forms are available:

* ``moment``: a . M(P) with M(P) = 1/2 sum_k theta_k m_k the vector moment of
  the polygon (edge k spans angle theta_k in the plane with unit normal m_k).
* ``chart``: the Stokes 1-form in latitude/longitude coordinates, integrated
  edge by edge with the closed-form primitives below after the polygon is cut
  into small pieces and each piece is rotated onto the equator, away from the
  poles and the longitude seam.
"""

from typing import Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from ..utils.config import get_config
from ..utils.errors import IntegrationChartError
from ..utils.logger import get_logger
from .sphere import SphericalPolygon, clip_halfspace

logger = get_logger(__name__)

QUARTER_TURN = 0.5 * np.pi
# below this |a| the primitives switch to their Taylor expansions
SMALL_SLOPE = 1e-4


def integrate_height(
    p: SphericalPolygon, anchor: Sequence[float], method: Optional[str] = None
) -> float:
    """Integral of (anchor . v) over p against the surface measure."""
    anchor = np.asarray(anchor, dtype=np.float64)
    if not np.any(anchor):
        return 0.0
    if method is None:
        method = get_config().integration.method
    if method == "moment":
        return float(anchor @ p.moment)
    if method == "chart":
        return chart_integral(p, anchor)
    raise ValueError(f"unknown integration method {method!r}")


def _wrap(angle):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - angle, 2.0 * np.pi)


def _edge_primitive(a: float, u0: float, u1: float, d: float, sin_t: float, cos_t: float) -> float:
    """Integral of the 1-form along tan(tau) = a cos(u), u from u0 to u1.

    u is longitude minus the circle's phase phi_0 and d = phi_0 - phi_anchor.
    The three pieces are the integrals of cos(2 tau), sin(2 tau) cos(u + d)
    and tau cos(u + d) over the edge.
    """
    du = u1 - u0
    b = np.sqrt(1.0 + a * a)
    # G = int 1/(1 + a^2 cos^2 u)
    dG = _wrap(np.arctan2(np.sin(u1), b * np.cos(u1)) - np.arctan2(np.sin(u0), b * np.cos(u0))) / b
    c0, c1 = np.cos(u0), np.cos(u1)
    if abs(a) > SMALL_SLOPE:
        # H = int cos^2 u / (1 + a^2 cos^2 u), L = log(1 + a^2 cos^2 u) / (2 a^2)
        dH = (du - dG) / (a * a)
        dL = (np.log1p(a * a * c1 * c1) - np.log1p(a * a * c0 * c0)) / (2.0 * a * a)
    else:
        def cos2(u):
            return 0.5 * u + 0.25 * np.sin(2.0 * u)

        def cos4(u):
            return 0.375 * u + 0.25 * np.sin(2.0 * u) + np.sin(4.0 * u) / 32.0

        dH = cos2(u1) - cos2(u0) - a * a * (cos4(u1) - cos4(u0))
        dL = 0.5 * (c1 * c1 - c0 * c0) - 0.25 * a * a * (c1 ** 4 - c0 ** 4)

    i_cos2tau = 2.0 * dG - du
    i_sin2tau = 2.0 * a * (np.cos(d) * dH + np.sin(d) * dL)
    boundary = np.arctan(a * c1) * np.sin(u1 + d) - np.arctan(a * c0) * np.sin(u0 + d)
    i_tau = boundary + a * np.cos(d) * (dG - dH) - a * np.sin(d) * dL
    return 0.25 * sin_t * i_cos2tau - 0.25 * cos_t * i_sin2tau - 0.5 * cos_t * i_tau


def _piece_integral(vertices: np.ndarray, anchor: np.ndarray) -> float:
    """Stokes-form integral over a polygon already placed in a valid chart."""
    scale = np.linalg.norm(anchor)
    unit_anchor = anchor / scale
    tau_a = np.arcsin(np.clip(unit_anchor[2], -1.0, 1.0))
    phi_a = np.arctan2(unit_anchor[1], unit_anchor[0])
    sin_t, cos_t = np.sin(tau_a), np.cos(tau_a)

    total = 0.0
    following = np.roll(vertices, -1, axis=0)
    for start, end in zip(vertices, following):
        normal = np.cross(start, end)
        length = np.linalg.norm(normal)
        if length < 1e-15:
            continue
        normal /= length
        rho = np.hypot(normal[0], normal[1])
        slope = -rho / normal[2]
        phase = np.arctan2(normal[1], normal[0]) if rho > 0.0 else 0.0
        phi0 = np.arctan2(start[1], start[0])
        sweep = _wrap(np.arctan2(end[1], end[0]) - phi0)
        # keep every sub-arc below a quarter turn of longitude
        pieces = int(np.floor(abs(sweep) / QUARTER_TURN)) + 1
        bounds = phi0 + sweep * np.arange(pieces + 1) / pieces - phase
        d = phase - phi_a
        for u0, u1 in zip(bounds[:-1], bounds[1:]):
            total += _edge_primitive(slope, u0, u1, d, sin_t, cos_t)
    return scale * total


def _chart_admissible(vertices: np.ndarray, anchor: np.ndarray, margin: float) -> bool:
    if np.any(np.abs(vertices[:, 2]) > 1.0 - margin):
        return False
    normals = np.cross(vertices, np.roll(vertices, -1, axis=0))
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(np.abs(normals[:, 2]) <= margin * lengths):
        return False
    # seam: the half-plane y = 0, x > 0 must stay clear of the piece
    if np.any(vertices[:, 0] >= -margin):
        return False
    unit_anchor = anchor / np.linalg.norm(anchor)
    return abs(unit_anchor[2]) < 1.0 - margin


def _towards_chart_center(center: np.ndarray) -> np.ndarray:
    """Rotation taking ``center`` to (-1, 0, 0)."""
    target = np.array([-1.0, 0.0, 0.0])
    rotation, _ = Rotation.align_vectors(target[None, :], center[None, :])
    return rotation.as_matrix()


def chart_integral(p: SphericalPolygon, anchor: np.ndarray) -> float:
    """Height integral through the latitude/longitude Stokes form."""
    settings = get_config().integration
    rng = np.random.default_rng(settings.chart_seed)
    frame = Rotation.random(random_state=rng).as_matrix()

    # octant-sized pieces in a random frame each fit inside a small cap
    pieces = [SphericalPolygon(p.vertices @ frame.T)]
    for axis in np.eye(3):
        pieces = [
            part
            for piece in pieces
            for sign in (1.0, -1.0)
            for part in clip_halfspace(piece, sign * axis)
        ]
    anchor = frame @ anchor

    total = 0.0
    for piece in pieces:
        # center of the octant holding the piece
        center = np.sign(np.sum(piece.vertices, axis=0)) / np.sqrt(3.0)
        to_center = _towards_chart_center(center)
        for attempt in range(settings.chart_max_retries):
            spin = Rotation.from_euler("x", rng.uniform(0.0, 2.0 * np.pi)).as_matrix()
            chart = spin @ to_center
            vertices = piece.vertices @ chart.T
            local_anchor = chart @ anchor
            if _chart_admissible(vertices, local_anchor, settings.pole_margin):
                total += _piece_integral(vertices, local_anchor)
                break
            logger.warning("Retrying integration chart", attempt=attempt + 1)
        else:
            raise IntegrationChartError(
                f"no admissible chart after {settings.chart_max_retries} rotations"
            )
    return float(total)

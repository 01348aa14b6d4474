"""
Exact ECT inner products and distances between 3D proto-transforms.

With heights on [-1, 1], two terms pair to
gain_s * gain_t * (area(Q) - integral over Q of max(x_s . v, x_t . v)),
Q the intersection of their supports.
"""

from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..geometry.integration import integrate_height
from ..geometry.sphere import caps_disjoint, clip_halfspace, intersect_convex
from ..transform.proto_transform import ProtoTransform, Term
from ..utils.config import get_config
from ..utils.errors import DimensionMismatchError, NumericalConsistencyError
from ..utils.logger import get_logger, log_execution_time
from ..utils.parallel import parallel_map, parallel_sum, resolve_jobs
from .export import DistanceMatrix

logger = get_logger(__name__)

# anchors closer than this share a single height function
ANCHOR_MATCH = 1e-15


def _overlap_integral(s: Term, t: Term) -> float:
    """Integral of (1 - max(x_s . v, x_t . v)) over the support intersection."""
    total = 0.0
    for region in intersect_convex(s.support, t.support):
        split = s.anchor - t.anchor
        if np.linalg.norm(split) <= ANCHOR_MATCH:
            total += region.area - integrate_height(region, s.anchor)
            continue
        # x_s is the higher anchor on the side split . v >= 0
        for part in clip_halfspace(region, split):
            total += part.area - integrate_height(part, s.anchor)
        for part in clip_halfspace(region, -split):
            total += part.area - integrate_height(part, t.anchor)
    return total


def term_pair_integral(s: Term, t: Term) -> float:
    if caps_disjoint(s.cap, t.cap):
        return 0.0
    return s.gain * t.gain * _overlap_integral(s, t)


def _check_pair(a: ProtoTransform, b: ProtoTransform):
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"cannot pair {a.dimension}D transform {a.mesh_id!r} with {b.dimension}D {b.mesh_id!r}"
        )


def _row_contributions(args: Tuple[Term, Sequence[Term], bool]) -> np.ndarray:
    s, others, prefilter = args
    row = np.zeros(len(others), dtype=np.float64)
    for k, t in enumerate(others):
        if prefilter and caps_disjoint(s.cap, t.cap):
            continue
        row[k] = s.gain * t.gain * _overlap_integral(s, t)
    return row


def pair_contributions(
    a: ProtoTransform, b: ProtoTransform, jobs: Optional[int] = 1
) -> np.ndarray:
    """(len(a), len(b)) matrix of term-pair integrals."""
    _check_pair(a, b)
    if not a.terms or not b.terms:
        return np.zeros((len(a), len(b)))
    prefilter = get_config().metric.use_cap_prefilter
    rows = parallel_map(_row_contributions, [(s, b.terms, prefilter) for s in a.terms], jobs)
    return np.vstack(rows)


def inner_product(a: ProtoTransform, b: ProtoTransform, jobs: Optional[int] = 1) -> float:
    """ECT inner product.

    Pair contributions are summed in a fixed order unless
    ``performance.deterministic`` is off.
    """
    _check_pair(a, b)
    if not a.terms or not b.terms:
        return 0.0
    prefilter = get_config().metric.use_cap_prefilter
    return float(
        parallel_sum(_row_contributions, [(s, b.terms, prefilter) for s in a.terms], jobs)
    )


def _clamped(value: float, what: str) -> float:
    tol = get_config().tolerances.distance_clamp
    if value < -tol:
        raise NumericalConsistencyError(f"negative {what} {value:.3e}")
    return max(value, 0.0)


def squared_distance(a: ProtoTransform, b: ProtoTransform, jobs: Optional[int] = 1) -> float:
    value = inner_product(a, a, jobs) - 2.0 * inner_product(a, b, jobs) + inner_product(b, b, jobs)
    return _clamped(value, "squared distance")


def distance(a: ProtoTransform, b: ProtoTransform, jobs: Optional[int] = 1) -> float:
    return float(np.sqrt(squared_distance(a, b, jobs)))


def _unique_labels(ids: Sequence[str]) -> List[str]:
    """Mesh ids as labels, suffixed by position where empty or repeated."""
    labels = []
    for k, mesh_id in enumerate(ids):
        if mesh_id and list(ids).count(mesh_id) == 1:
            labels.append(mesh_id)
        else:
            labels.append(f"{mesh_id or 'mesh'}_{k}")
    return labels


def _inner_job(args: Tuple[ProtoTransform, ProtoTransform]) -> float:
    a, b = args
    return inner_product(a, b, jobs=1)


@log_execution_time(logger, "Distance matrix")
def distance_matrix(
    collection: Sequence[ProtoTransform], jobs: Optional[int] = 1
) -> DistanceMatrix:
    """All pairwise distances, each unordered pair computed once."""
    if len(collection) < 2:
        raise ValueError("distance_matrix needs at least two transforms")
    for other in collection[1:]:
        _check_pair(collection[0], other)
    labels = _unique_labels([t.mesh_id for t in collection])

    n = len(collection)
    pairs: List[Tuple[int, int]] = [(i, i) for i in range(n)] + list(combinations(range(n), 2))
    jobs = resolve_jobs(jobs)
    products = parallel_map(
        _inner_job, [(collection[i], collection[j]) for i, j in pairs], jobs, chunk_size=1
    )
    gram = np.zeros((n, n))
    for (i, j), value in zip(pairs, products):
        gram[i, j] = gram[j, i] = value
        if i != j:
            logger.info("Pair inner product computed", a=labels[i], b=labels[j])

    norms = np.diag(gram)
    squared = norms[:, None] - 2.0 * gram + norms[None, :]
    np.fill_diagonal(squared, 0.0)
    return DistanceMatrix.from_squared(labels, squared)

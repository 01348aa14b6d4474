"""
Discrete ECT: Euler curves sampled on a finite direction x height grid.

This is the conventional approximation the exact distances are compared
against. With quadrature weighting each grid cell carries the measure of
its share of the sphere (or circle) times the height spacing, so discrete
distances converge to the exact ones as the grid refines.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..mesh.directions import octahedron_directions
from ..mesh.mesh import Mesh, euler_curve
from ..utils.config import get_config
from ..utils.errors import DimensionMismatchError, GridMismatchError
from ..utils.logger import get_logger, log_execution_time
from ..utils.parallel import parallel_map
from .export import DistanceMatrix
from .mantel import mantel_correlation

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class DiscreteEct:
    directions: np.ndarray
    heights: np.ndarray
    values: np.ndarray
    mesh_id: str = ""

    def __post_init__(self):
        directions = np.array(self.directions, dtype=np.float64)
        heights = np.array(self.heights, dtype=np.float64)
        values = np.array(self.values, dtype=np.int64)
        if values.shape != (len(directions), len(heights)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(directions)} directions x {len(heights)} heights"
            )
        for array in (directions, heights, values):
            array.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "values", values)

    @property
    def dimension(self) -> int:
        return int(self.directions.shape[1])

    @property
    def shape(self):
        return self.values.shape

    def cell_weight(self) -> float:
        """Quadrature weight of one (direction, height) cell."""
        directions_measure = 4.0 * np.pi if self.dimension == 3 else 2.0 * np.pi
        height_range = self.heights[-1] - self.heights[0] if len(self.heights) > 1 else 0.0
        return directions_measure / len(self.directions) * height_range / len(self.heights)


def discrete_ect(
    m: Mesh,
    directions: Optional[np.ndarray] = None,
    n_heights: Optional[int] = None,
    radius: float = 1.0,
) -> DiscreteEct:
    """restriction_chi on every direction and ``n_heights`` heights in [-radius, radius]."""
    settings = get_config().metric
    if directions is None:
        directions = octahedron_directions(settings.octahedron_level)
    if n_heights is None:
        n_heights = settings.n_heights
    if n_heights < 2:
        raise ValueError(f"need at least two heights, got {n_heights}")
    directions = np.asarray(directions, dtype=np.float64)
    if directions.ndim != 2 or directions.shape[1] != m.dimension:
        raise DimensionMismatchError(
            f"{m.dimension}D mesh cannot be sampled along directions of shape {directions.shape}"
        )

    heights = np.linspace(-radius, radius, n_heights)
    values = np.vstack([euler_curve(m, v, heights) for v in directions])
    logger.debug("Sampled discrete ECT", mesh_id=m.mesh_id, shape=values.shape)
    return DiscreteEct(directions=directions, heights=heights, values=values, mesh_id=m.mesh_id)


def _check_grids(a: DiscreteEct, b: DiscreteEct):
    if a.shape != b.shape or not (
        np.array_equal(a.directions, b.directions) and np.array_equal(a.heights, b.heights)
    ):
        raise GridMismatchError(
            f"discrete ECTs {a.mesh_id!r} {a.shape} and {b.mesh_id!r} {b.shape} use different grids"
        )


def _weight(d: DiscreteEct, weighting: Optional[str]) -> float:
    if weighting is None:
        weighting = get_config().metric.discrete_weighting
    if weighting == "quadrature":
        return d.cell_weight()
    if weighting == "unweighted":
        return 1.0
    raise ValueError(f"unknown weighting {weighting!r}")


def discrete_inner_product(
    a: DiscreteEct, b: DiscreteEct, weighting: Optional[str] = None
) -> float:
    _check_grids(a, b)
    products = (a.values * b.values).astype(np.float64)
    return float(np.sum(products) * _weight(a, weighting))


def discrete_distance(a: DiscreteEct, b: DiscreteEct, weighting: Optional[str] = None) -> float:
    """Weighted L2 norm of the difference of the two value matrices."""
    _check_grids(a, b)
    diff = (a.values - b.values).astype(np.float64)
    return float(np.sqrt(np.sum(diff * diff) * _weight(a, weighting)))


def discrete_distance_matrix(
    collection: Sequence[DiscreteEct],
    weighting: Optional[str] = None,
    labels: Optional[Sequence[str]] = None,
) -> DistanceMatrix:
    n = len(collection)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = discrete_distance(collection[i], collection[j], weighting)
    if labels is None:
        labels = [d.mesh_id or f"mesh_{k}" for k, d in enumerate(collection)]
    return DistanceMatrix(labels=tuple(labels), values=values)


def subsample_discrete(d: DiscreteEct, direction_stride: int, height_stride: int) -> DiscreteEct:
    """Every ``direction_stride``-th direction and ``height_stride``-th height."""
    if direction_stride < 1 or height_stride < 1:
        raise ValueError("strides must be positive")
    return DiscreteEct(
        directions=d.directions[::direction_stride],
        heights=d.heights[::height_stride],
        values=d.values[::direction_stride, ::height_stride],
        mesh_id=d.mesh_id,
    )


def _discrete_job(args) -> DiscreteEct:
    m, directions, n_heights = args
    return discrete_ect(m, directions, n_heights)


@log_execution_time(logger, "Discretization sweep")
def discretization_sweep(
    meshes: Sequence[Mesh],
    digital: DistanceMatrix,
    levels: Iterable[int] = range(4),
    directions: Optional[np.ndarray] = None,
    n_heights: Optional[int] = None,
    jobs: Optional[int] = 1,
) -> pd.DataFrame:
    """Mantel correlation of digital distances against coarser and coarser grids.

    Level l keeps every 2^l-th direction and height of the full grid.
    """
    if len(meshes) != len(digital):
        raise ValueError(f"{len(meshes)} meshes for a {len(digital)}x{len(digital)} matrix")
    if directions is None:
        directions = octahedron_directions(get_config().metric.octahedron_level)
    full: List[DiscreteEct] = parallel_map(
        _discrete_job, [(m, directions, n_heights) for m in meshes], jobs
    )

    rows = []
    for level in levels:
        stride = 2 ** level
        sampled = [subsample_discrete(d, stride, stride) for d in full]
        matrix = discrete_distance_matrix(sampled, labels=digital.labels)
        rows.append(
            {
                "level": level,
                "n_directions": sampled[0].shape[0],
                "n_heights": sampled[0].shape[1],
                "mantel": mantel_correlation(digital, matrix),
            }
        )
        logger.info("Sweep level done", **rows[-1])
    return pd.DataFrame(rows, columns=["level", "n_directions", "n_heights", "mantel"])

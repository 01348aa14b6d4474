"""
Rotation search: adaptive Euler-angle grid search and gradient ascent.
"""

from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from ..transform.proto_transform import ProtoTransform
from ..utils.config import get_config
from ..utils.logger import get_logger, log_execution_time
from ..utils.parallel import parallel_map
from .objective import alignment_objective, objective_gradient, stochastic_gradient_step
from .rotations import EulerAngles, canonicalize, euler_to_matrix, so3_distance

logger = get_logger(__name__)

TRACE_COLUMNS = ["iteration", "alpha", "beta", "gamma", "objective", "so3_distance"]
INITIAL_SPACING = np.pi / 4
# objective values this close count as a tie; the earlier point wins
TIE_TOLERANCE = 1e-12
# grid points closer than this in SO(3) are neighbours when picking starts
CANDIDATE_RADIUS = 1.5 * INITIAL_SPACING

Schedule = Sequence[Tuple[Optional[int], float]]


@dataclass
class SearchTrace:
    records: List[Dict[str, float]] = field(default_factory=list)
    status: str = "max_iterations"

    def append(
        self,
        iteration: int,
        angles: EulerAngles,
        objective: float,
        truth: Optional[np.ndarray] = None,
    ):
        distance = (
            so3_distance(euler_to_matrix(angles), truth) if truth is not None else float("nan")
        )
        self.records.append(
            {
                "iteration": iteration,
                "alpha": angles.alpha,
                "beta": angles.beta,
                "gamma": angles.gamma,
                "objective": objective,
                "so3_distance": distance,
            }
        )

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=TRACE_COLUMNS)

    def to_csv(self, path: Union[str, Path]):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_records(cls, records: Sequence[Dict[str, float]], status: str = "max_iterations"):
        return cls(records=[dict(r) for r in records], status=status)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r["objective"] for r in self.records])

    @property
    def distances(self) -> np.ndarray:
        return np.array([r["so3_distance"] for r in self.records])


def spearman_trace_correlation(trace: SearchTrace) -> float:
    """Rank correlation between objective and distance to the known truth."""
    distances = trace.distances
    if np.any(np.isnan(distances)):
        raise ValueError("trace carries no distances to a reference rotation")
    return float(spearmanr(trace.objectives, distances)[0])


def _objective_job(args) -> float:
    x, y, angles = args
    return alignment_objective(x, y, angles, jobs=1)


def _evaluate(x, y, points: Sequence[EulerAngles], jobs: Optional[int]) -> np.ndarray:
    return np.array(parallel_map(_objective_job, [(x, y, p) for p in points], jobs, chunk_size=1))


def _best_index(values: np.ndarray) -> int:
    return int(np.flatnonzero(values >= values.max() - TIE_TOLERANCE)[0])


def initial_grid() -> List[EulerAngles]:
    """8 x 8 x 5 grid: alpha, beta in steps of pi/4, gamma from 0 to pi."""
    planar = [k * INITIAL_SPACING for k in range(8)]
    tilt = [k * INITIAL_SPACING for k in range(5)]
    return [EulerAngles(a, b, g) for a, b, g in product(planar, planar, tilt)]


def refinement_grid(center: EulerAngles, spacing: float) -> List[EulerAngles]:
    """4 points per axis at c -/+ spacing/4 and c -/+ 3 spacing/4."""
    offsets = spacing * np.array([-0.75, -0.25, 0.25, 0.75])
    axes = [c + offsets for c in center]
    return [EulerAngles(a, b, g) for a, b, g in product(*axes)]


def _rotation_distances(points: Sequence[EulerAngles]) -> np.ndarray:
    matrices = np.array([euler_to_matrix(p) for p in points])
    traces = np.einsum("ikl,jkl->ij", matrices, matrices)
    return np.arccos(np.clip((traces - 1.0) / 2.0, -1.0, 1.0))


def grid_candidates(
    points: Sequence[EulerAngles],
    values: np.ndarray,
    count: int,
    radius: float = CANDIDATE_RADIUS,
) -> List[int]:
    """Indices of up to ``count`` grid points that no point within ``radius``
    beats, best first and at most one per neighbourhood.

    The first index is always the overall best point.
    """
    if count < 1:
        raise ValueError(f"need at least one grid candidate, got {count}")
    values = np.asarray(values, dtype=np.float64)
    distances = _rotation_distances(points)
    best = _best_index(values)
    order = [best] + [int(i) for i in np.argsort(-values, kind="stable") if i != best]

    chosen: List[int] = []
    for i in order:
        near = distances[i] <= radius
        if np.any(values[near] > values[i] + TIE_TOLERANCE):
            continue
        if any(distances[i, j] <= radius for j in chosen):
            continue
        chosen.append(i)
        if len(chosen) == count:
            break
    return chosen


@log_execution_time(logger, "Adaptive grid search")
def adaptive_grid_search(
    x: ProtoTransform,
    y: ProtoTransform,
    iters: Optional[int] = None,
    truth: Optional[np.ndarray] = None,
    jobs: Optional[int] = 1,
    candidates: Optional[int] = None,
) -> Tuple[EulerAngles, SearchTrace]:
    """Best rotation of y against x.

    Every grid candidate is refined independently with the same shrinking
    spacing; the one with the highest final objective wins. The trace holds
    the winner's best point per iteration.
    """
    settings = get_config().alignment
    if iters is None:
        iters = settings.grid_iterations
    if candidates is None:
        candidates = settings.grid_candidates
    if iters < 1:
        raise ValueError(f"grid search needs at least one iteration, got {iters}")

    points = initial_grid()
    values = _evaluate(x, y, points, jobs)
    paths = [
        [(points[k], float(values[k]))] for k in grid_candidates(points, values, candidates)
    ]
    logger.debug("Grid candidates", count=len(paths), objectives=[p[0][1] for p in paths])

    spacing = INITIAL_SPACING
    for iteration in range(2, iters + 1):
        batches = [refinement_grid(path[-1][0], spacing) for path in paths]
        values = _evaluate(x, y, [p for batch in batches for p in batch], jobs)
        for path, batch, block in zip(paths, batches, np.split(values, len(batches))):
            point, value = path[-1]
            k = _best_index(block)
            if block[k] > value:
                point, value = batch[k], float(block[k])
            path.append((point, value))
        spacing /= 2.0
        leader = max(path[-1][1] for path in paths)
        logger.debug("Grid iteration", iteration=iteration, objective=leader, spacing=spacing)

    winner = paths[_best_index(np.array([path[-1][1] for path in paths]))]
    trace = SearchTrace()
    for iteration, (point, value) in enumerate(winner, start=1):
        trace.append(iteration, point, value, truth)

    best, best_value = canonicalize(winner[-1][0]), winner[-1][1]
    logger.info("Grid search finished", angles=list(best), objective=best_value)
    return best, trace


def final_grid_spacing(iters: int) -> float:
    """Spacing around the returned point after ``iters`` grid iterations."""
    return INITIAL_SPACING / 2 ** (iters - 1)


def warm_schedule(spacing: float) -> List[Tuple[Optional[int], float]]:
    """Step schedule for ascent started from a grid optimum of the given spacing."""
    return [(20, spacing), (40, spacing / 10.0), (None, spacing / 100.0)]


def step_for(schedule: Schedule, iteration: int) -> float:
    for last, step in schedule:
        if last is None or iteration <= last:
            return step
    return schedule[-1][1]


@log_execution_time(logger, "Gradient ascent")
def gradient_ascent(
    x: ProtoTransform,
    y: ProtoTransform,
    e0: EulerAngles,
    schedule: Optional[Schedule] = None,
    iters: Optional[int] = None,
    truth: Optional[np.ndarray] = None,
    batch_size: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = 1,
) -> Tuple[EulerAngles, SearchTrace]:
    """Normalized-gradient ascent returning the best angles seen.

    With ``batch_size`` each step uses a seeded random subset of x's terms.
    """
    settings = get_config().alignment
    if schedule is None:
        schedule = settings.step_schedule
    if iters is None:
        iters = settings.gradient_iterations
    if batch_size is None:
        batch_size = settings.batch_size
    if seed is None:
        seed = get_config().run.seed
    rng = np.random.default_rng(seed)

    trace = SearchTrace()
    current = EulerAngles(*(float(a) for a in e0))
    best, best_value = current, None
    for iteration in range(iters + 1):
        value = alignment_objective(x, y, current, jobs)
        trace.append(iteration, current, value, truth)
        if best_value is None or value > best_value:
            best, best_value = current, value
        if iteration == iters:
            break

        if batch_size is not None and batch_size < len(x):
            batch = rng.choice(len(x), size=batch_size, replace=False)
            gradient = stochastic_gradient_step(x, y, current, batch, jobs)
        else:
            gradient = objective_gradient(x, y, current, jobs, validate=iteration == 0).gradient
        norm = float(np.linalg.norm(gradient))
        if norm < settings.gradient_tolerance:
            trace.status = "zero_gradient" if iteration == 0 else "converged"
            logger.info("Gradient vanished", iteration=iteration, norm=norm)
            break
        step = step_for(schedule, iteration + 1)
        current = EulerAngles.from_array(current.as_array() + step * gradient / norm)
        logger.debug("Ascent step", iteration=iteration + 1, objective=value, step=step)

    best = canonicalize(best)
    logger.info(
        "Gradient ascent finished", angles=list(best), objective=best_value, status=trace.status
    )
    return best, trace


def grid_then_gradient(
    x: ProtoTransform,
    y: ProtoTransform,
    grid_iters: Optional[int] = None,
    ascent_iters: Optional[int] = None,
    truth: Optional[np.ndarray] = None,
    jobs: Optional[int] = 1,
) -> Tuple[EulerAngles, SearchTrace]:
    """Grid search warm start refined by gradient ascent; traces are concatenated."""
    if grid_iters is None:
        grid_iters = get_config().alignment.grid_iterations
    start, grid_trace = adaptive_grid_search(x, y, grid_iters, truth, jobs)
    best, ascent_trace = gradient_ascent(
        x,
        y,
        start,
        schedule=warm_schedule(final_grid_spacing(grid_iters)),
        iters=ascent_iters,
        truth=truth,
        jobs=jobs,
    )
    records = grid_trace.records + [
        dict(r, iteration=r["iteration"] + grid_iters) for r in ascent_trace.records
    ]
    return best, SearchTrace.from_records(records, status=ascent_trace.status)

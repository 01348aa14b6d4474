"""
Labelled distance matrices and their CSV form.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..utils.config import get_config
from ..utils.errors import LabelMismatchError, NumericalConsistencyError, SerializationError
from ..utils.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, hollow, non-negative matrix with one label per mesh."""

    labels: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        n = len(self.labels)
        if values.shape != (n, n):
            raise ValueError(f"distance matrix shape {values.shape} does not match {n} labels")
        if len(set(self.labels)) != n:
            raise ValueError("distance matrix labels must be unique")
        if not np.array_equal(values, values.T):
            raise ValueError("distance matrix must be symmetric")
        if np.any(values < 0) or np.any(np.diag(values) != 0):
            raise ValueError("distance matrix needs non-negative entries and a zero diagonal")
        values.setflags(write=False)
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.labels)

    def condensed(self) -> np.ndarray:
        """Strictly-upper-triangle entries in row-major order."""
        return self.values[np.triu_indices(len(self), k=1)]

    def permuted(self, order: Sequence[int]) -> "DistanceMatrix":
        """Rows and columns reordered jointly (labels follow)."""
        order = np.asarray(order)
        return DistanceMatrix(
            labels=tuple(self.labels[k] for k in order),
            values=self.values[np.ix_(order, order)],
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=list(self.labels), columns=list(self.labels))

    @classmethod
    def from_squared(cls, labels: Sequence[str], squared: np.ndarray) -> "DistanceMatrix":
        """Distances from squared distances, clamping round-off negatives."""
        squared = np.array(squared, dtype=np.float64)
        tol = get_config().tolerances.distance_clamp
        if np.any(squared < -tol):
            raise NumericalConsistencyError(
                f"negative squared distance {squared.min():.3e} in matrix"
            )
        upper = np.triu(np.sqrt(np.clip(squared, 0.0, None)), k=1)
        return cls(labels=tuple(labels), values=upper + upper.T)


def to_csv(matrix: DistanceMatrix, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix.to_frame().to_csv(path, float_format=FLOAT_FORMAT)
    logger.info("Wrote distance matrix", path=str(path), size=len(matrix))


def from_csv(path: Union[str, Path]) -> DistanceMatrix:
    """Read a matrix written by :func:`to_csv`; row and column labels must agree."""
    try:
        frame = pd.read_csv(path, index_col=0, dtype=str)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SerializationError(f"{path}: cannot read distance matrix: {e}") from e

    rows = [str(label) for label in frame.index]
    columns = [str(label) for label in frame.columns]
    if rows != columns:
        raise SerializationError(f"{path}: row labels {rows} differ from column labels {columns}")
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise SerializationError(f"{path}: non-numeric distance entry: {e}") from e
    try:
        return DistanceMatrix(labels=tuple(rows), values=values)
    except ValueError as e:
        raise SerializationError(f"{path}: {e}") from e


def check_same_labels(a: DistanceMatrix, b: DistanceMatrix):
    if a.labels != b.labels:
        raise LabelMismatchError(
            f"distance matrices are labelled differently: {list(a.labels)} vs {list(b.labels)}"
        )

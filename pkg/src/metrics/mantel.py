"""
Mantel correlation between two distance matrices.
"""

from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import pearsonr, spearmanr

from ..utils.errors import UndefinedCorrelationError
from ..utils.logger import get_logger
from .export import DistanceMatrix

logger = get_logger(__name__)


class MantelResult(NamedTuple):
    statistic: float
    p_value: float
    n: int


def _condensed_pair(a: DistanceMatrix, b: DistanceMatrix):
    if len(a) != len(b):
        raise ValueError(f"distance matrices differ in size: {len(a)} vs {len(b)}")
    if len(a) < 3:
        raise ValueError("distance matrices must be at least 3x3")
    x, y = a.condensed(), b.condensed()
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("correlation is undefined for constant distances")
    return x, y


def mantel_correlation(a: DistanceMatrix, b: DistanceMatrix) -> float:
    """Pearson correlation of the strictly-upper-triangle entries."""
    x, y = _condensed_pair(a, b)
    return float(pearsonr(x, y)[0])


def mantel_test(
    a: DistanceMatrix,
    b: DistanceMatrix,
    method: str = "pearson",
    permutations: int = 999,
    seed: Optional[int] = None,
) -> MantelResult:
    """Mantel statistic with a two-sided permutation p-value.

    Rows and columns of ``a`` are permuted jointly. The p-value is NaN when
    ``permutations`` is zero.
    """
    if method == "pearson":
        corr_func = pearsonr
    elif method == "spearman":
        corr_func = spearmanr
    else:
        raise ValueError(f"Invalid correlation method {method!r}")
    if permutations < 0:
        raise ValueError("Number of permutations must be >= 0")

    x, y = _condensed_pair(a, b)
    statistic = float(corr_func(x, y)[0])
    if permutations == 0:
        return MantelResult(statistic, float("nan"), len(a))

    rng = np.random.default_rng(seed)
    permuted = np.array(
        [
            corr_func(a.permuted(rng.permutation(len(a))).condensed(), y)[0]
            for _ in range(permutations)
        ]
    )
    extreme = np.count_nonzero(np.abs(permuted) >= abs(statistic))
    p_value = (extreme + 1) / (permutations + 1)
    logger.debug("Mantel test", statistic=statistic, p_value=p_value, permutations=permutations)
    return MantelResult(statistic, float(p_value), len(a))

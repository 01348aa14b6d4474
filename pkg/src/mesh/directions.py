"""
Direction sets on the sphere used by the discrete ECT.
"""

from itertools import product

import numpy as np


def octahedron_directions(k: int) -> np.ndarray:
    """Vertices of the k-fold subdivided octahedron, projected to the sphere.

    The subdivision vertices are exactly the integer points with
    |x| + |y| + |z| = k, so the set has 4k^2 + 2 elements, is closed under
    negation and is returned in lexicographic order.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"subdivision level must be a positive integer, got {k}")
    k = int(k)
    points = [
        (x, y, z)
        for x, y in product(range(-k, k + 1), repeat=2)
        if abs(x) + abs(y) <= k
        for z in sorted({k - abs(x) - abs(y), -(k - abs(x) - abs(y))})
    ]
    grid = np.array(sorted(points), dtype=np.float64)
    return grid / np.linalg.norm(grid, axis=1, keepdims=True)


def fibonacci_directions(n: int) -> np.ndarray:
    """Near-uniform equal-area point set (golden-angle spiral)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    index = np.arange(n, dtype=np.float64) + 0.5
    z = 1.0 - 2.0 * index / n
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * index
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def circle_directions(n: int) -> np.ndarray:
    """n equally spaced unit vectors in the plane."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    angles = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(angles), np.sin(angles)])

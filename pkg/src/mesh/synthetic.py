"""
Seeded synthetic meshes for sweeps, demos and property tests.
"""

from itertools import combinations
from typing import List, Optional

import numpy as np

from .mesh import Mesh, mesh_from_arrays, normalize

OCTAHEDRON_VERTICES = np.array(
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
)
OCTAHEDRON_FACES = [
    (0, 2, 4),
    (2, 1, 4),
    (1, 3, 4),
    (3, 0, 4),
    (2, 0, 5),
    (1, 2, 5),
    (3, 1, 5),
    (0, 3, 5),
]


def perturbed_octahedron(
    rng: np.random.Generator, jitter: float = 0.2, mesh_id: str = ""
) -> Mesh:
    """Octahedron surface with anisotropic scaling and jittered vertices."""
    scale = rng.uniform(0.6, 1.4, size=3)
    vertices = OCTAHEDRON_VERTICES * scale + rng.normal(scale=jitter, size=(6, 3))
    return normalize(mesh_from_arrays(vertices, OCTAHEDRON_FACES, mesh_id=mesh_id))


def random_mesh(
    rng: np.random.Generator,
    n_vertices: int,
    n_triangles: Optional[int] = None,
    n_edges: Optional[int] = None,
    mesh_id: str = "",
) -> Mesh:
    """Random abstract complex on random points in the unit ball.

    Vertices not touched by any simplex stay isolated.
    """
    points = rng.normal(size=(n_vertices, 3))
    points *= (rng.uniform(0.2, 1.0, size=n_vertices) / np.linalg.norm(points, axis=1))[
        :, None
    ]
    all_triangles = list(combinations(range(n_vertices), 3))
    all_edges = list(combinations(range(n_vertices), 2))
    if n_triangles is None:
        n_triangles = int(rng.integers(0, min(len(all_triangles), 2 * n_vertices) + 1))
    if n_edges is None:
        n_edges = int(rng.integers(0, min(len(all_edges), n_vertices) + 1))
    chosen_triangles = (
        rng.choice(len(all_triangles), size=min(n_triangles, len(all_triangles)), replace=False)
        if all_triangles
        else []
    )
    chosen_edges = (
        rng.choice(len(all_edges), size=min(n_edges, len(all_edges)), replace=False)
        if all_edges
        else []
    )
    return normalize(
        mesh_from_arrays(
            points,
            [all_triangles[i] for i in chosen_triangles],
            [all_edges[i] for i in chosen_edges],
            mesh_id=mesh_id,
        )
    )


def synthetic_collection(n: int, seed: int = 0) -> List[Mesh]:
    """n normalized perturbed octahedra with ids ``synthetic_000`` and up."""
    if n < 1:
        raise ValueError(f"collection size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    return [
        perturbed_octahedron(
            rng, jitter=float(rng.uniform(0.05, 0.3)), mesh_id=f"synthetic_{i:03d}"
        )
        for i in range(n)
    ]

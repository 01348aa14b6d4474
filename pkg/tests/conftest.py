"""Test configuration and fixtures for pytest."""

import sys
from itertools import product
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy import integrate

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.mesh.mesh import mesh_from_arrays, normalize  # noqa: E402
from src.mesh.synthetic import OCTAHEDRON_FACES, OCTAHEDRON_VERTICES, random_mesh  # noqa: E402
from src.utils.config import Config, LoggingConfig, set_config  # noqa: E402

# property tests share the autouse config fixture
settings.register_profile(
    "ect", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("ect")

EXAMPLE_VERTICES = [(-2.0, -1.0), (0.0, 1.0), (0.0, 4.0), (2.0, 0.0)]
EXAMPLE_TRIANGLES = [(0, 1, 2), (1, 2, 3)]


@pytest.fixture(scope="session")
def project_root_path():
    """Provide the project root path."""
    return project_root


@pytest.fixture(autouse=True)
def default_config():
    """Every test starts from the built-in defaults, logging to stderr only."""
    config = Config(logging=LoggingConfig(file=None, level="WARNING"))
    set_config(config)
    yield config
    set_config(None)


@pytest.fixture
def point_mesh():
    return mesh_from_arrays([[0.3, -0.2, 0.1]], mesh_id="point")


@pytest.fixture
def edge_mesh():
    return normalize(
        mesh_from_arrays([[0.1, 0.2, 0.3], [-0.4, 0.5, -0.2]], edges=[(0, 1)], mesh_id="edge")
    )


@pytest.fixture
def triangle_mesh():
    return normalize(
        mesh_from_arrays(
            [[0.9, 0.1, -0.2], [-0.3, 0.8, 0.25], [-0.35, -0.7, 0.05]],
            [(0, 1, 2)],
            mesh_id="triangle",
        )
    )


@pytest.fixture
def tetrahedron_mesh():
    """Boundary of an irregular tetrahedron (a sphere, chi = 2)."""
    vertices = [
        [0.95, 0.12, -0.21],
        [-0.33, 0.88, 0.17],
        [-0.41, -0.62, 0.48],
        [0.07, -0.18, -0.93],
    ]
    faces = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    return normalize(mesh_from_arrays(vertices, faces, mesh_id="tetrahedron"))


@pytest.fixture
def octahedron_mesh():
    rng = np.random.default_rng(7)
    vertices = OCTAHEDRON_VERTICES + rng.normal(scale=0.05, size=OCTAHEDRON_VERTICES.shape)
    return normalize(mesh_from_arrays(vertices, OCTAHEDRON_FACES, mesh_id="octahedron"))


@pytest.fixture
def torus_mesh():
    """3 x 3 triangulated torus (chi = 0) with jittered vertices."""
    rng = np.random.default_rng(11)
    n = 3
    vertices = []
    for i, j in product(range(n), repeat=2):
        u, v = 2 * np.pi * (i + 0.1) / n, 2 * np.pi * (j + 0.2) / n
        vertices.append(
            [(2 + np.cos(v)) * np.cos(u), (2 + np.cos(v)) * np.sin(u), np.sin(v)]
        )
    vertices = np.array(vertices) + rng.normal(scale=0.05, size=(n * n, 3))

    def index(i, j):
        return (i % n) * n + (j % n)

    faces = []
    for i, j in product(range(n), repeat=2):
        faces.append((index(i, j), index(i + 1, j), index(i + 1, j + 1)))
        faces.append((index(i, j), index(i + 1, j + 1), index(i, j + 1)))
    return normalize(mesh_from_arrays(vertices, faces, mesh_id="torus"))


@pytest.fixture
def fan_mesh():
    """Hexagonal fan: a disc of six triangles around a raised center (chi = 1)."""
    angles = np.arange(6) * np.pi / 3 + 0.05
    rim = np.column_stack([np.cos(angles), np.sin(angles), 0.1 * np.cos(3 * angles)])
    vertices = np.vstack([[0.02, -0.01, 0.3], rim])
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return normalize(mesh_from_arrays(vertices, faces, mesh_id="fan"))


@pytest.fixture
def planar_example_mesh():
    """Two triangles on four planar vertices, kept unscaled in the radius-4 disc."""
    return mesh_from_arrays(EXAMPLE_VERTICES, EXAMPLE_TRIANGLES, mesh_id="planar_example")


@pytest.fixture
def make_random_mesh():
    def factory(seed, n_vertices=5, n_triangles=None, n_edges=None):
        rng = np.random.default_rng(seed)
        return random_mesh(rng, n_vertices, n_triangles, n_edges, mesh_id=f"random_{seed}")

    return factory


@pytest.fixture
def write_off(tmp_path):
    """Write an OFF file from vertices and triangles, returning its path."""

    def writer(name, vertices, faces):
        lines = ["OFF", f"{len(vertices)} {len(faces)} 0"]
        lines += [" ".join(f"{x:.17g}" for x in v) for v in vertices]
        lines += ["3 " + " ".join(str(i) for i in f) for f in faces]
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return writer


def sphere_quadrature(func, theta=(0.0, np.pi), phi=(0.0, 2.0 * np.pi)):
    """Integral of func(v) dsigma over a latitude-longitude box, by scipy dblquad."""

    def integrand(p, t):
        v = np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
        return func(v) * np.sin(t)

    value, _ = integrate.dblquad(
        integrand, theta[0], theta[1], phi[0], phi[1], epsabs=1e-11, epsrel=1e-11
    )
    return value


@pytest.fixture
def quadrature():
    return sphere_quadrature

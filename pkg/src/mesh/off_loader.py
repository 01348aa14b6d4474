"""
ASCII OFF reader for triangle meshes.
"""

import re
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from ..utils.errors import DegenerateMeshError, MeshParseError
from ..utils.logger import get_logger
from .mesh import Mesh, mesh_from_arrays

logger = get_logger(__name__)

# [C][N]OFF: colours and normals follow the three coordinates
OFF_HEADER = re.compile(r"C?N?OFF")


def _content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tokens) for lines that carry data."""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def load_off(
    path: Union[str, Path], dim: int = 3, mesh_id: Optional[str] = None
) -> Mesh:
    """Read an OFF file with triangle faces.

    COFF, NOFF and CNOFF headers are accepted; vertex columns beyond the
    first three (normals, colours) and per-face extras are ignored. With
    ``dim=2`` the third coordinate must be zero and is dropped.
    """
    path = Path(path)
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    source = str(path)
    lines = _content_lines(path.read_text(encoding="utf-8"))

    def _next(what: str) -> Tuple[int, List[str]]:
        try:
            return next(lines)
        except StopIteration:
            raise MeshParseError(f"unexpected end of file while reading {what}", path=source)

    number, tokens = _next("header")
    keyword = tokens[0].upper()
    if OFF_HEADER.fullmatch(keyword):
        tokens = tokens[1:]
        if not tokens:
            number, tokens = _next("counts")
    elif keyword.endswith("OFF"):
        raise MeshParseError(f"unsupported OFF variant {tokens[0]!r}", number, source)

    try:
        counts = [int(t) for t in tokens[:3]]
    except ValueError:
        raise MeshParseError("malformed header: expected vertex/face/edge counts", number, source)
    if len(counts) < 2 or any(c < 0 for c in counts):
        raise MeshParseError("malformed header: expected vertex/face/edge counts", number, source)
    n_vertices, n_faces = counts[0], counts[1]

    coords = np.empty((n_vertices, 3), dtype=np.float64)
    for row in range(n_vertices):
        number, tokens = _next(f"vertex {row}")
        if len(tokens) < 3:
            raise MeshParseError("vertex line needs 3 coordinates", number, source)
        try:
            coords[row] = [float(t) for t in tokens[:3]]
        except ValueError:
            raise MeshParseError("non-numeric vertex coordinate", number, source)

    faces: List[Tuple[int, int, int]] = []
    for _ in range(n_faces):
        number, tokens = _next("face")
        try:
            size = int(tokens[0])
            indices = [int(t) for t in tokens[1 : 1 + size]]
        except ValueError:
            raise MeshParseError("non-integer face entry", number, source)
        if size != 3:
            raise MeshParseError(f"non-triangle face with {size} vertices", number, source)
        if len(indices) != 3:
            raise MeshParseError("face line is missing vertex indices", number, source)
        if any(i < 0 or i >= n_vertices for i in indices):
            raise MeshParseError("index out of range", number, source)
        if len(set(indices)) != 3:
            raise MeshParseError("degenerate face with repeated vertex", number, source)
        faces.append((indices[0], indices[1], indices[2]))

    if dim == 2:
        if np.any(np.abs(coords[:, 2]) > 1e-12):
            raise MeshParseError("2D mesh has a non-zero third coordinate", path=source)
        coords = coords[:, :2]

    try:
        mesh = mesh_from_arrays(coords, faces, mesh_id=mesh_id or path.stem)
    except DegenerateMeshError as e:
        raise MeshParseError(str(e), path=source) from e

    logger.debug(
        "Loaded OFF mesh",
        path=source,
        vertices=mesh.n_vertices,
        edges=len(mesh.edges),
        triangles=len(mesh.triangles),
    )
    return mesh

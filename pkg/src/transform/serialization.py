"""
ECTP 1: line-oriented text form of a proto-transform.

    ECTP 1 <dim> <n_terms>
    # mesh_id=<id>                       (optional)
    g= <int> a= <x y z> p= <m> <3m floats>

Floats are written with 17 significant digits so reading back reproduces
the stored doubles exactly.
"""

from pathlib import Path
from typing import List, Union

import numpy as np

from ..geometry.sphere import SphericalPolygon
from ..utils.errors import EctError, SerializationError
from ..utils.logger import get_logger
from .proto_transform import ProtoTransform, Term

logger = get_logger(__name__)

MAGIC = "ECTP"
VERSION = "1"


def _fmt(x: float) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return "%.17g" % (x + 0.0)


def format_term(term: Term) -> str:
    anchor = " ".join(_fmt(x) for x in term.anchor)
    support = " ".join(_fmt(x) for x in term.support.vertices.ravel())
    return f"g= {term.gain} a= {anchor} p= {len(term.support)} {support}"


def dumps_ectp(t: ProtoTransform) -> str:
    lines = [f"{MAGIC} {VERSION} {t.dimension} {len(t)}"]
    if t.mesh_id:
        lines.append(f"# mesh_id={t.mesh_id}")
    lines.extend(format_term(term) for term in t.terms)
    return "\n".join(lines) + "\n"


def write_ectp(t: ProtoTransform, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_ectp(t), encoding="utf-8")
    logger.info("Wrote proto-transform", path=str(path), terms=len(t))


def _parse_term(tokens: List[str], line_number: int) -> Term:
    def fail(message: str):
        raise SerializationError(f"line {line_number}: {message}")

    if len(tokens) < 7 or tokens[0] != "g=" or tokens[2] != "a=" or tokens[6] != "p=":
        fail("expected 'g= <int> a= <x y z> p= <m> ...'")
    try:
        gain = int(tokens[1])
        anchor = np.array([float(x) for x in tokens[3:6]])
        count = int(tokens[7])
        coords = np.array([float(x) for x in tokens[8:]])
    except (ValueError, IndexError) as e:
        fail(f"bad number in term: {e}")
    if coords.size != 3 * count:
        fail(f"support declares {count} vertices but carries {coords.size} coordinates")
    try:
        support = SphericalPolygon(coords.reshape(count, 3))
        return Term(gain=gain, anchor=anchor, support=support)
    except (EctError, ValueError) as e:
        fail(str(e))


def loads_ectp(text: str) -> ProtoTransform:
    lines = text.splitlines()
    if not lines:
        raise SerializationError("line 1: empty ECTP file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != MAGIC:
        raise SerializationError("line 1: expected 'ECTP 1 <dim> <n_terms>'")
    if header[1] != VERSION:
        raise SerializationError(f"line 1: unsupported ECTP version {header[1]!r}")
    try:
        dimension, n_terms = int(header[2]), int(header[3])
    except ValueError:
        raise SerializationError("line 1: dimension and term count must be integers")
    if dimension != 3:
        raise SerializationError(f"line 1: ECTP stores 3D transforms, got dimension {dimension}")

    mesh_id = ""
    terms: List[Term] = []
    for line_number, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comment = stripped[1:].strip()
            if comment.startswith("mesh_id="):
                mesh_id = comment[len("mesh_id="):]
            continue
        terms.append(_parse_term(stripped.split(), line_number))

    if len(terms) != n_terms:
        raise SerializationError(f"line 1: header declares {n_terms} terms, found {len(terms)}")
    return ProtoTransform(terms=tuple(terms), mesh_id=mesh_id, dimension=dimension)


def read_ectp(path: Union[str, Path]) -> ProtoTransform:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SerializationError(f"{path}: {e}") from e
    try:
        t = loads_ectp(text)
    except SerializationError as e:
        raise SerializationError(f"{path}: {e}") from e
    if not t.mesh_id:
        t = ProtoTransform(terms=t.terms, mesh_id=path.stem, dimension=t.dimension)
    logger.debug("Read proto-transform", path=str(path), terms=len(t))
    return t

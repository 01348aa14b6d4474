"""
Error hierarchy for the digital ECT engine.

Library code raises these; only the command-line layer catches them and maps
them to exit codes.
"""

from typing import Optional

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4


class EctError(Exception):
    """Base class for every error raised by the engine."""

    exit_code: int = EXIT_NUMERICAL


class MeshParseError(EctError, ValueError):
    """Malformed mesh file."""

    exit_code = EXIT_PARSE

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        path: Optional[str] = None,
    ):
        self.line_number = line_number
        self.path = path
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location = f"{location}{line_number}: "
        elif location:
            location = f"{location} "
        super().__init__(f"{location}{message}")


class DegenerateMeshError(EctError, ValueError):
    """Mesh cannot be normalized or violates the simplicial-complex invariants."""


class DegeneratePairError(EctError, ValueError):
    """Two coincident points have no bisecting great circle."""


class DegeneratePolygonError(EctError, ValueError):
    """Spherical polygon with too few or coincident/antipodal vertices."""


class HeightTieError(EctError, ArithmeticError):
    """A sample direction gives two star vertices the same height."""


class IntegrationChartError(EctError, RuntimeError):
    """No admissible chart was found for the Stokes-form integration."""


class NumericalConsistencyError(EctError, ArithmeticError):
    """An internal numerical self-check failed."""


class InvalidRotationError(EctError, ValueError):
    """Matrix is not a proper rotation."""


class GridMismatchError(EctError, ValueError):
    """Discrete transforms sampled on different grids."""


class DimensionMismatchError(EctError, ValueError):
    """Objects of different ambient dimension were combined."""


class LabelMismatchError(EctError, ValueError):
    """Distance matrices carry different labels."""

    exit_code = EXIT_USAGE


class UndefinedCorrelationError(EctError, ArithmeticError):
    """Correlation undefined because one side has zero variance."""


class SerializationError(EctError, ValueError):
    """Malformed proto-transform or distance-matrix file."""

    exit_code = EXIT_PARSE

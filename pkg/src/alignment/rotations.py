"""
Euler-angle parametrization of SO(3).

A(alpha, beta, gamma) = Rz(alpha) Ry(beta) Rx(gamma). Besides 2*pi
periodicity in each angle, (alpha, beta, gamma) and
(alpha + pi, pi - beta, gamma + pi) give the same matrix, so canonical
angles live in [0, 2pi) x [0, 2pi) x [0, pi).
"""

from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..geometry.sphere import check_rotation

TWO_PI = 2.0 * np.pi


class EulerAngles(NamedTuple):
    alpha: float
    beta: float
    gamma: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "EulerAngles":
        alpha, beta, gamma = (float(x) for x in values)
        return cls(alpha, beta, gamma)


def _wrap(angle: float) -> float:
    angle = float(np.mod(angle, TWO_PI))
    return 0.0 if angle >= TWO_PI else angle


def canonicalize(e: EulerAngles) -> EulerAngles:
    alpha, beta, gamma = _wrap(e.alpha), _wrap(e.beta), _wrap(e.gamma)
    if gamma >= np.pi:
        alpha, beta, gamma = _wrap(alpha + np.pi), _wrap(np.pi - beta), gamma - np.pi
    return EulerAngles(alpha, beta, gamma)


def axis_rotation(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"unknown axis {axis!r}")


def euler_to_matrix(e: EulerAngles) -> np.ndarray:
    return axis_rotation("z", e.alpha) @ axis_rotation("y", e.beta) @ axis_rotation("x", e.gamma)


def matrix_to_euler(R: np.ndarray) -> EulerAngles:
    R = check_rotation(R)
    # intrinsic Z-Y'-X'' matches the Rz Ry Rx product
    angles = Rotation.from_matrix(R).as_euler("ZYX")
    return canonicalize(EulerAngles.from_array(angles))


def so3_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Geodesic angle between two rotations."""
    cosine = (np.trace(A @ B.T) - 1.0) / 2.0
    return float(np.arccos(np.clip(cosine, -1.0, 1.0)))


def random_rotation(seed: Optional[int] = None) -> EulerAngles:
    """Haar-uniform rotation (uniform unit quaternion) as canonical angles."""
    rng = np.random.default_rng(seed)
    return matrix_to_euler(Rotation.random(random_state=rng).as_matrix())

"""
Forward-mode dual numbers with a vector of partial derivatives.
"""

from typing import List, Tuple, Union

import numpy as np

from .rotations import EulerAngles


class Dual:
    """value + partials . eps, with eps_i * eps_j = 0."""

    __slots__ = ("value", "partials")

    def __init__(self, value: float, partials):
        self.value = float(value)
        self.partials = np.asarray(partials, dtype=np.float64)

    @classmethod
    def variable(cls, value: float, index: int, size: int) -> "Dual":
        partials = np.zeros(size)
        partials[index] = 1.0
        return cls(value, partials)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.partials.tolist()!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.partials + other.partials)
        return Dual(self.value + other, self.partials)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.value, -self.partials)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.partials + self.partials * other.value,
            )
        return Dual(self.value * other, self.partials * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value / other.value,
                (self.partials * other.value - self.value * other.partials) / other.value**2,
            )
        return Dual(self.value / other, self.partials / other)

    def sin(self) -> "Dual":
        return Dual(np.sin(self.value), np.cos(self.value) * self.partials)

    def cos(self) -> "Dual":
        return Dual(np.cos(self.value), -np.sin(self.value) * self.partials)


Number = Union[float, Dual]


def _axis_rotation(axis: str, angle: Dual) -> np.ndarray:
    c, s = angle.cos(), angle.sin()
    if axis == "x":
        rows = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    elif axis == "y":
        rows = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
    else:
        rows = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    matrix = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            matrix[i, j] = rows[i][j]
    return matrix


def _split(entry: Number, size: int) -> Tuple[float, np.ndarray]:
    if isinstance(entry, Dual):
        return entry.value, entry.partials
    return float(entry), np.zeros(size)


def euler_jacobian(e: EulerAngles) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Rotation matrix and its partials with respect to (alpha, beta, gamma)."""
    alpha, beta, gamma = (Dual.variable(x, k, 3) for k, x in enumerate(e))
    product = _axis_rotation("z", alpha) @ _axis_rotation("y", beta) @ _axis_rotation("x", gamma)

    R = np.zeros((3, 3))
    partials = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            R[i, j], partials[:, i, j] = _split(product[i, j], 3)
    return R, [partials[k] for k in range(3)]


def angular_velocities(e: EulerAngles) -> Tuple[np.ndarray, np.ndarray]:
    """Rotation and the world-frame angular velocity of each Euler angle.

    Row k is the vector omega_k with (dR/de_k) R^T = [omega_k]_x.
    """
    R, partials = euler_jacobian(e)
    omegas = np.zeros((3, 3))
    for k, dR in enumerate(partials):
        spin = dR @ R.T
        omegas[k] = 0.5 * np.array(
            [spin[2, 1] - spin[1, 2], spin[0, 2] - spin[2, 0], spin[1, 0] - spin[0, 1]]
        )
    return R, omegas

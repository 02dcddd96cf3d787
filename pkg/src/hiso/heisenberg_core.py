"""Heisenberg group H^n in exponential coordinates.

Points are ``(z, t)`` with ``z = (x_1, y_1, ..., x_n, y_n)`` interleaved, so
the structural matrix is block diagonal with 2x2 blocks ``[[0, 1], [-1, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GroupContext:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"Heisenberg index must be a positive integer, got {self.n!r}")

    @property
    def Q(self) -> int:
        """Homogeneous dimension 2n + 2."""
        return 2 * self.n + 2

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def point(self, z, t: float = 0.0) -> "Point":
        p = Point(z, t)
        self.check(p)
        return p

    def check(self, p: "Point") -> None:
        if p.z.shape != (2 * self.n,):
            raise DimensionError(f"expected z of length {2 * self.n}, got {p.z.shape}")


@dataclass(frozen=True)
class Point:
    z: np.ndarray
    t: float

    def __post_init__(self):
        z = _frozen(self.z)
        if z.ndim != 1 or z.size % 2:
            raise DimensionError(f"z must be a flat vector of even length, got shape {z.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.z.size // 2

    def as_array(self) -> np.ndarray:
        return np.append(self.z, self.t)

    @classmethod
    def from_array(cls, a) -> "Point":
        a = np.asarray(a, dtype=float)
        return cls(a[:-1], a[-1])


@dataclass(frozen=True)
class HVector:
    """Horizontal vector given by its coefficients on X_1, Y_1, ..., X_n, Y_n."""

    components: np.ndarray

    def __post_init__(self):
        c = _frozen(self.components)
        if c.ndim != 1 or c.size % 2:
            raise DimensionError(f"horizontal vector must have even length, got shape {c.shape}")
        object.__setattr__(self, "components", c)

    @property
    def n(self) -> int:
        return self.components.size // 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def _same_n(p: Point, q: Point) -> None:
    if p.z.shape != q.z.shape:
        raise DimensionError(f"points live in different groups: {p.z.size} vs {q.z.size}")


def symplectic(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_i (x_i y'_i - x'_i y_i), vectorised over leading axes."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.sum(z[..., 0::2] * w[..., 1::2] - w[..., 0::2] * z[..., 1::2], axis=-1)


def group_mul(p: Point, q: Point) -> Point:
    _same_n(p, q)
    return Point(p.z + q.z, p.t + q.t + 0.5 * float(symplectic(p.z, q.z)))


def group_inv(p: Point) -> Point:
    return Point(-p.z, -p.t)


def identity(n: int) -> Point:
    return Point(np.zeros(2 * n), 0.0)


def dilate(s: float, p: Point) -> Point:
    if s < 0:
        raise DomainError(f"dilation factor must be non-negative, got {s}")
    return Point(s * p.z, s * s * p.t)


def structural_matrix(n: int) -> np.ndarray:
    """Block-diagonal C with blocks [[0, 1], [-1, 0]]; C @ C = -I."""
    c = np.zeros((2 * n, 2 * n))
    for i in range(n):
        c[2 * i, 2 * i + 1] = 1.0
        c[2 * i + 1, 2 * i] = -1.0
    return c


def perp(z: np.ndarray) -> np.ndarray:
    """Array form of z -> z^perp = -C z, i.e. (x_i, y_i) -> (-y_i, x_i)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    out[..., 0::2] = -z[..., 1::2]
    out[..., 1::2] = z[..., 0::2]
    return out


def j_perp(v: HVector) -> HVector:
    return HVector(perp(v.components))


def frame(p: Point) -> np.ndarray:
    """Columns are X_1, Y_1, ..., X_n, Y_n, T at p in coordinate components."""
    n = p.n
    m = np.eye(2 * n + 1)
    x, y = p.z[0::2], p.z[1::2]
    m[-1, 0:2 * n:2] = -0.5 * y
    m[-1, 1:2 * n:2] = 0.5 * x
    return m


def horizontal_lift(p: Point, v: HVector) -> np.ndarray:
    """Coordinate velocity of the horizontal vector v based at p."""
    if v.n != p.n:
        raise DimensionError("vector and point dimensions differ")
    return frame(p)[:, :-1] @ v.components


def contact_eval(p: Point, velocity) -> float:
    """theta = dt + 1/2 sum(y_i dx_i - x_i dy_i) applied to a coordinate velocity."""
    v = np.asarray(velocity, dtype=float)
    if v.shape != (2 * p.n + 1,):
        raise DimensionError(f"velocity must have length {2 * p.n + 1}, got {v.shape}")
    x, y = p.z[0::2], p.z[1::2]
    return float(v[-1] + 0.5 * np.sum(y * v[0:-1:2] - x * v[1:-1:2]))

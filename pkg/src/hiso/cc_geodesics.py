"""Carnot-Caratheodory geodesics parametrised by arc length.

State equations with multiplier c = P_last (constant):

    z' = P_H,   t' = <P_H, z^perp> / 2,   P_H' = c P_H^perp.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import ConvergenceError, DomainError
from .heisenberg_core import HVector, Point, perp


@dataclass(frozen=True)
class GeodesicState:
    gamma: Point
    p_h: HVector
    p_last: float

    def __post_init__(self):
        if self.gamma.n != self.p_h.n:
            raise DomainError("point and covector dimensions differ")
        if abs(self.p_h.norm() - 1.0) > 1e-12:
            raise DomainError(f"|P_H| must be 1, got {self.p_h.norm()!r}")
        object.__setattr__(self, "p_last", float(self.p_last))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.gamma.z, [self.gamma.t], self.p_h.components])

    @classmethod
    def from_array(cls, y: np.ndarray, p_last: float) -> "GeodesicState":
        """Rebuild a state without the unit-norm check (integrator output)."""
        m = (y.size - 1) // 2
        state = object.__new__(cls)
        object.__setattr__(state, "gamma", Point(y[:m], y[m]))
        object.__setattr__(state, "p_h", HVector(y[m + 1:]))
        object.__setattr__(state, "p_last", float(p_last))
        return state

    def velocity(self) -> np.ndarray:
        """Coordinate velocity (z', t') of the base curve."""
        p = self.p_h.components
        return np.append(p, 0.5 * p @ perp(self.gamma.z))


@dataclass(frozen=True)
class PoleData:
    r: float
    delta_t: float
    arc_length: float
    orientation: int


def start_state(n: int, p_last: float, t0: float = 0.0) -> GeodesicState:
    """Geodesic leaving the vertical axis at height t0 in direction X_1."""
    e = np.zeros(2 * n)
    e[0] = 1.0
    return GeodesicState(Point(np.zeros(2 * n), t0), HVector(e), p_last)


def geodesic_closed_form(state0: GeodesicState, s: float) -> GeodesicState:
    c = state0.p_last
    z0, t0 = state0.gamma.z, state0.gamma.t
    p0 = state0.p_h.components
    jp0 = perp(p0)
    if c == 0.0:
        z = z0 + s * p0
        return GeodesicState(Point(z, t0 + 0.5 * (z - z0) @ perp(z0)), state0.p_h, c)
    a = c * s
    p = np.cos(a) * p0 + np.sin(a) * jp0
    dz = (np.sin(a) / c) * p0 + ((1.0 - np.cos(a)) / c) * jp0
    t = t0 + 0.5 * dz @ perp(z0) + (s - np.sin(a) / c) / (2.0 * c)
    return GeodesicState(Point(z0 + dz, t), HVector(p), c)


def _rhs(y: np.ndarray, c: float, m: int) -> np.ndarray:
    z, p = y[:m], y[m + 1:]
    return np.concatenate([p, [0.5 * p @ perp(z)], c * perp(p)])


def _rk4(y: np.ndarray, c: float, h: float, steps: int) -> np.ndarray:
    m = (y.size - 1) // 2
    for _ in range(steps):
        k1 = _rhs(y, c, m)
        k2 = _rhs(y + 0.5 * h * k1, c, m)
        k3 = _rhs(y + 0.5 * h * k2, c, m)
        k4 = _rhs(y + h * k3, c, m)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def integrate_rk4(state0: GeodesicState, s: float, steps: int) -> GeodesicState:
    if steps < 1:
        raise DomainError("steps must be >= 1")
    y = _rk4(state0.to_array(), state0.p_last, s / steps, int(steps))
    return GeodesicState.from_array(y, state0.p_last)


def trajectory(state0: GeodesicState, s_values: np.ndarray, max_step: float) -> np.ndarray:
    """RK4 samples (as state arrays) at increasing arc lengths s_values."""
    y = state0.to_array()
    out = []
    prev = 0.0
    for s in np.asarray(s_values, dtype=float):
        ds = s - prev
        if ds < 0:
            raise DomainError("s_values must be non-decreasing")
        if ds > 0:
            k = max(1, ceil(ds / max_step))
            y = _rk4(y, state0.p_last, ds / k, k)
        out.append(y)
        prev = s
    return np.array(out)


def _radial_velocity(y: np.ndarray) -> float:
    m = (y.size - 1) // 2
    return float(y[:m] @ y[m + 1:])


def _bisect(y_left: np.ndarray, c: float, width: float, sign_left: float, tol: float) -> tuple[float, np.ndarray]:
    """Locate the zero of <z, P> inside one step starting from y_left."""
    lo, hi = 0.0, width
    y_mid = y_left
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        y_mid = _rk4(y_left, c, mid, 1)
        if np.sign(_radial_velocity(y_mid)) == sign_left:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    return s, _rk4(y_left, c, s, 1)


def pole_data(p_last: float, n: int = 1, resolution: float = 1e-3, tol: float = 1e-12,
              max_loops: float = 2.0) -> PoleData:
    """Measure one loop from the vertical axis back to it with RK4.

    The loop ends where the radial velocity <z, P_H> changes sign from
    negative to positive after the projected radius has peaked.
    """
    if p_last == 0.0:
        raise DomainError("P_last = 0 gives a straight horizontal line with no finite pole")
    c = float(p_last)
    h = resolution / abs(c)
    y = start_state(n, c).to_array()
    y = _rk4(y, c, h, 1)
    s = h
    # search cap only; the loop end is detected from the trajectory
    limit = max_loops * 4.0 * np.pi / abs(c)
    peak_s, peak_y = None, None
    while s < limit:
        y_next = _rk4(y, c, h, 1)
        v0, v1 = _radial_velocity(y), _radial_velocity(y_next)
        if peak_s is None and v0 > 0 >= v1:
            ds, peak_y = _bisect(y, c, h, 1.0, tol)
            peak_s = s + ds
        elif peak_s is not None and v0 < 0 <= v1:
            ds, y_end = _bisect(y, c, h, -1.0, tol)
            m = (y.size - 1) // 2
            dt = y_end[m]
            radius = 0.5 * float(np.linalg.norm(peak_y[:m]))
            return PoleData(r=radius, delta_t=abs(float(dt)), arc_length=s + ds,
                            orientation=int(np.sign(dt)))
        y, s = y_next, s + h
    raise ConvergenceError("no return to the vertical axis detected")


def generate_profile(p_last: float, samples: int, n: int = 1,
                     resolution: float = 1e-3) -> list[tuple[float, float]]:
    """Generating curve (rho, t) of the rotation surface through the two poles.

    The arc from one pole to the next is sampled at equal arc-length steps and
    shifted vertically so that the poles sit at t = -dt/2 and t = +dt/2.
    """
    if samples < 2:
        raise DomainError("samples must be >= 2")
    pd = pole_data(p_last, n=n, resolution=resolution)
    s_values = np.linspace(0.0, pd.arc_length, int(samples))
    ys = trajectory(start_state(n, p_last), s_values, resolution / abs(p_last))
    m = 2 * n
    rho = np.linalg.norm(ys[:, :m], axis=1)
    t = ys[:, m] - pd.orientation * 0.5 * pd.delta_t
    return [(float(a), float(b)) for a, b in zip(rho, t)]

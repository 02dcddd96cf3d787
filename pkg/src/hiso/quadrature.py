"""Quadrature over the unit profile, planar disks and rectangles.

The profile measure carries the factor 1/sqrt(1 - rho^2).  Substituting
rho = sin(s) removes it, after which Gauss-Legendre in s is spectrally
accurate for integrands that are smooth in s.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi
from typing import Callable

import numpy as np

from .errors import DomainError, IntegrabilityError, QuadratureError, UnsupportedError
from .heisenberg_core import GroupContext

HEMISPHERES = (1, -1)
DEFAULT_NODES = 512


@lru_cache(maxsize=64)
def _legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class RadialGrid:
    """Nodes in rho with two weight sets.

    ``weights`` integrate against d rho; ``arcsine_weights`` integrate against
    d rho / sqrt(1 - rho^2).
    """

    nodes: np.ndarray
    weights: np.ndarray
    arcsine_weights: np.ndarray
    scheme: str

    @classmethod
    def build(cls, m: int = DEFAULT_NODES, scheme: str = "sine-substituted",
              interval: tuple[float, float] = (0.0, 1.0)) -> "RadialGrid":
        a, b = interval
        if not (0.0 <= a < b <= 1.0):
            raise DomainError(f"radial interval must satisfy 0 <= a < b <= 1, got {interval}")
        x, w = _legendre(int(m))
        if scheme == "sine-substituted":
            sa, sb = np.arcsin(a), np.arcsin(b)
            s = 0.5 * (sb - sa) * x + 0.5 * (sb + sa)
            ws = 0.5 * (sb - sa) * w
            rho = np.sin(s)
            return cls(rho, ws * np.cos(s), ws, scheme)
        if scheme == "gauss-legendre-mapped":
            rho = 0.5 * (b - a) * x + 0.5 * (b + a)
            wr = 0.5 * (b - a) * w
            return cls(rho, wr, wr / np.sqrt(1.0 - rho ** 2), scheme)
        raise DomainError(f"unknown radial scheme {scheme!r}")


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    converged: bool


def sphere_area(n: int) -> float:
    """|S^{2n-1}| = 2 pi^n / (n-1)!."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return 2.0 * pi ** n / factorial(n - 1)


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise QuadratureError(f"non-finite integrand values at {what} nodes")
    return values


def integrate_radial_profile(f: Callable[[np.ndarray, int], np.ndarray], ctx: GroupContext,
                             nodes: int = DEFAULT_NODES,
                             interval: tuple[float, float] = (0.0, 1.0),
                             hemispheres: tuple[int, ...] = HEMISPHERES) -> float:
    """Integral of a radial function against sigma_H over the unit profile.

    ``f(rho, h)`` is evaluated on arrays of rho for hemisphere sign ``h``.
    The result is sum_h |S^{2n-1}| int f rho^{2n} / (2 sqrt(1 - rho^2)) d rho.
    """
    grid = RadialGrid.build(nodes, interval=interval)
    rho = grid.nodes
    weight = grid.arcsine_weights * rho ** (2 * ctx.n) / 2.0
    total = 0.0
    for h in hemispheres:
        vals = _finite(np.broadcast_to(f(rho, h), rho.shape), "radial")
        total += float(np.sum(vals * weight))
    return sphere_area(ctx.n) * total


def radial_profile_study(f: Callable[[np.ndarray, int], np.ndarray], ctx: GroupContext,
                         nodes: int = DEFAULT_NODES, tol: float = 1e-6,
                         **kwargs) -> QuadratureResult:
    """Integrate at ``nodes`` and ``2 * nodes``; flag disagreement above ``tol``."""
    coarse = integrate_radial_profile(f, ctx, nodes, **kwargs)
    fine = integrate_radial_profile(f, ctx, 2 * nodes, **kwargs)
    err = abs(fine - coarse)
    return QuadratureResult(fine, err, err <= tol * max(1.0, abs(fine)))


def require_pole_integrable(n: int, exponent: int, what: str) -> None:
    """Reject integrands that behave like rho^(exponent) against rho^(2n) d rho.

    Integrable near rho = 0 iff 2n + exponent > -1.
    """
    if 2 * n + exponent <= -1:
        raise IntegrabilityError(
            f"{what}: integrand ~ rho^{2 * n + exponent} near the poles is not integrable for n={n}")


def _radial_on_ray(f, ctx: GroupContext, rho: np.ndarray, check_radial: bool) -> np.ndarray:
    dim = 2 * ctx.n
    e1 = np.zeros(dim)
    e1[0] = 1.0
    vals = _finite(f(rho[:, None] * e1[None, :]), "disk")
    if check_radial:
        rng = np.random.default_rng(12345)
        xi = rng.standard_normal(dim)
        xi /= np.linalg.norm(xi)
        other = _finite(f(rho[:, None] * xi[None, :]), "disk")
        # pointwise relative test: rounding in |z| is amplified where f is steep
        if np.any(np.abs(other - vals) > 1e-4 * (1.0 + np.abs(vals))):
            raise UnsupportedError("integrands on disks with n > 1 must be radial")
    return vals


def integrate_disk(f: Callable[[np.ndarray], np.ndarray], ctx: GroupContext,
                   radius: float = 1.0, nodes: int = DEFAULT_NODES, angular: int = 256,
                   annulus: tuple[float, float] | None = None,
                   check_radial: bool = True) -> float:
    """Integral of a planar function over the disk of given radius in R^{2n}.

    ``f`` receives an array of points of shape (m, 2n).  For n = 1 a polar
    tensor rule is used (sine-substituted radial nodes, uniform angles); for
    n > 1 the integrand must be radial and is sampled along a ray.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    lo, hi = (0.0, 1.0) if annulus is None else (annulus[0] / radius, annulus[1] / radius)
    grid = RadialGrid.build(nodes, interval=(max(lo, 0.0), min(hi, 1.0)))
    rho = radius * grid.nodes
    wr = radius * grid.weights
    if ctx.n == 1:
        theta = 2.0 * pi * np.arange(angular) / angular
        pts = np.stack([np.outer(rho, np.cos(theta)), np.outer(rho, np.sin(theta))], axis=-1)
        vals = _finite(f(pts.reshape(-1, 2)), "disk").reshape(rho.size, angular)
        radial = np.sum(vals, axis=1) * (2.0 * pi / angular)
        return float(np.sum(radial * rho * wr))
    vals = _radial_on_ray(f, ctx, rho, check_radial)
    return sphere_area(ctx.n) * float(np.sum(vals * rho ** (2 * ctx.n - 1) * wr))


def integrate_rectangle(f: Callable[[np.ndarray], np.ndarray],
                        bounds: tuple[float, float, float, float], nodes: int = 256) -> float:
    """Tensor Gauss-Legendre over [x0, x1] x [y0, y1] (n = 1 only)."""
    x0, x1, y0, y1 = bounds
    x, w = _legendre(int(nodes))
    xs = 0.5 * (x1 - x0) * x + 0.5 * (x1 + x0)
    ys = 0.5 * (y1 - y0) * x + 0.5 * (y1 + y0)
    wx = 0.5 * (x1 - x0) * w
    wy = 0.5 * (y1 - y0) * w
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    vals = _finite(f(np.stack([gx.ravel(), gy.ravel()], axis=-1)), "rectangle")
    return float(np.sum(vals.reshape(xs.size, ys.size) * np.outer(wx, wy)))


def integrate_profile_n1(f: Callable[[np.ndarray, np.ndarray, int], np.ndarray],
                         nodes: int = 256, angular: int = 128,
                         hemispheres: tuple[int, ...] = HEMISPHERES) -> float:
    """Integral of f(rho, theta, h) against sigma_H over the n = 1 profile.

    sigma_H = rho / (2 sqrt(1 - rho^2)) dz = rho^2 / (2 sqrt(1 - rho^2)) d rho d theta.
    """
    grid = RadialGrid.build(nodes)
    rho = grid.nodes
    theta = 2.0 * pi * np.arange(angular) / angular
    R, T = np.meshgrid(rho, theta, indexing="ij")
    weight = (grid.arcsine_weights * rho ** 2 / 2.0)[:, None] * (2.0 * pi / angular)
    total = 0.0
    for h in hemispheres:
        vals = _finite(np.broadcast_to(f(R, T, h), R.shape), "profile")
        total += float(np.sum(vals * weight))
    return total

"""Hypersurfaces t = u(z) over a planar domain of R^{2n}.

The horizontal gradient of t - u(z) is V = -grad u + z^perp / 2, so

    nu_H = V / |V|,   varpi = 1 / |V|,   sigma_H = |V| dz,
    H = -div(V / |V|) = lap u / |V| - <V, Hess u V> / |V|^3.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CharacteristicPointError, DomainError, QuadratureError, UnsupportedError
from .functions import RadialFunction
from .heisenberg_core import GroupContext, perp
from .profile_geometry import u0, u0_prime, u0_second
from .quadrature import integrate_disk, integrate_rectangle

Array = np.ndarray


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float


Domain = Disk | Rectangle


@dataclass(frozen=True)
class AnalyticTGraph:
    """Height function with callable derivatives.

    Callables act on arrays of points with shape (m, 2n) and return shapes
    (m,), (m, 2n) and (m, 2n, 2n).
    """

    n: int
    u: Callable[[Array], Array]
    grad: Callable[[Array], Array]
    hess: Callable[[Array], Array] | None = None
    domain: Domain = Disk()
    label: str = ""


@dataclass(frozen=True)
class GridTGraph:
    """Samples of u on a uniform grid (n = 1), values[i, j] = u(x[i], y[j])."""

    x: Array
    y: Array
    values: Array
    h: float = field(init=False)
    n: int = 1

    def __post_init__(self):
        x, y = np.asarray(self.x, float), np.asarray(self.y, float)
        hx, hy = np.diff(x), np.diff(y)
        if x.size < 5 or y.size < 5:
            raise DomainError("grid needs at least 5 nodes per axis")
        h = hx[0]
        if h <= 0 or not (np.allclose(hx, h, rtol=1e-9, atol=0) and np.allclose(hy, h, rtol=1e-9, atol=0)):
            raise DomainError("grid spacing must be uniform and equal in x and y")
        if self.values.shape != (x.size, y.size):
            raise DomainError("values shape does not match the grid")
        object.__setattr__(self, "h", float(h))

    @property
    def domain(self) -> Rectangle:
        return Rectangle(self.x[0], self.x[-1], self.y[0], self.y[-1])

    @classmethod
    def sample(cls, u: Callable[[Array], Array], x: Array, y: Array) -> "GridTGraph":
        X, Y = np.meshgrid(x, y, indexing="ij")
        vals = u(np.stack([X.ravel(), Y.ravel()], axis=-1)).reshape(X.shape)
        return cls(np.asarray(x, float), np.asarray(y, float), vals)

    def gradient(self) -> Array:
        """Central differences, one-sided at the boundary ring; shape (nx, ny, 2)."""
        gx, gy = np.gradient(self.values, self.h, edge_order=2)
        return np.stack([gx, gy], axis=-1)

    def node(self, z) -> tuple[int, int]:
        i = int(round((z[0] - self.x[0]) / self.h))
        j = int(round((z[1] - self.y[0]) / self.h))
        if not (0 <= i < self.x.size and 0 <= j < self.y.size) or \
                abs(self.x[i] - z[0]) > 1e-9 * self.h or abs(self.y[j] - z[1]) > 1e-9 * self.h:
            raise DomainError(f"{z} is not a grid node")
        return i, j


TGraph = AnalyticTGraph | GridTGraph


def load_grid_csv(path: str | Path) -> GridTGraph:
    """Read a grid from CSV with header x,y,u (uniform spacing required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [c.strip() for c in next(reader)]
        try:
            rows = np.array([[float(v) for v in row] for row in reader if row])
        except ValueError as exc:
            raise DomainError(f"{path}: non-numeric grid entry ({exc})") from exc
    if header != ["x", "y", "u"]:
        raise UnsupportedError(f"expected header x,y,u for n = 1 grids, got {header}")
    xs, ys = np.unique(rows[:, 0]), np.unique(rows[:, 1])
    if rows.shape[0] != xs.size * ys.size:
        raise DomainError("grid CSV is not a full tensor grid")
    vals = np.full((xs.size, ys.size), np.nan)
    vals[np.searchsorted(xs, rows[:, 0]), np.searchsorted(ys, rows[:, 1])] = rows[:, 2]
    return GridTGraph(xs, ys, vals)


# ---------------------------------------------------------------- factories

def radial_tgraph(n: int, f: RadialFunction, domain: Domain = Disk(), label: str = "") -> AnalyticTGraph:
    """u(z) = f(|z|) with derivatives from the radial profile."""
    def u(z):
        return f(np.linalg.norm(z, axis=-1))

    def grad(z):
        r = np.linalg.norm(z, axis=-1)
        return (f.d1(r) / r)[..., None] * z

    def hess(z):
        r = np.linalg.norm(z, axis=-1)
        e = z / r[..., None]
        ee = e[..., :, None] * e[..., None, :]
        eye = np.eye(z.shape[-1])
        return f.d2(r)[..., None, None] * ee + (f.d1(r) / r)[..., None, None] * (eye - ee)

    return AnalyticTGraph(n, u, grad, hess, domain, label or f.label)


def profile_tgraph(n: int) -> AnalyticTGraph:
    """Upper hemisphere of the unit profile, u = u0(|z|)."""
    f = RadialFunction(lambda r: u0(np.minimum(r, 1.0)), u0_prime, u0_second, None, "u0")
    return radial_tgraph(n, f, Disk(1.0), "u0")


def constant_tgraph(n: int, c: float = 0.0, domain: Domain = Disk()) -> AnalyticTGraph:
    return AnalyticTGraph(n, lambda z: np.full(z.shape[:-1], c), lambda z: np.zeros_like(z),
                          lambda z: np.zeros(z.shape + (z.shape[-1],)), domain, f"const {c}")


def quadratic_tgraph(a: float = 0.25, b: float = 1.0, domain: Domain = Rectangle(-1, 1, -1, 1)) -> AnalyticTGraph:
    """n = 1, u = a (x^2 + y^2) + b x y."""
    hm = np.array([[2 * a, b], [b, 2 * a]])
    return AnalyticTGraph(
        1,
        lambda z: a * (z[..., 0] ** 2 + z[..., 1] ** 2) + b * z[..., 0] * z[..., 1],
        lambda z: z @ hm,
        lambda z: np.broadcast_to(hm, z.shape + (2,)).copy(),
        domain, f"{a}(x^2+y^2)+{b}xy")


@dataclass(frozen=True)
class PlanarFunction:
    """Scalar field on the plane with gradient; ``support`` is an annulus (a, b) if known."""

    f: Callable[[Array], Array]
    grad: Callable[[Array], Array]
    support: tuple[float, float] | None = None
    label: str = ""


def radial_planar(g: RadialFunction) -> PlanarFunction:
    def grad(z):
        r = np.linalg.norm(z, axis=-1)
        return (g.d1(r) / r)[..., None] * z

    return PlanarFunction(lambda z: g(np.linalg.norm(z, axis=-1)), grad, g.support, g.label)


# ---------------------------------------------------------------- pointwise geometry

@dataclass(frozen=True)
class GeometryFields:
    nu: Array
    nu_h: Array
    p_norm: float
    varpi: float
    sigma_h_density: float


def _points(z) -> Array:
    z = np.asarray(z, dtype=float)
    return z[None, :] if z.ndim == 1 else z


def horizontal_field(g: TGraph, z) -> Array:
    """V = -grad u + z^perp / 2 at the given points (analytic graphs)."""
    pts = _points(z)
    return -g.grad(pts) + 0.5 * perp(pts)


def default_epsilon(g: TGraph) -> float:
    """1e-8 (1 + sup |grad u|) with the sup taken over a probe set of the domain."""
    if isinstance(g, GridTGraph):
        sup = float(np.max(np.linalg.norm(g.gradient()[1:-1, 1:-1], axis=-1)))
        return 1e-8 * (1.0 + sup)
    dom = g.domain
    if isinstance(dom, Disk):
        r = np.linspace(0.01, 0.99, 33) * dom.radius
        th = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
        pts = np.zeros((r.size * th.size, 2 * g.n))
        pts[:, 0] = np.outer(r, np.cos(th)).ravel()
        pts[:, 1] = np.outer(r, np.sin(th)).ravel()
    else:
        xs = np.linspace(dom.x0, dom.x1, 35)[1:-1]
        ys = np.linspace(dom.y0, dom.y1, 35)[1:-1]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    sup = float(np.max(np.linalg.norm(g.grad(pts), axis=-1)))
    return 1e-8 * (1.0 + sup)


def geometry_fields(g: AnalyticTGraph, z, epsilon: float | None = None) -> GeometryFields:
    z = np.asarray(z, dtype=float)
    if z.shape != (2 * g.n,):
        raise DomainError(f"expected a point of length {2 * g.n}")
    v = horizontal_field(g, z)[0]
    norm = float(np.linalg.norm(v))
    eps = default_epsilon(g) if epsilon is None else epsilon
    if norm < eps:
        raise CharacteristicPointError(f"characteristic point at z={z.tolist()} (|V|={norm:.3e})")
    scale = np.sqrt(1.0 + norm * norm)
    return GeometryFields(
        nu=np.append(v, 1.0) / scale,
        nu_h=v / norm,
        p_norm=norm / scale,
        varpi=1.0 / norm,
        sigma_h_density=norm,
    )


@dataclass(frozen=True)
class CharacteristicLocus:
    points: Array
    epsilon: float


def characteristic_locus(g: AnalyticTGraph, points, epsilon: float | None = None) -> CharacteristicLocus:
    pts = _points(points)
    eps = default_epsilon(g) if epsilon is None else epsilon
    norms = np.linalg.norm(horizontal_field(g, pts), axis=-1)
    return CharacteristicLocus(pts[norms < eps], eps)


def _nu_h_callable(g: AnalyticTGraph, eps: float):
    def nu(pts):
        v = horizontal_field(g, pts)
        norm = np.linalg.norm(v, axis=-1)
        if np.any(norm < eps):
            raise CharacteristicPointError("stencil touches a characteristic point")
        return v / norm[..., None]
    return nu


def mean_curvature(g: TGraph, z, method: str = "analytic", h: float = 1e-3,
                   epsilon: float | None = None) -> float:
    """Horizontal mean curvature H = -div(nu_H).

    ``method`` is "analytic" (needs the Hessian), "fd" (fourth-order
    central differences of nu_H built from the gradient callable), and grid
    graphs always use second-order stencils at a grid node.
    """
    if isinstance(g, GridTGraph):
        return _grid_mean_curvature(g, z, epsilon)
    z = np.asarray(z, dtype=float)
    eps = default_epsilon(g) if epsilon is None else epsilon
    if method == "analytic":
        if g.hess is None:
            raise UnsupportedError("analytic mean curvature needs the Hessian")
        v = horizontal_field(g, z)[0]
        norm = np.linalg.norm(v)
        if norm < eps:
            raise CharacteristicPointError(f"characteristic point at z={z.tolist()}")
        hm = g.hess(z[None, :])[0]
        return float(np.trace(hm) / norm - v @ hm @ v / norm ** 3)
    if method == "fd":
        nu = _nu_h_callable(g, eps)
        div = 0.0
        for k in range(z.size):
            e = np.zeros(z.size)
            e[k] = h
            pts = np.stack([z + 2 * e, z + e, z - e, z - 2 * e])
            vals = nu(pts)[:, k]
            div += (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
        return float(-div)
    raise DomainError(f"unknown method {method!r}")


def _grid_nu_h(g: GridTGraph, epsilon: float | None) -> Array:
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    v = -g.gradient() + 0.5 * np.stack([-Y, X], axis=-1)
    norm = np.linalg.norm(v, axis=-1)
    eps = default_epsilon(g) if epsilon is None else epsilon
    with np.errstate(invalid="ignore", divide="ignore"):
        nu = np.where(norm[..., None] < eps, np.nan, v / norm[..., None])
    return nu


def grid_mean_curvature_field(g: GridTGraph, epsilon: float | None = None) -> Array:
    """H at every node; the boundary ring is NaN."""
    nu = _grid_nu_h(g, epsilon)
    out = np.full(g.values.shape, np.nan)
    div = (nu[2:, 1:-1, 0] - nu[:-2, 1:-1, 0] + nu[1:-1, 2:, 1] - nu[1:-1, :-2, 1]) / (2 * g.h)
    out[1:-1, 1:-1] = -div
    return out


def _grid_mean_curvature(g: GridTGraph, z, epsilon) -> float:
    i, j = g.node(z)
    if i in (0, g.x.size - 1) or j in (0, g.y.size - 1):
        raise DomainError("mean curvature is not defined on the boundary ring")
    value = grid_mean_curvature_field(g, epsilon)[i, j]
    if not np.isfinite(value):
        raise CharacteristicPointError(f"stencil at {z} touches a characteristic point")
    return float(value)


# ---------------------------------------------------------------- variations

def _integrate(g: TGraph, integrand: Callable[[Array], Array], support=None, nodes: int = 512) -> float:
    if isinstance(g, GridTGraph):
        X, Y = np.meshgrid(g.x[1:-1], g.y[1:-1], indexing="ij")
        vals = integrand(np.stack([X.ravel(), Y.ravel()], axis=-1), g)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("non-finite integrand values at grid nodes")
        return float(np.sum(vals) * g.h ** 2)
    ctx = GroupContext(g.n)
    dom = g.domain
    if isinstance(dom, Disk):
        return integrate_disk(lambda p: integrand(p, g), ctx, dom.radius, nodes=nodes, annulus=support)
    if g.n != 1:
        raise UnsupportedError("rectangles are supported for n = 1 only")
    return integrate_rectangle(lambda p: integrand(p, g), (dom.x0, dom.x1, dom.y0, dom.y1), nodes=nodes)


def _field_at(g: TGraph, pts: Array) -> Array:
    if isinstance(g, GridTGraph):
        X, Y = np.meshgrid(g.x[1:-1], g.y[1:-1], indexing="ij")
        v = -g.gradient()[1:-1, 1:-1] + 0.5 * np.stack([-Y, X], axis=-1)
        return v.reshape(-1, 2)
    return horizontal_field(g, pts)


def variation_T_first(g: TGraph, phi: PlanarFunction, nodes: int = 512) -> float:
    """-int <grad phi, V/|V|> dz."""
    def integrand(pts, gg):
        v = _field_at(gg, pts)
        norm = np.linalg.norm(v, axis=-1)
        return -np.sum(phi.grad(pts) * v, axis=-1) / norm

    return _integrate(g, integrand, phi.support, nodes)


def variation_T_second(g: TGraph, phi: PlanarFunction, nodes: int = 512) -> float:
    """int (|grad phi|^2 |V|^2 - <V, grad phi>^2) / |V|^3 dz, nonnegative by Cauchy-Schwarz."""
    def integrand(pts, gg):
        v = _field_at(gg, pts)
        gp = phi.grad(pts)
        norm = np.linalg.norm(v, axis=-1)
        num = np.sum(gp * gp, axis=-1) * norm ** 2 - np.sum(gp * v, axis=-1) ** 2
        return np.maximum(num, 0.0) / norm ** 3

    return _integrate(g, integrand, phi.support, nodes)


def mean_curvature_integral(g: AnalyticTGraph, phi: PlanarFunction, nodes: int = 512) -> float:
    """-int phi H dz with the analytic mean curvature (divergence-theorem partner of the first variation)."""
    def integrand(pts, gg):
        v = horizontal_field(gg, pts)
        norm = np.linalg.norm(v, axis=-1)
        hm = gg.hess(pts)
        lap = np.trace(hm, axis1=-2, axis2=-1)
        vhv = np.einsum("mi,mij,mj->m", v, hm, v)
        return -phi.f(pts) * (lap / norm - vhv / norm ** 3)

    return _integrate(g, integrand, phi.support, nodes)


def admissibility_condvar2(g: TGraph, nodes: int = 256, rtol: float = 1e-8) -> tuple[float, bool]:
    """Estimate int dz / |V| and whether it is stable under node doubling."""
    def integrand(pts, gg):
        return 1.0 / np.linalg.norm(_field_at(gg, pts), axis=-1)

    if isinstance(g, GridTGraph):
        # the coarse level drops every other node
        coarse_graph, fine_nodes = GridTGraph(g.x[::2], g.y[::2], g.values[::2, ::2]), nodes
    else:
        coarse_graph, fine_nodes = g, 2 * nodes
    try:
        with np.errstate(divide="ignore"):
            coarse = _integrate(coarse_graph, integrand, None, nodes)
            fine = _integrate(g, integrand, None, fine_nodes)
    except QuadratureError:
        return float("inf"), False
    return fine, bool(abs(fine - coarse) <= rtol * max(1.0, abs(fine)))

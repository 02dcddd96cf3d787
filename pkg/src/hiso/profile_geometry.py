"""Closed-form geometry of the unit isoperimetric profile.

The profile is the union of the graphs t = +u0(|z|) and t = -u0(|z|) over the
closed unit ball of R^{2n}.  Hemisphere sign ``h`` is +1 for the upper graph.
With the signed quantity kappa = h sqrt(1 - rho^2) / rho the horizontal normal
is nu_H = z + kappa z^perp on both hemispheres.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .heisenberg_core import GroupContext, HVector, perp, structural_matrix


def _check_rho(rho, lo_open: bool = True, hi_open: bool = False) -> np.ndarray:
    r = np.asarray(rho, dtype=float)
    bad = (r <= 0.0) if lo_open else (r < 0.0)
    bad = bad | ((r >= 1.0) if hi_open else (r > 1.0))
    if np.any(bad) or not np.all(np.isfinite(r)):
        raise DomainError(f"rho outside the admissible range: {rho!r}")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def u0(rho):
    """Height of the upper hemisphere over the unit ball.

    pi/8 + rho sqrt(1 - rho^2)/4 - arcsin(rho)/4, evaluated as
    (rho s + atan2(s, rho))/4 to avoid cancellation near rho = 1.
    """
    r = _check_rho(rho, lo_open=False)
    s = np.sqrt(1.0 - r * r)
    return _out(0.25 * (r * s + np.arctan2(s, r)))


def u0_inverse(height: float) -> float:
    """rho in [0, 1] with u0(rho) = height, for 0 <= height <= pi/8."""
    if not 0.0 <= height <= pi / 8.0:
        raise DomainError(f"height outside [0, pi/8]: {height!r}")
    return float(brentq(lambda r: u0(r) - height, 0.0, 1.0, xtol=1e-15))


def profile_residual(rho: float, t: float) -> float:
    """Bound on the distance from (rho, t) to the generating curve t = +-u0(rho)."""
    r = min(max(rho, 0.0), 1.0)
    vertical = abs(abs(t) - u0(r))
    horizontal = abs(rho - u0_inverse(min(abs(t), pi / 8.0)))
    return min(vertical, horizontal)


def u0_prime(rho):
    r = _check_rho(rho, lo_open=False, hi_open=True)
    return _out(-r * r / (2.0 * np.sqrt(1.0 - r * r)))


def u0_second(rho):
    r = _check_rho(rho, lo_open=False, hi_open=True)
    s = np.sqrt(1.0 - r * r)
    return _out(-r * (2.0 - r * r) / (2.0 * s ** 3))


def kappa(rho, h: int = 1):
    r = _check_rho(rho)
    return _out(h * np.sqrt(1.0 - r * r) / r)


def kappa_prime(rho, h: int = 1):
    r = _check_rho(rho, hi_open=True)
    return _out(-h / (r * r * np.sqrt(1.0 - r * r)))


def kappa_second(rho, h: int = 1):
    r = _check_rho(rho, hi_open=True)
    s = np.sqrt(1.0 - r * r)
    return _out(h * (2.0 / (r ** 3 * s) - 1.0 / (r * s ** 3)))


def varpi(rho, h: int = 1):
    return _out(2.0 * np.asarray(kappa(rho, h)))


def sigma_density(rho):
    """H-perimeter density with respect to Lebesgue measure dz on the ball."""
    r = _check_rho(rho, hi_open=True)
    return _out(r / (2.0 * np.sqrt(1.0 - r * r)))


def _hemisphere(h) -> int:
    if h in (1, "+", "upper"):
        return 1
    if h in (-1, "-", "lower"):
        return -1
    raise DomainError(f"hemisphere must be +1 or -1, got {h!r}")


@dataclass(frozen=True)
class ProfilePoint:
    rho: float
    hemisphere: int = 1
    xi: np.ndarray | None = None

    def __post_init__(self):
        _check_rho(self.rho)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "hemisphere", _hemisphere(self.hemisphere))
        if self.xi is not None:
            xi = np.array(self.xi, dtype=float)
            if xi.ndim != 1 or xi.size % 2 or abs(np.linalg.norm(xi) - 1.0) > 1e-12:
                raise DomainError("xi must be a unit vector of even length")
            xi.setflags(write=False)
            object.__setattr__(self, "xi", xi)

    def direction(self, n: int) -> np.ndarray:
        if self.xi is None:
            e = np.zeros(2 * n)
            e[0] = 1.0
            return e
        if self.xi.size != 2 * n:
            raise DomainError(f"xi has length {self.xi.size}, expected {2 * n}")
        return self.xi

    def z(self, n: int) -> np.ndarray:
        return self.rho * self.direction(n)


@dataclass(frozen=True)
class ClosedFormBundle:
    u0: float
    t: float
    kappa: float
    varpi: float
    nu_h: HVector
    nu_h_perp: HVector
    sigma_h_density: float
    p_norm: float
    g_h: float
    g_h_perp: float
    H: float
    z_hs_sq: float
    z: np.ndarray = field(repr=False)


def bundle(p: ProfilePoint, ctx: GroupContext) -> ClosedFormBundle:
    r, h = p.rho, p.hemisphere
    z = p.z(ctx.n)
    s = np.sqrt(1.0 - r * r)
    k = h * s / r
    nu = z + k * perp(z)
    nu_perp = perp(nu)
    height = float(u0(r))
    return ClosedFormBundle(
        u0=height,
        t=h * height,
        kappa=k,
        varpi=2.0 * k,
        nu_h=HVector(nu),
        nu_h_perp=HVector(nu_perp),
        sigma_h_density=r / (2.0 * s) if s > 0 else float("inf"),
        p_norm=r / np.sqrt(4.0 - 3.0 * r * r),
        g_h=r * r,
        g_h_perp=-h * r * s,
        H=-2.0 * ctx.n,
        z_hs_sq=r * r * (1.0 - r * r),
        z=z,
    )


def curvature_norms(p: ProfilePoint, ctx: GroupContext) -> tuple[float, float, float, float]:
    """Closed forms (|B_H|^2, |S_H|^2, |A_H|^2, H_H)."""
    n, r = ctx.n, p.rho
    w = 2.0 * p.hemisphere * np.sqrt(1.0 - r * r) / r
    return 4.0 + (2 * n - 2) / r ** 2, float(2 * n + 2), 0.5 * (n - 1) * w * w, -2.0 * n


def nu_h_jacobian(p: ProfilePoint, ctx: GroupContext) -> np.ndarray:
    """Euclidean Jacobian of z -> nu_H(z) on the hemisphere of p."""
    n, r, h = ctx.n, p.rho, p.hemisphere
    z = p.z(n)
    k = h * np.sqrt(1.0 - r * r) / r
    dk = float(kappa_prime(r, h))
    return np.eye(2 * n) + (dk / r) * np.outer(perp(z), z) - k * structural_matrix(n)


def adapted_frame(p: ProfilePoint, ctx: GroupContext, seed: int = 0) -> np.ndarray:
    """Orthonormal basis of the horizontal tangent space, first column nu_H^perp.

    Columns are obtained by Gram-Schmidt on nu_H^perp followed by seeded
    random vectors, after removing the nu_H component.
    """
    if p.xi is None:
        raise DomainError("frame assembly needs the angular position xi")
    if p.rho < 1e-10 or p.rho > 1.0 - 1e-10:
        raise DomainError(f"degenerate frame at rho={p.rho}")
    b = bundle(p, ctx)
    nu = b.nu_h.components
    dim = 2 * ctx.n
    rng = np.random.default_rng(seed)
    basis = [nu, b.nu_h_perp.components]
    while len(basis) < dim:
        v = rng.standard_normal(dim)
        for e in basis:
            v -= (v @ e) * e
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
    return np.column_stack(basis[1:])


def assemble_shape_operators(p: ProfilePoint, ctx: GroupContext,
                             frame: np.ndarray | None = None
                             ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S_H, A_H, B_H) in the adapted frame; row/column 0 is nu_H^perp.

    B(X, Y) = -<D nu_H X, Y>; S is its symmetric part and
    A = (varpi / 2) <C X, Y> restricted to the frame.
    """
    tau = adapted_frame(p, ctx) if frame is None else frame
    jac = nu_h_jacobian(p, ctx)
    b_jac = -(tau.T @ jac @ tau).T
    s_mat = 0.5 * (b_jac + b_jac.T)
    w = 2.0 * p.hemisphere * np.sqrt(1.0 - p.rho ** 2) / p.rho
    a_mat = -0.5 * w * (tau.T @ structural_matrix(ctx.n) @ tau)
    return s_mat, a_mat, s_mat + a_mat


def dvarpi_dnuperp(p: ProfilePoint) -> float:
    """Derivative of varpi along nu_H^perp, from the radial derivative of varpi."""
    r, h = p.rho, p.hemisphere
    if r >= 1.0:
        return 2.0
    k = h * np.sqrt(1.0 - r * r) / r
    # grad varpi = 2 kappa' z / rho and <z, nu_H^perp> = -kappa rho^2
    return float(-2.0 * kappa_prime(r, h) * k * r)


def laplacian_hs_radial(d1, d2, p: ProfilePoint, ctx: GroupContext) -> float:
    """Horizontal tangential Laplacian of a radial function at p.

    Uses tr(D^2 phi) - D^2 phi(nu_H, nu_H) + H_H <grad phi, nu_H> with the
    Euclidean Hessian of the radial function.
    """
    n, r = ctx.n, p.rho
    z = p.z(n)
    e = z / r
    hess = d2 * np.outer(e, e) + (d1 / r) * (np.eye(2 * n) - np.outer(e, e))
    nu = bundle(p, ctx).nu_h.components
    grad = d1 * e
    return float(np.trace(hess) - nu @ hess @ nu - 2.0 * n * (grad @ nu))


def radial_identity_residuals(p: ProfilePoint, ctx: GroupContext) -> tuple[float, float]:
    """Residuals of the Laplacian identity and the eigen-identity for kappa."""
    from .spectral import apply_Lss_radial

    r, h, n = p.rho, p.hemisphere, ctx.n
    if r >= 1.0:
        raise DomainError("rho must lie in the open interval (0, 1)")
    k = float(kappa(r, h))
    d1, d2 = float(kappa_prime(r, h)), float(kappa_second(r, h))
    res_lap = laplacian_hs_radial(d1, d2, p, ctx) + (2 * n - 4) / r ** 2 * k
    res_l = apply_Lss_radial((k, d1, d2), r, n) + (2 * n - 2) / r ** 2 * k
    return float(res_lap), float(res_l)

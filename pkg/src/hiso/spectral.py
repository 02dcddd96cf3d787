"""The second-variation operator on the profile and its radial spectrum.

Radial operator::

    L phi = (1 - rho^2) phi'' + ((2n - (2n+1) rho^2) / rho) phi'
          = (p phi')' / w,   p = rho^{2n} sqrt(1 - rho^2),  w = rho^{2n} / sqrt(1 - rho^2)

and the eigenproblem -(p phi')' = mu q phi with q = rho^{2n-2} / sqrt(1 - rho^2).

A radial function on the profile is a pair (phi+, phi-).  The even part
(phi+ = phi-) is smooth across the equator with zero normal derivative; the
odd part (phi+ = -phi-) vanishes on the equator.  The glued spectrum is
therefore the union of a natural-boundary problem and a Dirichlet-at-equator
problem on one hemisphere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DomainError, ResonanceError, UnsupportedError
from .functions import RadialFunction
from .quadrature import sphere_area


def _jet(phi, rho):
    if isinstance(phi, RadialFunction):
        return phi.jet(rho)
    v, d1, d2 = phi
    return np.asarray(v, dtype=float), np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)


def _open_interval(rho) -> np.ndarray:
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise DomainError(f"rho must lie in (0, 1), got {rho!r}")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def apply_Lss_radial(phi, rho, n: int):
    """Radial operator applied to ``phi`` (RadialFunction or (value, d1, d2))."""
    r = _open_interval(rho)
    _, d1, d2 = _jet(phi, r)
    return _out((1.0 - r * r) * d2 + ((2 * n - (2 * n + 1) * r * r) / r) * d1)


def ode_residual(phi, mu: float, rho, n: int):
    r = _open_interval(rho)
    v, _, _ = _jet(phi, r)
    return _out(np.asarray(apply_Lss_radial(phi, r, n)) + mu * v / (r * r))


def sl_coefficients(n: int, rho) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(p, p', w, q) of the Sturm-Liouville form."""
    r = np.asarray(rho, dtype=float)
    s = np.sqrt(1.0 - r * r)
    p = r ** (2 * n) * s
    dp = 2 * n * r ** (2 * n - 1) * s - r ** (2 * n + 1) / s
    w = r ** (2 * n) / s
    q = r ** (2 * n - 2) / s
    return p, dp, w, q


def candidate_mu(n: int) -> list[tuple[int, int, bool]]:
    """(m, mu_m, admissible) for m = 1 .. 2n - 1 with mu_m = m(2n - (m + 1))."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return [(m, m * (2 * n - (m + 1)), m <= n - 1) for m in range(1, 2 * n)]


@dataclass(frozen=True)
class FrobeniusSolution:
    """phi(rho) = rho^{-m} sum_l a_l rho^l."""

    n: int
    m: int
    mu: float
    a: tuple[float, ...]
    a0: float
    a1: float

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        return _out(r ** (-self.m) * np.polynomial.polynomial.polyval(r, self.a))

    def derivative(self, rho):
        r = np.asarray(rho, dtype=float)
        a = np.asarray(self.a)
        ls = np.arange(a.size) - self.m
        return _out(np.sum(a[:, None] * ls[:, None] * r[None, ...] ** (ls[:, None] - 1), axis=0)
                    if r.ndim else float(np.sum(a * ls * r ** (ls - 1))))

    def recurrence_residuals(self) -> np.ndarray:
        a, m, n, mu = self.a, self.m, self.n, self.mu
        out = []
        for l in range(len(a) - 2):
            den = (l + 2 - m) * (l + 2 * n + 1 - m) + mu
            out.append(a[l + 2] * den - a[l] * (l - m) * (l + 2 * n - m))
        return np.array(out)


def frobenius_series(n: int, m: int, mu: float, a0: float, a1: float, L: int) -> FrobeniusSolution:
    """Coefficients a_0 .. a_L of the Laurent solution about rho = 0."""
    if L < 1:
        raise DomainError("L must be >= 1")
    a = [float(a0), float(a1)]
    for l in range(0, L - 1):
        den = (l + 2 - m) * (l + 2 * n + 1 - m) + mu
        if den == 0:
            raise ResonanceError(l, f"zero denominator in the recurrence at l={l} (n={n}, m={m}, mu={mu})")
        a.append(a[l] * (l - m) * (l + 2 * n - m) / den)
    return FrobeniusSolution(n, m, float(mu), tuple(a[:L + 1]), float(a0), float(a1))


# ---------------------------------------------------------------- discretisation

_GAUSS = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True)
class SturmLiouvilleDiscretization:
    """P1 elements on [rho_min, rho_max] graded quadratically toward both ends."""

    n: int
    rho_min: float = 1e-4
    rho_max: float = 1.0 - 1e-6
    elements: int = 4000
    mesh: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.rho_min < self.rho_max < 1.0:
            raise DomainError("need 0 < rho_min < rho_max < 1")
        if self.elements < 4:
            raise DomainError("need at least 4 elements")
        x = np.linspace(0.0, 1.0, self.elements + 1)
        # 3x^2 - 2x^3 has quadratic contact at both ends
        mesh = self.rho_min + (self.rho_max - self.rho_min) * (3 * x ** 2 - 2 * x ** 3)
        mesh.setflags(write=False)
        object.__setattr__(self, "mesh", mesh)

    def assemble(self) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, np.ndarray]:
        """(stiffness K, q-mass M, w-mass Mw, w-load vector) on one hemisphere."""
        r = self.mesh
        a, b = r[:-1], r[1:]
        h = b - a
        g, gw = _GAUSS
        xs = a[:, None] + 0.5 * (g[None, :] + 1.0) * h[:, None]
        ww = 0.5 * gw[None, :] * h[:, None]
        p, _, w, q = sl_coefficients(self.n, xs)
        n0 = (b[:, None] - xs) / h[:, None]
        n1 = (xs - a[:, None]) / h[:, None]
        kk = np.sum(ww * p, axis=1) / h ** 2
        m00, m01, m11 = (np.sum(ww * q * u * v, axis=1) for u, v in ((n0, n0), (n0, n1), (n1, n1)))
        w00, w01, w11 = (np.sum(ww * w * u * v, axis=1) for u, v in ((n0, n0), (n0, n1), (n1, n1)))
        load = np.zeros(r.size)
        np.add.at(load, np.arange(r.size - 1), np.sum(ww * w * n0, axis=1))
        np.add.at(load, np.arange(1, r.size), np.sum(ww * w * n1, axis=1))

        def tri(d0, d1, off):
            diag = np.zeros(r.size)
            np.add.at(diag, np.arange(r.size - 1), d0)
            np.add.at(diag, np.arange(1, r.size), d1)
            return sp.diags([off, diag, off], [-1, 0, 1], format="csr")

        return tri(kk, kk, -kk), tri(m00, m11, m01), tri(w00, w11, w01), load


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    parity: tuple[str, ...]
    constraint_integrals: np.ndarray
    residuals: np.ndarray
    admissible: np.ndarray
    mesh: np.ndarray

    def lowest_admissible(self) -> tuple[float, np.ndarray, str]:
        idx = np.flatnonzero(self.admissible)
        if idx.size == 0:
            raise ConvergenceError("no admissible eigenpair among the computed modes")
        i = idx[0]
        return float(self.eigenvalues[i]), self.eigenfunctions[:, i], self.parity[i]


def _smallest_pairs(K, M, k):
    d = 1.0 / np.sqrt(M.diagonal())
    D = sp.diags(d)
    Ks, Ms = (D @ K @ D).tocsc(), (D @ M @ D).tocsc()
    k = min(k, K.shape[0] - 2)
    try:
        vals, vecs = spla.eigsh(Ks, k=k, M=Ms, sigma=-1.0, which="LM")
    except (spla.ArpackNoConvergence, RuntimeError) as exc:
        raise ConvergenceError(f"eigen-solver breakdown: {exc}") from exc
    order = np.argsort(vals)
    return vals[order], d[:, None] * vecs[:, order]


def solve_radial_spectrum(n: int, disc: SturmLiouvilleDiscretization, k: int = 6,
                          constraint_tol: float = 1e-6) -> EigenResult:
    """Lowest ``k`` eigenpairs of each parity class, merged in ascending order.

    Constraint integrals (int phi sigma, int phi/rho^2 sigma) refer to the
    glued profile function; pairs whose integrals are below ``constraint_tol``
    times the natural scale are flagged admissible.
    """
    if disc.n != n:
        raise DomainError("discretisation built for a different n")
    if k < 1:
        raise DomainError("k must be >= 1")
    K, M, _, load = disc.assemble()
    area = sphere_area(n)
    vals_e, vecs_e = _smallest_pairs(K, M, k)
    keep = slice(0, K.shape[0] - 1)
    vals_o, vecs_o = _smallest_pairs(K[keep, keep], M[keep, keep], k)
    vecs_o = np.vstack([vecs_o, np.zeros((1, vecs_o.shape[1]))])

    all_vals = np.concatenate([vals_e, vals_o])
    all_vecs = np.hstack([vecs_e, vecs_o])
    parity = ["even"] * vals_e.size + ["odd"] * vals_o.size
    order = np.argsort(all_vals, kind="stable")
    all_vals, all_vecs = all_vals[order], all_vecs[:, order]
    parity = tuple(parity[i] for i in order)

    qload = M @ np.ones(K.shape[0])
    cons, res, adm = [], [], []
    for j in range(all_vals.size):
        v = all_vecs[:, j] / np.sqrt(all_vecs[:, j] @ (M @ all_vecs[:, j]))
        all_vecs[:, j] = v
        glue = 2.0 if parity[j] == "even" else 0.0
        m0 = glue * 0.5 * area * (load @ v)
        m2 = glue * 0.5 * area * (qload @ v)
        scale0 = area * (load @ np.abs(v))
        scale2 = area * (qload @ np.abs(v))
        cons.append((m0, m2))
        if parity[j] == "odd":
            Kj, Mj, vj = K[keep, keep], M[keep, keep], v[:-1]
        else:
            Kj, Mj, vj = K, M, v
        r = Kj @ vj - all_vals[j] * (Mj @ vj)
        res.append(float(np.linalg.norm(r) / max(np.linalg.norm(Kj @ vj), np.linalg.norm(Mj @ vj))))
        adm.append(bool(abs(m0) <= constraint_tol * scale0 and abs(m2) <= constraint_tol * scale2))
    return EigenResult(all_vals, all_vecs, parity, np.array(cons), np.array(res), np.array(adm),
                       disc.mesh)


def weighted_cosine(disc: SturmLiouvilleDiscretization, u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between nodal vectors in the q-weighted inner product."""
    _, M, _, _ = disc.assemble()
    return float(abs(u @ (M @ v)) / np.sqrt((u @ (M @ u)) * (v @ (M @ v))))


REFINEMENT_LEVELS = ((1e-2, 1 - 1e-6, 2000), (1e-3, 1 - 1e-9, 4000), (1e-4, 1 - 1e-12, 8000))


def refinement_study(n: int, levels=REFINEMENT_LEVELS, k: int = 4) -> list[float]:
    """Lowest admissible eigenvalue for a sequence of truncations and meshes.

    The odd-class truncation error behaves like sqrt(1 - rho_max), so the
    equator gap shrinks geometrically between levels.
    """
    out = []
    for rmin, rmax, m in levels:
        disc = SturmLiouvilleDiscretization(n, rmin, rmax, m)
        out.append(solve_radial_spectrum(n, disc, k).lowest_admissible()[0])
    return out


# ---------------------------------------------------------------- full operator, n = 1

@dataclass(frozen=True)
class PolarField:
    """Samples of phi on a uniform (rho, theta) grid over one hemisphere (n = 1).

    ``values[i, j]`` is phi(rho[i], theta[j]); theta is periodic with
    theta[j] = 2 pi j / len(theta).
    """

    values: np.ndarray
    rho: np.ndarray
    hemisphere: int = 1

    @property
    def theta(self) -> np.ndarray:
        m = self.values.shape[1]
        return 2.0 * pi * np.arange(m) / m

    @classmethod
    def sample(cls, f, rho: np.ndarray, m_theta: int, hemisphere: int = 1) -> "PolarField":
        theta = 2.0 * pi * np.arange(m_theta) / m_theta
        R, T = np.meshgrid(rho, theta, indexing="ij")
        return cls(np.asarray(f(R, T), dtype=float), np.asarray(rho, dtype=float), hemisphere)


def _stencil_derivatives(field: PolarField, i: int, j: int):
    """Fourth-order central differences at node (i, j)."""
    v = field.values
    hr = field.rho[1] - field.rho[0]
    ht = 2.0 * pi / v.shape[1]
    m = v.shape[1]
    jm2, jm1, jp1, jp2 = (j - 2) % m, (j - 1) % m, (j + 1) % m, (j + 2) % m
    c1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    c2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    col = v[i - 2:i + 3, j]
    row = v[i, [jm2, jm1, j, jp1, jp2]]
    f_r = c1 @ col / hr
    f_rr = c2 @ col / hr ** 2
    f_t = c1 @ row / ht
    f_tt = c2 @ row / ht ** 2
    d_t_rows = (v[i - 2:i + 3, [jm2, jm1, j, jp1, jp2]] @ c1) / ht
    f_rt = c1 @ d_t_rows / hr
    return f_r, f_rr, f_t, f_tt, f_rt


def apply_Lss_full_n1(field: PolarField, node: tuple[int, int], n: int = 1) -> float:
    """Full operator at an interior grid node for n = 1.

    With zeta-derivatives taken along the unit vector z^perp / rho
    (phi'_zeta = phi_theta / rho, phi''_zeta_zeta = phi_theta_theta / rho^2,
    phi''_rho_zeta = phi_rho_theta / rho) the operator reads

        (1 - rho^2) phi_rr + ((2n - (2n+1) rho^2)/rho) phi_r
          - 2h rho s phi''_rho_zeta + rho^2 phi''_zeta_zeta - 2n h s phi'_zeta

    with s = sqrt(1 - rho^2) and h the hemisphere sign.
    """
    if n != 1:
        raise UnsupportedError("the full operator is implemented for n = 1 only")
    i, j = node
    if i < 2 or i > field.rho.size - 3:
        raise DomainError(f"node {node} is not interior in rho")
    r = field.rho[i]
    if not 0.0 < r < 1.0:
        raise DomainError("rho must lie in (0, 1)")
    h = field.hemisphere
    s = np.sqrt(1.0 - r * r)
    f_r, f_rr, f_t, f_tt, f_rt = _stencil_derivatives(field, i, j)
    d_z, d_zz, d_rz = f_t / r, f_tt / r ** 2, f_rt / r
    return float((1 - r * r) * f_rr + ((2 * n - (2 * n + 1) * r * r) / r) * f_r
                 - 2 * h * r * s * d_rz + r * r * d_zz - 2 * n * h * s * d_z)


def apply_Lss_full_n1_grid(field: PolarField) -> np.ndarray:
    """Operator at all rho-interior nodes; rows 0, 1, -2, -1 are NaN."""
    out = np.full(field.values.shape, np.nan)
    for i in range(2, field.rho.size - 2):
        for j in range(field.values.shape[1]):
            out[i, j] = apply_Lss_full_n1(field, (i, j))
    return out


def graph_oracle_n1(f, rho: float, theta: float, hemisphere: int = 1, h: float = 1e-3) -> float:
    """Independent value of the operator from Cartesian graph coordinates.

    ``f(x, y)`` is the field on the plane.  The operator is evaluated as
    nu_perp(nu_perp phi) - varpi nu_perp(phi), where nu_perp is the planar
    vector field z^perp - kappa z and each directional derivative is a
    fourth-order central difference.
    """
    def nu_perp(x, y):
        r = np.hypot(x, y)
        k = hemisphere * np.sqrt(1.0 - r * r) / r
        return np.array([-y - k * x, x - k * y])

    def directional(g, x, y):
        v = nu_perp(x, y)
        return (-g(x + 2 * h * v[0], y + 2 * h * v[1]) + 8 * g(x + h * v[0], y + h * v[1])
                - 8 * g(x - h * v[0], y - h * v[1]) + g(x - 2 * h * v[0], y - 2 * h * v[1])) / (12 * h)

    def first(x, y):
        return directional(f, x, y)

    x, y = rho * np.cos(theta), rho * np.sin(theta)
    w = 2.0 * hemisphere * np.sqrt(1.0 - rho * rho) / rho
    return float(directional(first, x, y) - w * first(x, y))


def spherical_mean(psi, rho: float, n: int, nodes: int = 16) -> float:
    """Integral of psi over the sphere of radius rho in R^{2n} against the unit-sphere measure.

    ``psi`` receives an array of points of shape (m, 2n).  For n = 1 the rule
    is the uniform trapezoid in theta with ``8 * nodes`` points; for n > 1 a
    tensor rule in hyperspherical angles.
    """
    d = 2 * n
    if n == 1:
        m = 8 * nodes
        th = 2.0 * pi * np.arange(m) / m
        pts = rho * np.stack([np.cos(th), np.sin(th)], axis=-1)
        return float(np.sum(psi(pts)) * 2.0 * pi / m)
    g, gw = np.polynomial.legendre.leggauss(nodes)
    angles, weights = [], []
    for k in range(d - 2):
        a = 0.5 * pi * (g + 1.0)
        angles.append(a)
        weights.append(0.5 * pi * gw * np.sin(a) ** (d - 2 - k))
    m = 4 * nodes
    angles.append(2.0 * pi * np.arange(m) / m)
    weights.append(np.full(m, 2.0 * pi / m))
    grids = np.meshgrid(*angles, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, w in enumerate(weights):
        shape = [1] * len(weights)
        shape[k] = -1
        wgrid = wgrid * w.reshape(shape)
    x = np.empty(grids[0].shape + (d,))
    prod = np.ones_like(grids[0])
    for k in range(d - 1):
        x[..., k] = prod * np.cos(grids[k])
        prod = prod * np.sin(grids[k])
    x[..., d - 1] = prod
    vals = psi(rho * x.reshape(-1, d)).reshape(grids[0].shape)
    return float(np.sum(vals * wgrid))

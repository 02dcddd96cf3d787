"""Variations of H-perimeter and volume on the unit profile.

Normal variations are described by a test function phi on the profile: a
``RadialPair`` (one radial function per hemisphere, any n) or a ``PolarPair``
(n = 1 fields in (rho, theta)).  On the profile

    |grad_HS phi|^2 = phi'^2 (1 - rho^2)              (radial)
    |grad_HS phi|^2 = (phi_theta - h s phi_rho)^2      (n = 1, s = sqrt(1 - rho^2))

and the second variation of sigma_H under volume-preserving variations is

    F(phi) = int (|grad_HS phi|^2 - (2n - 2) phi^2 / rho^2) sigma_H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi
from typing import Callable

import numpy as np

from .errors import DomainError, HisoError, SupportError
from .functions import (PolarPair, RadialFunction, RadialPair, SurfaceTestFunction, bump,
                        equator_factor, polynomial)
from .heisenberg_core import GroupContext
from .profile_geometry import (ProfilePoint, curvature_norms, dvarpi_dnuperp, u0, u0_prime,
                               u0_second)
from .quadrature import (HEMISPHERES, integrate_disk, integrate_profile_n1, integrate_radial_profile,
                         require_pole_integrable)
from .spectral import apply_Lss_radial
from .tgraph_geometry import Disk, horizontal_field, mean_curvature, radial_tgraph

Array = np.ndarray
DEFAULT_NODES = 512
POLAR_NODES = (256, 128)
EQUATOR_PROBE = 1.0 - 1e-12


# ---------------------------------------------------------------- integration

def _pieces(f: RadialFunction, override=None) -> list[tuple[float, float]]:
    """Subintervals of (0, 1) on which f is analytic, restricted to its support."""
    lo, hi = override if override is not None else (f.support or (0.0, 1.0))
    pts = sorted({lo, hi} | {b for b in f.breaks if lo < b < hi})
    return list(zip(pts[:-1], pts[1:]))


def profile_integral(phi: SurfaceTestFunction, integrand, ctx: GroupContext,
                     nodes: int = DEFAULT_NODES, interval=None) -> float:
    """Integral against sigma_H of a quantity built from phi.

    For a ``RadialPair`` ``integrand(f, rho, h)`` receives the radial function of
    hemisphere h; each hemisphere is integrated piecewise over the support of
    its function, split at its break points.  For a ``PolarPair`` it receives
    ``(phi, rho, theta, h)``.
    """
    if isinstance(phi, PolarPair):
        if ctx.n != 1:
            raise DomainError("polar test functions are defined for n = 1 only")
        return integrate_profile_n1(lambda r, t, h: integrand(phi, r, t, h), *POLAR_NODES)
    total = 0.0
    for h in HEMISPHERES:
        f = phi.side(h)
        for piece in _pieces(f, interval):
            total += integrate_radial_profile(lambda r, hh: integrand(f, r, hh), ctx, nodes,
                                              interval=piece, hemispheres=(h,))
    return total


def surface_area(ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """sigma_H of the unit profile."""
    return integrate_radial_profile(lambda r, h: np.ones_like(r), ctx, nodes)


def mean_value(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    if isinstance(phi, PolarPair):
        return profile_integral(phi, lambda p, r, t, h: p.side(h)(r, t), ctx)
    return profile_integral(phi, lambda f, r, h: f(r), ctx, nodes)


def absolute_integral(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int |phi| sigma_H."""
    if isinstance(phi, PolarPair):
        return profile_integral(phi, lambda p, r, t, h: np.abs(p.side(h)(r, t)), ctx, nodes)
    return profile_integral(phi, lambda f, r, h: np.abs(f(r)), ctx, nodes)


def weighted_norm_sq(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int phi^2 sigma_H."""
    if isinstance(phi, PolarPair):
        return profile_integral(phi, lambda p, r, t, h: p.side(h)(r, t) ** 2, ctx)
    return profile_integral(phi, lambda f, r, h: f(r) ** 2, ctx, nodes)


def pole_moment(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int phi / rho^2 sigma_H."""
    if isinstance(phi, PolarPair):
        return profile_integral(phi, lambda p, r, t, h: p.side(h)(r, t) / r ** 2, ctx)
    return profile_integral(phi, lambda f, r, h: f(r) / r ** 2, ctx, nodes)


def constraint_integrals(phi: SurfaceTestFunction, ctx: GroupContext,
                         nodes: int = DEFAULT_NODES) -> tuple[float, float]:
    """(int phi sigma_H, int phi / rho^2 sigma_H)."""
    return mean_value(phi, ctx, nodes), pole_moment(phi, ctx, nodes)


def _grad_sq(phi: SurfaceTestFunction):
    if isinstance(phi, PolarPair):
        def polar(p, r, t, h):
            _, d_r, d_t = p.derivatives(h, r, t)
            return (d_t - h * np.sqrt(1.0 - r * r) * d_r) ** 2
        return polar

    def radial(f, r, h):
        return f.d1(r) ** 2 * (1.0 - r * r)
    return radial


def _sq_over_rho2(phi: SurfaceTestFunction):
    if isinstance(phi, PolarPair):
        return lambda p, r, t, h: p.side(h)(r, t) ** 2 / r ** 2
    return lambda f, r, h: f(r) ** 2 / r ** 2


def dirichlet_energy(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int |grad_HS phi|^2 sigma_H."""
    return profile_integral(phi, _grad_sq(phi), ctx, nodes)


def equator_jump(phi: SurfaceTestFunction) -> float:
    """Largest mismatch between the two hemispheres at the equator."""
    for probe in (1.0, EQUATOR_PROBE):
        with np.errstate(all="ignore"):
            if isinstance(phi, PolarPair):
                theta = np.linspace(0.0, 2.0 * pi, 64, endpoint=False)
                r = np.full_like(theta, probe)
                jump = np.abs(phi.plus(r, theta) - phi.minus(r, theta))
            else:
                r = np.array([probe])
                jump = np.abs(phi.plus(r) - phi.minus(r))
        if np.all(np.isfinite(jump)):
            return float(np.max(jump))
    return float("inf")


def _require_continuous(phi: SurfaceTestFunction, tol: float = 1e-6) -> None:
    jump = equator_jump(phi)
    if not np.isfinite(jump) or jump > tol:
        raise SupportError(f"test function jumps by {jump:.3g} across the equator")


# ---------------------------------------------------------------- projection, first variations

def zero_mean_project(phi: SurfaceTestFunction, ctx: GroupContext,
                      nodes: int = DEFAULT_NODES) -> SurfaceTestFunction:
    """phi minus its sigma_H-average."""
    m = mean_value(phi, ctx, nodes)
    if m == 0.0:
        return phi
    return phi.shifted(-m / surface_area(ctx, nodes))


def first_variation(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """-int H phi sigma_H with H = -2n."""
    return 2.0 * ctx.n * mean_value(phi, ctx, nodes)


def volume_first_variation(phi: SurfaceTestFunction, ctx: GroupContext,
                           nodes: int = DEFAULT_NODES) -> float:
    """int phi sigma_H."""
    return mean_value(phi, ctx, nodes)


def isoperimetric_first_variation(phi: SurfaceTestFunction, ctx: GroupContext,
                                  nodes: int = DEFAULT_NODES) -> float:
    """Derivative of sigma_H / vol^(1 - 1/Q) along phi; zero at a critical domain."""
    iso = isoperimetric_J(1.0, ctx.n)
    a = 1.0 - 1.0 / ctx.Q
    d_sigma = first_variation(phi, ctx, nodes)
    d_vol = volume_first_variation(phi, ctx, nodes)
    return (d_sigma - a * iso.sigma * d_vol / iso.volume) / iso.volume ** a


# ---------------------------------------------------------------- second variation

def _potential_terms(p: ProfilePoint, ctx: GroupContext) -> tuple[float, float, float]:
    _, s_sq, _, _ = curvature_norms(p, ctx)
    w = 2.0 * p.hemisphere * np.sqrt(1.0 - p.rho ** 2) / p.rho
    return -s_sq, 2.0 * dvarpi_dnuperp(p), -0.5 * (ctx.n + 1) * w * w


def profile_potential(p: ProfilePoint, ctx: GroupContext) -> float:
    """-|S_H|^2 + 2 d varpi / d nu^perp - ((n + 1)/2) varpi^2 from the closed forms."""
    return float(sum(_potential_terms(p, ctx)))


def check_potential(ctx: GroupContext, samples: int = 33, tol: float = 1e-12) -> float:
    """Max deviation of the general potential from -(2n-2)/rho^2, relative to its terms."""
    worst = 0.0
    for r in np.linspace(0.02, 0.999, samples):
        for h in HEMISPHERES:
            terms = _potential_terms(ProfilePoint(r, h), ctx)
            expected = -(2 * ctx.n - 2) / r ** 2
            scale = max(1.0, sum(abs(t) for t in terms))
            worst = max(worst, abs(sum(terms) - expected) / scale)
    if worst > tol:
        raise HisoError(f"profile potential deviates from -(2n-2)/rho^2 by {worst:.3g}")
    return worst


def second_variation_profile(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES,
                             require_zero_mean: bool = True, tol: float = 1e-8) -> float:
    """F(phi) = int (|grad_HS phi|^2 - (2n-2) phi^2 / rho^2) sigma_H."""
    _require_continuous(phi)
    check_potential(ctx)
    if require_zero_mean:
        m = mean_value(phi, ctx, nodes)
        # int |phi| is linear in phi, so the test is scale-free and cannot underflow
        scale = absolute_integral(phi, ctx, nodes)
        if abs(m) > tol * scale:
            raise DomainError(f"test function has nonzero mean {m:.3g}; project it first")
    energy = dirichlet_energy(phi, ctx, nodes)
    if ctx.n == 1:
        return energy
    return energy - (2 * ctx.n - 2) * profile_integral(phi, _sq_over_rho2(phi), ctx, nodes)


def second_variation_by_parts(phi: RadialPair, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """-int phi (L phi + (2n-2) phi / rho^2) sigma_H for radial pairs."""
    n = ctx.n

    def integrand(f, r, h):
        v = f(r)
        return -v * (apply_Lss_radial(f, r, n) + (2 * n - 2) * v / r ** 2)

    return profile_integral(phi, integrand, ctx, nodes)


def rayleigh_G(phi: SurfaceTestFunction, ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int |grad_HS phi|^2 sigma_H / int phi^2 / rho^2 sigma_H."""
    _require_continuous(phi)
    den = profile_integral(phi, _sq_over_rho2(phi), ctx, nodes)
    if not np.isfinite(den) or den <= 0.0:
        raise DomainError("Rayleigh quotient denominator is zero or not finite")
    return dirichlet_energy(phi, ctx, nodes) / den


# ---------------------------------------------------------------- isoperimetric functional

@dataclass(frozen=True)
class IsoperimetricValues:
    s: float
    n: int
    sigma: float
    volume: float
    J: float
    H: float

    @property
    def criticality_residual(self) -> float:
        """vol * H + ((Q-1)/Q) sigma_H."""
        q = 2 * self.n + 2
        return self.volume * self.H + (q - 1) / q * self.sigma


# |V| grows like 1/sqrt(1 - rho^2); with more nodes the rounding of the last
# node near the equator dominates the quadrature error
ISO_NODES = 128


def isoperimetric_J(s: float, n: int, nodes: int = ISO_NODES) -> IsoperimetricValues:
    """sigma_H(dD) / vol(D)^(1 - 1/Q) for the profile dilated by s.

    The dilated domain is bounded by t = +-u_s(z) with u_s(z) = s^2 u0(|z|/s);
    sigma_H integrates |V| of both graphs and vol integrates 2 u_s.
    """
    if s <= 0:
        raise DomainError("dilation factor must be positive")
    ctx = GroupContext(n)
    f = RadialFunction(lambda r: s * s * u0(np.minimum(r / s, 1.0)),
                       lambda r: s * u0_prime(r / s), lambda r: u0_second(r / s), None, "u_s")
    graph = radial_tgraph(n, f, Disk(s), "u_s")
    sigma = 2.0 * integrate_disk(lambda p: np.linalg.norm(horizontal_field(graph, p), axis=-1),
                                 ctx, s, nodes)
    volume = 2.0 * integrate_disk(lambda p: f(np.linalg.norm(p, axis=-1)), ctx, s, nodes)
    # mean curvature sampled on the dilated graph, independent of the closed form
    probe = np.zeros(2 * n)
    probe[0] = 0.5 * s
    h_mean = mean_curvature(graph, probe)
    q = 2 * n + 2
    return IsoperimetricValues(s, n, sigma, volume, sigma / volume ** (1.0 - 1.0 / q), h_mean)


# ---------------------------------------------------------------- Green formulas

@dataclass(frozen=True)
class GreenResiduals:
    residuals: dict[str, float]
    scales: dict[str, float]

    def passed(self, rtol: float = 1e-8) -> dict[str, bool]:
        return {k: abs(v) <= rtol * self.scales[k] for k, v in self.residuals.items()}


def _support_check(phi: RadialPair, what: str) -> tuple[float, float]:
    sup = phi.support
    if sup is None or not (0.0 < sup[0] < sup[1] < 1.0):
        raise SupportError(f"{what} must be compactly supported in (0, 1), got {sup}")
    return sup


def _square(f: RadialFunction) -> tuple:
    return lambda r: (f(r) ** 2, 2 * f(r) * f.d1(r), 2 * f.d1(r) ** 2 + 2 * f(r) * f.d2(r))


def green_residuals(phi: RadialPair, psi: RadialPair, ctx: GroupContext,
                    nodes: int = DEFAULT_NODES) -> GreenResiduals:
    """Residuals of the integrated identities for L on the profile.

    i    int L phi
    iii  int psi L phi - int phi L psi
    v    int psi L phi + int <grad phi, grad psi>
    vi   int L(phi^2) - 2 int phi L phi - 2 int |grad phi|^2, and int L(phi^2) itself
    """
    a1, b1 = _support_check(phi, "phi")
    n = ctx.n
    interval = (a1, b1)
    if not all(g.support is None for g in (psi.plus, psi.minus)):
        a2, b2 = _support_check(psi, "psi")
        interval = (min(a1, a2), max(b1, b2))

    def pieces(p, q):
        # split at every support end and break so each piece is smooth
        lo, hi = interval
        pts = {lo, hi}
        for f in (p, q):
            pts |= set(f.breaks) | set(f.support or ())
        pts = sorted(x for x in pts if lo <= x <= hi)
        return list(zip(pts[:-1], pts[1:]))

    def integ(fn):
        total, mag = 0.0, 0.0
        for h in HEMISPHERES:
            p, q = phi.side(h), psi.side(h)
            for piece in pieces(p, q):
                total += integrate_radial_profile(lambda r, hh: fn(p, q, r), ctx, nodes, piece, (h,))
                mag += integrate_radial_profile(lambda r, hh: np.abs(fn(p, q, r)), ctx, nodes, piece, (h,))
        return total, mag

    def L(f, r):
        return apply_Lss_radial(f, r, n)

    def L_sq(f, r):
        return apply_Lss_radial(_square(f)(r), r, n)

    i_val, i_mag = integ(lambda p, q, r: L(p, r))
    pl, pl_mag = integ(lambda p, q, r: q(r) * L(p, r))
    ql, ql_mag = integ(lambda p, q, r: p(r) * L(q, r))
    gg, gg_mag = integ(lambda p, q, r: p.d1(r) * q.d1(r) * (1 - r * r))
    lsq, lsq_mag = integ(lambda p, q, r: L_sq(p, r))
    pp, pp_mag = integ(lambda p, q, r: p(r) * L(p, r))
    g2, g2_mag = integ(lambda p, q, r: p.d1(r) ** 2 * (1 - r * r))
    residuals = {
        "i": i_val,
        "iii": pl - ql,
        "v": pl + gg,
        "vi": lsq - 2 * pp - 2 * g2,
        "vi_total": lsq,
    }
    scales = {
        "i": i_mag,
        "iii": pl_mag + ql_mag,
        "v": pl_mag + gg_mag,
        "vi": lsq_mag + 2 * pp_mag + 2 * g2_mag,
        "vi_total": lsq_mag,
    }
    return GreenResiduals(residuals, scales)


# ---------------------------------------------------------------- integral identities for n >= 2

@dataclass(frozen=True)
class NecessaryCondition:
    lhs: float
    rhs: float
    residual: float


def _closed_form_integral(ctx: GroupContext, fn: Callable[[float, int], float],
                          nodes: int = DEFAULT_NODES) -> float:
    def integrand(r, h):
        return np.array([fn(x, h) for x in r])
    return integrate_radial_profile(integrand, ctx, nodes)


def necessary_condition_check(ctx: GroupContext, nodes: int = DEFAULT_NODES) -> NecessaryCondition:
    """lhs = int |grad_HS varpi|^2, rhs = int varpi^2 (|S_H|^2 + ((3-n)/6) varpi^2)."""
    n = ctx.n
    require_pole_integrable(n, -4, "necessary stability condition")

    def lhs_fn(r, h):
        dk = -h / (r * r * np.sqrt(1.0 - r * r))
        return 4.0 * dk * dk * (1.0 - r * r)

    def rhs_fn(r, h):
        _, s_sq, _, _ = curvature_norms(ProfilePoint(r, h), ctx)
        w = 2.0 * h * np.sqrt(1.0 - r * r) / r
        return w * w * (s_sq + (3.0 - n) / 6.0 * w * w)

    lhs = _closed_form_integral(ctx, lhs_fn, nodes)
    rhs = _closed_form_integral(ctx, rhs_fn, nodes)
    return NecessaryCondition(lhs, rhs, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))


def lemma_mio_check(ctx: GroupContext, nodes: int = DEFAULT_NODES) -> float:
    """int (2 varpi^2 d varpi/d nu^perp - (2n/3) varpi^4) sigma_H."""
    n = ctx.n
    require_pole_integrable(n, -4, "varpi^4 identity")

    def fn(r, h):
        w = 2.0 * h * np.sqrt(1.0 - r * r) / r
        return 2.0 * w * w * dvarpi_dnuperp(ProfilePoint(r, h)) - (2.0 * n / 3.0) * w ** 4

    return _closed_form_integral(ctx, fn, nodes)


# ---------------------------------------------------------------- local stability

def local_potential(n: int, q_kind: str) -> Callable[[Array], Array]:
    if q_kind == "zxc2":
        return lambda r: -(2 * n - 2) / r ** 2
    if q_kind == "zxc3":
        return lambda r: -2.0 * (2 * n - 3) / r ** 2
    raise DomainError(f"unknown potential kind {q_kind!r}")


def local_stability_check(ctx: GroupContext, support: tuple[float, float], hemisphere: int,
                          phi: RadialFunction, q_kind: str = "zxc2",
                          nodes: int = DEFAULT_NODES) -> float:
    """int (|grad_HS phi|^2 + q phi^2) sigma_H over one hemisphere, phi supported in [a, b]."""
    n = ctx.n
    a, b = support
    if not 0.0 < a < b < 1.0:
        raise SupportError(f"support must lie in (0, 1), got {support}")
    if phi.support is not None and (phi.support[0] < a or phi.support[1] > b):
        raise SupportError(f"phi is supported on {phi.support}, outside {support}")
    if q_kind == "zxc3":
        if n < 2:
            raise SupportError("the zxc3 potential needs n >= 2")
        if a * a < (2 * n - 3) / (2 * n - 2):
            raise SupportError(f"zxc3 needs a^2 >= {(2 * n - 3) / (2 * n - 2):.6g}, got a = {a}")
    q = local_potential(n, q_kind)
    h = 1 if hemisphere in (1, "+", "upper") else -1
    return integrate_radial_profile(lambda r, hh: phi.d1(r) ** 2 * (1 - r * r) + q(r) * phi(r) ** 2,
                                    ctx, nodes, (a, b), (h,))


def log_substitution_residual(psi: RadialFunction, q, rho, n: int):
    """|L(log psi) - (q - |grad_HS log psi|^2)| at rho."""
    r = np.asarray(rho, dtype=float)
    v, d1, d2 = psi.jet(r)
    if np.any(np.asarray(v) <= 0):
        raise DomainError("psi must be positive at every node")
    g1 = d1 / v
    g2 = d2 / v - g1 ** 2
    lhs = apply_Lss_radial((np.log(v), g1, g2), r, n)
    qv = q(r) if callable(q) else q
    res = np.abs(lhs - (qv - g1 ** 2 * (1.0 - r * r)))
    return float(res) if np.ndim(res) == 0 else res


# ---------------------------------------------------------------- stability batteries

@dataclass(frozen=True)
class StabilityEntry:
    id: str
    F: float
    G: float | None
    constraints: tuple[float, float]


@dataclass(frozen=True)
class StabilityReport:
    n: int
    entries: tuple[StabilityEntry, ...]
    min_value: float
    verdict: str
    tolerance: float
    extra: dict = field(default_factory=dict)

    @property
    def functional_values(self) -> list[tuple[str, float]]:
        return [(e.id, e.F) for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tests": [{"id": e.id, "F": e.F, "G": e.G, "constraints": list(e.constraints)}
                      for e in self.entries],
            "min": self.min_value,
            "verdict": self.verdict,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


FAMILIES = ("legendre", "bumps", "trig")


def _odd(g: RadialFunction) -> RadialPair:
    return RadialPair.odd(equator_factor() * g, f"s*{g.label}")


def _legendre_radial(k: int) -> RadialFunction:
    coeffs = np.polynomial.legendre.leg2poly([0] * k + [1])
    # P_k(2 rho - 1) expanded in powers of rho
    p = np.polynomial.Polynomial(coeffs)(np.polynomial.Polynomial([-1.0, 2.0]))
    f = polynomial(p.coef)
    return RadialFunction(f.f, f.df, f.d2f, None, f"P{k}(2rho-1)")


def _trig_radial(k: int, kind: str) -> RadialFunction:
    w = k * pi
    if kind == "cos":
        return RadialFunction(lambda r: np.cos(w * r), lambda r: -w * np.sin(w * r),
                              lambda r: -w * w * np.cos(w * r), None, f"cos({k}pi rho)")
    return RadialFunction(lambda r: np.sin(w * r), lambda r: w * np.cos(w * r),
                          lambda r: -w * w * np.sin(w * r), None, f"sin({k}pi rho)")


def radial_battery(family: str, count: int, seed: int = 0) -> list[tuple[str, RadialPair]]:
    """Deterministic radial test pairs, continuous across the equator."""
    rng = np.random.default_rng(seed)
    out: list[tuple[str, RadialPair]] = []
    for i in range(count):
        if family == "legendre":
            k = 1 + i // 2
            g = _legendre_radial(k)
            pair = RadialPair.even(g) if i % 2 == 0 else _odd(g)
        elif family == "trig":
            k = 1 + i // 2
            pair = RadialPair.even(_trig_radial(k, "cos")) if i % 2 == 0 else _odd(_trig_radial(k, "sin"))
        elif family == "bumps":
            a1, a2 = np.sort(rng.uniform(0.02, 0.98, 2))
            b1, b2 = np.sort(rng.uniform(0.02, 0.98, 2))
            if a2 - a1 < 0.05:
                a2 = min(a1 + 0.05, 0.999)
            if b2 - b1 < 0.05:
                b2 = min(b1 + 0.05, 0.999)
            c = rng.uniform(-1.0, 1.0)
            pair = RadialPair(bump(float(a1), float(a2)), bump(float(b1), float(b2)).scaled(float(c)),
                              f"bumps[{a1:.3f},{a2:.3f}]|{c:.3f}*[{b1:.3f},{b2:.3f}]")
        else:
            raise DomainError(f"unknown test family {family!r}")
        out.append((f"{family}-{i:02d}", pair))
    return out


def mixed_radial_battery(count: int = 50, seed: int = 0) -> list[tuple[str, RadialPair]]:
    """Round-robin over the families plus the odd prototype kappa."""
    from .functions import kappa_upper
    per = -(-(count - 1) // len(FAMILIES))
    pools = [radial_battery(f, per, seed) for f in FAMILIES]
    tests = [("kappa", RadialPair.odd(kappa_upper(), "kappa"))]
    i = 0
    while len(tests) < count:
        pool = pools[i % len(FAMILIES)]
        tests.append(pool[i // len(FAMILIES)])
        i += 1
    return tests


def polar_battery(count: int = 50, seed: int = 0) -> list[tuple[str, PolarPair]]:
    """n = 1 fields rho^k cos(k theta + a) g(rho) with analytic derivatives.

    Even-indexed fields are the same on both hemispheres; odd-indexed ones
    change sign and carry a factor sqrt(1 - rho^2).
    """
    rng = np.random.default_rng(seed)
    out: list[tuple[str, PolarPair]] = []
    for i in range(count):
        k = int(rng.integers(0, 4))
        a = float(rng.uniform(0, 2 * pi))
        c = rng.uniform(-1, 1, 3)
        g = polynomial(c)
        odd = i % 2 == 1
        radial = (equator_factor() * g) if odd else g
        if k > 0:
            radial = radial * RadialFunction(lambda r, k=k: r ** k, lambda r, k=k: k * r ** (k - 1),
                                             None, None, f"rho^{k}")

        def f(r, t, radial=radial, k=k, a=a):
            return radial(r) * np.cos(k * t + a)

        def d(r, t, radial=radial, k=k, a=a):
            return radial.d1(r) * np.cos(k * t + a), -k * radial(r) * np.sin(k * t + a)

        sign = -1.0 if odd else 1.0

        def fm(r, t, f=f, sign=sign):
            return sign * f(r, t)

        def dm(r, t, d=d, sign=sign):
            dr, dt = d(r, t)
            return sign * dr, sign * dt

        label = f"{'odd' if odd else 'even'} k={k} a={a:.3f} g={np.round(c, 3).tolist()}"
        out.append((f"polar-{i:02d}", PolarPair(f, fm, label, plus_d=d, minus_d=dm)))
    return out


def _evaluate_test(ctx: GroupContext, tid: str, phi, project: bool, nodes: int) -> StabilityEntry:
    if project:
        phi = zero_mean_project(phi, ctx, nodes)
    norm = np.sqrt(weighted_norm_sq(phi, ctx, nodes))
    if norm == 0.0:
        raise DomainError(f"test {tid} vanishes after projection")
    phi = phi.scaled(1.0 / norm)
    F = second_variation_profile(phi, ctx, nodes, require_zero_mean=project)
    try:
        G = rayleigh_G(phi, ctx, nodes)
    except DomainError:
        G = None
    return StabilityEntry(tid, float(F), None if G is None else float(G),
                          constraint_integrals(phi, ctx, nodes))


def run_stability(ctx: GroupContext, tests, tol: float = 1e-8, project: bool = True,
                  nodes: int = DEFAULT_NODES, threads: int = 1) -> StabilityReport:
    """Evaluate F (and G when defined) on unit-normalized, zero-mean test functions.

    Entries keep the order of ``tests`` whatever the thread count.
    """
    tests = list(tests)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(lambda item: _evaluate_test(ctx, item[0], item[1], project, nodes),
                                    tests))
    else:
        entries = [_evaluate_test(ctx, tid, phi, project, nodes) for tid, phi in tests]
    min_value = min(e.F for e in entries)
    verdict = "nonnegative" if min_value >= -tol else "violation found"
    return StabilityReport(ctx.n, tuple(entries), float(min_value), verdict, tol)

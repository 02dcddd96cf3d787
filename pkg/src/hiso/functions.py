"""Test functions on the profile.

A radial function carries callables for its value and first two derivatives
in rho.  A ``RadialPair`` assigns one radial function to each hemisphere; a
``PolarPair`` holds (rho, theta) fields for n = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

Array = np.ndarray
Fn = Callable[[Array], Array]


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class RadialFunction:
    f: Fn
    df: Fn
    d2f: Fn | None = None
    support: tuple[float, float] | None = None
    label: str = ""
    breaks: tuple[float, ...] = ()

    def __call__(self, rho):
        return self.f(np.asarray(rho, dtype=float))

    def d1(self, rho):
        return self.df(np.asarray(rho, dtype=float))

    def d2(self, rho):
        if self.d2f is None:
            raise DomainError(f"second derivative not available for {self.label or 'function'}")
        return self.d2f(np.asarray(rho, dtype=float))

    def jet(self, rho) -> tuple[Array, Array, Array]:
        return self(rho), self.d1(rho), self.d2(rho)

    def scaled(self, c: float) -> "RadialFunction":
        d2 = None if self.d2f is None else (lambda r: c * self.d2f(r))
        return RadialFunction(lambda r: c * self.f(r), lambda r: c * self.df(r), d2,
                              self.support, f"{c}*({self.label})", self.breaks)

    def shifted(self, c: float) -> "RadialFunction":
        """self + c (support is lost unless c = 0)."""
        breaks = self.breaks if c == 0 or self.support is None else tuple(sorted(set(self.breaks) | set(self.support)))
        return RadialFunction(lambda r: self.f(r) + c, self.df, self.d2f,
                              self.support if c == 0 else None, f"({self.label})+{c}", breaks)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        d2 = None if (self.d2f is None or other.d2f is None) else (lambda r: self.d2f(r) + other.d2f(r))
        support = None
        if self.support and other.support:
            support = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        return RadialFunction(lambda r: self.f(r) + other.f(r), lambda r: self.df(r) + other.df(r),
                              d2, support, f"({self.label})+({other.label})", _merge(self, other))

    def __mul__(self, other: "RadialFunction") -> "RadialFunction":
        def d2(r):
            return self.d2f(r) * other.f(r) + 2 * self.df(r) * other.df(r) + self.f(r) * other.d2f(r)

        has_d2 = self.d2f is not None and other.d2f is not None
        support = self.support or other.support
        if self.support and other.support:
            support = (max(self.support[0], other.support[0]), min(self.support[1], other.support[1]))
        return RadialFunction(lambda r: self.f(r) * other.f(r),
                              lambda r: self.df(r) * other.f(r) + self.f(r) * other.df(r),
                              d2 if has_d2 else None, support, f"({self.label})*({other.label})",
                              _merge(self, other))


def _merge(a: RadialFunction, b: RadialFunction) -> tuple[float, ...]:
    pts = set(a.breaks) | set(b.breaks)
    for f in (a, b):
        if f.support is not None:
            pts |= set(f.support)
    return tuple(sorted(pts))


def constant(c: float) -> RadialFunction:
    return RadialFunction(lambda r: np.full_like(np.asarray(r, dtype=float), c), _zero, _zero,
                          None, repr(c))


def power(k: float) -> RadialFunction:
    return RadialFunction(lambda r: r ** k, lambda r: k * r ** (k - 1),
                          lambda r: k * (k - 1) * r ** (k - 2), None, f"rho^{k}")


def polynomial(coeffs) -> RadialFunction:
    p = np.polynomial.Polynomial(coeffs)
    dp, d2p = p.deriv(), p.deriv(2)
    return RadialFunction(p, dp, d2p, None, f"poly{list(coeffs)}")


def kappa_upper() -> RadialFunction:
    """sqrt(1 - rho^2)/rho."""
    def f(r):
        return np.sqrt(1 - r * r) / r

    def df(r):
        return -1.0 / (r * r * np.sqrt(1 - r * r))

    def d2f(r):
        s = np.sqrt(1 - r * r)
        return 2.0 / (r ** 3 * s) - 1.0 / (r * s ** 3)

    return RadialFunction(f, df, d2f, None, "kappa")


def equator_factor() -> RadialFunction:
    """sqrt(1 - rho^2); multiplying by it makes an odd pair smooth across the equator."""
    def f(r):
        return np.sqrt(np.maximum(1 - r * r, 0.0))

    def df(r):
        return -r / np.sqrt(1 - r * r)

    def d2f(r):
        return -1.0 / (1 - r * r) ** 1.5

    return RadialFunction(f, df, d2f, None, "sqrt(1-rho^2)")


def zxc3_certificate(n: int) -> RadialFunction:
    """(2n-2)/(2n-3) - rho^-2."""
    if n < 2:
        raise DomainError("certificate defined for n >= 2")
    c = (2 * n - 2) / (2 * n - 3)
    return RadialFunction(lambda r: c - r ** -2.0, lambda r: 2.0 * r ** -3.0,
                          lambda r: -6.0 * r ** -4.0, None, "zxc3")


def bump(a: float, b: float) -> RadialFunction:
    """exp(1/q_max - 1/q) with q = (rho - a)(b - rho) on (a, b), zero elsewhere; peak value 1."""
    if not 0.0 <= a < b <= 1.0:
        raise DomainError(f"bump interval must satisfy 0 <= a < b <= 1, got ({a}, {b})")
    q_max = 0.25 * (b - a) ** 2

    def parts(r):
        r = np.asarray(r, dtype=float)
        inside = (r > a) & (r < b)
        q = np.where(inside, (r - a) * (b - r), q_max)
        g = np.where(inside, np.exp(1.0 / q_max - 1.0 / q), 0.0)
        return g, q, a + b - 2.0 * r

    def f(r):
        return parts(r)[0]

    def df(r):
        g, q, dq = parts(r)
        return g * dq / q ** 2

    def d2f(r):
        g, q, dq = parts(r)
        return g * (dq ** 2 / q ** 4 - 2.0 / q ** 2 - 2.0 * dq ** 2 / q ** 3)

    return RadialFunction(f, df, d2f, (a, b), f"bump[{a},{b}]", (a, b))


@dataclass(frozen=True)
class RadialPair:
    plus: RadialFunction
    minus: RadialFunction
    label: str = ""

    @classmethod
    def even(cls, f: RadialFunction, label: str = "") -> "RadialPair":
        return cls(f, f, label or f.label)

    @classmethod
    def odd(cls, f: RadialFunction, label: str = "") -> "RadialPair":
        return cls(f, f.scaled(-1.0), label or f.label)

    def side(self, h: int) -> RadialFunction:
        return self.plus if h > 0 else self.minus

    @property
    def support(self) -> tuple[float, float] | None:
        a, b = self.plus.support, self.minus.support
        if a is None or b is None:
            return None
        return min(a[0], b[0]), max(a[1], b[1])

    def scaled(self, c: float) -> "RadialPair":
        return RadialPair(self.plus.scaled(c), self.minus.scaled(c), self.label)

    def shifted(self, c: float) -> "RadialPair":
        return RadialPair(self.plus.shifted(c), self.minus.shifted(c), self.label)


@dataclass(frozen=True)
class PolarPair:
    """Fields phi(rho, theta) per hemisphere for n = 1.

    ``plus_d`` and ``minus_d`` optionally return (phi_rho, phi_theta); without
    them derivatives are fourth-order central differences with step ``h``.
    """

    plus: Callable[[Array, Array], Array]
    minus: Callable[[Array, Array], Array]
    label: str = ""
    h: float = 1e-4
    plus_d: Callable[[Array, Array], tuple[Array, Array]] | None = None
    minus_d: Callable[[Array, Array], tuple[Array, Array]] | None = None

    def side(self, hemi: int):
        return self.plus if hemi > 0 else self.minus

    def derivatives(self, hemi: int, rho, theta) -> tuple[Array, Array, Array]:
        """(phi, phi_rho, phi_theta) at the given arrays."""
        f = self.side(hemi)
        v = f(rho, theta)
        d = self.plus_d if hemi > 0 else self.minus_d
        if d is not None:
            d_r, d_t = d(rho, theta)
            return v, d_r, d_t
        h = self.h
        d_r = (-f(rho + 2 * h, theta) + 8 * f(rho + h, theta) - 8 * f(rho - h, theta)
               + f(rho - 2 * h, theta)) / (12 * h)
        d_t = (-f(rho, theta + 2 * h) + 8 * f(rho, theta + h) - 8 * f(rho, theta - h)
               + f(rho, theta - 2 * h)) / (12 * h)
        return v, d_r, d_t

    def shifted(self, c: float) -> "PolarPair":
        p, m = self.plus, self.minus
        return PolarPair(lambda r, t: p(r, t) + c, lambda r, t: m(r, t) + c, self.label, self.h,
                         self.plus_d, self.minus_d)

    def scaled(self, c: float) -> "PolarPair":
        p, m, pd, md = self.plus, self.minus, self.plus_d, self.minus_d

        def wrap(d):
            if d is None:
                return None
            return lambda r, t: tuple(c * x for x in d(r, t))

        return PolarPair(lambda r, t: c * p(r, t), lambda r, t: c * m(r, t), self.label, self.h,
                         wrap(pd), wrap(md))


SurfaceTestFunction = RadialPair | PolarPair

from math import pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hiso.errors import DomainError, ResonanceError, UnsupportedError
from hiso.functions import kappa_upper, power
from hiso.spectral import (PolarField, SturmLiouvilleDiscretization, apply_Lss_full_n1,
                           apply_Lss_radial, candidate_mu, frobenius_series, graph_oracle_n1,
                           ode_residual, refinement_study, sl_coefficients, solve_radial_spectrum,
                           spherical_mean, weighted_cosine)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kappa_is_an_eigenfunction(n):
    rho = np.linspace(0.05, 0.95, 91)
    assert np.max(np.abs(ode_residual(kappa_upper(), 2 * n - 2, rho, n))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.95), st.integers(0, 6))
def test_operator_on_powers(n, r, k):
    # L rho^k = k(k - 1 + 2n) rho^{k-2} - k(k + 2n) rho^k
    expected = k * (k - 1 + 2 * n) * r ** (k - 2) - k * (k + 2 * n) * r ** k if k else 0.0
    assert apply_Lss_radial(power(k), r, n) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.95))
def test_sturm_liouville_form_matches_operator(n, r):
    # (p phi')' / w for phi = rho^3
    p, dp, w, _ = sl_coefficients(n, r)
    lhs = (dp * 3 * r ** 2 + p * 6 * r) / w
    assert lhs == pytest.approx(apply_Lss_radial(power(3), r, n), rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_frobenius_binomial_series(n):
    sol = frobenius_series(n, 1, 2 * n - 2, 1.0, 0.0, 7)
    assert sol.a == pytest.approx((1, 0, -0.5, 0, -0.125, 0, -0.0625, 0), abs=1e-15)
    assert np.max(np.abs(sol.recurrence_residuals())) < 1e-15
    # rho^{-1} sqrt(1 - rho^2) truncated at rho^6
    r = 0.1
    assert sol(r) == pytest.approx(np.sqrt(1 - r * r) / r, abs=1e-8)


def test_frobenius_derivative_matches_fd():
    sol = frobenius_series(3, 1, 4, 1.0, 0.3, 9)
    r, h = 0.4, 1e-5
    assert sol.derivative(r) == pytest.approx((sol(r + h) - sol(r - h)) / (2 * h), rel=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_candidate_table(n):
    rows = candidate_mu(n)
    assert [m for m, _, _ in rows] == list(range(1, 2 * n))
    for m, mu, ok in rows:
        assert mu == m * (2 * n - (m + 1))
        assert ok == (m <= n - 1)


def test_frobenius_errors():
    # l = 0: (2 - m)(2n + 1 - m) + mu = 4 - 4 = 0
    with pytest.raises(ResonanceError):
        frobenius_series(2, 1, -4, 1.0, 0.0, 6)
    with pytest.raises(DomainError):
        frobenius_series(2, 1, 2, 1.0, 0.0, 0)
    with pytest.raises(DomainError):
        candidate_mu(0)


@pytest.mark.parametrize("n", [2, 3])
def test_lowest_admissible_mode(n):
    disc = SturmLiouvilleDiscretization(n, 1e-3, 1 - 1e-9, 2000)
    res = solve_radial_spectrum(n, disc, k=4)
    mu, vec, parity = res.lowest_admissible()
    assert parity == "odd"
    assert mu == pytest.approx(2 * n - 2, rel=5e-3)
    kap = kappa_upper()(disc.mesh)
    kap[-1] = 0.0
    assert weighted_cosine(disc, vec, kap) > 0.999
    assert np.all(res.residuals < 1e-8)
    # the constant mode is the lowest even one and fails the constraints
    even = [i for i, p in enumerate(res.parity) if p == "even"]
    assert abs(res.eigenvalues[even[0]]) < 1e-6 and not res.admissible[even[0]]


def test_refinement_is_monotone():
    vals = refinement_study(2)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(2.0, rel=1e-3)


def test_discretization_errors():
    with pytest.raises(DomainError):
        SturmLiouvilleDiscretization(2, 0.5, 0.4)
    with pytest.raises(DomainError):
        SturmLiouvilleDiscretization(2, elements=2)
    with pytest.raises(DomainError):
        solve_radial_spectrum(3, SturmLiouvilleDiscretization(2, elements=50))
    with pytest.raises(DomainError):
        ode_residual(kappa_upper(), 2, 1.0, 2)


def _smooth_field(seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(6)

    def f(x, y):
        return (c[0] * x + c[1] * y + c[2] * x * y + c[3] * np.sin(x + 2 * y)
                + c[4] * np.cos(2 * x - y) + c[5] * (x * x - y * y))

    return f


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("hemi", [1, -1])
def test_full_operator_matches_graph_oracle(seed, hemi):
    f = _smooth_field(seed)
    rho = np.linspace(0.2, 0.8, 241)
    field = PolarField.sample(lambda r, t: f(r * np.cos(t), r * np.sin(t)), rho, 256, hemi)
    for i, j in [(40, 10), (120, 77), (200, 200)]:
        a = apply_Lss_full_n1(field, (i, j))
        b = graph_oracle_n1(f, rho[i], field.theta[j], hemi)
        assert a == pytest.approx(b, abs=1e-4)


def test_full_operator_reduces_to_radial():
    rho = np.linspace(0.2, 0.8, 121)
    field = PolarField.sample(lambda r, t: r ** 3 + 0 * t, rho, 32)
    assert apply_Lss_full_n1(field, (60, 5)) == pytest.approx(apply_Lss_radial(power(3), rho[60], 1), rel=1e-7)


def test_full_operator_errors():
    field = PolarField.sample(lambda r, t: r + t * 0, np.linspace(0.2, 0.8, 11), 8)
    with pytest.raises(UnsupportedError):
        apply_Lss_full_n1(field, (5, 0), n=2)
    with pytest.raises(DomainError):
        apply_Lss_full_n1(field, (1, 0))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_spherical_mean(n):
    area = 2 * pi ** n / [1, 1, 2][n - 1]
    assert spherical_mean(lambda p: np.ones(len(p)), 0.7, n) == pytest.approx(area, rel=1e-12)
    # |x_1|^2 averages to rho^2 / (2n)
    assert spherical_mean(lambda p: p[:, 0] ** 2, 0.7, n) == pytest.approx(area * 0.49 / (2 * n), rel=1e-12)

"""Acceptance gate: one PASS/FAIL line per criterion at the stated tolerances."""

from math import pi, sqrt

import mpmath as mp
import numpy as np
import pytest

from hiso.cc_geodesics import generate_profile, pole_data
from hiso.errors import IntegrabilityError
from hiso.functions import (RadialPair, bump, kappa_upper, zxc3_certificate)
from hiso.heisenberg_core import GroupContext
from hiso.profile_geometry import (ProfilePoint, assemble_shape_operators, profile_residual, u0,
                                   u0_prime)
from hiso.quadrature import integrate_disk
from hiso.spectral import (REFINEMENT_LEVELS, PolarField, SturmLiouvilleDiscretization,
                           apply_Lss_full_n1, candidate_mu, frobenius_series, graph_oracle_n1,
                           ode_residual, refinement_study, solve_radial_spectrum, weighted_cosine)
from hiso.tgraph_geometry import (admissibility_condvar2, constant_tgraph, mean_curvature,
                                  profile_tgraph, radial_planar, variation_T_first,
                                  variation_T_second)
from hiso.variational import (green_residuals, isoperimetric_J, lemma_mio_check,
                              local_potential, local_stability_check, log_substitution_residual,
                              mixed_radial_battery, necessary_condition_check, polar_battery,
                              run_stability)

mp.mp.dps = 40


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  [{number:02d}] {name}: {detail}")
        assert ok, detail
    return emit


def test_01_profile_closed_forms(report):
    def u0_mp(r):
        r = mp.mpf(r)
        return mp.pi / 8 + r * mp.sqrt(1 - r * r) / 4 - mp.asin(r) / 4

    ends = max(abs(u0(0.0) - pi / 8), abs(u0(1.0)))
    rho = np.linspace(0.005, 0.995, 100)
    stated = np.abs(u0_prime(rho) + rho ** 2 / (2 * np.sqrt(1 - rho ** 2)))
    # independent oracle: high-precision derivative of the closed form
    oracle = max(abs(float(u0_prime(r)) - float(mp.diff(u0_mp, r))) for r in rho)
    values = max(abs(float(u0(r)) - float(u0_mp(r))) for r in rho)
    worst = max(ends, float(np.max(stated)), oracle / max(1.0, float(np.max(np.abs(u0_prime(rho))))), values)
    report(1, "profile closed forms", worst <= 1e-12,
           f"ends {ends:.1e}, u0' vs stated {np.max(stated):.1e}, vs mp.diff {oracle:.1e}, u0 vs mp {values:.1e}")


def test_02_mean_curvature(report):
    worst = 0.0
    for n in (1, 2, 3):
        g = profile_tgraph(n)
        rng = np.random.default_rng(n)
        for r in np.linspace(0.1, 0.9, 17):
            xi = rng.standard_normal(2 * n)
            z = r * xi / np.linalg.norm(xi)
            worst = max(worst, abs(mean_curvature(g, z, method="fd") + 2 * n))
    report(2, "FD mean curvature of the profile", worst <= 1e-6, f"max |H + 2n| = {worst:.2e}")


def test_03_curvature_norms(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for n in (1, 2, 3):
        ctx = GroupContext(n)
        for _ in range(50):
            r = float(rng.uniform(0.05, 0.95))
            h = int(rng.choice([1, -1]))
            xi = rng.standard_normal(2 * n)
            S, A, B = assemble_shape_operators(ProfilePoint(r, h, xi / np.linalg.norm(xi)), ctx)
            w = 2 * h * sqrt(1 - r * r) / r
            expect = {"B": 4 + (2 * n - 2) / r ** 2, "S": 2 * n + 2, "A": 0.5 * (n - 1) * w * w}
            got = {"B": np.sum(B * B), "S": np.sum(S * S), "A": np.sum(A * A)}
            for k in expect:
                worst = max(worst, abs(got[k] - expect[k]) / max(1.0, expect[k]))
            eig = np.linalg.eigvalsh(S)
            worst = max(worst, float(np.max(np.abs(eig - np.array([-2.0] + [-1.0] * (2 * n - 2))))))
    report(3, "shape operator norms and principal curvatures", worst <= 1e-9, f"max deviation {worst:.2e}")


def test_04_eigenfunction_identity(report):
    rho = np.linspace(0.05, 0.95, 181)
    worst = max(float(np.max(np.abs(ode_residual(kappa_upper(), 2 * n - 2, rho, n)))) for n in (1, 2, 3, 4))
    report(4, "kappa solves the radial ODE with mu = 2n-2", worst <= 1e-8, f"max residual {worst:.2e}")


def test_05_frobenius(report):
    worst = 0.0
    for n in (2, 3, 4):
        a = frobenius_series(n, 1, 2 * n - 2, 1.0, 0.0, 6).a
        worst = max(worst, abs(a[2] + 0.5), abs(a[4] + 0.125), abs(a[6] + 0.0625))
    table = all(mu == m * (2 * n - (m + 1)) and ok == (m <= n - 1)
                for n in (1, 2, 3, 4, 5) for m, mu, ok in candidate_mu(n))
    report(5, "Frobenius binomial series and candidate table", worst == 0.0 and table,
           f"max coefficient error {worst:.1e}, table {'ok' if table else 'mismatch'}")


def test_06_numerical_spectrum(report):
    details, ok = [], True
    for n in (2, 3):
        vals = refinement_study(n)
        monotone = all(abs(a - (2 * n - 2)) > abs(b - (2 * n - 2)) for a, b in zip(vals, vals[1:]))
        rmin, rmax, m = REFINEMENT_LEVELS[-1]
        disc = SturmLiouvilleDiscretization(n, rmin, rmax, m)
        _, vec, _ = solve_radial_spectrum(n, disc, 4).lowest_admissible()
        kap = kappa_upper()(disc.mesh)
        cos = weighted_cosine(disc, vec, kap)
        rel = abs(vals[-1] - (2 * n - 2)) / (2 * n - 2)
        ok &= monotone and rel <= 0.01 and cos >= 0.999
        details.append(f"n={n}: {['%.6f' % v for v in vals]} rel {rel:.1e} cos {cos:.6f}")
    report(6, "radial spectrum refinement", ok, "; ".join(details))


def test_07_radial_stability(report):
    details, ok = [], True
    for n in (2, 3):
        rep = run_stability(GroupContext(n), mixed_radial_battery(50))
        kap = next(e for e in rep.entries if e.id == "kappa")
        ok &= len(rep.entries) == 50 and rep.min_value >= -1e-8 and abs(kap.F) <= 1e-8
        details.append(f"n={n}: min F {rep.min_value:.2e}, F(kappa) {kap.F:.1e}")
    report(7, "radial stability battery", ok, "; ".join(details))


def test_08_n1_stability(report):
    tests = polar_battery(50)
    nonradial = sum(1 for _, p in tests if "k=0" not in p.label)
    rep = run_stability(GroupContext(1), tests)
    ok = len(rep.entries) == 50 and nonradial > 0 and rep.min_value >= -1e-8
    report(8, "n=1 stability with non-radial fields", ok,
           f"min F {rep.min_value:.3f} over 50 fields ({nonradial} non-radial)")


def test_09_local_stability(report):
    rng = np.random.default_rng(9)
    worst, log_worst = np.inf, 0.0
    for n in (2, 3):
        ctx = GroupContext(n)
        lo = sqrt((2 * n - 3) / (2 * n - 2))
        for kind, (a0, b0) in (("zxc2", (0.0, 1.0)), ("zxc3", (lo, 1.0))):
            for _ in range(15):
                a, b = np.sort(rng.uniform(a0 + 1e-3, b0 - 1e-3, 2))
                if b - a < 0.02:
                    continue
                for h in (1, -1):
                    val = local_stability_check(ctx, (a, b), h, bump(a, b), kind)
                    worst = min(worst, val)
        r2 = np.linspace(0.02, 0.98, 97)
        r3 = np.linspace(lo + 1e-3, 0.98, 97)
        log_worst = max(log_worst,
                        float(np.max(log_substitution_residual(kappa_upper(), local_potential(n, "zxc2"), r2, n))),
                        float(np.max(log_substitution_residual(zxc3_certificate(n), local_potential(n, "zxc3"), r3, n))))
    ok = worst >= -1e-10 and log_worst <= 1e-10
    report(9, "local stability in the two regions", ok,
           f"min quadratic form {worst:.3e}, max log-substitution residual {log_worst:.1e}")


def test_10_green_formulas(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(4):
            a1, b1, a2, b2 = np.sort(rng.uniform(0.05, 0.95, 4))[[0, 3, 1, 2]]
            phi = RadialPair(bump(a1, b1), bump(a2, b2).scaled(float(rng.uniform(-1, 1))))
            psi = RadialPair(bump(a2, b2), bump(a1, b1).scaled(float(rng.uniform(-1, 1))))
            g = green_residuals(phi, psi, GroupContext(n))
            for key in ("i", "iii", "v", "vi"):
                worst = max(worst, abs(g.residuals[key]) / g.scales[key])
    report(10, "Green formulas", worst <= 1e-8, f"max residual/scale {worst:.1e}")


def test_11_pole_identities(report):
    details, ok = [], True
    for n in (2, 3):
        mio = lemma_mio_check(GroupContext(n))
        nc = necessary_condition_check(GroupContext(n))
        ok &= abs(mio) <= 1e-8 and nc.residual <= 1e-6
        details.append(f"n={n}: identity {mio:.1e}, lhs {nc.lhs:.6f} rhs {nc.rhs:.6f}")
    rejected = 0
    for check in (lemma_mio_check, necessary_condition_check):
        try:
            check(GroupContext(1))
        except IntegrabilityError:
            rejected += 1
    ok &= rejected == 2
    report(11, "pole-weighted integral identities", ok, "; ".join(details) + f"; n=1 rejected {rejected}/2")


def test_12_geodesics(report):
    worst = 0.0
    for c in (0.5, 1.0, 2.0, 4.0):
        pd = pole_data(c)
        worst = max(worst, abs(pd.delta_t * c * c - pi), abs(pd.arc_length * abs(c) - 2 * pi))
    prof = max(profile_residual(r, t) for r, t in generate_profile(2.0, 201))
    report(12, "geodesic poles and generated profile", worst <= 1e-8 and prof <= 1e-8,
           f"pole error {worst:.1e}, profile residual {prof:.1e}")


def test_13_isoperimetric_functional(report):
    v1 = isoperimetric_J(1.0, 1)
    area_err = abs(v1.sigma - pi ** 2 / 2)
    vol_err = abs(v1.volume - 3 * pi ** 2 / 16)
    dil = max(abs(isoperimetric_J(s, n).J - isoperimetric_J(1.0, n).J) for s in (0.5, 2.0) for n in (1, 2))
    crit = max(abs(isoperimetric_J(1.0, n).criticality_residual) for n in (1, 2))
    ok = area_err <= 1e-10 and vol_err <= 1e-10 and dil <= 1e-10 and crit <= 1e-8
    report(13, "isoperimetric functional", ok,
           f"sigma {area_err:.1e}, vol {vol_err:.1e}, dilation {dil:.1e}, criticality {crit:.1e}")


def test_14_hemisphere_variations(report):
    rng = np.random.default_rng(14)
    first, second = 0.0, np.inf
    for n in (1, 2, 3):
        g, ctx = profile_tgraph(n), GroupContext(n)
        for _ in range(4):
            a, b = np.sort(rng.uniform(0.05, 0.95, 2))
            w = bump(a, b)
            phi = radial_planar(w)
            integral = integrate_disk(lambda p: w(np.linalg.norm(p, axis=-1)), ctx, annulus=(a, b))
            first = max(first, abs(variation_T_first(g, phi) - 2 * n * integral))

            def weight(p):
                r = np.linalg.norm(p, axis=-1)
                return w.d1(r) ** 2 * (1 - r * r) ** 1.5

            bound = 2 * integrate_disk(weight, ctx, annulus=(a, b))
            second = min(second, variation_T_second(g, phi) - bound)
    adm, conv = admissibility_condvar2(constant_tgraph(1))
    ok = first <= 1e-8 and second >= -1e-8 and conv and abs(adm - 4 * pi) <= 1e-8
    report(14, "hemisphere variations and admissibility", ok,
           f"first {first:.1e}, min(second - bound) {second:.3e}, admissibility {adm - 4 * pi:.1e}")


def test_15_operator_cross_validation(report):
    rng = np.random.default_rng(15)
    rho = np.linspace(0.15, 0.85, 281)
    worst = 0.0
    for k in range(20):
        c = rng.standard_normal(6)
        fx, fy = rng.uniform(0.5, 2.0, 2)

        def f(x, y, c=c, fx=fx, fy=fy):
            return (c[0] * x + c[1] * y + c[2] * x * y + c[3] * np.sin(fx * x + y)
                    + c[4] * np.cos(x - fy * y) + c[5] * np.exp(0.5 * x * y))

        hemi = 1 if k % 2 == 0 else -1
        field = PolarField.sample(lambda r, t: f(r * np.cos(t), r * np.sin(t)), rho, 256, hemi)
        for i, j in zip(rng.integers(2, rho.size - 2, 5), rng.integers(0, 256, 5)):
            worst = max(worst, abs(apply_Lss_full_n1(field, (int(i), int(j)))
                                   - graph_oracle_n1(f, rho[i], field.theta[j], hemi)))
    report(15, "full operator vs graph-coordinate oracle (n=1)", worst <= 1e-4,
           f"max residual {worst:.1e} over 20 fields")

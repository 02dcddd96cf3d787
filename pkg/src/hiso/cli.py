"""Command-line entry point ``hiso``.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numeric
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from math import pi

import numpy as np

from . import __version__
from .errors import (ConvergenceError, DimensionError, DomainError, HisoError, IntegrabilityError,
                     ParseError, QuadratureError, ResonanceError, SupportError, UnsupportedError)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# ---------------------------------------------------------------- configuration

def resolve_threads(flag: int | None) -> int:
    """Thread count: HISO_THREADS wins over --threads; default is the logical core count."""
    env = os.environ.get("HISO_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"HISO_THREADS must be a positive integer, got {env!r}")
    else:
        value = flag if flag is not None else (os.cpu_count() or 1)
    if value < 1:
        raise UsageError(f"thread count must be >= 1, got {value}")
    return value


def run_config(args: argparse.Namespace) -> dict:
    """Validated flags, recorded verbatim in every report."""
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    if args.tol <= 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")
    skip = {"func", "out", "format", "threads"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["threads"] = resolve_threads(args.threads)
    return cfg


def header(command: str, cfg: dict, tolerances: dict) -> dict:
    return {"tool": "hiso", "version": __version__, "command": command, "config": cfg,
            "tolerances": tolerances}


def emit(args, report: dict, rows: list[dict] | None, columns: list[str] | None) -> None:
    """Write JSON (the full report) or CSV (the rows) to --out or stdout."""
    fmt = args.format or ("csv" if rows is not None and args.func in CSV_DEFAULT else "json")
    if fmt == "csv":
        if rows is None:
            raise UsageError("this command has no tabular output; use --format json")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        try:
            with open(args.out, "w", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- verify

def _check(name: str, value: float, threshold: float) -> dict:
    value = float(value)
    return {"name": name, "value": value, "threshold": threshold,
            "status": "pass" if np.isfinite(value) and value <= threshold else "fail"}


def verification_checks(n: int, tol: float) -> list[dict]:
    """Pointwise and integral identities on the unit profile."""
    from .cc_geodesics import pole_data
    from .functions import RadialPair, bump, kappa_upper
    from .heisenberg_core import GroupContext
    from .profile_geometry import (ProfilePoint, assemble_shape_operators, curvature_norms, u0,
                                   u0_prime, radial_identity_residuals)
    from .spectral import frobenius_series, ode_residual
    from .tgraph_geometry import mean_curvature, profile_tgraph
    from .variational import (green_residuals, lemma_mio_check, necessary_condition_check,
                              second_variation_profile)

    ctx = GroupContext(n)
    rng = np.random.default_rng(2024)
    checks = []

    rho = np.linspace(0.01, 0.99, 100)
    s = np.sqrt(1 - rho ** 2)
    checks.append(_check("profile.u0_endpoints", max(abs(u0(0.0) - pi / 8), abs(u0(1.0))), 1e-12))
    checks.append(_check("profile.u0_derivative",
                         np.max(np.abs(u0_prime(rho) + rho ** 2 / (2 * s))), 1e-12))

    g = profile_tgraph(n)
    errs = []
    for r in np.linspace(0.1, 0.9, 9):
        z = np.zeros(2 * n)
        z[0] = r
        errs.append(abs(mean_curvature(g, z, method="fd") + 2 * n))
    checks.append(_check("curvature.mean_curvature_fd", max(errs), 1e-6))

    worst = 0.0
    for _ in range(10):
        xi = rng.standard_normal(2 * n)
        xi /= np.linalg.norm(xi)
        p = ProfilePoint(float(rng.uniform(0.05, 0.95)), int(rng.choice([1, -1])), xi)
        S, A, B = assemble_shape_operators(p, ctx)
        b_sq, s_sq, a_sq, _ = curvature_norms(p, ctx)
        eig = np.sort(np.linalg.eigvalsh(S))
        expected = np.array([-2.0] + [-1.0] * (2 * n - 2))
        worst = max(worst, abs(np.sum(B * B) - b_sq), abs(np.sum(S * S) - s_sq),
                    abs(np.sum(A * A) - a_sq), np.max(np.abs(eig - expected)))
    checks.append(_check("curvature.shape_operators", worst, 1e-9))

    rr = np.linspace(0.05, 0.95, 50)
    checks.append(_check("eigenfunction.kappa_ode",
                         np.max(np.abs(ode_residual(kappa_upper(), 2 * n - 2, rr, n))), 1e-8))
    checks.append(_check("eigenfunction.radial_identities",
                         max(max(abs(x) for x in radial_identity_residuals(ProfilePoint(r, h), ctx))
                             for r in (0.2, 0.5, 0.8) for h in (1, -1)), 1e-8))
    if n >= 2:
        fr = frobenius_series(n, 1, 2 * n - 2, 1.0, 0.0, 7)
        binom = np.array([1, 0, -0.5, 0, -0.125, 0, -0.0625, 0])
        checks.append(_check("eigenfunction.frobenius_binomial", np.max(np.abs(np.array(fr.a) - binom)),
                             1e-14))
        kp = RadialPair.odd(kappa_upper(), "kappa")
        f_val = second_variation_profile(kp, ctx)
        checks.append(_check("variation.kappa_equality", abs(f_val), 1e-8))

    gr = green_residuals(RadialPair.even(bump(0.2, 0.8)),
                         RadialPair(bump(0.3, 0.7), bump(0.25, 0.6).scaled(0.5)), ctx)
    for key, val in gr.residuals.items():
        checks.append(_check(f"green.{key}", abs(val) / max(gr.scales[key], 1e-300), tol))

    if n == 1:
        for name, check in (("pole_identity.varpi4", lemma_mio_check),
                            ("pole_identity.necessary_condition", necessary_condition_check)):
            try:
                check(ctx)
                checks.append({"name": name, "status": "fail",
                               "reason": "n = 1 integrand accepted despite pole singularity"})
            except IntegrabilityError:
                checks.append({"name": name, "status": "excluded: integrability (n=1)"})
    else:
        checks.append(_check("pole_identity.varpi4", abs(lemma_mio_check(ctx)), tol))
        checks.append(_check("pole_identity.necessary_condition", necessary_condition_check(ctx).residual,
                             1e-6))

    pd = pole_data(2.0)
    checks.append(_check("geodesic.pole_height", abs(pd.delta_t * 4.0 - pi), 1e-8))
    return checks


def cmd_verify(args) -> int:
    cfg = run_config(args)
    checks = verification_checks(args.n, args.tol)
    failed = [c["name"] for c in checks if c["status"] == "fail"]
    report = header("verify", cfg, {"tol": args.tol}) | {
        "checks": checks, "passed": not failed, "failed": failed}
    rows = [{"name": c["name"], "status": c["status"], "value": c.get("value", ""),
             "threshold": c.get("threshold", "")} for c in checks]
    emit(args, report, rows, ["name", "status", "value", "threshold"])
    for name in failed:
        print(f"hiso verify: identity failed: {name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- eigen

def cmd_eigen(args) -> int:
    from .spectral import SturmLiouvilleDiscretization, solve_radial_spectrum

    cfg = run_config(args)
    if args.elements < 10 or args.k < 1:
        raise UsageError("--elements must be >= 10 and --k >= 1")
    if not 0.0 < args.rho_min < args.rho_max < 1.0:
        raise UsageError("need 0 < --rho-min < --rho-max < 1")
    disc = SturmLiouvilleDiscretization(args.n, args.rho_min, args.rho_max, args.elements)
    res = solve_radial_spectrum(args.n, disc, args.k, constraint_tol=args.constraint_tol)
    modes = []
    for j, mu in enumerate(res.eigenvalues):
        m0, m2 = res.constraint_integrals[j]
        modes.append({"index": j, "mu": float(mu), "parity": res.parity[j], "m0": float(m0) + 0.0,
                      "m2": float(m2) + 0.0, "residual": float(res.residuals[j]),
                      "admissible": bool(res.admissible[j])})
    lowest, vec = None, None
    try:
        lowest, vec, _ = res.lowest_admissible()
    except ConvergenceError:
        pass
    report = header("eigen", cfg, {"constraint_tol": args.constraint_tol}) | {
        "n": args.n, "mesh": {"rho_min": args.rho_min, "rho_max": args.rho_max,
                              "elements": args.elements},
        "eigenvalues": [m["mu"] for m in modes], "residuals": [m["residual"] for m in modes],
        "constraints": [[m["m0"], m["m2"]] for m in modes],
        "modes": modes, "lowest_admissible": lowest, "expected": 2 * args.n - 2}
    if args.eigenfunction_csv and vec is not None:
        _write_eigenfunction(args.eigenfunction_csv, disc.mesh, vec)
    emit(args, report, modes, ["index", "mu", "parity", "m0", "m2", "residual", "admissible"])
    if lowest is None:
        print("hiso eigen: no admissible mode among the computed pairs", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _write_eigenfunction(path: str, mesh, vec) -> None:
    # sign fixed so the largest entry is positive
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("rho,value\n")
            for r, v in zip(mesh, vec):
                fh.write(f"{float(r)!r},{float(v)!r}\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}")


# ---------------------------------------------------------------- frobenius

def cmd_frobenius(args) -> int:
    from .spectral import candidate_mu, frobenius_series

    cfg = run_config(args)
    if args.terms < 2:
        raise UsageError("--terms must be >= 2")
    sol = frobenius_series(args.n, args.m, args.mu, args.a0, args.a1, args.terms - 1)
    rows = [{"l": l, "a": float(a)} for l, a in enumerate(sol.a)]
    report = header("frobenius", cfg, {}) | {
        "n": args.n, "m": args.m, "mu": args.mu, "coefficients": [float(a) for a in sol.a],
        "recurrence_residual": float(np.max(np.abs(sol.recurrence_residuals()), initial=0.0)),
        "candidates": [{"m": m, "mu": mu, "admissible": adm} for m, mu, adm in candidate_mu(args.n)]}
    emit(args, report, rows, ["l", "a"])
    return EXIT_OK


# ---------------------------------------------------------------- geodesic

def cmd_geodesic(args) -> int:
    from .cc_geodesics import pole_data, start_state, trajectory

    cfg = run_config(args)
    if args.plast == 0:
        raise UsageError("--plast must be nonzero")
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    pd = pole_data(args.plast, n=args.n, resolution=args.resolution)
    s_values = np.linspace(0.0, pd.arc_length, args.samples)
    state0 = start_state(args.n, args.plast)
    ys = trajectory(state0, s_values, args.resolution / abs(args.plast))
    m = 2 * args.n
    names = [f"{c}{i + 1}" for i in range(args.n) for c in "xy"]
    rows = []
    for s, y in zip(s_values, ys):
        row = {"s": float(s)}
        row.update({k: float(v) for k, v in zip(names, y[:m])})
        row["t"] = float(y[m])
        row["dt"] = float(abs(y[m] - state0.gamma.t))
        rows.append(row)
    closure = float(np.linalg.norm(ys[-1, :m]))
    report = header("geodesic", cfg, {"resolution": args.resolution}) | {
        "pole": {"r": pd.r, "delta_t": pd.delta_t, "arc_length": pd.arc_length,
                 "orientation": pd.orientation},
        "closure": closure, "expected_delta_t": pi / args.plast ** 2, "samples": rows}
    emit(args, report, rows, ["s", *names, "t", "dt"])
    return EXIT_OK


# ---------------------------------------------------------------- profile

def cmd_profile(args) -> int:
    from .heisenberg_core import GroupContext
    from .profile_geometry import ProfilePoint, bundle, profile_residual

    cfg = run_config(args)
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    ctx = GroupContext(args.n)
    rows = []
    for h in (1, -1):
        for r in np.linspace(args.rho_min, args.rho_max, args.samples):
            b = bundle(ProfilePoint(float(r), h), ctx)
            rows.append({"rho": float(r), "h": h, "t": b.t, "kappa": b.kappa, "varpi": b.varpi,
                         "p_norm": b.p_norm, "g_h": b.g_h, "g_h_perp": b.g_h_perp,
                         "z_hs_sq": b.z_hs_sq, "sigma_density": b.sigma_h_density, "H": b.H})
    columns = list(rows[0])
    report = header("profile", cfg, {}) | {"n": args.n, "rows": rows}
    if args.plast is not None:
        from .cc_geodesics import generate_profile
        scale = 2.0 / abs(args.plast)
        curve = generate_profile(args.plast, args.samples, n=args.n)
        worst = max(profile_residual(r / scale, t / scale ** 2) for r, t in curve)
        report["geodesic_check"] = {"p_last": args.plast, "max_residual": worst,
                                    "passed": worst <= args.tol}
    emit(args, report, rows, columns)
    if args.plast is not None and not report["geodesic_check"]["passed"]:
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- tgraph

def cmd_tgraph(args) -> int:
    from .tgraph_geometry import (admissibility_condvar2, grid_mean_curvature_field, load_grid_csv,
                                  mean_curvature, profile_tgraph, quadratic_tgraph, constant_tgraph)

    cfg = run_config(args)
    rows = []
    tol = {"fd_step": args.h}
    if args.grid:
        if args.n != 1:
            raise UsageError("grid T-graphs are supported for n = 1 only")
        try:
            g = load_grid_csv(args.grid)
        except OSError as exc:
            raise UsageError(f"cannot read {args.grid}: {exc}")
        field = grid_mean_curvature_field(g)
        for i, x in enumerate(g.x[1:-1], start=1):
            for j, y in enumerate(g.y[1:-1], start=1):
                h_val = float(field[i, j])
                rows.append({"x1": float(x), "y1": float(y), "H": h_val if np.isfinite(h_val) else None})
        columns = ["x1", "y1", "H"]
    else:
        if args.example == "profile":
            g = profile_tgraph(args.n)
            pts = [np.eye(2 * args.n)[0] * r for r in np.linspace(0.1, 0.9, args.samples)]
        elif args.example == "quadratic":
            if args.n != 1:
                raise UsageError("the quadratic example is defined for n = 1")
            g = quadratic_tgraph()
            pts = [np.array([x, 0.5]) for x in np.linspace(0.2, 0.9, args.samples)]
        else:
            g = constant_tgraph(args.n, 0.0)
            pts = [np.eye(2 * args.n)[0] * r for r in np.linspace(0.1, 0.9, args.samples)]
        for z in pts:
            row = {f"z{i + 1}": float(v) for i, v in enumerate(z)}
            row["H_analytic"] = mean_curvature(g, z, method="analytic")
            row["H_fd"] = mean_curvature(g, z, method="fd", h=args.h)
            rows.append(row)
        columns = list(rows[0])
    report = header("tgraph", cfg, tol) | {"rows": rows}
    code = EXIT_OK
    if args.admissibility:
        est, ok = admissibility_condvar2(g)
        report["admissibility"] = {"estimate": est if np.isfinite(est) else None, "converged": ok}
        if not ok:
            code = EXIT_NUMERIC
    emit(args, report, rows, columns)
    return code


# ---------------------------------------------------------------- variation and stability

def cmd_variation(args) -> int:
    from .expr import test_function
    from .heisenberg_core import GroupContext
    from .variational import (constraint_integrals, first_variation, rayleigh_G,
                              second_variation_profile, zero_mean_project)

    cfg = run_config(args)
    ctx = GroupContext(args.n)
    phi = test_function(args.phi, args.parity, args.n)
    mean_before = constraint_integrals(phi, ctx)[0]
    if not args.no_project:
        phi = zero_mean_project(phi, ctx)
    F = second_variation_profile(phi, ctx, require_zero_mean=not args.no_project, tol=args.tol)
    try:
        G = rayleigh_G(phi, ctx)
    except HisoError:
        G = None
    m0, m2 = constraint_integrals(phi, ctx)
    row = {"F": F, "G": G, "m0": m0, "m2": m2, "first_variation": first_variation(phi, ctx)}
    report = header("variation", cfg, {"tol": args.tol}) | {
        "phi": args.phi, "parity": args.parity, "mean_before_projection": mean_before} | row
    if not np.isfinite(F):
        raise NumericFailure("second variation is not finite")
    emit(args, report, [row], list(row))
    return EXIT_OK


def cmd_stability(args) -> int:
    from .heisenberg_core import GroupContext
    from .variational import mixed_radial_battery, polar_battery, radial_battery, run_stability

    cfg = run_config(args)
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    ctx = GroupContext(args.n)
    if args.family == "polar":
        if args.n != 1:
            raise UsageError("the polar family is defined for n = 1")
        tests = polar_battery(args.count, args.seed)
    elif args.family == "mixed":
        tests = mixed_radial_battery(args.count, args.seed)
    else:
        tests = radial_battery(args.family, args.count, args.seed)
    rep = run_stability(ctx, tests, tol=args.tol, threads=cfg["threads"])
    report = header("stability", cfg, {"tol": args.tol}) | rep.to_dict()
    rows = [{"id": e.id, "F": e.F, "G": e.G, "m0": e.constraints[0], "m2": e.constraints[1]}
            for e in rep.entries]
    emit(args, report, rows, ["id", "F", "G", "m0", "m2"])
    return EXIT_OK if rep.verdict == "nonnegative" else EXIT_FAIL


# ---------------------------------------------------------------- parser

CSV_DEFAULT = {cmd_geodesic, cmd_profile, cmd_tgraph}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="Heisenberg dimension n (H^n)")
    common.add_argument("--tol", type=float, default=1e-8, help="tolerance for pass/fail decisions")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--threads", type=int, help="worker threads (HISO_THREADS overrides)")

    parser = argparse.ArgumentParser(prog="hiso", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hiso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the identity suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eigen", parents=[common], help="radial spectrum by finite elements")
    p.add_argument("--elements", type=int, default=4000)
    p.add_argument("--rho-min", type=float, default=1e-4)
    p.add_argument("--rho-max", type=float, default=1 - 1e-6)
    p.add_argument("--k", type=int, default=6, help="modes per parity class")
    p.add_argument("--constraint-tol", type=float, default=1e-6)
    p.add_argument("--eigenfunction-csv", help="write (rho, value) of the lowest admissible mode")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("frobenius", parents=[common], help="Frobenius series coefficients")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--terms", type=int, default=8)
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--a1", type=float, default=0.0)
    p.set_defaults(func=cmd_frobenius)

    p = sub.add_parser("geodesic", parents=[common], help="trace one loop of a CC geodesic")
    p.add_argument("--plast", type=float, required=True, help="vertical momentum c")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.set_defaults(func=cmd_geodesic, n=1)

    p = sub.add_parser("profile", parents=[common], help="export closed-form profile geometry")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--rho-min", type=float, default=0.01)
    p.add_argument("--rho-max", type=float, default=0.99)
    p.add_argument("--plast", type=float, help="also compare with the geodesic profile")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("tgraph", parents=[common], help="mean curvature of a T-graph")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--grid", help="CSV with header x,y,u on a uniform grid (n = 1)")
    src.add_argument("--example", choices=("profile", "quadratic", "constant"), default="profile")
    p.add_argument("--samples", type=int, default=9)
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step")
    p.add_argument("--admissibility", action="store_true", help="estimate int dz/|V|")
    p.set_defaults(func=cmd_tgraph)

    p = sub.add_parser("variation", parents=[common], help="F and G for an expression")
    p.add_argument("--phi", required=True, help="expression in rho (and theta for n = 1)")
    p.add_argument("--parity", choices=("even", "odd"), default="even")
    p.add_argument("--no-project", action="store_true", help="skip the zero-mean projection")
    p.set_defaults(func=cmd_variation)

    p = sub.add_parser("stability", parents=[common], help="stability battery report")
    p.add_argument("--family", choices=("legendre", "bumps", "trig", "mixed", "polar"),
                   default="mixed")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, DomainError, SupportError, DimensionError, UnsupportedError) as exc:
        print(f"hiso {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, QuadratureError, ResonanceError, NumericFailure) as exc:
        print(f"hiso {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HisoError as exc:
        print(f"hiso {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())

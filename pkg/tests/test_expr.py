import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hiso import expr
from hiso.errors import DomainError, ParseError
from hiso.expr import derivative, evaluate, parse, polar_pair, radial_function, to_string
from hiso.functions import PolarPair, RadialPair

build_test_function = expr.test_function

ATOMS = st.sampled_from(["rho", "pi", "2", "0.5", "3e-1", "rho^2"])


@st.composite
def expressions(draw, depth=3):
    if depth == 0:
        return draw(ATOMS)
    kind = draw(st.sampled_from(["atom", "bin", "neg", "call", "pow"]))
    if kind == "atom":
        return draw(ATOMS)
    a = draw(expressions(depth - 1))
    if kind == "neg":
        return f"-{a}"
    if kind == "call":
        return f"{draw(st.sampled_from(['sin', 'cos', 'exp']))}({a})"
    if kind == "pow":
        return f"({a})^{draw(st.sampled_from(['2', '3', '-1']))}"
    b = draw(expressions(depth - 1))
    return f"{a} {draw(st.sampled_from(['+', '-', '*']))} {b}"


@settings(max_examples=200, deadline=None)
@given(expressions())
def test_print_parse_round_trip(text):
    tree = parse(text)
    assert parse(to_string(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(expressions())
def test_printed_form_evaluates_identically(text):
    r = np.linspace(0.2, 0.8, 7)
    with np.errstate(all="ignore"):
        a = np.broadcast_to(evaluate(parse(text), rho=r), r.shape)
        b = np.broadcast_to(evaluate(parse(to_string(parse(text))), rho=r), r.shape)
    assert np.array_equal(a, b, equal_nan=True)


@pytest.mark.parametrize("text,value", [
    ("2^3^2", 512.0),
    ("-2^2", -4.0),
    ("(-2)^2", 4.0),
    ("1 - 2 - 3", -4.0),
    ("8 / 4 / 2", 1.0),
    ("2 * pi", 2 * np.pi),
    (".5e1 + 1.", 6.0),
    ("sqrt(abs(-16))", 4.0),
])
def test_evaluation_semantics(text, value):
    assert float(evaluate(parse(text))) == pytest.approx(value, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(expressions())
def test_symbolic_derivative_matches_fd(text):
    tree = parse(text)
    d = derivative(tree, "rho")
    r = np.linspace(0.25, 0.75, 5)

    def f(x):
        return np.broadcast_to(evaluate(tree, rho=x), r.shape)

    def stencil(h):
        return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)

    with np.errstate(all="ignore"):
        coarse, fine = stencil(2e-4), stencil(1e-4)
        exact = np.broadcast_to(evaluate(d, rho=r), r.shape)
        # compare only where the stencil resolves f: both steps agree and roundoff is small
        noise = 1e-14 * np.abs(f(r)) / 1e-4
        ok = np.isfinite(fine) & (np.abs(coarse - fine) <= 1e-7 * (1 + np.abs(fine)) + noise)
    assert np.allclose(exact[ok], fine[ok], rtol=1e-5, atol=1e-6 + np.max(noise[ok], initial=0.0))


def test_derivative_simplifies():
    assert to_string(derivative(parse("rho^2"))) == "2*rho"
    assert to_string(derivative(parse("3"))) == "0"
    assert to_string(derivative(parse("sin(theta)"), "theta")) == "cos(theta)"


@pytest.mark.parametrize("text,col,reason", [
    ("rho + $", 7, "unexpected character"),
    ("foo(rho)", 1, "unknown"),
    ("", 1, "empty"),
    ("(rho", 5, ""),
])
def test_caret_diagnostics(text, col, reason):
    with pytest.raises(ParseError) as info:
        parse(text)
    msg = str(info.value)
    assert f"column {col}" in msg
    assert reason in msg.lower()
    assert msg.splitlines()[-1].index("^") == 2 + col - 1


def test_theta_is_n1_only():
    with pytest.raises(ParseError):
        parse("theta", variables=("rho",))
    with pytest.raises(ParseError):
        build_test_function("cos(theta)", "even", n=2)
    assert isinstance(build_test_function("rho * cos(theta)", "odd", n=1), PolarPair)


def test_builders():
    f = radial_function("rho^3 - rho")
    assert f(0.5) == pytest.approx(-0.375)
    assert f.d1(0.5) == pytest.approx(-0.25)
    assert f.d2(0.5) == pytest.approx(3.0)
    pair = build_test_function("sqrt(1 - rho^2)/rho", "odd", n=2)
    assert isinstance(pair, RadialPair)
    assert pair.minus(0.5) == pytest.approx(-pair.plus(0.5))
    pp = polar_pair("rho^2*sin(theta)", "even")
    v, dr, dt = pp.derivatives(1, np.array([0.5]), np.array([0.3]))
    assert dr[0] == pytest.approx(2 * 0.5 * np.sin(0.3))
    assert dt[0] == pytest.approx(0.25 * np.cos(0.3))
    with pytest.raises(DomainError):
        build_test_function("rho", "sideways")

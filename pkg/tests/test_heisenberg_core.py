import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiso.errors import DimensionError, DomainError
from hiso.heisenberg_core import (GroupContext, HVector, Point, contact_eval, dilate, frame,
                                  group_inv, group_mul, horizontal_lift, identity, j_perp, perp,
                                  structural_matrix, symplectic)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def points(n):
    return st.tuples(st.lists(coord, min_size=2 * n, max_size=2 * n), coord).map(
        lambda a: Point(np.array(a[0]), a[1]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), points(n), points(n))))
def test_group_law_is_associative(pqr):
    p, q, r = pqr
    a = group_mul(group_mul(p, q), r).as_array()
    b = group_mul(p, group_mul(q, r)).as_array()
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(points))
def test_inverse_and_identity(p):
    e = identity(p.n)
    assert np.allclose(group_mul(p, group_inv(p)).as_array(), e.as_array(), atol=1e-12)
    assert np.allclose(group_mul(e, p).as_array(), p.as_array())


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), points(n))),
       st.floats(0, 4, allow_nan=False))
def test_dilation_is_a_group_automorphism(pq, s):
    p, q = pq
    a = dilate(s, group_mul(p, q)).as_array()
    b = group_mul(dilate(s, p), dilate(s, q)).as_array()
    assert np.allclose(a, b, rtol=1e-12, atol=1e-8)


def test_group_law_example():
    p = Point([1.0, 0.0], 0.0)
    q = Point([0.0, 1.0], 0.0)
    assert group_mul(p, q).t == pytest.approx(0.5)
    assert group_mul(q, p).t == pytest.approx(-0.5)


def test_structural_matrix_and_perp():
    for n in (1, 2, 3):
        c = structural_matrix(n)
        assert np.allclose(c @ c, -np.eye(2 * n))
        z = np.arange(1.0, 2 * n + 1)
        assert np.allclose(perp(z), -c @ z)
        assert perp(z) @ z == 0.0
        assert symplectic(z, perp(z)) == pytest.approx(np.dot(z, z))
    assert np.allclose(perp(np.array([1.0, 0.0])), [0.0, 1.0])
    assert np.allclose(j_perp(HVector([0.0, 1.0])).components, [-1.0, 0.0])


def _bracket(p, i, j, h=1e-4):
    """[E_i, E_j] = DE_j E_i - DE_i E_j by central differences of the frame columns."""
    def col(k, a):
        return frame(Point.from_array(a))[:, k]

    a = p.as_array()
    ei, ej = col(i, a), col(j, a)
    dj_ei = (col(j, a + h * ei) - col(j, a - h * ei)) / (2 * h)
    di_ej = (col(i, a + h * ej) - col(i, a - h * ej)) / (2 * h)
    return dj_ei - di_ej


@pytest.mark.parametrize("n", [1, 2])
def test_frame_brackets(n):
    rng = np.random.default_rng(3)
    p = Point(rng.standard_normal(2 * n), 0.7)
    t = np.zeros(2 * n + 1)
    t[-1] = 1.0
    for i in range(n):
        assert np.allclose(_bracket(p, 2 * i, 2 * i + 1), t, atol=1e-8)
    if n == 2:
        assert np.allclose(_bracket(p, 0, 3), 0.0, atol=1e-8)
        assert np.allclose(_bracket(p, 0, 2), 0.0, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), st.lists(coord, min_size=2 * n, max_size=2 * n))))
def test_horizontal_vectors_annihilate_contact_form(pv):
    p, v = pv
    lift = horizontal_lift(p, HVector(v))
    assert abs(contact_eval(p, lift)) <= 1e-9 * (1 + np.abs(lift).max() * (1 + np.abs(p.z).max()))


def test_contact_form_on_vertical_field():
    p = Point([0.3, -0.2], 1.0)
    assert contact_eval(p, [0.0, 0.0, 1.0]) == 1.0


def test_errors():
    with pytest.raises(DomainError):
        GroupContext(0)
    with pytest.raises(DimensionError):
        Point([1.0, 2.0, 3.0], 0.0)
    with pytest.raises(DimensionError):
        group_mul(Point([1.0, 2.0], 0), Point([1.0, 2.0, 3.0, 4.0], 0))
    with pytest.raises(DimensionError):
        GroupContext(2).point([1.0, 2.0])
    with pytest.raises(DomainError):
        dilate(-1.0, identity(1))
    with pytest.raises(DimensionError):
        contact_eval(identity(1), [1.0, 0.0])


def test_points_are_immutable():
    p = Point([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        p.z[0] = 5.0
    assert GroupContext(2).Q == 6 and GroupContext(2).dim == 5

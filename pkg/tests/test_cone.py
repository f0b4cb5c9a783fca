import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoatt import quat as Q
from geoatt.cone import (
    FeasibilityCone,
    VectorMeasurement,
    cone_from_attitudes,
    residual,
    special_solutions,
)
from geoatt.errors import EqualAttitudes, NotNormalized

from oracles import axis_angle, qmul, random_unit, rot

unit3 = arrays(np.float64, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-2)


def test_special_solutions_example():
    r1, r2 = special_solutions(VectorMeasurement([0, 0, 1], [1, 0, 0]))
    s = math.sqrt(0.5)
    assert np.allclose(r1, [s, 0, -s, 0])
    assert np.allclose(r2, [0, s, 0, s])


@given(unit3, unit3)
def test_special_solutions_on_cone_and_orthogonal(h, b):
    m = VectorMeasurement(h, b)
    r1, r2 = special_solutions(m)
    assert residual(m, r1) < 1e-9
    assert residual(m, r2) < 1e-9
    assert abs(r1 @ r2) < 1e-9
    # r1 is the smallest rotation taking b to h
    assert np.allclose(rot(r1) @ m.b, m.h, atol=1e-9)
    assert math.isclose(Q.angle_between(Q.IDENTITY, r1), math.acos(np.clip(m.b @ m.h, -1, 1)), abs_tol=1e-6)


def test_degenerate_parallel():
    h = Q.unit_vector([1.0, 2.0, 3.0])
    r1, r2 = special_solutions(VectorMeasurement(h, h))
    assert np.allclose(r1, Q.IDENTITY)
    assert np.allclose(r2, Q.pure(h))


@pytest.mark.parametrize("h", [[0, 0, 1], [1, 0, 0], [0, 1, 0], [1, 1, 1], [0.3, -0.2, 0.9]])
def test_degenerate_antiparallel(h):
    h = Q.unit_vector(h)
    m = VectorMeasurement(h, -h)
    r1, r2 = special_solutions(m)
    assert residual(m, r1) < 1e-12 and residual(m, r2) < 1e-12
    assert abs(r1 @ r2) < 1e-12
    assert math.isclose(np.linalg.norm(r1), 1.0) and math.isclose(np.linalg.norm(r2), 1.0)


def test_span_element_requires_unit_coefficients():
    cone = FeasibilityCone.from_vectors([0, 0, 1], [0, 1, 0])
    with pytest.raises(NotNormalized):
        cone.span_element(1.0, 0.1)
    q = cone.span_element(math.cos(0.7), math.sin(0.7))
    assert cone.contains(q)


def test_contains_rejects_off_cone(rng):
    cone = FeasibilityCone.from_vectors(random_unit(rng), random_unit(rng))
    q = Q.normalize(rng.standard_normal(4))
    assert cone.contains(q) == (cone.residual(q) < 1e-8)
    assert not cone.contains(Q.normalize(cone.r1 + 0.1 * Q.multiply(cone.r1, Q.pure([1, 0, 0]))))


def test_cone_from_attitudes_contains_both(rng):
    for _ in range(100):
        p, q = Q.normalize(rng.standard_normal(4)), Q.normalize(rng.standard_normal(4))
        m = cone_from_attitudes(p, q)
        assert residual(m, p) < 1e-9 and residual(m, q) < 1e-9


def test_cone_from_equal_attitudes():
    q = Q.from_axis_angle([0, 1, 0], 0.2)
    with pytest.raises(EqualAttitudes):
        cone_from_attitudes(q, q)
    with pytest.raises(EqualAttitudes):
        cone_from_attitudes(q, -q)


def test_rotation_about_h_stays_on_cone(rng):
    m = VectorMeasurement(random_unit(rng), random_unit(rng))
    r1, _ = special_solutions(m)
    for ang in np.linspace(0, 2 * np.pi, 13):
        q = qmul(axis_angle(m.h, ang), r1)
        assert residual(m, q) < 1e-12

import numpy as np
import pytest

from geoatt import quat as Q
from geoatt import stochastic as S
from geoatt.cone import VectorMeasurement, special_solutions
from geoatt.errors import SingularFusion
from geoatt.singlevector import RateSample, expected_measurement, integrate, project

from oracles import random_unit, rot, steady_tilt_variance


def on_cone(rng, h):
    m = VectorMeasurement(h, random_unit(rng))
    r1, r2 = special_solutions(m)
    t = rng.uniform(0, 2 * np.pi)
    return np.cos(t) * r1 + np.sin(t) * r2, m.b


def b_of(p, h):
    # quadratic in p, valid off the unit sphere: (p^-1 h p) with p^-1 = p* for the derivative
    R = np.array(
        [
            [p[0] ** 2 + p[1] ** 2 - p[2] ** 2 - p[3] ** 2, 2 * (p[1] * p[2] - p[0] * p[3]), 2 * (p[1] * p[3] + p[0] * p[2])],
            [2 * (p[1] * p[2] + p[0] * p[3]), p[0] ** 2 - p[1] ** 2 + p[2] ** 2 - p[3] ** 2, 2 * (p[2] * p[3] - p[0] * p[1])],
            [2 * (p[1] * p[3] - p[0] * p[2]), 2 * (p[2] * p[3] + p[0] * p[1]), p[0] ** 2 - p[1] ** 2 - p[2] ** 2 + p[3] ** 2],
        ]
    )
    return R.T @ h


def test_measurement_jacobian_finite_difference(rng):
    for _ in range(50):
        p = Q.normalize(rng.standard_normal(4))
        h = random_unit(rng)
        assert np.allclose(b_of(p, h), rot(p).T @ h)
        J = S.measurement_jacobian(p, h)
        eps = 1e-6
        num = np.column_stack([(b_of(p + eps * e, h) - b_of(p - eps * e, h)) / (2 * eps) for e in np.eye(4)])
        assert np.allclose(J, num, atol=1e-8)
        assert np.allclose(J @ J.T, 4 * np.eye(3), atol=1e-12)


def test_rate_jacobian_orthonormal_columns(rng):
    q = Q.normalize(rng.standard_normal(4))
    G = S.rate_jacobian(q)
    assert np.allclose(G.T @ G, np.eye(3))
    assert np.allclose(G.T @ q, 0)


def test_propagate_pi_trace():
    sigma, T = 0.04, 0.01
    Pi = S.propagate_pi(np.zeros((4, 4)), Q.from_axis_angle([1, 2, 3], 0.4), sigma**2 * np.eye(3), T)
    assert np.trace(Pi) == pytest.approx(sigma**2 * T**2 * 3 / 4, rel=1e-12)


def test_propagate_pi_monte_carlo(rng):
    q = Q.normalize(rng.standard_normal(4))
    omega = np.array([0.5, -1.0, 0.3])
    T, sigma = 0.01, 0.2
    W = sigma**2 * np.eye(3)
    n = 20000
    ps = np.array([integrate(q, RateSample(omega + sigma * rng.standard_normal(3), T)) for _ in range(n)])
    emp = np.cov(ps.T)
    Pi = S.propagate_pi(np.zeros((4, 4)), q, W, T)
    assert np.trace(emp) == pytest.approx(np.trace(Pi), rel=0.05)
    assert np.linalg.norm(emp - Pi) < 0.1 * np.linalg.norm(Pi)


def test_fuse_equal_covariances():
    s2 = 0.01**2
    b, b_p = Q.unit_vector([0.1, 0.0, 1.0]), Q.unit_vector([-0.1, 0.0, 1.0])
    b_f, B_f = S.fuse_measurement(b, b_p, s2 * np.eye(3), s2 * np.eye(3))
    assert np.allclose(b_f, [0, 0, 1])
    assert np.allclose(B_f, s2 / 2 * np.eye(3))


def test_fuse_prefers_exact_source():
    b, b_p = Q.unit_vector([0.3, 0.0, 1.0]), np.array([0.0, 0.0, 1.0])
    b_f, B_f = S.fuse_measurement(b, b_p, 1e-4 * np.eye(3), np.zeros((3, 3)))
    assert np.allclose(b_f, b_p) and np.allclose(B_f, 0)
    b_f, _ = S.fuse_measurement(b, b_p, np.zeros((3, 3)), 1e-4 * np.eye(3))
    assert np.allclose(b_f, b)


def test_fuse_pseudo_inverse_when_rank_deficient():
    # both covariances share a null direction along z
    P = np.diag([1.0, 1.0, 0.0]) * 1e-4
    b, b_p = Q.unit_vector([0.1, 0.0, 1.0]), Q.unit_vector([-0.1, 0.0, 1.0])
    b_f, B_f = S.fuse_measurement(b, b_p, P, P)
    assert np.all(np.isfinite(b_f)) and np.allclose(b_f, [0, 0, 1])
    assert np.allclose(B_f, P / 2)


def test_fuse_singular():
    with pytest.raises(SingularFusion):
        S.fuse_measurement([0, 0, 1], [0, 0, 1], np.zeros((3, 3)), np.zeros((3, 3)))


def random_psd(rng, n, scale):
    A = rng.standard_normal((n, n))
    return scale * (A @ A.T)


def test_fast_path_matches_block_recursion(rng):
    for _ in range(20):
        h = random_unit(rng)
        q_i, _ = on_cone(rng, h)
        Xi = random_psd(rng, 4, 1e-6)
        W = random_psd(rng, 3, 1e-3)
        omega = rng.standard_normal(3)
        T = 0.01
        q_next, b_next = on_cone(rng, h)
        o = S.cone_normal(q_next, h)
        Pt = np.eye(3) - np.outer(b_next, b_next)
        B_f = Pt @ random_psd(rng, 3, 1e-5) @ Pt
        Pi, Xi_next = S.covariance_recursion(Xi, W, B_f, q_i, omega, T, o)
        F = Q.right_matrix(np.concatenate(([1.0], 0.5 * T * omega)))
        G = S.rate_jacobian(q_i)
        assert np.allclose(Pi, F @ Xi @ F.T + 0.25 * T * T * G @ W @ G.T)
        Go = S.rate_jacobian(o)
        fast = float(o @ Pi @ o) * np.outer(o, o) + 0.25 * Go @ B_f @ Go.T
        assert np.allclose(Xi_next, fast, atol=1e-18)
        assert np.min(np.linalg.eigvalsh(Xi_next)) > -1e-10 * np.max(np.abs(Xi_next))


def test_cone_normal_on_same_cone(rng):
    h = random_unit(rng)
    q, b = on_cone(rng, h)
    o = S.cone_normal(q, h)
    assert abs(o @ q) < 1e-12
    assert np.allclose(Q.rotate(o, b), h)


def richardson(f, oracle, eps=(1e-5, 5e-6)):
    res = [np.linalg.norm(f(e) - oracle(e)) for e in eps]
    return res[0] / res[1]


def test_perturbation_p_oracle(rng):
    for _ in range(20):
        h = random_unit(rng)
        q, b = on_cone(rng, h)
        m = VectorMeasurement(h, b)
        dp = rng.standard_normal(4)

        def f(e):
            out = project(q + e * dp, m)
            return (out if out @ q > 0 else -out) - q

        ratio = richardson(f, lambda e: S.perturbation_p_oracle(q, h, e * dp))
        assert 3.5 < ratio < 4.5


def test_perturbation_b_oracle(rng):
    for _ in range(20):
        h = random_unit(rng)
        q, b = on_cone(rng, h)
        db = rng.standard_normal(3)

        def f(e):
            out = project(q, VectorMeasurement(h, b + e * db))
            return (out if out @ q > 0 else -out) - q

        ratio = richardson(f, lambda e: S.perturbation_b_oracle(q, h, b, e * db))
        assert 3.5 < ratio < 4.5


def test_one_step_covariance_monte_carlo(rng):
    h = np.array([0.0, 0.0, 1.0])
    q0 = Q.from_euler(0.3, -0.2, 0.5)
    omega = np.array([0.4, 0.2, -0.3])
    T, sw, sb = 0.01, 0.5, 0.01
    Xi0 = np.zeros((4, 4))
    p_true = integrate(q0, RateSample(omega, T))
    b_true = expected_measurement(p_true, h)
    ref = S.GeometricFilter(sw**2, sb**2, q0.copy(), Xi0.copy())
    ref.update(omega, T, VectorMeasurement(h, b_true))
    out = []
    for _ in range(6000):
        f = S.GeometricFilter(sw**2, sb**2, q0.copy(), Xi0.copy())
        q = f.update(omega + sw * rng.standard_normal(3), T, VectorMeasurement(h, b_true + sb * rng.standard_normal(3)))
        out.append(q if q @ ref.q > 0 else -q)
    emp = np.cov(np.array(out).T)
    assert np.trace(emp) == pytest.approx(np.trace(ref.Xi), rel=0.1)


def test_filter_covariance_bounded_and_converges(rng):
    h = np.array([0.0, 0.0, 1.0])
    W, B, T = 0.04**2, 0.01**2, 0.01
    f = S.GeometricFilter(W, B)
    for _ in range(10000):
        f.update([0, 0, 0], T, VectorMeasurement(h, Q.rotate(Q.conjugate(f.q), h)))
        assert np.all(np.isfinite(f.Xi))
    o = S.cone_normal(f.q, h)
    Pt = np.eye(4) - np.outer(o, o) - np.outer(f.q, f.q)
    tilt = np.linalg.eigvalsh(Pt @ f.Xi @ Pt)[-1]
    assert tilt == pytest.approx(steady_tilt_variance(W, B, T), rel=1e-6)
    # along the cone the variance is a random walk in yaw
    assert float(o @ f.Xi @ o) == pytest.approx(10000 * T * T * W / 4, rel=1e-6)


def test_filter_falls_back_when_fusion_singular():
    f = S.GeometricFilter(0.0, 0.0)
    m = VectorMeasurement([0, 0, 1], Q.unit_vector([0.1, 0, 1]))
    q = f.update([0, 0, 0], 0.01, m)
    assert np.allclose(Q.rotate(q, m.b), m.h)


def test_symmetrize_idempotent(rng):
    A = rng.standard_normal((4, 4))
    assert np.allclose(S.symmetrize(S.symmetrize(A)), S.symmetrize(A))
    o = Q.normalize(rng.standard_normal(4))
    Po = np.outer(o, o)
    assert np.allclose(Po @ Po, Po)

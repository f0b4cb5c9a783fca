import math

import numpy as np
import pytest

from geoatt import quat as Q
from geoatt import twovector as TV
from geoatt.baselines import DavenportProblem, davenport
from geoatt.cone import VectorMeasurement, residual
from geoatt.errors import DegenerateGeometry, InfeasibleBarrier

from oracles import angle_diff, geodesic, noisy_pair, random_unit, twovector_grid_minimum, wahba_davenport_scipy


def make_problem(rng, s1=0.01, s2=0.02, **kw):
    q = Q.normalize(rng.standard_normal(4))
    h, k = random_unit(rng), random_unit(rng)
    m1 = VectorMeasurement(h, noisy_pair(rng, q, h, s1))
    m2 = VectorMeasurement(k, noisy_pair(rng, q, k, s2))
    return q, TV.TwoVectorProblem(m1, m2, **kw)


def test_triad_attitudes_satisfy_their_primary_vector(rng):
    for _ in range(200):
        _, prob = make_problem(rng)
        sol = TV.solve(prob)
        assert residual(prob.m1, sol.q_triad_1) < 1e-10
        assert residual(prob.m2, sol.q_triad_2) < 1e-10


def test_noise_free_recovers_truth(rng):
    for _ in range(100):
        q, prob = make_problem(rng, 0.0, 0.0)
        sol = TV.solve(prob)
        for est in (sol.q_triad_1, sol.q_triad_2, sol.q_fused):
            assert geodesic(est, q) < 1e-7


def test_closed_form_is_global_minimum_of_grid(rng):
    for _ in range(20):
        _, prob = make_problem(rng, 0.2, 0.2)
        from geoatt.cone import special_solutions

        q = special_solutions(prob.m1)[0]
        p = special_solutions(prob.m2)[0]
        phi1, phi2, l = TV.optimal_angles(q, p, prob.m1.h, prob.m2.h)
        g1, g2 = twovector_grid_minimum(q, p, prob.m1.h, prob.m2.h, n=361)
        assert TV._cost(l, phi1, phi2) <= TV._cost(l, g1, g2) + 1e-9
        assert angle_diff(phi1, g1, 2 * np.pi) < 0.03
        assert angle_diff(phi2, g2, 2 * np.pi) < 0.03


def test_cost_coefficients_match_direct_distance(rng):
    q, p = Q.normalize(rng.standard_normal(4)), Q.normalize(rng.standard_normal(4))
    h, k = random_unit(rng), random_unit(rng)
    l = TV.cost_coefficients(q, p, h, k)
    for a1, a2 in rng.uniform(-7, 7, (20, 2)):
        A = Q.multiply(Q.from_axis_angle(h, a1), q)
        B = Q.multiply(Q.from_axis_angle(k, a2), p)
        assert math.isclose(TV._cost(l, a1, a2), float(np.sum((A - B) ** 2)), abs_tol=1e-12)


def test_seeds_do_not_change_result(rng):
    _, prob = make_problem(rng, 0.05, 0.05)
    from geoatt.cone import special_solutions

    base = TV.solve(prob)
    seeds = (special_solutions(prob.m1)[1], special_solutions(prob.m2)[1])
    other = TV.solve(prob, seeds=seeds)
    assert Q.angle_between(base.q_triad_1, other.q_triad_1) < 1e-9
    assert Q.angle_between(base.q_triad_2, other.q_triad_2) < 1e-9


def test_wahba_fusion_matches_svd_oracle(rng):
    for _ in range(200):
        _, prob = make_problem(rng, 0.05, 0.1)
        a, b = rng.uniform(0.1, 5, 2)
        sol = TV.solve(prob)
        fused = TV.fuse_wahba(sol, a, b)
        ref = wahba_davenport_scipy([prob.m1.h, prob.m2.h], [prob.m1.b, prob.m2.b], [a, b])
        assert Q.angle_between(fused, ref) < 1e-9


def test_equal_weight_slerp_is_wahba(rng):
    for _ in range(50):
        _, prob = make_problem(rng, 0.05, 0.05)
        sol = TV.solve(prob)
        assert Q.angle_between(TV.fuse_slerp(sol, 0.5), TV.fuse_wahba(sol, 1, 1)) < 1e-12


def test_slerp_weighting_differs_from_wahba_at_third_order(rng):
    # x = 0.8 follows the weight ratio only to first order in the separation angle
    for _ in range(50):
        _, prob = make_problem(rng, 0.01, 0.02)
        sol = TV.solve(prob)
        phi, _ = TV.separation_angle(sol)
        k = 0.25
        expected = k * (1 - k) / (6 * (1 + k) ** 3) * abs(phi) ** 3
        err = Q.angle_between(TV.fuse_slerp(sol, 0.8), TV.fuse_wahba(sol, 1, 4))
        assert err == pytest.approx(expected, rel=0.05, abs=1e-12)


def test_noise_policy_uses_variance_ratio(rng):
    _, prob = make_problem(rng, 0.01, 0.02, noise=(0.01, 0.02))
    sol = TV.solve(prob)
    assert Q.angle_between(sol.q_fused, TV.fuse_slerp(sol, 0.2)) < 1e-12


def test_parallel_references_rejected():
    m = VectorMeasurement([0, 0, 1], [0, 0, 1])
    with pytest.raises(DegenerateGeometry):
        TV.TwoVectorProblem(m, VectorMeasurement([0, 0, -1], [0, 1, 0]))


def test_barrier_ratio():
    # without a barrier the pull towards x = 1 wins
    assert TV.barrier_ratio(TV.BarrierSpec(alpha=0.0, a=1.0)) == pytest.approx(1.0, abs=1e-8)
    # stationarity: alpha sec(x/a) tan(x/a) / a = 2 (1 - x)
    spec = TV.BarrierSpec(alpha=0.5, a=1.0)
    x = TV.barrier_ratio(spec)
    assert 0.0 < x < 1.0
    assert spec.alpha * math.tan(x) / math.cos(x) == pytest.approx(2 * (1 - x), abs=1e-7)
    # a small scale confines x below a pi / 2
    x = TV.barrier_ratio(TV.BarrierSpec(alpha=0.01, a=0.2))
    assert x < 0.1 * math.pi
    with pytest.raises(InfeasibleBarrier):
        TV.barrier_ratio(TV.BarrierSpec(alpha=0.1, a=0.0))


def test_constrained_fusion_on_geodesic(rng):
    _, prob = make_problem(rng, 0.05, 0.05, barrier=TV.BarrierSpec(0.3, 1.0))
    sol = TV.solve(prob)
    x = TV.barrier_ratio(prob.barrier)
    assert Q.angle_between(sol.q_fused, TV.fuse_slerp(sol, x)) < 1e-12


def test_davenport_equal_weights(rng):
    for _ in range(50):
        _, prob = make_problem(rng)
        sol = TV.solve(prob)
        d = davenport(DavenportProblem(((prob.m1.h, prob.m1.b, 1.0), (prob.m2.h, prob.m2.b, 1.0))))
        assert Q.angle_between(TV.fuse_wahba(sol, 1.0, 1.0), d) < 1e-8


def test_barrier_ratio_matches_dense_grid():
    spec = TV.BarrierSpec(alpha=1.0, a=1.0)
    x = np.linspace(0.0, 1.0, 1_000_001)
    grid = x[np.argmin(spec.cost(x))]
    assert TV.barrier_ratio(spec) == pytest.approx(grid, abs=1e-5)

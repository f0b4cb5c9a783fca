"""Closed-form attitude from two vector measurements.

Each measurement alone leaves a rotation about its reference direction free.
Starting from one element on each feasibility cone, the pair of free angles
that brings the two cone elements closest together is found in closed form.
The two resulting attitudes are the TRIAD solutions with either vector as
the primary one; they are then fused by spherical interpolation, by the
weighted (Wahba) rule, or by minimizing a barrier-constrained cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import quat as Q
from .cone import VectorMeasurement, special_solutions
from .errors import DegenerateGeometry, InfeasibleBarrier


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier cost ``alpha * sec(x / a) + (1 - x)**2`` for the interpolation ratio."""

    alpha: float = 0.1
    a: float = 1.0

    def cost(self, x):
        return self.alpha / np.cos(x / self.a) + (1.0 - x) ** 2


@dataclass(frozen=True)
class TwoVectorProblem:
    """Two measurements plus an optional fusion policy.

    ``m1`` holds ``(h, a)`` and ``m2`` holds ``(k, b)``. At most one of
    ``noise`` (rms noise of ``a`` and ``b``), ``weights`` (Wahba weights) and
    ``barrier`` selects how the two TRIAD attitudes are fused; with none of
    them the midpoint is used.
    """

    m1: VectorMeasurement
    m2: VectorMeasurement
    weights: tuple[float, float] | None = None
    noise: tuple[float, float] | None = None
    barrier: BarrierSpec | None = None

    def __post_init__(self):
        if np.linalg.norm(Q.cross(self.m1.h, self.m2.h)) <= 1e-6:
            raise DegenerateGeometry("reference vectors h and k are parallel")


@dataclass(frozen=True)
class TwoVectorSolution:
    q_triad_1: np.ndarray
    q_triad_2: np.ndarray
    phi1: float
    phi2: float
    l: tuple[float, float, float, float]
    q_fused: np.ndarray
    h: np.ndarray
    k: np.ndarray


def cost_coefficients(q, p, h, k):
    """Coefficients ``(l1, l2, l3, l4)`` of the separation cost.

    With ``c_i = cos(phi_i / 2)``, ``s_i = sin(phi_i / 2)`` the squared distance
    between ``[c1, s1 h] (x) q`` and ``[c2, s2 k] (x) p`` is
    ``2 + 2 (l1 c1 c2 + l2 s1 s2 + l3 c1 s2 + l4 s1 c2)``.
    """
    q0, qv = q[0], Q.vector_part(q)
    p0, pv = p[0], Q.vector_part(p)
    dot_qp = q0 * p0 + float(np.dot(qv, pv))
    qxp = Q.cross(qv, pv)
    l1 = -dot_qp
    l2 = float(np.dot(-q0 * pv + p0 * qv - qxp, Q.cross(h, k))) - dot_qp * float(np.dot(h, k))
    l3 = float(np.dot(k, q0 * pv - p0 * qv + qxp))
    l4 = float(np.dot(h, p0 * qv - q0 * pv - qxp))
    return l1, l2, l3, l4


def _cost(l, phi1, phi2):
    c1, s1 = math.cos(0.5 * phi1), math.sin(0.5 * phi1)
    c2, s2 = math.cos(0.5 * phi2), math.sin(0.5 * phi2)
    l1, l2, l3, l4 = l
    return 2.0 + 2.0 * (l1 * c1 * c2 + l2 * s1 * s2 + l3 * c1 * s2 + l4 * s1 * c2)


def optimal_angles(q, p, h, k):
    """Angles ``(phi1, phi2)`` about ``h`` and ``k`` minimizing the separation.

    ``q`` lies on the cone of ``(h, a)`` and ``p`` on the cone of ``(k, b)``.
    Returned angles lie in ``(-2 pi, 2 pi]``.
    """
    l = cost_coefficients(q, p, h, k)
    l1, l2, l3, l4 = l
    y_d, x_d = l3 - l4, -(l1 + l2)
    y_s, x_s = -(l3 + l4), l2 - l1
    if math.hypot(y_d, x_d) < 1e-14 and math.hypot(y_s, x_s) < 1e-14:
        raise DegenerateGeometry("separation cost is flat in both angle combinations")
    diff = 2.0 * math.atan2(y_d, x_d)
    total = 2.0 * math.atan2(y_s, x_s)
    phi1, phi2 = 0.5 * (total + diff), 0.5 * (total - diff)
    # atan2 already picks the minimizing branch; guard against round-off at
    # the branch cut by comparing with the 2 pi shifted difference.
    alt = (phi1 + math.pi, phi2 - math.pi)
    if _cost(l, *alt) < _cost(l, phi1, phi2) - 1e-15:
        phi1, phi2 = alt
    return phi1, phi2, l


def _about(axis, angle):
    s = math.sin(0.5 * angle)
    return np.array([math.cos(0.5 * angle), s * axis[0], s * axis[1], s * axis[2]])


def triad_pair(m1: VectorMeasurement, m2: VectorMeasurement, seeds=None):
    """The two TRIAD attitudes, the optimal angles and the cost coefficients.

    ``seeds`` optionally supplies the starting cone elements ``(q, p)``;
    by default the smallest-rotation special solutions are used.
    """
    if seeds is None:
        q = special_solutions(m1)[0]
        p = special_solutions(m2)[0]
    else:
        q, p = seeds
    phi1, phi2, l = optimal_angles(q, p, m1.h, m2.h)
    q1 = Q.normalize(Q.multiply(_about(m1.h, phi1), q))
    q2 = Q.normalize(Q.multiply(_about(m2.h, phi2), p))
    return q1, q2, phi1, phi2, l


def solve(problem: TwoVectorProblem, seeds=None) -> TwoVectorSolution:
    """Both TRIAD attitudes and their fusion under the problem's policy."""
    q1, q2, phi1, phi2, l = triad_pair(problem.m1, problem.m2, seeds)
    sol = TwoVectorSolution(q1, q2, phi1, phi2, l, q1, problem.m1.h, problem.m2.h)
    if problem.barrier is not None:
        fused = fuse_constrained(sol, problem.barrier)
    elif problem.weights is not None:
        fused = fuse_wahba(sol, *problem.weights)
    elif problem.noise is not None:
        sa, sb = problem.noise
        fused = fuse_slerp(sol, sa * sa / (sa * sa + sb * sb))
    else:
        fused = fuse_slerp(sol, 0.5)
    return TwoVectorSolution(q1, q2, phi1, phi2, l, Q.canonical(fused), sol.h, sol.k)


def fuse_slerp(sol: TwoVectorSolution, x: float):
    """Interpolate from ``q_triad_1`` (``x = 0``) to ``q_triad_2`` (``x = 1``)."""
    return Q.interpolate(sol.q_triad_1, sol.q_triad_2, x)


def separation_angle(sol: TwoVectorSolution):
    """Signed angle of ``q_triad_2 (x) q_triad_1^-1`` about ``h x k``, and that unit axis."""
    n = Q.unit_vector(Q.cross(sol.h, sol.k))
    r = Q.canonical(Q.multiply(sol.q_triad_2, Q.conjugate(sol.q_triad_1)))
    return 2.0 * math.atan2(float(np.dot(Q.vector_part(r), n)), r[0]), n


def fuse_wahba(sol: TwoVectorSolution, alpha: float, beta: float):
    """Weighted least-squares fusion with weight ``alpha`` on ``(h, a)`` and ``beta`` on ``(k, b)``.

    The optimum lies on the arc between the TRIAD attitudes; its angle from
    ``q_triad_1`` solves ``tan(phi_q) = sin(phi) / (alpha / beta + cos(phi))``.
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("Wahba weights must be positive")
    phi, n = separation_angle(sol)
    phi_q = math.atan2(math.sin(phi), alpha / beta + math.cos(phi))
    q1 = Q.canonical(sol.q_triad_1)
    return Q.normalize(Q.multiply(_about(n, phi_q), q1))


def barrier_ratio(barrier: BarrierSpec, xatol=1e-10):
    """Interpolation ratio minimizing the barrier cost over ``[0, 1]``."""
    if barrier.alpha < 0.0:
        raise ValueError("barrier weight must be non-negative")
    if barrier.a <= 0.0:
        raise InfeasibleBarrier("barrier scale must be positive")
    # sec(x / a) blows up at x = a pi / 2
    upper = min(1.0, 0.5 * math.pi * barrier.a * (1.0 - 1e-12))
    if upper <= 0.0:
        raise InfeasibleBarrier("barrier is infinite on all of [0, 1]")
    res = minimize_scalar(barrier.cost, bounds=(0.0, upper), method="bounded", options={"xatol": xatol})
    x = float(res.x)
    # bounded Brent never evaluates the end points themselves
    for end in (0.0, upper):
        if barrier.cost(end) < barrier.cost(x):
            x = end
    return x


def fuse_constrained(sol: TwoVectorSolution, barrier: BarrierSpec):
    """Interpolate at the ratio chosen by the barrier cost."""
    return fuse_slerp(sol, barrier_ratio(barrier))

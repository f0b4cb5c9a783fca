"""Gyro propagation followed by projection onto one vector's feasibility cone.

The integrated attitude ``p`` is generally inconsistent with a new vector
measurement. The closest consistent attitude is the normalized projection of
``p`` onto the great circle of the measurement's cone, which has the compact
form ``(p - h (x) p (x) b) / |.|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .cone import VectorMeasurement, special_solutions
from .errors import AntipodalProjection, SingularMeasurement

# below this the projection numerator is treated as zero
PROJECTION_EPS = 1e-7
# |omega| T above which the "auto" integrator switches to the exponential
EXACT_STEP = 0.05


@dataclass(frozen=True)
class RateSample:
    """Body rate ``omega`` (rad/s) held over a step of ``T`` seconds."""

    omega: np.ndarray
    T: float

    def __post_init__(self):
        if not self.T > 0.0:
            raise ValueError(f"step T must be positive, got {self.T}")
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))


@dataclass(frozen=True)
class ConeParameterization:
    """Auxiliary vectors ``f = h - b``, ``g = h + b`` and the ratio ``c / s``."""

    f: np.ndarray
    g: np.ndarray
    kappa: float
    n3: float
    c_over_s: float


@dataclass(frozen=True)
class EstimatorStep:
    p: np.ndarray
    q: np.ndarray
    r_ref: np.ndarray
    omega_c: np.ndarray
    flagged: bool = False


def integrate(q_prev, s: RateSample, method="euler"):
    """Propagate ``q_prev`` over one step of body rate.

    ``method`` is ``"euler"`` (first-order step plus renormalization),
    ``"exact"`` (exponential of the constant rate) or ``"auto"`` (exact once
    ``|omega| T`` exceeds 0.05).
    """
    w = s.omega
    if method == "auto":
        method = "exact" if math.sqrt(float(np.dot(w, w))) * s.T > EXACT_STEP else "euler"
    if method == "exact":
        return Q.normalize(Q.multiply(q_prev, Q.from_rotation_vector(w * s.T)))
    if method != "euler":
        raise ValueError(f"unknown integration method {method!r}")
    half = 0.5 * s.T
    dq = Q.multiply(q_prev, Q.pure(w))
    return Q.normalize(q_prev + half * dq)


def project(p, m: VectorMeasurement):
    """Closest attitude to ``p`` that is consistent with measurement ``m``.

    Raises
    ------
    AntipodalProjection
        If ``p`` is orthogonal to the whole cone, so every cone element is
        equally far from it.
    """
    v = p - Q.multiply(Q.multiply(Q.pure(m.h), p), Q.pure(m.b))
    n = math.sqrt(float(np.dot(v, v)))
    if n <= PROJECTION_EPS:
        raise AntipodalProjection("estimate is equidistant from every cone element")
    return v / n


def project_span(p, m: VectorMeasurement):
    """Projection through the special solutions: ``(r1 r1' + r2 r2') p``, normalized."""
    r1, r2 = special_solutions(m)
    v = float(np.dot(r1, p)) * r1 + float(np.dot(r2, p)) * r2
    n = float(np.linalg.norm(v))
    if n <= 0.5 * PROJECTION_EPS:
        raise AntipodalProjection("estimate is orthogonal to the cone")
    return v / n


def project_z_aligned(p, b):
    """Projection for the reference direction ``h = z``.

    With ``u = [1 + b3, b2, -b1, 0]`` and ``v = [0, b1, b2, 1 + b3]`` spanning
    the cone, the projection is ``(p.u) u + (p.v) v`` normalized; the ratio
    ``(p.u) / (p.v)`` is the cone parameter ``kappa``.

    Raises
    ------
    SingularMeasurement
        If ``b`` is antiparallel to ``z``.
    """
    b = Q.unit_vector(b)
    b1, b2, b3 = b
    if b3 <= -1.0 + 1e-7:
        raise SingularMeasurement("body vector antiparallel to the reference z axis")
    u = np.array([1.0 + b3, b2, -b1, 0.0])
    v = np.array([0.0, b1, b2, 1.0 + b3])
    # |u| = |v| and u.v = 0, so no rescaling is needed before combining
    w = float(np.dot(p, u)) * u + float(np.dot(p, v)) * v
    n = float(np.linalg.norm(w))
    if n <= PROJECTION_EPS * float(np.dot(u, u)):
        raise AntipodalProjection("estimate is equidistant from every cone element")
    return w / n


def cone_parameterization(p, m: VectorMeasurement) -> ConeParameterization:
    """Cone parameter ``kappa`` of the projection of ``p``, through ``f`` and ``g``.

    Requires ``g3 != 0`` and a non-vanishing denominator of ``kappa``.
    """
    f = m.h - m.b
    g = m.h + m.b
    p0, pv = p[0], Q.vector_part(p)
    num = p0 * float(np.dot(g, g)) + float(np.dot(pv, Q.cross(g, f)))
    den = (
        p0 * (g[0] * f[1] - g[1] * f[0])
        + pv[0] * (g[0] * g[2] - f[0] * f[2])
        + pv[1] * (g[1] * g[2] - f[1] * f[2])
        + pv[2] * (f[0] ** 2 + f[1] ** 2 + g[2] ** 2)
    )
    if abs(g[2]) < 1e-12 or abs(den) < 1e-14:
        raise SingularMeasurement("cone parameter undefined for this geometry")
    kappa = num / den
    rad = float(np.dot(g, g)) + 2.0 * kappa * (f[0] * g[1] - f[1] * g[0]) + kappa**2 * (f[0] ** 2 + f[1] ** 2)
    n3 = g[2] / math.sqrt(rad)
    return ConeParameterization(f, g, kappa, n3, kappa * n3)


def project_kappa(p, m: VectorMeasurement):
    """Projection assembled from the cone parameter; a cross-check of :func:`project`."""
    cp = cone_parameterization(p, m)
    f, g, n3 = cp.f, cp.g, cp.n3
    # c / s = kappa n3 with c**2 + s**2 = 1; s takes the sign that makes q
    # the nearer of the two antipodal cone points
    s = 1.0 / math.sqrt(1.0 + cp.c_over_s**2)
    c = cp.c_over_s * s
    q = np.array([c, (-c * f[1] + s * n3 * g[0]) / g[2], (c * f[0] + s * n3 * g[1]) / g[2], s * n3])
    q = Q.normalize(q)
    return q if float(np.dot(q, p)) >= 0.0 else -q


def correction(p, q):
    """Correction rotations ``(q (x) p^-1, p^-1 (x) q)`` in the reference and body frames."""
    pinv = Q.conjugate(p)
    return Q.multiply(q, pinv), Q.multiply(pinv, q)


def expected_measurement(p, h):
    """Body-frame components ``b_p`` that ``h`` would have if ``p`` were the attitude."""
    return Q.rotate(Q.conjugate(p), h)


def ecf_correction_rate(p, m: VectorMeasurement, T: float, k_P: float | None = None):
    """Complementary-filter correction rate ``k_P (b x b_p)``; ``k_P`` defaults to ``1 / T``."""
    if k_P is None:
        k_P = 1.0 / T
    return k_P * Q.cross(m.b, expected_measurement(p, m.h))


def step(q_prev, s: RateSample, m: VectorMeasurement, method="euler") -> EstimatorStep:
    """Integrate, project and report the correction for one sample."""
    p = integrate(q_prev, s, method)
    q = project(p, m)
    if float(np.dot(q, p)) < 0.0:
        q = -q
    r_ref, _ = correction(p, q)
    return EstimatorStep(p, q, r_ref, ecf_correction_rate(p, m, s.T))


@dataclass
class EstimatorSession:
    """Running single-vector estimator.

    Keeps the previous accepted estimate so that a projection tie (integrated
    attitude orthogonal to the cone) can fall back to the cone element nearest
    the previous estimate. Fallback steps are counted in ``flagged_steps``.
    """

    q: np.ndarray = field(default_factory=lambda: Q.IDENTITY.copy())
    method: str = "euler"
    flagged_steps: int = 0

    def update(self, omega, T, m: VectorMeasurement) -> EstimatorStep:
        s = RateSample(omega, T)
        p = integrate(self.q, s, self.method)
        flagged = False
        try:
            q = project(p, m)
        except AntipodalProjection:
            flagged = True
            self.flagged_steps += 1
            q = self._fallback(m)
        if float(np.dot(q, p)) < 0.0:
            q = -q
        r_ref, _ = correction(p, q)
        self.q = q
        return EstimatorStep(p, q, r_ref, ecf_correction_rate(p, m, T), flagged)

    def _fallback(self, m):
        try:
            return project(self.q, m)
        except AntipodalProjection:
            r1, r2 = special_solutions(m)
            return Q.normalize(math.sqrt(0.5) * (r1 + r2))

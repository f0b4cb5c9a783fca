"""Reference estimators: TRIAD, Davenport's q-method, a quaternion EKF and the
explicit complementary filter (ECF)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from . import quat as Q
from .cone import VectorMeasurement
from .errors import DegenerateGeometry, DegenerateSpectrum
from .singlevector import RateSample, expected_measurement, integrate
from .stochastic import measurement_jacobian, rate_jacobian, symmetrize


def _triad_frame(u, v):
    t1 = Q.unit_vector(u)
    c = Q.cross(u, v)
    if np.linalg.norm(c) <= 1e-6:
        raise DegenerateGeometry("TRIAD needs two non-parallel directions")
    t2 = c / np.linalg.norm(c)
    return np.column_stack((t1, t2, Q.cross(t1, t2)))


def from_matrix(A):
    """Scalar-first unit quaternion of a rotation matrix (non-negative scalar part)."""
    x, y, z, w = Rotation.from_matrix(A).as_quat()
    return Q.canonical(np.array([w, x, y, z]))


def to_matrix(q):
    x = Q.rotate(q, Q.E_X)
    y = Q.rotate(q, Q.E_Y)
    return np.column_stack((x, y, Q.cross(x, y)))


def triad(m1: VectorMeasurement, m2: VectorMeasurement):
    """TRIAD attitude; exact on ``m1`` and as close as possible on ``m2``.

    Raises
    ------
    DegenerateGeometry
        If either pair of directions is (anti)parallel.
    """
    ref = _triad_frame(m1.h, m2.h)
    body = _triad_frame(m1.b, m2.b)
    return from_matrix(ref @ body.T)


@dataclass(frozen=True)
class DavenportProblem:
    """Weighted vector observations ``(reference, body, weight)``."""

    observations: tuple

    def __post_init__(self):
        obs = tuple((Q.unit_vector(h), Q.unit_vector(b), float(w)) for h, b, w in self.observations)
        if any(w <= 0.0 for _, _, w in obs):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "observations", obs)


def davenport_matrix(problem: DavenportProblem):
    """Symmetric 4x4 ``K`` with ``q' K q = sum w h . rotate(q, b)``."""
    K = np.zeros((4, 4))
    for h, b, w in problem.observations:
        K += w * (Q.left_matrix(Q.pure(h)).T @ Q.right_matrix(Q.pure(b)))
    return symmetrize(K)


def davenport(problem: DavenportProblem, gap_tol=1e-10):
    """Wahba-optimal attitude: dominant eigenvector of the Davenport matrix.

    Raises
    ------
    DegenerateSpectrum
        If the two largest eigenvalues coincide (relative to the total weight).
    """
    K = davenport_matrix(problem)
    w, V = np.linalg.eigh(K)
    scale = sum(wt for _, _, wt in problem.observations)
    if w[3] - w[2] <= gap_tol * scale:
        raise DegenerateSpectrum("top eigenvalue of the Davenport matrix is repeated")
    return Q.canonical(Q.normalize(V[:, 3]))


def wahba_loss(problem: DavenportProblem, q):
    return 0.5 * sum(w * float(np.sum((h - Q.rotate(q, b)) ** 2)) for h, b, w in problem.observations)


@dataclass
class EKFState:
    """Quaternion EKF with a 4x4 ambient covariance.

    ``W`` is the gyro-noise covariance and ``R`` the vector-measurement
    covariance. With ``project_tangent`` the covariance is kept orthogonal to
    the current quaternion, so updates do not act along the unit-norm
    direction.
    """

    W: np.ndarray
    R: np.ndarray
    q: np.ndarray = field(default_factory=lambda: Q.IDENTITY.copy())
    P: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    project_tangent: bool = True

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        if self.W.ndim == 0:
            self.W = float(self.W) * np.eye(3)
        if self.R.ndim == 0:
            self.R = float(self.R) * np.eye(3)


def ekf_predict(state: EKFState, s: RateSample, method="euler") -> EKFState:
    """Gyro propagation of the estimate and its covariance (in place)."""
    T = s.T
    F = Q.right_matrix(np.concatenate(([1.0], 0.5 * T * s.omega)))
    G = rate_jacobian(state.q)
    state.P = symmetrize(F @ state.P @ F.T + 0.25 * T * T * (G @ state.W @ G.T))
    state.q = integrate(state.q, s, method)
    return state


def ekf_update(state: EKFState, m: VectorMeasurement, R=None) -> EKFState:
    """Linearized update with one vector measurement (Joseph form, in place)."""
    R = state.R if R is None else R
    q, P = state.q, state.P
    H = measurement_jacobian(q, m.h)
    S = H @ P @ H.T + R
    K = np.linalg.solve(S, H @ P).T
    q = Q.normalize(q + K @ (m.b - expected_measurement(q, m.h)))
    IKH = np.eye(4) - K @ H
    P = IKH @ P @ IKH.T + K @ R @ K.T
    if state.project_tangent:
        Pt = np.eye(4) - np.outer(q, q)
        P = Pt @ P @ Pt
    state.q = q
    state.P = symmetrize(P)
    return state


def ekf_step(state: EKFState, s: RateSample, m: VectorMeasurement, method="euler") -> EKFState:
    """Predict with the gyro and update with one vector measurement (in place)."""
    return ekf_update(ekf_predict(state, s, method), m)


@dataclass
class ECFState:
    """Explicit complementary filter with proportional gain ``k_P`` (1/s).

    In the default one-step form the correction rate uses the previous
    estimate and is added to the gyro rate before integrating. With
    ``two_step`` the gyro rate is integrated first and the correction,
    computed from the integrated estimate, is applied afterwards.
    """

    k_P: float
    q: np.ndarray = field(default_factory=lambda: Q.IDENTITY.copy())
    two_step: bool = False

    def __post_init__(self):
        if self.k_P < 0.0:
            raise ValueError("gain k_P must be non-negative")


def ecf_step(state: ECFState, s: RateSample, m: VectorMeasurement, method="euler") -> ECFState:
    if state.two_step:
        p = integrate(state.q, s, method)
        w_c = state.k_P * Q.cross(m.b, expected_measurement(p, m.h))
        state.q = integrate(p, RateSample(w_c, s.T), method)
    else:
        w_c = state.k_P * Q.cross(m.b, expected_measurement(state.q, m.h))
        state.q = integrate(state.q, RateSample(s.omega + w_c, s.T), method)
    return state

"""First-order noise propagation for the single-vector estimator.

Covariances of quaternions are kept as 4x4 matrices in ambient coordinates;
the unit-norm constraint makes them rank deficient, so positive
semidefiniteness is only expected up to round-off.

The :class:`GeometricFilter` combines these pieces: the gyro-predicted
measurement ``b_p`` is fused with the measured ``b`` and the integrated
attitude is projected onto the cone of the fused direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .cone import VectorMeasurement
from .errors import SingularFusion
from .singlevector import RateSample, expected_measurement, integrate, project

EIG_FLOOR = 1e-12


@dataclass
class CovarianceState:
    Xi: np.ndarray
    Pi: np.ndarray
    W: np.ndarray
    B: np.ndarray
    B_p: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    B_f: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))


def symmetrize(M):
    return 0.5 * (M + M.T)


def rate_jacobian(q):
    """The 4x3 map ``d omega -> q (x) [0, d omega]``: last three columns of ``[q (x)]``."""
    return Q.left_matrix(q)[:, 1:]


def measurement_jacobian(p, h):
    """Derivative of ``b_p = rotate(p^-1, h)`` with respect to the (ambient) quaternion ``p``.

    For unit ``p`` the product with its transpose is ``4 I``.
    """
    p0, p1, p2, p3 = p
    h1, h2, h3 = h
    ph = p1 * h1 + p2 * h2 + p3 * h3
    return 2.0 * np.array(
        [
            [p0 * h1 + h2 * p3 - h3 * p2, ph, p1 * h2 - h1 * p2 - p0 * h3, p1 * h3 - h1 * p3 + p0 * h2],
            [p0 * h2 + h3 * p1 - h1 * p3, p2 * h1 - h2 * p1 + p0 * h3, ph, p2 * h3 - h2 * p3 - p0 * h1],
            [p0 * h3 + h1 * p2 - h2 * p1, p3 * h1 - h3 * p1 - p0 * h2, p3 * h2 - h3 * p2 + p0 * h1, ph],
        ]
    )


def predicted_covariance(p, h, Pi):
    """Covariance ``B_p`` of the predicted measurement."""
    J = measurement_jacobian(p, h)
    return symmetrize(J @ Pi @ J.T)


def propagate_pi(Xi, q, W, T):
    """Covariance of the integrated estimate after one step, ``Xi + (T^2/4) G W G'``."""
    G = rate_jacobian(q)
    return symmetrize(Xi + 0.25 * T * T * (G @ W @ G.T))


def _inv_sym(M):
    """Inverse of a symmetric PSD matrix and the projector onto its null space."""
    M = symmetrize(M)
    scale = float(np.trace(M))
    if not scale > EIG_FLOOR:
        raise SingularFusion("measurement and prediction covariances both vanish")
    try:
        L = np.linalg.cholesky(M)
        if float(np.min(np.diag(L))) ** 2 > 1e-9 * scale:
            Linv = np.linalg.inv(L)
            return Linv.T @ Linv, np.zeros_like(M)
    except np.linalg.LinAlgError:
        pass
    # near-singular: pseudo-inverse from the eigendecomposition
    w, V = np.linalg.eigh(M)
    keep = w > EIG_FLOOR * float(np.max(w))
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    null = V[:, ~keep]
    return (V * inv) @ V.T, null @ null.T


def fuse_measurement(b, b_p, B, B_p):
    """Covariance-weighted fusion of the measured and predicted directions.

    Returns the normalized fused direction ``b_f`` and its covariance ``B_f``.
    Directions in which ``B + B_p`` is singular (relative eigenvalue below
    1e-12) are handled by the pseudo-inverse; both sources are exact there,
    so the fused direction takes their mean in that subspace.

    Raises
    ------
    SingularFusion
        If ``B + B_p`` vanishes entirely.
    """
    S_inv, N = _inv_sym(B + B_p)
    b = np.asarray(b, dtype=float)
    b_p = np.asarray(b_p, dtype=float)
    b_f = Q.unit_vector(S_inv @ (B @ b_p + B_p @ b) + 0.5 * N @ (b + b_p))
    B_f = S_inv @ (B @ B_p @ B + B_p @ B @ B_p) @ S_inv
    return b_f, symmetrize(B_f)


def recursion_matrices(q_i, omega, T, o_next):
    """Sensitivity matrices ``P`` (4x7) and ``Q`` (4x10) of one estimator step.

    ``P`` maps ``(dq_i, d omega)`` to the integrated-estimate error and ``Q``
    maps ``(dq_i, d omega, db)`` to the error of the next estimate, where
    ``o_next = h (x) q_{i+1}``.
    """
    step = np.concatenate(([1.0], 0.5 * T * np.asarray(omega, dtype=float)))
    P = np.hstack((Q.right_matrix(step), 0.5 * T * rate_jacobian(q_i)))
    proj = np.outer(o_next, o_next)
    Qm = np.hstack((proj @ P, -0.5 * rate_jacobian(o_next)))
    return P, Qm


def covariance_recursion(Xi, W, B_f, q_i, omega, T, o_next):
    """Covariances ``(Pi_next, Xi_next)`` of the integrated and projected estimates."""
    P, Qm = recursion_matrices(q_i, omega, T, o_next)
    D7 = np.zeros((7, 7))
    D7[:4, :4] = Xi
    D7[4:, 4:] = W
    D10 = np.zeros((10, 10))
    D10[:7, :7] = D7
    D10[7:, 7:] = B_f
    return symmetrize(P @ D7 @ P.T), symmetrize(Qm @ D10 @ Qm.T)


def cone_normal(q, h):
    """Unit quaternion ``h (x) q``, orthogonal to ``q`` and on the same cone."""
    return Q.multiply(Q.pure(h), q)


def perturbation_p_oracle(q, h, dp):
    """First-order change of the projected estimate caused by ``dp`` in the integrated one."""
    o = cone_normal(q, h)
    return o * float(np.dot(o, dp))


def perturbation_b_oracle(q, h, b, db):
    """First-order change of the projected estimate caused by ``db`` in the measurement.

    The component of ``db`` along ``b`` is dropped, as it only changes the
    length of ``b``.
    """
    b = Q.unit_vector(b)
    db = np.asarray(db, dtype=float)
    db = db - b * float(np.dot(b, db))
    return -0.5 * Q.multiply(cone_normal(q, h), Q.pure(db))


@dataclass
class GeometricFilter:
    """Single-vector estimator with covariance-weighted measurement filtering.

    ``W`` is the gyro-noise covariance (rad^2/s^2) and ``B`` the
    vector-measurement covariance.
    """

    W: np.ndarray
    B: np.ndarray
    q: np.ndarray = field(default_factory=lambda: Q.IDENTITY.copy())
    Xi: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    method: str = "euler"

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.W.ndim == 0:
            self.W = float(self.W) * np.eye(3)
        if self.B.ndim == 0:
            self.B = float(self.B) * np.eye(3)

    def update(self, omega, T, m: VectorMeasurement):
        q_i = self.q
        s = RateSample(omega, T)
        p = integrate(q_i, s, self.method)
        # integrated-estimate covariance, first block row of the recursion
        F = Q.right_matrix(np.concatenate(([1.0], 0.5 * T * s.omega)))
        G = rate_jacobian(q_i)
        Pi = F @ self.Xi @ F.T + 0.25 * T * T * (G @ self.W @ G.T)
        b_p = expected_measurement(p, m.h)
        J = measurement_jacobian(p, m.h)
        try:
            b_f, B_f = fuse_measurement(m.b, b_p, self.B, J @ Pi @ J.T)
        except SingularFusion:
            b_f, B_f = m.b, self.B
        q = project(p, VectorMeasurement(m.h, b_f))
        if float(np.dot(q, p)) < 0.0:
            q = -q
        # only the part of B_f tangent to b_f moves the estimate
        Pt = np.eye(3) - np.outer(b_f, b_f)
        B_f = Pt @ B_f @ Pt
        o = cone_normal(q, m.h)
        Go = rate_jacobian(o)
        self.Xi = symmetrize(float(o @ Pi @ o) * np.outer(o, o) + 0.25 * (Go @ B_f @ Go.T))
        self.q = q
        return q

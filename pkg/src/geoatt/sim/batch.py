"""Monte-Carlo versions of the geometric filter and the EKF.

Each function steps ``S`` independent runs at once; arrays carry the run index
first. The arithmetic is the same as in :class:`geoatt.stochastic.GeometricFilter`
and :func:`geoatt.baselines.ekf_step` (euler integration), so results agree
with the per-run estimators to round-off.
"""

from __future__ import annotations

import numpy as np


def qmul(a, b):
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ),
        axis=-1,
    )


def pure(v):
    return np.concatenate((np.zeros(v.shape[:-1] + (1,)), v), axis=-1)


def unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def left(q):
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        (
            np.stack((q0, -q1, -q2, -q3), -1),
            np.stack((q1, q0, -q3, q2), -1),
            np.stack((q2, q3, q0, -q1), -1),
            np.stack((q3, -q2, q1, q0), -1),
        ),
        axis=-2,
    )


def right(q):
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        (
            np.stack((q0, -q1, -q2, -q3), -1),
            np.stack((q1, q0, q3, -q2), -1),
            np.stack((q2, -q3, q0, q1), -1),
            np.stack((q3, q2, -q1, q0), -1),
        ),
        axis=-2,
    )


def tr(M):
    return np.swapaxes(M, -1, -2)


def expected(p, h):
    """``rotate(p^-1, h)`` for each run."""
    conj = p * np.array([1.0, -1.0, -1.0, -1.0])
    return qmul(qmul(conj, pure(np.broadcast_to(h, p.shape[:-1] + (3,)))), p)[..., 1:]


def jacobian(p, h):
    p0, p1, p2, p3 = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    h1, h2, h3 = h
    ph = p1 * h1 + p2 * h2 + p3 * h3
    J = np.stack(
        (
            np.stack((p0 * h1 + h2 * p3 - h3 * p2, ph, p1 * h2 - h1 * p2 - p0 * h3, p1 * h3 - h1 * p3 + p0 * h2), -1),
            np.stack((p0 * h2 + h3 * p1 - h1 * p3, p2 * h1 - h2 * p1 + p0 * h3, ph, p2 * h3 - h2 * p3 - p0 * h1), -1),
            np.stack((p0 * h3 + h1 * p2 - h2 * p1, p3 * h1 - h3 * p1 - p0 * h2, p3 * h2 - h3 * p2 + p0 * h1, ph), -1),
        ),
        axis=-2,
    )
    return 2.0 * J


def _sym(M):
    return 0.5 * (M + tr(M))


def _predict(q, omega, T, W):
    """Euler-integrated estimate, the step matrix ``F`` and the gyro term of the covariance."""
    p = unit(q + 0.5 * T * qmul(q, pure(omega)))
    step = np.concatenate((np.ones(omega.shape[:-1] + (1,)), 0.5 * T * omega), axis=-1)
    F = right(step)
    G = left(q)[..., :, 1:]
    return p, F, 0.25 * T * T * (G @ W @ tr(G))


def geometric_filter(omega, b, h, W, B, T, q0):
    """Filtered estimates for ``S`` runs: ``omega`` and ``b`` are ``(S, N, 3)``; returns ``(S, N, 4)``."""
    S, N, _ = omega.shape
    h = np.asarray(h, dtype=float)
    hq = pure(h)
    q = np.tile(np.asarray(q0, dtype=float), (S, 1))
    Xi = np.zeros((S, 4, 4))
    I3 = np.eye(3)
    out = np.empty((S, N, 4))
    for i in range(N):
        p, F, GWG = _predict(q, omega[:, i], T, W)
        Pi = F @ Xi @ tr(F) + GWG
        b_p = expected(p, h)
        J = jacobian(p, h)
        B_p = _sym(J @ Pi @ tr(J))
        Sinv = np.linalg.inv(_sym(B + B_p))
        rhs = (B @ b_p[..., None] + B_p @ b[:, i, :, None])[..., 0]
        b_f = unit((Sinv @ rhs[..., None])[..., 0])
        B_f = _sym(Sinv @ (B @ B_p @ B + B_p @ B @ B_p) @ Sinv)
        v = p - qmul(qmul(np.broadcast_to(hq, p.shape), p), pure(b_f))
        qn = unit(v)
        qn *= np.sign(np.einsum("si,si->s", qn, p))[:, None]
        Pt = I3 - b_f[..., :, None] * b_f[..., None, :]
        B_f = Pt @ B_f @ Pt
        o = qmul(np.broadcast_to(hq, qn.shape), qn)
        Go = left(o)[..., :, 1:]
        oPo = np.einsum("si,sij,sj->s", o, Pi, o)
        Xi = _sym(oPo[:, None, None] * (o[..., :, None] * o[..., None, :]) + 0.25 * (Go @ B_f @ tr(Go)))
        q = qn
        out[:, i] = q
    return out


def ekf(omega, b, h, W, R, T, q0, project_tangent=True):
    """EKF estimates for ``S`` runs with one vector measurement per step."""
    S, N, _ = omega.shape
    h = np.asarray(h, dtype=float)
    q = np.tile(np.asarray(q0, dtype=float), (S, 1))
    P = np.zeros((S, 4, 4))
    I4 = np.eye(4)
    out = np.empty((S, N, 4))
    for i in range(N):
        q, F, GWG = _predict(q, omega[:, i], T, W)
        P = _sym(F @ P @ tr(F) + GWG)
        H = jacobian(q, h)
        Sm = H @ P @ tr(H) + R
        K = tr(np.linalg.solve(Sm, H @ P))
        innov = b[:, i] - expected(q, h)
        q = unit(q + (K @ innov[..., None])[..., 0])
        IKH = I4 - K @ H
        P = IKH @ P @ tr(IKH) + K @ R @ tr(K)
        if project_tangent:
            Pt = I4 - q[..., :, None] * q[..., None, :]
            P = Pt @ P @ Pt
        P = _sym(P)
        out[:, i] = q
    return out


def to_euler(q):
    """3-2-1 Euler angles of quaternions stacked on the last axis (no gimbal-lock handling)."""
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    roll = np.arctan2(2.0 * (q0 * q1 + q2 * q3), 1.0 - 2.0 * (q1 * q1 + q2 * q2))
    pitch = np.arcsin(np.clip(2.0 * (q0 * q2 - q1 * q3), -1.0, 1.0))
    yaw = np.arctan2(2.0 * (q0 * q3 + q1 * q2), 1.0 - 2.0 * (q2 * q2 + q3 * q3))
    return np.stack((roll, pitch, yaw), axis=-1)

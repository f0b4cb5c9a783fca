"""Quaternion and 3-vector algebra.

Quaternions are plain ``numpy`` arrays of shape ``(4,)`` in scalar-first
order ``[w, x, y, z]``; 3-vectors are arrays of shape ``(3,)``. Products are
Hamilton products. An attitude ``q`` maps body-frame components ``b`` to
reference-frame components ``h`` through ``h = q (x) b (x) q^-1``, so that a
vector measurement constrains ``q (x) b = h (x) q``.

Euler angles follow the aerospace 3-2-1 (yaw, pitch, roll) sequence.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import AntipodalPair, GimbalLockWarning

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


def cross(a, b):
    """Cross product of two 3-vectors (faster than ``np.cross`` for one pair)."""
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def skew(v):
    """Matrix ``[v x]`` such that ``skew(v) @ u == cross(v, u)``."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def unit_vector(v):
    """Return ``v`` scaled to unit length.

    Raises
    ------
    ValueError
        If ``v`` has (numerically) zero length or non-finite components.
    """
    v = np.asarray(v, dtype=float)
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if not math.isfinite(n) or n < 1e-300:
        raise ValueError(f"cannot normalize vector {v!r}")
    return v / n


def normalize(q):
    """Return ``q`` scaled to unit norm."""
    q = np.asarray(q, dtype=float)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if not math.isfinite(n) or n < 1e-300:
        raise ValueError(f"cannot normalize quaternion {q!r}")
    return q / n


def pure(v):
    """Embed a 3-vector as the pure quaternion ``[0, v]``."""
    return np.array([0.0, v[0], v[1], v[2]])


def vector_part(q):
    return np.array([q[1], q[2], q[3]])


def multiply(a, b):
    """Hamilton product ``a (x) b``."""
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return np.array(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    )


def multiply_chain(*qs):
    """Product of several quaternions, renormalized once at the end."""
    out = qs[0]
    for q in qs[1:]:
        out = multiply(out, q)
    return normalize(out) if len(qs) > 2 else out


def conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def inverse(q):
    """Multiplicative inverse; equal to the conjugate for unit quaternions."""
    return conjugate(q) / float(np.dot(q, q))


def left_matrix(q):
    """Matrix ``[q (x)]`` with ``left_matrix(q) @ p == multiply(q, p)``."""
    q0, q1, q2, q3 = q
    return np.array(
        [
            [q0, -q1, -q2, -q3],
            [q1, q0, -q3, q2],
            [q2, q3, q0, -q1],
            [q3, -q2, q1, q0],
        ]
    )


def right_matrix(q):
    """Matrix ``[(x) q]`` with ``right_matrix(q) @ p == multiply(p, q)``."""
    q0, q1, q2, q3 = q
    return np.array(
        [
            [q0, -q1, -q2, -q3],
            [q1, q0, q3, -q2],
            [q2, -q3, q0, q1],
            [q3, q2, -q1, q0],
        ]
    )


def rotate(q, u):
    """Components of ``u`` after rotation by unit quaternion ``q``.

    Equal to the vector part of ``q (x) [0, u] (x) q^-1``; invariant under
    ``q -> -q``.
    """
    w = q[0]
    v = (q[1], q[2], q[3])
    t = cross(v, u) * 2.0
    return np.asarray(u, dtype=float) + w * t + cross(v, t)


def canonical(q):
    """Flip the sign of ``q`` so that its scalar part is non-negative."""
    return -q if q[0] < 0.0 else q


def from_axis_angle(axis, angle):
    """Unit quaternion for a rotation by ``angle`` (rad) about ``axis``."""
    n = unit_vector(axis)
    s = math.sin(0.5 * angle)
    return np.array([math.cos(0.5 * angle), s * n[0], s * n[1], s * n[2]])


def to_axis_angle(q):
    """Return ``(axis, angle)`` with ``angle`` in ``[0, 2 pi]``.

    The axis is undefined for the identity; ``E_Z`` is returned in that case.
    """
    v = vector_part(q)
    s = float(np.linalg.norm(v))
    angle = 2.0 * math.atan2(s, q[0])
    if s < 1e-300:
        return E_Z.copy(), angle
    return v / s, angle


def rotation_vector(q):
    """Rotation vector ``angle * axis`` of the shortest rotation equivalent to ``q``."""
    q = canonical(q)
    v = vector_part(q)
    s = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if s < 1e-12:
        # series of 2*atan2(s, w)/s about s = 0
        return v * (2.0 / q[0]) * (1.0 - s * s / (3.0 * q[0] * q[0]))
    return v * (2.0 * math.atan2(s, q[0]) / s)


def from_rotation_vector(theta):
    """Exponential map: unit quaternion rotating by ``|theta|`` about ``theta``."""
    t = math.sqrt(theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2])
    if t < 1e-12:
        half = 0.5 - t * t / 48.0
        return normalize([1.0 - t * t / 8.0, half * theta[0], half * theta[1], half * theta[2]])
    k = math.sin(0.5 * t) / t
    return np.array([math.cos(0.5 * t), k * theta[0], k * theta[1], k * theta[2]])


def angle_between(q, p):
    """Geodesic rotation angle (rad, in ``[0, pi]``) between two attitudes."""
    d = multiply(conjugate(q), p)
    s = math.sqrt(d[1] * d[1] + d[2] * d[2] + d[3] * d[3])
    return 2.0 * math.atan2(s, abs(d[0]))


def slerp_power(q, x):
    """Fractional power ``q**x`` of a unit quaternion.

    ``q = [cos(a), sin(a) n]`` maps to ``[cos(x a), sin(x a) n]``. The result
    keeps the sign convention of ``q``: no shortest-path flip is applied here.

    Raises
    ------
    AntipodalPair
        If ``q`` is ``-1`` and ``x`` is not an integer, since the axis is then
        undefined.
    """
    v = vector_part(q)
    s = float(np.linalg.norm(v))
    half = math.atan2(s, q[0])
    if s < 1e-12:
        if q[0] > 0.0:
            return IDENTITY.copy()
        if float(x).is_integer():
            return IDENTITY * (-1.0) ** int(x)
        raise AntipodalPair("power of -1 has no defined rotation axis")
    n = v / s
    return np.concatenate(([math.cos(x * half)], math.sin(x * half) * n))


def interpolate(q, p, x, shortest=True):
    """Spherical interpolation from ``q`` (``x = 0``) to ``p`` (``x = 1``).

    Evaluates ``q (x) (q^-1 (x) p)**x``. With ``shortest`` the sign of ``p`` is
    first aligned with ``q`` so the geodesic through the smaller rotation is
    taken.

    Raises
    ------
    AntipodalPair
        If ``shortest`` is off and ``p`` is (numerically) ``-q``.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"interpolation ratio {x} outside [0, 1]")
    if shortest and float(np.dot(q, p)) < 0.0:
        p = -p
    if float(np.linalg.norm(q + p)) <= 1e-6:
        raise AntipodalPair("interpolation between q and -q is undefined")
    return normalize(multiply(q, slerp_power(multiply(conjugate(q), p), x)))


def from_euler(roll, pitch, yaw):
    """Quaternion of the 3-2-1 sequence: yaw about z, pitch about y, roll about x."""
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return np.array(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ]
    )


def to_euler(q, warn=True):
    """3-2-1 Euler angles ``(roll, pitch, yaw)`` in radians.

    At gimbal lock (``|sin(pitch)| == 1``) a :class:`GimbalLockWarning` is
    issued and roll is reported as zero, with the combined angle in yaw.
    """
    q0, q1, q2, q3 = q
    sp = 2.0 * (q0 * q2 - q1 * q3)
    if abs(sp) >= 1.0 - 1e-12:
        if warn:
            warnings.warn("pitch at +-pi/2: roll and yaw are coupled", GimbalLockWarning, stacklevel=2)
        pitch = math.copysign(0.5 * math.pi, sp)
        yaw = -2.0 * math.copysign(1.0, sp) * math.atan2(q1, q0)
        return 0.0, pitch, math.remainder(yaw, 2.0 * math.pi)
    roll = math.atan2(2.0 * (q0 * q1 + q2 * q3), 1.0 - 2.0 * (q1 * q1 + q2 * q2))
    pitch = math.asin(sp)
    yaw = math.atan2(2.0 * (q0 * q3 + q1 * q2), 1.0 - 2.0 * (q2 * q2 + q3 * q3))
    return roll, pitch, yaw

"""Feasibility cone of a single vector measurement.

A measurement ``b`` (body frame) of a reference direction ``h`` (reference
frame) does not fix the attitude: every ``q`` with ``q (x) b = h (x) q`` is
consistent with it. That one-parameter set is a great circle on the unit
3-sphere, spanned by two orthogonal special solutions ``r1`` (smallest
rotation taking ``b`` to ``h``) and ``r2`` (half-turn about the bisector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .errors import EqualAttitudes, NotNormalized

# |b x h| below this is treated as b = +-h
DEGENERATE_CROSS = 1e-7


@dataclass(frozen=True)
class VectorMeasurement:
    """Reference-frame components ``h`` and body-frame components ``b`` of one direction.

    Both are normalized on construction.
    """

    h: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", Q.unit_vector(self.h))
        object.__setattr__(self, "b", Q.unit_vector(self.b))


def _orthogonal_pair(h):
    # Candidate triads (h, h x e, e - (h.e) h) for e in the basis; keep the
    # best conditioned one.
    best = None
    for k, e in enumerate((Q.E_X, Q.E_Y, Q.E_Z)):
        i = Q.cross(h, e)
        n = float(np.linalg.norm(i))
        if best is None or n > best[0]:
            best = (n, i, e - h[k] * h)
    _, i, j = best
    return i / np.linalg.norm(i), j / np.linalg.norm(j)


def special_solutions(m: VectorMeasurement):
    """The two orthogonal attitudes ``(r1, r2)`` on the cone of ``m``.

    ``r1`` rotates by ``acos(b.h)`` about ``b x h``; ``r2`` rotates by ``pi``
    about ``b + h``. For ``b = h`` these become ``1`` and ``[0, h]``; for
    ``b = -h`` they are half-turns about two axes completing an orthogonal
    triad with ``h``.
    """
    h, b = m.h, m.b
    bh = float(np.dot(b, h))
    bxh = Q.cross(b, h)
    nbxh = float(np.linalg.norm(bxh))
    if nbxh < DEGENERATE_CROSS:
        if bh > 0.0:
            return Q.IDENTITY.copy(), Q.pure(h)
        i, j = _orthogonal_pair(h)
        return Q.pure(i), Q.pure(j)
    c = math.sqrt(max(0.0, 0.5 * (1.0 + bh)))
    s = math.sqrt(max(0.0, 0.5 * (1.0 - bh)))
    r1 = np.concatenate(([c], (s / nbxh) * bxh))
    g = b + h
    r2 = Q.pure(g / np.linalg.norm(g))
    return Q.normalize(r1), r2


@dataclass(frozen=True)
class FeasibilityCone:
    """A vector measurement together with its two special solutions."""

    measurement: VectorMeasurement
    r1: np.ndarray = field(repr=False)
    r2: np.ndarray = field(repr=False)

    @classmethod
    def from_measurement(cls, m: VectorMeasurement) -> "FeasibilityCone":
        r1, r2 = special_solutions(m)
        return cls(m, r1, r2)

    @classmethod
    def from_vectors(cls, h, b) -> "FeasibilityCone":
        return cls.from_measurement(VectorMeasurement(h, b))

    @property
    def h(self):
        return self.measurement.h

    @property
    def b(self):
        return self.measurement.b

    def residual(self, q) -> float:
        return residual(self.measurement, q)

    def contains(self, q, tol=1e-8) -> bool:
        return contains(self, q, tol)

    def span_element(self, c, s):
        return span_element(self, c, s)


def residual(m: VectorMeasurement, q) -> float:
    """Norm of ``q (x) b - h (x) q``; zero exactly on the cone."""
    return float(np.linalg.norm(Q.multiply(q, Q.pure(m.b)) - Q.multiply(Q.pure(m.h), q)))


def contains(cone: FeasibilityCone, q, tol=1e-8) -> bool:
    """Whether unit quaternion ``q`` satisfies the measurement within ``tol``."""
    return residual(cone.measurement, q) < tol


def span_element(cone: FeasibilityCone, c, s):
    """Cone element ``c r1 + s r2``; requires ``c**2 + s**2 == 1``."""
    if abs(c * c + s * s - 1.0) > 1e-9:
        raise NotNormalized(f"c**2 + s**2 = {c * c + s * s!r}, expected 1")
    return c * cone.r1 + s * cone.r2


def cone_from_attitudes(p, q) -> VectorMeasurement:
    """The measurement whose feasibility cone passes through both ``p`` and ``q``.

    The reference direction is the axis of ``q (x) p^-1`` and the body
    direction is that axis seen from ``p``.
    """
    r = Q.multiply(q, Q.conjugate(p))
    if min(np.linalg.norm(r - Q.IDENTITY), np.linalg.norm(r + Q.IDENTITY)) < 1e-9:
        raise EqualAttitudes("attitudes coincide; rotation axis undefined")
    h = Q.unit_vector(Q.vector_part(r))
    return VectorMeasurement(h, Q.rotate(Q.conjugate(p), h))

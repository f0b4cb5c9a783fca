"""Gyro-bias estimation from cone-projection corrections.

Integrating a biased rate ``omega + e`` over a step of ``T`` overshoots by
roughly ``e T``; the body-frame correction ``p^-1 (x) q = [1, dr]`` then has
``dr = -(1 - b b') e T / 2`` (only the part orthogonal to the measured
direction ``b`` is corrected). Stacking corrections from directions that are
not all parallel recovers ``e``.

All functions take ``dr`` as the vector part of ``p^-1 (x) q`` exactly as the
single-vector estimator reports it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .errors import Unobservable

OBSERVABILITY_THRESHOLD = 0.1


def body_correction(p, q):
    """Vector part of ``p^-1 (x) q``."""
    return Q.vector_part(Q.multiply(Q.conjugate(p), q))


def _orth(b):
    b = Q.unit_vector(b)
    return np.eye(3) - np.outer(b, b)


def batch_estimate(samples, T, threshold=OBSERVABILITY_THRESHOLD):
    """Least-squares bias from a batch of ``(b, dr)`` pairs.

    Solves ``sum(1 - b b') e = -sum 2 (1 - b b') dr / T``. The batch is
    observable when the smallest eigenvalue of the *mean* of ``1 - b b'``
    exceeds ``threshold``.

    Raises
    ------
    Unobservable
        If the directions do not excite every axis.
    """
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    n = 0
    for b, dr in samples:
        P = _orth(b)
        A += P
        rhs -= P @ (2.0 * np.asarray(dr, dtype=float) / T)
        n += 1
    if n == 0:
        raise Unobservable("no samples")
    lam = float(np.linalg.eigvalsh(A / n)[0])
    if lam <= threshold:
        raise Unobservable(f"smallest eigenvalue {lam:.3g} of the mean projector is below {threshold}")
    return np.linalg.solve(A, rhs)


@dataclass
class BiasObserverState:
    """Fading-memory bias observer.

    ``A`` and ``Bvec`` are the running normal-equation matrix and right-hand
    side; ``bias_estimate`` is refreshed whenever ``A`` is well conditioned.
    """

    tau: float
    T: float
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    Bvec: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_estimate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    observable: bool = False
    threshold: float = OBSERVABILITY_THRESHOLD

    def __post_init__(self):
        if not self.tau > self.T > 0.0:
            raise ValueError(f"need tau > T > 0, got tau={self.tau}, T={self.T}")

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.A)[0])

    def _solve(self):
        self.observable = self.min_eigenvalue() > self.threshold
        if self.observable:
            self.bias_estimate = np.linalg.solve(self.A, self.Bvec)


def iir_update(state: BiasObserverState, b, dr) -> BiasObserverState:
    """One step of the exponentially weighted observer (updates ``state`` in place)."""
    P = _orth(b)
    g = state.T / state.tau
    state.A = (1.0 - g) * state.A + g * P
    state.Bvec = (1.0 - g) * state.Bvec - P @ (2.0 * np.asarray(dr, dtype=float) / state.tau)
    state._solve()
    return state


def safe_update(state: BiasObserverState, b, dr) -> BiasObserverState:
    """Observer step that only refreshes the components orthogonal to ``b``.

    The component along ``b`` carries no new information, so it keeps its
    previous value and ``A`` cannot decay towards a singular matrix when the
    measured direction stops moving.
    """
    b = Q.unit_vector(b)
    par = np.outer(b, b)
    P = np.eye(3) - par
    g = state.T / state.tau
    A = par @ state.A + P @ ((1.0 - g) * state.A + g * np.eye(3))
    state.A = 0.5 * (A + A.T)
    state.Bvec = par @ state.Bvec + P @ ((1.0 - g) * state.Bvec - 2.0 * np.asarray(dr, dtype=float) / state.tau)
    state._solve()
    return state


@dataclass
class BiasObserver:
    """Observer front end choosing between the ``"iir"`` and ``"safe"`` updates."""

    tau: float
    T: float
    mode: str = "safe"
    threshold: float = OBSERVABILITY_THRESHOLD
    state: BiasObserverState = field(init=False)

    def __post_init__(self):
        if self.mode not in ("iir", "safe"):
            raise ValueError(f"unknown observer mode {self.mode!r}")
        self.state = BiasObserverState(self.tau, self.T, threshold=self.threshold)

    def update(self, b, dr):
        if self.mode == "iir":
            iir_update(self.state, b, dr)
        else:
            safe_update(self.state, b, dr)
        return self.state.bias_estimate if self.state.observable else None

    @property
    def observable(self):
        return self.state.observable

    @property
    def bias_estimate(self):
        return self.state.bias_estimate

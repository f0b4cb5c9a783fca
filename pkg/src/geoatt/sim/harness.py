"""Run estimators over a measurement stream and score them against truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import quat as Q
from ..baselines import DavenportProblem, ECFState, EKFState, davenport, ekf_predict, ekf_update, triad
from ..bias import BiasObserver, batch_estimate, body_correction
from ..cone import VectorMeasurement
from ..errors import AntipodalProjection, GeoAttError, SpecInvalid
from ..singlevector import EstimatorSession, RateSample, expected_measurement, integrate, project
from ..stochastic import GeometricFilter
from ..twovector import TwoVectorProblem, fuse_slerp, solve
from .trajectory import SensorSpec, SimData, TrajectorySpec, generate_data

ESTIMATORS = ("geo", "geo-filter", "geo-bias", "ekf", "ecf", "int-only", "triad", "davenport")
TWO_VECTOR_ONLY = ("triad", "davenport")
MODES = ("single-vector", "two-vector")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``bias_observer`` selects the update used by ``geo-bias`` (``"safe"`` or
    ``"iir"``); ``compensate_bias`` subtracts its estimate from the gyro rate
    once the observer reports observability.
    """

    traj: TrajectorySpec = field(default_factory=TrajectorySpec)
    sensors: SensorSpec = field(default_factory=SensorSpec)
    mode: str = "single-vector"
    estimators: tuple = ("geo", "geo-filter", "ekf", "ecf", "int-only")
    integration: str = "euler"
    ecf_gain: float = 1.0
    bias_observer: str = "safe"
    bias_tau: float = 20.0
    bias_threshold: float = 0.1
    compensate_bias: bool = True

    def validate(self):
        if self.mode not in MODES:
            raise SpecInvalid(f"mode must be one of {MODES}, got {self.mode!r}")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise SpecInvalid(f"unknown estimators {unknown}; choose from {ESTIMATORS}")
        if self.mode == "single-vector":
            bad = [e for e in self.estimators if e in TWO_VECTOR_ONLY]
            if bad:
                raise SpecInvalid(f"{bad} need mode=two-vector")
        elif self.sensors.k is None:
            raise SpecInvalid("two-vector mode needs a second reference vector k")
        if self.integration not in ("euler", "exact", "auto"):
            raise SpecInvalid(f"unknown integration method {self.integration!r}")
        if self.bias_observer not in ("safe", "iir"):
            raise SpecInvalid(f"unknown bias observer {self.bias_observer!r}")
        if not self.ecf_gain >= 0.0:
            raise SpecInvalid("ecf_gain must be non-negative")
        if not self.bias_tau > self.traj.T:
            raise SpecInvalid("bias_tau must exceed the sample period")


@dataclass
class RunReport:
    """Per-step truth and estimates plus summary statistics.

    ``variance`` is the mean of the roll and pitch error variances (rad^2);
    ``drift_slope`` is the least-squares slope (rad/s) of the geodesic error
    of the integration-only estimate, or ``nan`` if it was not run.
    """

    t: np.ndarray
    q_true: np.ndarray
    estimates: dict
    euler_true: np.ndarray
    euler_est: dict
    variance: dict
    drift_slope: float
    flagged: dict
    bias_estimate: np.ndarray | None = None
    bias_history: np.ndarray | None = None

    def errors(self, name):
        """Wrapped (roll, pitch, yaw) errors of one estimator, shape ``(N, 3)``."""
        return wrap(self.euler_est[name] - self.euler_true)


def wrap(a):
    return np.remainder(a + math.pi, 2.0 * math.pi) - math.pi


def euler_series(qs):
    return np.array([Q.to_euler(q, warn=False) for q in qs])


def roll_pitch_variance(euler_err):
    """Mean of the roll and pitch error variances."""
    return float(0.5 * (np.var(euler_err[:, 0]) + np.var(euler_err[:, 1])))


def drift_slope(t, q_true, q_est):
    ang = np.array([Q.angle_between(a, b) for a, b in zip(q_true, q_est)])
    return float(np.polyfit(t, ang, 1)[0])


class BiasCompensatedChain:
    """Geometric estimators, one per measured direction, sharing a bias observer.

    Each chain integrates the compensated rate and projects onto the cone of
    its own measurement. The body corrections are converted back to what an
    uncompensated chain would have reported, so the observer always sees the
    full bias. The attitude of the first chain is the reported estimate.
    """

    def __init__(self, q0, n_vectors, T, tau, mode="safe", compensate=True, method="euler", threshold=0.1):
        self.q = [np.array(q0, dtype=float) for _ in range(n_vectors)]
        self.observer = BiasObserver(tau, T, mode, threshold)
        self.compensate = compensate
        self.method = method
        self.samples = []
        self.flagged_steps = 0

    @property
    def bias(self):
        if self.compensate and self.observer.observable:
            return self.observer.bias_estimate
        return np.zeros(3)

    def update(self, omega, T, measurements):
        e = self.bias
        s = RateSample(np.asarray(omega) - e, T)
        pairs = []
        for j, m in enumerate(measurements):
            p = integrate(self.q[j], s, self.method)
            try:
                q = project(p, m)
            except AntipodalProjection:
                self.flagged_steps += 1
                q = project(self.q[j], m)
            if float(np.dot(q, p)) < 0.0:
                q = -q
            self.q[j] = q
            dr = body_correction(p, q)
            P = np.eye(3) - np.outer(m.b, m.b)
            pairs.append((m.b, dr - 0.5 * T * (P @ e)))
        for b, dr in pairs:
            self.observer.update(b, dr)
            self.samples.append((b, dr))
        return self.q[0]

    def batch(self, T):
        return batch_estimate(self.samples, T, self.observer.threshold)


def batch_bias(data: SimData, cfg: RunConfig, q0=None, iterations=3, window=None):
    """Least-squares bias over a window of logged steps, re-linearized.

    Each pass reruns uncompensated chains on the rate minus the current
    estimate and solves for the remaining bias; the correction model is only
    first order in the bias, so later passes remove its quadratic error.
    ``window`` limits the fit to the first that many steps.

    Raises
    ------
    Unobservable
        If the measured directions do not excite every axis.
    """
    n = len(data) if window is None else min(int(window), len(data))
    Ts = data.step_sizes()
    two = cfg.mode == "two-vector"
    q0 = data.q_true[0] if q0 is None else np.asarray(q0, dtype=float)
    e = np.zeros(3)
    for _ in range(iterations):
        chain = BiasCompensatedChain(
            q0, 2 if two else 1, float(Ts[0]), cfg.bias_tau, compensate=False, method=cfg.integration,
            threshold=cfg.bias_threshold,
        )
        for i in range(n):
            ms = [VectorMeasurement(data.h, data.b[i])]
            if two:
                ms.append(VectorMeasurement(data.k, data.a[i]))
            chain.update(data.omega[i] - e, Ts[i], ms)
        e = e + chain.batch(float(Ts[0]))
    return e


def _ecf_update(state: ECFState, omega, T, measurements, method):
    w_c = np.zeros(3)
    for m in measurements:
        w_c += state.k_P * Q.cross(m.b, expected_measurement(state.q, m.h))
    state.q = integrate(state.q, RateSample(omega + w_c, T), method)
    return state.q


def _two_vector(m1, m2, s1, s2):
    sol = solve(TwoVectorProblem(m1, m2))
    tot = s1 * s1 + s2 * s2
    x = 0.5 if tot == 0.0 else s1 * s1 / tot
    return Q.canonical(fuse_slerp(sol, x))


def _cov(sigma):
    # zero covariances would make the EKF gain singular
    return max(sigma * sigma, 1e-12) * np.eye(3)


def run_estimators(data: SimData, cfg: RunConfig, q0=None):
    """Estimated attitudes ``{name: (N, 4) array}`` and per-estimator flag counts."""
    n = len(data)
    Ts = data.step_sizes()
    sens = cfg.sensors
    q0 = Q.IDENTITY.copy() if q0 is None else np.asarray(q0, dtype=float)
    two = cfg.mode == "two-vector"
    method = cfg.integration

    def meas(i):
        ms = [VectorMeasurement(data.h, data.b[i])]
        if two:
            ms.append(VectorMeasurement(data.k, data.a[i]))
        return ms

    out, flags = {}, {}
    extra = {}
    for name in cfg.estimators:
        est = np.empty((n, 4))
        flagged = 0
        if name == "geo" and not two:
            sess = EstimatorSession(q0.copy(), method)
            for i in range(n):
                est[i] = sess.update(data.omega[i], Ts[i], meas(i)[0]).q
            flagged = sess.flagged_steps
        elif name == "geo":
            for i in range(n):
                m1, m2 = meas(i)
                est[i] = _two_vector(m1, m2, sens.vec_noise_rms, sens.vec2_noise_rms)
        elif name == "geo-filter":
            # exact zeros are fine here: a vanishing fusion falls back to the measurement
            filt = GeometricFilter(sens.gyro_noise_rms**2, sens.vec_noise_rms**2, q0.copy(), method=method)
            for i in range(n):
                try:
                    est[i] = filt.update(data.omega[i], Ts[i], meas(i)[0])
                except AntipodalProjection:
                    flagged += 1
                    est[i] = filt.q
        elif name == "geo-bias":
            chain = BiasCompensatedChain(
                q0, 2 if two else 1, float(Ts[0]), cfg.bias_tau, cfg.bias_observer, cfg.compensate_bias, method, cfg.bias_threshold
            )
            hist = np.zeros((n, 3))
            for i in range(n):
                est[i] = chain.update(data.omega[i], Ts[i], meas(i))
                hist[i] = chain.observer.bias_estimate
            flagged = chain.flagged_steps
            extra["bias_history"] = hist
            extra["bias_estimate"] = chain.observer.bias_estimate.copy() if chain.observer.observable else None
        elif name == "ekf":
            R1, R2 = _cov(sens.vec_noise_rms), _cov(sens.vec2_noise_rms)
            st = EKFState(_cov(sens.gyro_noise_rms), R1, q0.copy())
            for i in range(n):
                ekf_predict(st, RateSample(data.omega[i], Ts[i]), method)
                ms = meas(i)
                ekf_update(st, ms[0], R1)
                if two:
                    ekf_update(st, ms[1], R2)
                est[i] = st.q
        elif name == "ecf":
            st = ECFState(cfg.ecf_gain, q0.copy())
            for i in range(n):
                est[i] = _ecf_update(st, data.omega[i], Ts[i], meas(i), method)
        elif name == "int-only":
            q = q0.copy()
            for i in range(n):
                q = integrate(q, RateSample(data.omega[i], Ts[i]), method)
                est[i] = q
        elif name == "triad":
            for i in range(n):
                est[i] = triad(*meas(i))
        elif name == "davenport":
            w1 = 1.0 / _cov(sens.vec_noise_rms)[0, 0]
            w2 = 1.0 / _cov(sens.vec2_noise_rms)[0, 0]
            for i in range(n):
                m1, m2 = meas(i)
                try:
                    est[i] = davenport(DavenportProblem(((m1.h, m1.b, w1), (m2.h, m2.b, w2))))
                except GeoAttError:
                    flagged += 1
                    est[i] = est[i - 1] if i else q0
        out[name] = est
        flags[name] = flagged
    return out, flags, extra


def run_data(data: SimData, cfg: RunConfig, q0=None) -> RunReport:
    """Run the configured estimators on generated data and score them."""
    cfg.validate()
    if q0 is None:
        q0 = data.q_true[0]
    estimates, flags, extra = run_estimators(data, cfg, q0)
    truth = data.q_true[1:]
    e_true = euler_series(truth)
    e_est = {k: euler_series(v) for k, v in estimates.items()}
    variance = {k: roll_pitch_variance(wrap(v - e_true)) for k, v in e_est.items()}
    slope = drift_slope(data.t, truth, estimates["int-only"]) if "int-only" in estimates else math.nan
    return RunReport(
        data.t, truth, estimates, e_true, e_est, variance, slope, flags,
        extra.get("bias_estimate"), extra.get("bias_history"),
    )


def run(cfg: RunConfig) -> RunReport:
    """Generate the configured scenario and run the estimators on it."""
    cfg.validate()
    return run_data(generate_data(cfg.traj, cfg.sensors), cfg)


def monte_carlo(cfg: RunConfig, seeds, estimators=("geo-filter", "ekf")):
    """Roll/pitch error variance of each estimator for every seed.

    All seeds of the scenario are stepped together (single-vector mode, euler
    integration). Returns ``{name: array of per-seed variances}``.
    """
    from dataclasses import replace

    from . import batch

    cfg.validate()
    bad = [e for e in estimators if e not in ("geo-filter", "ekf")]
    if bad:
        raise SpecInvalid(f"monte_carlo supports geo-filter and ekf only, not {bad}")
    runs = [generate_data(cfg.traj, replace(cfg.sensors, seed=int(s))) for s in seeds]
    omega = np.stack([d.omega for d in runs])
    b = np.stack([d.b for d in runs])
    truth = np.stack([d.q_true[1:] for d in runs])
    h, T, q0 = runs[0].h, runs[0].T, runs[0].q_true[0]
    W = _cov(cfg.sensors.gyro_noise_rms)
    B = _cov(cfg.sensors.vec_noise_rms)
    e_true = batch.to_euler(truth)
    out = {}
    for name in estimators:
        if name == "geo-filter":
            est = batch.geometric_filter(omega, b, h, W, B, T, q0)
        else:
            est = batch.ekf(omega, b, h, W, B, T, q0)
        err = wrap(batch.to_euler(est) - e_true)
        out[name] = 0.5 * (np.var(err[..., 0], axis=1) + np.var(err[..., 1], axis=1))
    return out


def initial_attitude(h, b, k=None, a=None):
    """Starting estimate for a log without truth: TRIAD if two directions, else the cone point nearest identity."""
    if k is not None and a is not None:
        return triad(VectorMeasurement(h, b), VectorMeasurement(k, a))
    return project(Q.IDENTITY, VectorMeasurement(h, b))


def run_samples(samples, cfg: RunConfig) -> RunReport:
    """Run the configured estimators on logged samples (no truth available).

    The step of each sample is its time difference to the previous one; the
    first sample reuses the second's step.
    """
    cfg.validate()
    samples = list(samples)
    if not samples:
        empty = np.zeros((0, 4))
        return RunReport(
            np.zeros(0), None, {k: empty for k in cfg.estimators}, None,
            {k: np.zeros((0, 3)) for k in cfg.estimators}, {}, math.nan, {},
        )
    two = cfg.mode == "two-vector"
    if two and samples[0].a is None:
        raise SpecInvalid("two-vector mode needs a log with ax,ay,az columns")
    t = np.array([s.t for s in samples])
    dt = np.diff(t)
    dt = np.concatenate(([dt[0] if len(dt) else 1.0 / cfg.traj.rate], dt))
    sens = cfg.sensors
    h = Q.unit_vector(sens.h)
    k = Q.unit_vector(sens.k) if sens.k is not None else None
    b = np.array([Q.unit_vector(s.b) for s in samples])
    a = np.array([Q.unit_vector(s.a) for s in samples]) if two else None
    data = SimData(
        t, None, None, np.array([s.omega for s in samples]), None, b, a, h, k, float(dt[0]), {"dt": dt}
    )
    q0 = initial_attitude(h, b[0], k, a[0] if two else None)
    estimates, flags, extra = run_estimators(data, cfg, q0)
    e_est = {name: euler_series(v) for name, v in estimates.items()}
    return RunReport(
        t, None, estimates, None, e_est, {}, math.nan, flags,
        extra.get("bias_estimate"), extra.get("bias_history"),
    )

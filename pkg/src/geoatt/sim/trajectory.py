"""Synthetic trajectories and IMU measurements.

Truth attitude follows sinusoidal 3-2-1 Euler angles. The emitted body rate of
step ``i`` is the constant rate that carries ``q(t_{i-1})`` exactly onto
``q(t_i)``, so integrating it with the exponential map reproduces the truth
to round-off. Gyro samples add a bias (constant mean plus an optional
Ornstein-Uhlenbeck part) and white noise; vector samples are perturbed
component-wise and renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import quat as Q
from ..errors import SpecInvalid


@dataclass(frozen=True)
class TrajectorySpec:
    """Sinusoidal Euler-angle trajectory ``angle(t) = amp * sin(2 pi freq t + phase)``."""

    roll_amp: float = 0.0
    roll_freq: float = 0.0
    pitch_amp: float = 0.0
    pitch_freq: float = 0.0
    yaw_amp: float = 0.0
    yaw_freq: float = 0.0
    roll_phase: float = 0.0
    pitch_phase: float = 0.0
    yaw_phase: float = 0.0
    duration: float = 60.0
    rate: float = 100.0

    def validate(self):
        if not self.duration > 0.0:
            raise SpecInvalid(f"duration must be positive, got {self.duration}")
        fmax = max(abs(self.roll_freq), abs(self.pitch_freq), abs(self.yaw_freq))
        if not self.rate > 2.0 * fmax:
            raise SpecInvalid(f"rate {self.rate} Hz must exceed twice the highest frequency {fmax} Hz")

    @property
    def T(self):
        return 1.0 / self.rate

    @property
    def steps(self):
        return int(round(self.duration * self.rate))

    def euler(self, t):
        """Roll, pitch and yaw (rad) at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        w = 2.0 * math.pi
        roll = self.roll_amp * np.sin(w * self.roll_freq * t + self.roll_phase)
        pitch = self.pitch_amp * np.sin(w * self.pitch_freq * t + self.pitch_phase)
        yaw = self.yaw_amp * np.sin(w * self.yaw_freq * t + self.yaw_phase)
        return roll, pitch, yaw

    def euler_rates(self, t):
        t = np.asarray(t, dtype=float)
        w = 2.0 * math.pi
        droll = self.roll_amp * w * self.roll_freq * np.cos(w * self.roll_freq * t + self.roll_phase)
        dpitch = self.pitch_amp * w * self.pitch_freq * np.cos(w * self.pitch_freq * t + self.pitch_phase)
        dyaw = self.yaw_amp * w * self.yaw_freq * np.cos(w * self.yaw_freq * t + self.yaw_phase)
        return droll, dpitch, dyaw

    def attitude(self, t):
        return Q.from_euler(*(float(a) for a in self.euler(t)))

    def body_rate(self, t):
        """Instantaneous body rate (rad/s) from the 3-2-1 kinematic relation."""
        roll, pitch, _ = (float(a) for a in self.euler(t))
        dr, dp, dy = (float(a) for a in self.euler_rates(t))
        sr, cr = math.sin(roll), math.cos(roll)
        sp, cp = math.sin(pitch), math.cos(pitch)
        return np.array([dr - dy * sp, dp * cr + dy * sr * cp, -dp * sr + dy * cr * cp])


@dataclass(frozen=True)
class SensorSpec:
    """Sensor errors and reference directions.

    ``h`` is the reference direction measured as ``b``; ``k``, when given, is
    a second direction measured as ``a``. ``gyro_bias_tau = inf`` keeps the
    bias at ``gyro_bias``; a finite value adds an Ornstein-Uhlenbeck
    component of stationary rms ``gyro_bias_rms``.
    """

    gyro_noise_rms: float = 0.0
    gyro_bias: tuple = (0.0, 0.0, 0.0)
    gyro_bias_tau: float = math.inf
    gyro_bias_rms: float = 0.0
    vec_noise_rms: float = 0.0
    vec2_noise_rms: float = 0.0
    h: tuple = (0.0, 0.0, 1.0)
    k: tuple | None = None
    seed: int = 0

    def validate(self):
        for name in ("gyro_noise_rms", "gyro_bias_rms", "vec_noise_rms", "vec2_noise_rms"):
            if not getattr(self, name) >= 0.0:
                raise SpecInvalid(f"{name} must be non-negative")
        if not self.gyro_bias_tau > 0.0:
            raise SpecInvalid("gyro_bias_tau must be positive")
        if len(self.gyro_bias) != 3 or len(self.h) != 3 or (self.k is not None and len(self.k) != 3):
            raise SpecInvalid("bias and reference vectors need three components")
        if np.linalg.norm(self.h) == 0.0 or (self.k is not None and np.linalg.norm(self.k) == 0.0):
            raise SpecInvalid("reference vectors must be non-zero")


@dataclass(frozen=True)
class ImuSample:
    """Rate held over ``(t - T, t]`` and the direction(s) measured at ``t``."""

    t: float
    omega: np.ndarray
    b: np.ndarray
    a: np.ndarray | None = None


@dataclass
class SimData:
    """Arrays for a whole run; row ``i`` of the samples belongs to ``t[i]``.

    ``q_true`` has one more row than the samples: row 0 is the initial truth.
    """

    t: np.ndarray
    q_true: np.ndarray
    omega_true: np.ndarray
    omega: np.ndarray
    bias: np.ndarray
    b: np.ndarray
    a: np.ndarray | None
    h: np.ndarray
    k: np.ndarray | None
    T: float
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def step_sizes(self):
        """Step length of every sample; logs may carry their own ``dt``."""
        dt = self.extra.get("dt")
        return np.full(len(self.t), self.T) if dt is None else dt

    def samples(self):
        for i in range(len(self.t)):
            yield self.q_true[i + 1], ImuSample(
                float(self.t[i]), self.omega[i], self.b[i], None if self.a is None else self.a[i]
            )


def _measure(q_true, ref, sigma, rng):
    n = len(q_true)
    conj = q_true * np.array([1.0, -1.0, -1.0, -1.0])
    clean = np.array([Q.rotate(c, ref) for c in conj])
    if sigma > 0.0:
        clean = clean + sigma * rng.standard_normal((n, 3))
    return clean / np.linalg.norm(clean, axis=1, keepdims=True)


def generate_data(traj: TrajectorySpec, sensors: SensorSpec) -> SimData:
    """Truth and noisy measurements for the whole run.

    Separate random streams are spawned from ``sensors.seed`` for the gyro
    noise, the bias walk and each vector sensor, so changing one noise level
    leaves the others' realizations untouched.
    """
    traj.validate()
    sensors.validate()
    T = traj.T
    n = traj.steps
    t_all = np.arange(n + 1) * T
    r, p, y = traj.euler(t_all)
    q_true = np.array([Q.from_euler(*e) for e in zip(r, p, y)])
    # keep a continuous sign along the run
    for i in range(1, n + 1):
        if float(np.dot(q_true[i], q_true[i - 1])) < 0.0:
            q_true[i] = -q_true[i]
    omega_true = np.array(
        [Q.rotation_vector(Q.multiply(Q.conjugate(q_true[i]), q_true[i + 1])) / T for i in range(n)]
    ).reshape(n, 3)

    gyro_rng, bias_rng, vec_rng, vec2_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(sensors.seed).spawn(4)
    )
    bias = np.tile(np.asarray(sensors.gyro_bias, dtype=float), (n, 1))
    if math.isfinite(sensors.gyro_bias_tau) and sensors.gyro_bias_rms > 0.0:
        phi = math.exp(-T / sensors.gyro_bias_tau)
        kick = sensors.gyro_bias_rms * math.sqrt(1.0 - phi * phi)
        x = sensors.gyro_bias_rms * bias_rng.standard_normal(3)
        for i in range(n):
            bias[i] += x
            x = phi * x + kick * bias_rng.standard_normal(3)
    omega = omega_true + bias
    if sensors.gyro_noise_rms > 0.0:
        omega = omega + sensors.gyro_noise_rms * gyro_rng.standard_normal((n, 3))

    h = Q.unit_vector(sensors.h)
    b = _measure(q_true[1:], h, sensors.vec_noise_rms, vec_rng)
    k = a = None
    if sensors.k is not None:
        k = Q.unit_vector(sensors.k)
        a = _measure(q_true[1:], k, sensors.vec2_noise_rms, vec2_rng)
    return SimData(t_all[1:], q_true, omega_true, omega, bias, b, a, h, k, T)


def generate(traj: TrajectorySpec, sensors: SensorSpec):
    """Stream of ``(truth, ImuSample)`` pairs."""
    return generate_data(traj, sensors).samples()

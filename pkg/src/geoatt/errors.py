"""Exception types raised by the estimators and the simulation harness."""


class GeoAttError(Exception):
    """Base class for all package errors."""


class AntipodalPair(GeoAttError):
    """Interpolation between a quaternion and its negative has no defined axis."""


class GimbalLockWarning(UserWarning):
    """Pitch is at +-pi/2; roll and yaw are not separately defined."""


class NotNormalized(GeoAttError):
    """Span coefficients do not lie on the unit circle."""


class EqualAttitudes(GeoAttError):
    """Two attitudes coincide, so they do not pin down a rotation axis."""


class DegenerateGeometry(GeoAttError):
    """Reference or body vectors are (anti)parallel, or the optimum is undefined."""


class InfeasibleBarrier(GeoAttError):
    """The barrier term is infinite everywhere on the interpolation interval."""


class AntipodalProjection(GeoAttError):
    """The integrated estimate is equidistant from every point of the cone."""


class SingularMeasurement(GeoAttError):
    """Body vector is antiparallel to the z reference axis."""


class SingularFusion(GeoAttError):
    """Measurement and prediction covariances carry no information."""


class Unobservable(GeoAttError):
    """Measured directions do not excite every axis of the gyro bias."""


class DegenerateSpectrum(GeoAttError):
    """Davenport matrix has a repeated top eigenvalue; attitude is ambiguous."""


class SpecInvalid(GeoAttError):
    """Trajectory or sensor specification violates its invariants."""


class ParseError(GeoAttError):
    """Malformed line in an IMU log."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonMonotoneTime(ParseError):
    """Timestamps in an IMU log are not strictly increasing."""

"""Geometric attitude estimation on the feasibility cones of vector measurements."""

from . import baselines, bias, cone, quat, singlevector, stochastic, twovector
from .cone import FeasibilityCone, VectorMeasurement, special_solutions
from .errors import GeoAttError
from .singlevector import EstimatorSession, project
from .stochastic import GeometricFilter
from .twovector import TwoVectorProblem, solve

__all__ = [
    "baselines",
    "bias",
    "cone",
    "quat",
    "singlevector",
    "stochastic",
    "twovector",
    "EstimatorSession",
    "FeasibilityCone",
    "GeoAttError",
    "GeometricFilter",
    "TwoVectorProblem",
    "VectorMeasurement",
    "project",
    "solve",
    "special_solutions",
]

"""Caputo fractional BVPs of order in (2, 3] with three-point and integral
boundary conditions: solution representation, Picard iteration, and
existence/uniqueness bound checks."""

from .fracops import (
    DomainError,
    SampledFunction,
    UniformGrid,
    caputo_derivative,
    caputo_monomial,
    gamma,
    rl_integral,
    rl_integral_at,
)
from .problem import GrowthData, LipschitzData, ProblemSpec, example, manufactured, validate

__version__ = "0.1.0"

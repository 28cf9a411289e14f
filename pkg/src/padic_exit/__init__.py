"""Exit probabilities of p-adic brownian motion and bridges.

``padic`` holds finite-precision p-adic numbers and Haar geometry, ``radial``
the heat-kernel series and exact probabilities, ``sampler`` and ``batch`` the
path samplers, and ``experiments`` the Monte Carlo and deterministic checks.
"""
from ._backend import BACKEND
from .experiments import InequalityCase, InequalityReport, McEstimate
from .padic import (
    PAdic,
    PrimeMismatchError,
    Region,
    arithmetic,
    ball,
    character,
    circle,
    format_padic,
    fractional_part,
    haar_measure,
    parse_padic,
    region_contains,
    uniform_ball_sample,
    uniform_circle_sample,
    valuation,
)
from .radial import (
    ProcessParams,
    RadialValue,
    SeriesConvergenceError,
    SeriesTolerance,
    alpha,
    ball_convolution,
    ball_mass,
    ball_mass_lemma1,
    bridge_ball_prob,
    circle_mass,
    density_radial,
    exact_exit_prob,
    grid_sup_prob,
)
from .rng import RandomStream
from .sampler import (
    BridgeSpec,
    PathSample,
    first_exit_index,
    sample_bridge_path,
    sample_bridge_point,
    sample_increment,
    sample_path,
    sup_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "InequalityCase", "InequalityReport", "McEstimate", "RandomStream", "PAdic",
    "PrimeMismatchError", "Region", "arithmetic", "ball", "character", "circle", "format_padic",
    "fractional_part", "haar_measure", "parse_padic", "region_contains", "uniform_ball_sample",
    "uniform_circle_sample", "valuation", "ProcessParams", "RadialValue", "SeriesConvergenceError",
    "SeriesTolerance", "alpha", "ball_convolution", "ball_mass", "ball_mass_lemma1",
    "bridge_ball_prob", "circle_mass", "density_radial", "exact_exit_prob", "grid_sup_prob",
    "BridgeSpec", "PathSample", "first_exit_index", "sample_bridge_path", "sample_bridge_point",
    "sample_increment", "sample_path", "sup_norm",
]

"""Fractional-order sunflower equation: simulation, stability and chaos tools."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .core import gamma_fn, weight_a, weight_b, weight_table
from .solver import (
    DivergenceError,
    InitialData,
    RhsKind,
    SolverConfig,
    SystemParams,
    Trajectory,
    delayed_pairs,
    integrate,
    tail,
)
from .stability import (
    Classification,
    StabilityVerdict,
    classify_x1,
    classify_x2,
    critical_delay_g,
    refine_complex_root,
)
from .bifurcation import escape_threshold_h1, tangency_threshold_h2, trace_curve
from .chaos import InsufficientDataError, count_cycles, mle

__all__ = [
    "__version__",
    "BACKEND",
    "gamma_fn",
    "weight_a",
    "weight_b",
    "weight_table",
    "DivergenceError",
    "InitialData",
    "RhsKind",
    "SolverConfig",
    "SystemParams",
    "Trajectory",
    "delayed_pairs",
    "integrate",
    "tail",
    "Classification",
    "StabilityVerdict",
    "classify_x1",
    "classify_x2",
    "critical_delay_g",
    "refine_complex_root",
    "escape_threshold_h1",
    "tangency_threshold_h2",
    "trace_curve",
    "InsufficientDataError",
    "count_cycles",
    "mle",
]

"""Work statistics of weakly driven quantum systems.

The library computes the full counting statistics of dissipated work for a
system driven by a small time-dependent perturbation, based on a single
phenomenological input (the relaxation function), and validates those
predictions against exact finite-dimensional quantum mechanics.

Layout:

- :mod:`workstats.relaxation`      relaxation-function models and checks
- :mod:`workstats.protocols`       driving schedules and spectral weights
- :mod:`workstats.special`         Bessel / Struve / 2F3 / coth primitives
- :mod:`workstats.quadrature`      adaptive oscillatory integration engine
- :mod:`workstats.work_statistics` cumulants, CGF, Fano factor and bounds
- :mod:`workstats.oracle`          exact finite-dimensional reference
- :mod:`workstats.cli`             the `workstats` command-line front end
"""

from .exceptions import (
    ConvergenceError,
    DivergentIntegralError,
    PrecisionError,
    RangeError,
    TimescaleUndefinedError,
    WorkstatsError,
)
from .protocols import DrivingProtocol, linear, piecewise_linear, sampled_rate
from .quadrature import QuadSpec, TruncationPolicy
from .relaxation import (
    ModelKind,
    RelaxationModel,
    ValidationReport,
    bessel,
    overdamped,
    relaxation_timescale,
    tabulated,
    underdamped,
    validate,
)
from .work_statistics import (
    ThermalParams,
    WorkStatisticsReport,
    average_dissipated_work,
    build_report,
    cgf,
    cumulant,
    fano_factor,
    fano_sweep,
    jensen_bound,
    mean_pseudo_frequency,
    pseudo_mode_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DivergentIntegralError", "PrecisionError",
    "RangeError", "TimescaleUndefinedError", "WorkstatsError",
    "DrivingProtocol", "linear", "piecewise_linear", "sampled_rate",
    "QuadSpec", "TruncationPolicy",
    "ModelKind", "RelaxationModel", "ValidationReport",
    "bessel", "overdamped", "tabulated", "underdamped",
    "validate", "relaxation_timescale",
    "ThermalParams", "WorkStatisticsReport",
    "average_dissipated_work", "build_report", "cgf", "cumulant",
    "fano_factor", "fano_sweep", "jensen_bound",
    "mean_pseudo_frequency", "pseudo_mode_distribution",
    "__version__",
]

"""Spectral mild solutions of terminal value problems for time-fractional wave equations.

The package recovers the trajectory u(t), 0 <= t <= T, and the initial state of
``D_t^alpha u = -A u + G(t, u)``, ``1 < alpha < 2``, from the final value
``u(T) = f`` by expanding in the eigenbasis of ``A``.
"""

from .errors import (
    AccuracyError,
    AliasError,
    ConfigError,
    DegenerateWindow,
    DomainError,
    FractermError,
    GridError,
    HypothesisError,
    NonConvergence,
    RadiusExceeded,
    TerminalTimeInadmissible,
)
from .mittag_leffler import ml, ml_array, ml_with_error
from .spectral_basis import SpectralBasis, dirichlet_1d, dirichlet_2d, load_spectrum
from .operators import TerminalSetup, make_terminal_setup
from .quadrature import kernel_tables, make_grid
from .constants import RegularityParams, compute_constants
from .solver import (
    ProblemSpec,
    Trajectory,
    solve_ivp_forward,
    solve_tvp_contraction,
    solve_tvp_path,
    solve_tvp_picard,
)

__version__ = "0.1.0"

"""Receding-horizon control of bilinear systems with Taylor-expanded terminal costs.

Typical use::

    from taylor_rhc import paper_system, solve_are, TerminalPenalty, RhcConfig, run_rhc

    sys = paper_system()
    ric = solve_are(sys)
    res = run_rhc(sys, [1.0, 1.0], RhcConfig(tau=0.4, T=1.0, phi=TerminalPenalty.taylor2(ric)))
"""

from .config import default_config, load_config, paper_system
from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    DivergenceError,
    InvalidInputError,
    InvalidSystemError,
    NoStabilizingSolutionError,
    NumericalError,
    PartialResultError,
    ReferenceUnstableError,
    RhcError,
)
from .experiments import SweepSpec, SweepTable, monotonicity_report, rho_table, run_sweep
from .model import (
    BilinearSystem,
    ControlSignal,
    CostateTrajectory,
    TimeGrid,
    Trajectory,
    l2_norm,
    load_system,
    validate_system,
    weighted_l2_norm,
)
from .ocp import OcpSolution, SolverOptions, reduced_gradient, reference_solution, solve_finite_horizon
from .rhc import RhcConfig, RhcResult, compare_to_reference, decay_certificate, run_rhc
from .riccati import RiccatiSolution, solve_are, solve_lyapunov, spectral_abscissa
from .simulate import eval_cost, integrate_adjoint, integrate_state
from .taylor import SymTensor3, TerminalPenalty, eval_penalty, grad_penalty, solve_cubic_term

__version__ = "0.1.0"

__all__ = [
    "BilinearSystem",
    "ControlSignal",
    "ConvergenceError",
    "CostateTrajectory",
    "DegenerateSpectrumError",
    "DivergenceError",
    "InvalidInputError",
    "InvalidSystemError",
    "NoStabilizingSolutionError",
    "NumericalError",
    "OcpSolution",
    "PartialResultError",
    "ReferenceUnstableError",
    "RhcConfig",
    "RhcError",
    "RhcResult",
    "RiccatiSolution",
    "SolverOptions",
    "SweepSpec",
    "SweepTable",
    "SymTensor3",
    "TerminalPenalty",
    "TimeGrid",
    "Trajectory",
    "compare_to_reference",
    "decay_certificate",
    "default_config",
    "eval_cost",
    "eval_penalty",
    "grad_penalty",
    "integrate_adjoint",
    "integrate_state",
    "l2_norm",
    "load_config",
    "load_system",
    "monotonicity_report",
    "paper_system",
    "reduced_gradient",
    "reference_solution",
    "rho_table",
    "run_rhc",
    "run_sweep",
    "solve_are",
    "solve_cubic_term",
    "solve_finite_horizon",
    "solve_lyapunov",
    "spectral_abscissa",
    "validate_system",
    "weighted_l2_norm",
]

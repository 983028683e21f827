"""Certified reduced basis solver for the parametrized nonlinear Poisson-Boltzmann equation."""

__version__ = "0.1.0"

from ._accel import USE_NUMBA
from .discretization import (
    DiscreteProblem,
    Grid,
    ParameterPoint,
    assemble_iteration,
    build_problem,
    dirichlet_lift,
)
from .linalg import (
    BandedMatrix,
    gram_schmidt_append,
    smallest_eigenvalue_spd,
    solve_banded,
    solve_dense,
)
from .qoi import (
    CapacitanceCurve,
    average_potential,
    capacitance_sweep,
    error_curve,
    exact_capacitance_1d,
    relative_error_E,
    surface_charge,
)
from .rb import RBSpace, RBSolution, error_estimator, greedy_build, load_space, rb_online_solve, save_space
from .truth import TruthSolution, solve_truth

__all__ = [
    "USE_NUMBA",
    "BandedMatrix",
    "CapacitanceCurve",
    "DiscreteProblem",
    "Grid",
    "ParameterPoint",
    "RBSolution",
    "RBSpace",
    "TruthSolution",
    "assemble_iteration",
    "average_potential",
    "build_problem",
    "capacitance_sweep",
    "dirichlet_lift",
    "error_curve",
    "error_estimator",
    "exact_capacitance_1d",
    "gram_schmidt_append",
    "greedy_build",
    "load_space",
    "rb_online_solve",
    "relative_error_E",
    "save_space",
    "smallest_eigenvalue_spd",
    "solve_banded",
    "solve_dense",
    "solve_truth",
    "surface_charge",
]

"""Sparse moment-SOS relaxations for polynomial optimization over the nonnegative orthant."""

from .copsos import certify_block, is_cop_sos_convex
from .extract import TightnessVerdict, Verdict, certify, extract_atoms
from .instances import EXAMPLES, RandomInstanceSpec, random_qcqp
from .io import load_problem, save_problem
from .pipeline import SolveReport, run_hierarchy, solve_and_certify
from .poly import (LinearConstraints, Polynomial, ProblemInstance, SparsityPattern,
                   parse_polynomial)
from .relax import solve_relaxation
from .sdp import SolverOptions, Status
from .tensor import SymmetricTensor, check_copositive

__version__ = "0.1.0"

__all__ = [
    "EXAMPLES", "LinearConstraints", "Polynomial", "ProblemInstance", "RandomInstanceSpec",
    "SolveReport", "SolverOptions", "SparsityPattern", "Status", "SymmetricTensor",
    "TightnessVerdict", "Verdict", "certify", "certify_block", "check_copositive",
    "extract_atoms", "is_cop_sos_convex", "load_problem", "parse_polynomial", "random_qcqp",
    "run_hierarchy", "save_problem", "solve_and_certify", "solve_relaxation",
]

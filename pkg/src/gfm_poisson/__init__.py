"""Variable-coefficient Poisson problems with interface jumps on a rectangle.

The discrete weak formulation and the equivalent Ghost-Fluid finite-difference
scheme, a conjugate-gradient solver, the piecewise-linear extension machinery
used to check the structural conditions behind convergence, and manufactured
test cases.
"""

from ._backend import BACKEND
from .cases import ProblemCase, builtin_cases, get_case, load_case_file
from .grid import Grid, GridFunction, HalfGridField, diff_x, diff_y, discrete_l2_norm, restrict
from .interface import ArmFractions, LevelSetData, arm_fractions, build_levelset
from .solver import ConvergenceError, SolveReport, cg_solve
from .stencil import StencilSystem, assemble_stencil_system, ghost_values, reconstruct_u
from .weak import (CoefficientSamples, SparseSpdSystem, assemble_weak_system, bilinear,
                   discrete_norm, functional_f1, functional_f2, functional_f3,
                   functional_f4, sample_beta)

__all__ = [
    "BACKEND", "ProblemCase", "builtin_cases", "get_case", "load_case_file",
    "Grid", "GridFunction", "HalfGridField", "diff_x", "diff_y", "discrete_l2_norm",
    "restrict", "ArmFractions", "LevelSetData", "arm_fractions", "build_levelset",
    "ConvergenceError", "SolveReport", "cg_solve", "StencilSystem",
    "assemble_stencil_system", "ghost_values", "reconstruct_u", "CoefficientSamples",
    "SparseSpdSystem", "assemble_weak_system", "bilinear", "discrete_norm",
    "functional_f1", "functional_f2", "functional_f3", "functional_f4", "sample_beta",
]

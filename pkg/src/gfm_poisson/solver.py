"""Conjugate-gradient solution of the assembled 5-point systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from . import _backend
from .grid import GridFunction
from .weak import FivePointSystem

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual_norm: float
    converged: bool
    tolerance: float
    backend: str = _backend.BACKEND


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


def cg_solve(system: FivePointSystem, tol: float = DEFAULT_TOL,
             max_iter: Optional[int] = None, preconditioner: Optional[str] = None,
             callback: Optional[Callable[[np.ndarray], None]] = None):
    """Solve ``A x = rhs`` from ``x0 = 0``; returns ``(GridFunction, SolveReport)``.

    ``preconditioner`` is ``None`` or ``"jacobi"``.  ``callback`` receives the
    interior iterate after every step.  Raises :class:`ConvergenceError` if the
    relative residual does not reach ``tol`` within ``max_iter`` steps or the
    iteration breaks down (NaN, loss of positive definiteness).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if preconditioner not in (None, "jacobi"):
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    grid = system.grid
    if max_iter is None:
        max_iter = 10 * grid.I * grid.J
    if not np.all(np.isfinite(system.rhs)):
        raise ConvergenceError("non-finite right-hand side",
                               SolveReport(0, float("nan"), False, tol))

    x = np.zeros((grid.I, grid.J))
    rhs = np.ascontiguousarray(system.rhs, dtype=float)
    it, relres, status = _backend.cg5(system.diag, system.west, system.east,
                                      system.south, system.north, rhs, x,
                                      float(tol), int(max_iter),
                                      preconditioner == "jacobi", callback)
    report = SolveReport(int(it), float(relres), status == _backend.CONVERGED, float(tol))
    if status == _backend.BREAKDOWN:
        raise ConvergenceError(f"CG broke down after {it} iterations "
                               f"(residual {relres:.3g})", report)
    if status != _backend.CONVERGED:
        raise ConvergenceError(f"CG did not reach {tol:g} in {max_iter} iterations "
                               f"(residual {relres:.3g})", report)
    return GridFunction.from_interior(grid, x, system.boundary), report


def direct_solve(system: FivePointSystem) -> GridFunction:
    """Sparse LU solution; a test oracle and a reference for tight comparisons."""
    x = spla.spsolve(system.to_csr().tocsc(), system.rhs.ravel())
    return GridFunction.from_interior(system.grid, x.reshape(system.grid.I, system.grid.J),
                                      system.boundary)

"""Solving built-in cases, refinement studies, and the structural-condition battery."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cases import ProblemCase
from .extension import (check_disc_to_cont, check_extension_bounds, check_strong_approximation,
                        check_weak_consistency, default_test_functions, level_grid)
from .grid import Grid, GridFunction, diff_x, diff_y, restrict
from .solver import cg_solve, direct_solve
from .stencil import reconstruct_u, stencil_system
from .weak import bilinear, discrete_norm, discretize, functional, weak_system

PATHS = ("weak", "stencil")


@dataclass(frozen=True)
class SolveInfo:
    path: str
    iterations: int
    residual_norm: float
    converged: bool
    wall_time: float
    backend: str
    weak_solution: Optional[GridFunction] = field(default=None, repr=False)
    weak_norm: Optional[float] = None


def solve_case(case: ProblemCase, grid: Grid, path: str = "stencil", tol: float = 1e-10,
               preconditioner: Optional[str] = "jacobi", method: str = "cg"):
    """Return ``(u, SolveInfo)``; ``u`` carries the Dirichlet ring.

    The weak path solves for ``v`` and rebuilds ``u = v + g - a chi``; it also
    records ``||v||_h`` in ``SolveInfo.weak_norm``.  ``method="direct"`` uses a
    sparse LU factorisation instead of CG.
    """
    if path not in PATHS:
        raise ValueError(f"path must be one of {PATHS}, got {path!r}")
    if method not in ("cg", "direct"):
        raise ValueError(f"unknown method {method!r}")
    start = time.perf_counter()
    disc = discretize(case, grid)
    system = weak_system(disc) if path == "weak" else stencil_system(disc)
    if method == "cg":
        sol, report = cg_solve(system, tol=tol, preconditioner=preconditioner)
        iters, res, ok, backend = report.iterations, report.residual_norm, report.converged, report.backend
    else:
        sol = direct_solve(system)
        resid = system.residual(sol)
        iters, ok, backend = 0, True, "direct"
        res = float(np.linalg.norm(resid) / max(np.linalg.norm(system.rhs), 1e-300))
    v = None
    norm = None
    if path == "weak":
        v = sol
        norm = discrete_norm(v, disc.coeff)
        sol = reconstruct_u(v, disc.g, disc.a, disc.levelset.chi)
    info = SolveInfo(path, iters, res, ok, time.perf_counter() - start, backend, v, norm)
    return sol, info


def exact_nodal(case: ProblemCase, grid: Grid) -> GridFunction:
    return restrict(case.u_exact, grid)


def solution_errors(u: GridFunction, reference: GridFunction, inside: np.ndarray):
    """``(err_l2, err_h1)``.

    ``err_l2`` runs over interior nodes.  ``err_h1`` uses arm differences of
    the error over the H^{1,h} index ranges, skipping arms whose end nodes lie
    on opposite sides of the interface.
    """
    g = u.grid
    e = u - reference
    l2 = np.sqrt(np.sum(e.interior ** 2) * g.dx * g.dy)
    ex = diff_x(e).values[:, 1:-1]
    ey = diff_y(e).values[1:-1, :]
    keep_x = (inside[:-1, :] == inside[1:, :])[:, 1:-1]
    keep_y = (inside[:, :-1] == inside[:, 1:])[1:-1, :]
    h1 = np.sqrt((np.sum(ex[keep_x] ** 2) + np.sum(ey[keep_y] ** 2)) * g.dx * g.dy)
    return float(l2), float(h1)


@dataclass(frozen=True)
class ConvergenceRow:
    I: int
    J: int
    h: float
    err_l2: float
    err_h1: float
    cg_iters: int
    wall_time: float
    reference: str = "exact"


def convergence_study(case: ProblemCase, levels: int, path: str = "stencil",
                      first_level: int = 4, tol: float = 1e-10,
                      preconditioner: Optional[str] = "jacobi",
                      method: str = "cg") -> list[ConvergenceRow]:
    """Errors on ``levels`` grids with ``2**first_level`` cells per side, doubling.

    Without an exact solution, each level is compared with the solution on
    the next finer grid sampled at the shared nodes; those rows carry
    ``reference="richardson"``.
    """
    if not isinstance(levels, (int, np.integer)) or levels < 1:
        raise ValueError(f"levels must be a positive integer, got {levels!r}")
    if path not in PATHS:
        raise ValueError(f"path must be one of {PATHS}, got {path!r}")
    rows = []
    fine = None
    for k in range(first_level, first_level + levels):
        grid = level_grid(case.domain, k)
        u, info = solve_case(case, grid, path, tol, preconditioner, method)
        if case.has_exact:
            ref, kind = exact_nodal(case, grid), "exact"
        else:
            fine_grid = level_grid(case.domain, k + 1)
            fine, _ = solve_case(case, fine_grid, path, tol, preconditioner, method)
            ref, kind = GridFunction(grid, fine.values[::2, ::2]), "richardson"
        X, Y = grid.nodes()
        inside = np.asarray(case.inside(X, Y), bool)
        l2, h1 = solution_errors(u, ref, inside)
        rows.append(ConvergenceRow(grid.I, grid.J, grid.h, l2, h1, info.iterations,
                                   info.wall_time, kind))
    rows.sort(key=lambda r: -r.h)
    return rows


def weak_solution_norms(case: ProblemCase, levels: Sequence[int] = (4, 5, 6, 7),
                        tol: float = 1e-10) -> list[float]:
    """``||v^h||_h`` on each level; this is also the exact dual norm of ``F^h``."""
    return [solve_case(case, level_grid(case.domain, k), "weak", tol)[1].weak_norm
            for k in levels]


# ----------------------------------------------------------------------------
# structural battery

@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    measured: dict
    detail: str = ""


@dataclass(frozen=True)
class BatteryReport:
    case: str
    conditions: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def table(self) -> str:
        width = max(len(c.name) for c in self.conditions)
        lines = [f"case {self.case}"]
        for c in self.conditions:
            vals = ", ".join(f"{k}={_fmt(v)}" for k, v in c.measured.items())
            line = f"  {c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {vals}"
            if c.detail:
                line += f"  [{c.detail}]"
            lines.append(line)
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _random_interior(grid: Grid, rng) -> GridFunction:
    return GridFunction.from_interior(grid, rng.standard_normal((grid.I, grid.J)))


def run_structural_battery(case: ProblemCase, levels: Sequence[int] = (4, 5, 6, 7),
                           beta_offset: float = 0.5, probes: int = 20, seed: int = 0,
                           strong_levels: Sequence[int] = tuple(range(2, 10)),
                           identity_tol: float = 1e-13) -> BatteryReport:
    """Run every structural check on ``case`` and collect measured constants."""
    levels = list(levels)
    if not levels:
        raise ValueError("need at least one level")
    rng = np.random.default_rng(seed)
    out = []

    # coercivity / boundedness of B^h: B[psi,psi] = ||psi||^2 and Cauchy-Schwarz
    worst_eq, worst_cs, bad = 0.0, 0.0, []
    for k in levels:
        grid = level_grid(case.domain, k)
        coeff = discretize(case, grid, beta_offset).coeff
        for _ in range(probes):
            u, v = _random_interior(grid, rng), _random_interior(grid, rng)
            nu, nv = discrete_norm(u, coeff), discrete_norm(v, coeff)
            eq = abs(bilinear(u, u, coeff) - nu ** 2) / nu ** 2
            cs = abs(bilinear(u, v, coeff)) / (nu * nv)
            worst_eq, worst_cs = max(worst_eq, eq), max(worst_cs, cs)
            if eq > 1e-13 or cs > 1 + 1e-13:
                bad.append(f"level {k}")
    out.append(ConditionResult("bilinear_bounds", not bad,
                               {"C1_defect": worst_eq, "max_cauchy_schwarz": worst_cs},
                               ", ".join(sorted(set(bad)))))

    # bounded extension
    ratios, bad = [], []
    for k in levels:
        grid = level_grid(case.domain, k)
        coeff = discretize(case, grid, beta_offset).coeff
        for _ in range(probes):
            r = check_extension_bounds(_random_interior(grid, rng), coeff, case)
            ratios.append(r.ratio)
            if not (r.lower_ok and r.upper_ok):
                bad.append(f"level {k} ratio {r.ratio:.6g}")
    out.append(ConditionResult("extension_bound", not bad,
                               {"C0sq_min": min(ratios), "C0sq_max": max(ratios),
                                "m_over_M": case.m / case.M, "M_over_m": case.M / case.m},
                               "; ".join(bad[:3])))

    # strong approximation of a fixed smooth test function
    psi_fn, _ = default_test_functions(case.domain)
    seq = check_strong_approximation(psi_fn, strong_levels, domain=case.domain)
    ok = seq.monotone and seq.reduction < 1e-2
    out.append(ConditionResult("strong_approximation", ok,
                               {"errors": seq.values, "reduction": seq.reduction},
                               "" if ok else f"levels {seq.levels}"))

    # uniform functional bound: sup |F^h(psi)| / ||psi||_h equals ||v^h||_h
    norms, bad = [], []
    for k in levels:
        grid = level_grid(case.domain, k)
        disc = discretize(case, grid, beta_offset)
        v, _ = cg_solve(weak_system(disc), preconditioner="jacobi")
        c3 = discrete_norm(v, disc.coeff)
        norms.append(c3)
        for _ in range(probes):
            psi = _random_interior(grid, rng)
            if abs(functional(disc, psi)) > c3 * discrete_norm(psi, disc.coeff) * (1 + 1e-8):
                bad.append(f"level {k} probe above dual norm")
                break
    growth = [b / a for a, b in zip(norms, norms[1:])]
    for k, gr in zip(levels[1:], growth):
        if gr > 1.1:
            bad.append(f"level {k} growth {gr:.4g}")
    out.append(ConditionResult("functional_bound", not bad,
                               {"C3": norms, "max_growth": max(growth, default=1.0)},
                               "; ".join(bad)))

    # weak consistency of B^h and F^h
    wc = check_weak_consistency(case, levels=levels)
    for name, s in (("weak_consistency_B", wc.bilinear), ("weak_consistency_F", wc.functional)):
        ok = s.tends_to_zero()
        out.append(ConditionResult(name, ok, {"deviations": s.values},
                                   "" if ok else f"levels {s.levels}"))

    # exact sum/integral identities
    worst, bad = 0.0, []
    for k in (3, 4):
        grid = level_grid(case.domain, k)
        r = check_disc_to_cont(case, grid, samples=max(probes, 1), seed=seed + k,
                               beta_offset=beta_offset)
        worst = max(worst, r.worst)
        if r.worst > identity_tol:
            bad.append(f"{grid.I + 1}x{grid.J + 1}: bil {r.bilinear:.3g} f3 {r.f3:.3g} f4 {r.f4:.3g}")
    out.append(ConditionResult("disc_to_cont", not bad, {"max_relative_gap": worst},
                               "; ".join(bad)))
    return BatteryReport(case.name, out)

import os
import subprocess
import sys

import numpy as np
import pytest

from gfm_poisson import _backend, _kernels_py
from gfm_poisson.grid import Grid
from gfm_poisson.solver import ConvergenceError, cg_solve, direct_solve
from gfm_poisson.stencil import assemble_stencil_system
from gfm_poisson.weak import FivePointSystem, assemble_weak_system

from _util import make_case, random_beta_case

try:
    from gfm_poisson import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

needs_compiled = pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")


def _with_rhs(system, rhs):
    return FivePointSystem(system.grid, system.diag, system.west, system.east, system.south,
                           system.north, np.ascontiguousarray(rhs, dtype=float), system.boundary)


def test_zero_rhs_gives_zero():
    s = assemble_weak_system(make_case(), Grid.unit_square(6, 6))
    x, rep = cg_solve(s)
    assert rep.iterations == 0 and rep.converged
    assert np.all(x.values == 0)


def test_constructed_all_ones():
    s = assemble_weak_system(make_case(), Grid.unit_square(2, 2))
    s = _with_rhs(s, s.matvec(np.ones((2, 2))))
    x, rep = cg_solve(s)
    assert np.allclose(x.interior, 1.0, rtol=0, atol=1e-12)
    assert rep.residual_norm <= rep.tolerance


@pytest.mark.parametrize("pre", [None, "jacobi"])
def test_matches_dense_solve(rng, pre):
    case = random_beta_case(rng)
    s = assemble_stencil_system(case, Grid.unit_square(16, 16))
    x, _ = cg_solve(s, tol=1e-12, preconditioner=pre)
    ref = np.linalg.solve(s.to_dense(), s.rhs.ravel()).reshape(16, 16)
    assert np.max(np.abs(x.interior - ref)) <= 1e-10 * np.max(np.abs(ref))
    assert np.allclose(direct_solve(s).interior, ref, rtol=0, atol=1e-12 * np.max(np.abs(ref)))


def test_iterations_grow_with_refinement():
    f = lambda x, y: np.exp(x) * np.cos(3 * y)
    its = []
    for n in (7, 15, 31, 63):
        _, rep = cg_solve(assemble_stencil_system(make_case(f=f), Grid.unit_square(n, n)))
        its.append(rep.iterations)
    assert all(b > a for a, b in zip(its, its[1:]))
    assert its[-1] / its[0] > 4


def test_energy_decreases(rng):
    s = assemble_weak_system(random_beta_case(rng), Grid.unit_square(12, 12))
    energies = []
    cg_solve(s, callback=lambda x: energies.append(0.5 * s.quadratic(x) - np.sum(s.rhs * x)))
    assert len(energies) > 3
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))


def test_unreachable_tolerance_reports():
    s = assemble_stencil_system(make_case(f=1.0), Grid.unit_square(8, 8))
    with pytest.raises(ConvergenceError) as info:
        cg_solve(s, tol=1e-30, max_iter=50)
    assert not info.value.report.converged
    assert info.value.report.iterations == 50


def test_nan_rhs_aborts():
    s = assemble_stencil_system(make_case(f=1.0), Grid.unit_square(4, 4))
    rhs = np.array(s.rhs)
    rhs[1, 1] = np.nan
    with pytest.raises(ConvergenceError):
        cg_solve(_with_rhs(s, rhs))


def test_invalid_arguments():
    s = assemble_stencil_system(make_case(f=1.0), Grid.unit_square(4, 4))
    with pytest.raises(ValueError):
        cg_solve(s, tol=0.0)
    with pytest.raises(ValueError):
        cg_solve(s, preconditioner="ilu")


def test_repeatable_bitwise(rng):
    s = assemble_stencil_system(random_beta_case(rng), Grid.unit_square(20, 20))
    a, _ = cg_solve(s)
    b, _ = cg_solve(s)
    assert np.array_equal(a.values, b.values)


def test_stencil_solution_carries_boundary():
    g_fn = lambda x, y: 1 + x * y
    case = make_case(g=g_fn)
    s = assemble_stencil_system(case, Grid.unit_square(8, 8))
    u, _ = cg_solve(s)
    grid = s.grid
    X, Y = grid.nodes()
    ring = grid.boundary_mask()
    assert np.array_equal(u.values[ring], g_fn(X, Y)[ring])


@needs_compiled
def test_backends_agree(rng):
    s = assemble_stencil_system(random_beta_case(rng), Grid.unit_square(17, 13))
    ops = (s.diag, s.west, s.east, s.south, s.north)
    x = rng.standard_normal(s.rhs.shape)
    assert np.allclose(_kernels_py.matvec5(*ops, x), _kernels_c.matvec5(*ops, x),
                       rtol=1e-15, atol=1e-15 * np.max(np.abs(s.diag)))
    for jacobi in (False, True):
        xp, xc = np.zeros_like(s.rhs), np.zeros_like(s.rhs)
        rp = _kernels_py.cg5(*ops, s.rhs, xp, 1e-10, 10000, jacobi, None)
        rc = _kernels_c.cg5(*ops, s.rhs, xc, 1e-10, 10000, jacobi, None)
        assert rp[2] == rc[2] == _backend.CONVERGED
        assert abs(rp[0] - rc[0]) <= 2
        assert np.allclose(xp, xc, rtol=0, atol=1e-8 * np.max(np.abs(xp)))


def test_pure_python_switch():
    env = dict(os.environ, GFM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import gfm_poisson; print(gfm_poisson.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

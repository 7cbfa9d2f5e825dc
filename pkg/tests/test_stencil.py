import numpy as np
import pytest

from gfm_poisson.grid import Grid, GridFunction
from gfm_poisson.interface import arm_fractions
from gfm_poisson.solver import direct_solve
from gfm_poisson.stencil import (assemble_stencil_system, discrete_product_rule_check,
                                 ghost_values, jump_terms, pde_residual, reconstruct_u,
                                 stencil_system)
from gfm_poisson.weak import discretize, weak_system

from _util import make_case, random_beta_case, random_full, random_h0


def _one_arm(a_left, a_right, phi_left, phi_right):
    g = Grid.unit_square(1, 1)
    phi = np.ones(g.shape)
    phi[0, 0], phi[1, 0] = phi_left, phi_right
    a = np.zeros(g.shape)
    a[0, 0], a[1, 0] = a_left, a_right
    return GridFunction(g, a), arm_fractions(GridFunction(g, phi)), GridFunction(g, phi)


def test_ghost_value_examples(rng):
    g = Grid.unit_square(4, 4)
    arms = arm_fractions(random_full(g, rng))
    a1, a2 = ghost_values(GridFunction(g, np.full(g.shape, 2.5)), arms)
    assert np.allclose(a1.values, 2.5, rtol=1e-15) and np.allclose(a2.values, 2.5, rtol=1e-15)
    a, arms, _ = _one_arm(1.0, 3.0, -1.0, 3.0)
    assert ghost_values(a, arms)[0].values[0, 0] == pytest.approx(1.5)
    a, arms, _ = _one_arm(1.0, 3.0, 0.0, 0.0)          # theta = 0 branch
    assert ghost_values(a, arms)[0].values[0, 0] == 3.0


def test_product_rule(rng):
    from gfm_poisson.interface import characteristic
    g = Grid.unit_square(16, 16)
    a = random_full(g, rng)
    inside = GridFunction(g, -np.ones(g.shape))
    assert discrete_product_rule_check(a, arm_fractions(inside), characteristic(inside)) == 0.0
    a1, arms, phi = _one_arm(1.0, 3.0, -1.0, 3.0)
    assert discrete_product_rule_check(a1, arms, characteristic(phi)) <= 1e-15
    for _ in range(5):
        phi = random_full(g, rng)
        assert discrete_product_rule_check(a, arm_fractions(phi), characteristic(phi)) <= 1e-13 * 17


def test_no_interface_collapse():
    f = lambda x, y: np.cos(x) * y
    case = make_case(f=f)
    g = Grid.unit_square(5, 4)
    s = assemble_stencil_system(case, g)
    X, Y = g.nodes()
    assert np.allclose(s.rhs, -f(X, Y)[1:-1, 1:-1], rtol=1e-15, atol=0)
    assert np.allclose(s.diag, 2 / g.dx ** 2 + 2 / g.dy ** 2)


def test_one_dimensional_slice_corrections():
    s_pos, beta_p, a0, b0 = 0.45, 1.0, 1.3, 0.7
    case = make_case(phi=lambda x, y: x - s_pos, beta_minus=2.0, beta_plus=beta_p, a=a0, b=b0)
    g = Grid.unit_square(4, 2)
    dx = g.dx
    jt = jump_terms(discretize(case, g))
    # nodes x = 0.4 (i = 2) and 0.6 (i = 3) bracket the interface
    theta = 0.15 / (0.05 + 0.15)
    ghost = a0 * (1 - theta) + a0 * theta
    chi1 = 1.0 - theta
    at_2 = beta_p * ghost / dx ** 2 - b0 * (chi1 - 1.0) / dx
    at_3 = -beta_p * ghost / dx ** 2 - b0 * (0.0 - chi1) / dx
    assert np.allclose(jt[1, :], at_2, rtol=1e-13)
    assert np.allclose(jt[2, :], at_3, rtol=1e-13)
    assert np.all(jt[[0, 3], :] == 0.0)


@pytest.mark.parametrize("size", [(8, 8), (16, 16), (11, 7)])
def test_residual_equivalence(size, rng):
    case = random_beta_case(rng)
    g = Grid.unit_square(*size)
    disc = discretize(case, g)
    ws, ss = weak_system(disc), stencil_system(disc)
    for _ in range(5):
        v = random_h0(g, rng)
        u = reconstruct_u(v, disc.g, disc.a, disc.levelset.chi)
        rw = ws.residual(v)
        rs = ss.residual(u)
        assert np.allclose(rw, g.dx * g.dy * rs, rtol=0, atol=1e-12 * np.max(np.abs(rw)))


def test_weak_and_stencil_solutions_agree(rng):
    case = random_beta_case(rng)
    g = Grid.unit_square(16, 16)
    disc = discretize(case, g)
    v = direct_solve(weak_system(disc))
    u_w = reconstruct_u(v, disc.g, disc.a, disc.levelset.chi)
    u_s = direct_solve(stencil_system(disc))
    assert np.max(np.abs(u_w.values - u_s.values)) <= 1e-11 * np.max(np.abs(u_s.values))
    assert np.max(np.abs(pde_residual(disc, u_s))) <= 1e-9 * np.max(np.abs(ss_rhs(disc)))


def ss_rhs(disc):
    return stencil_system(disc).rhs


def test_boundary_data_cancels_from_interior(rng):
    # changing g at interior nodes moves the weak rhs but not the stencil rhs
    base = random_beta_case(rng)
    bump = lambda x, y: x * (1 - x) * y * (1 - y)
    from dataclasses import replace
    other = replace(base, g_fn=lambda x, y: base.g_fn(x, y) + 3 * bump(x, y))
    g = Grid.unit_square(9, 9)
    d1, d2 = discretize(base, g), discretize(other, g)
    assert not np.allclose(weak_system(d1).rhs, weak_system(d2).rhs)
    assert np.array_equal(stencil_system(d1).rhs, stencil_system(d2).rhs)


def test_matrix_independent_of_jump_data(rng):
    case = random_beta_case(rng)
    from dataclasses import replace
    plain = replace(case, a_fn=lambda x, y: 0 * x, b_fn=lambda x, y: 0 * x, g_fn=lambda x, y: 0 * x)
    g = Grid.unit_square(10, 12)
    s1, s2 = assemble_stencil_system(case, g), assemble_stencil_system(plain, g)
    for name in ("diag", "west", "east", "south", "north"):
        assert np.array_equal(getattr(s1, name), getattr(s2, name))
    w = weak_system(discretize(case, g))
    assert np.allclose(w.diag, g.dx * g.dy * s1.diag, rtol=1e-14)
    assert np.allclose(w.west, g.dx * g.dy * s1.west, rtol=1e-14)


def test_reconstruct_u(rng):
    g = Grid.unit_square(5, 5)
    v, gg, a = random_h0(g, rng), random_full(g, rng), random_full(g, rng)
    chi = GridFunction(g, (rng.random(g.shape) < 0.5).astype(float))
    zero = GridFunction.zeros(g)
    assert np.array_equal(reconstruct_u(v, zero, zero, chi).values, v.values)
    assert np.array_equal(reconstruct_u(zero, gg, a, chi).values, (gg - a * chi).values)
    u = reconstruct_u(v, gg, a, chi)
    back = u - gg + a * chi
    assert np.allclose(back.values, v.values, rtol=0, atol=1e-15 * 8)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gfm_poisson.cases import get_case
from gfm_poisson.extension import (centroid_rule, check_disc_to_cont, check_extension_bounds,
                                   check_strong_approximation, check_weak_consistency,
                                   edge_midpoint_rule, edge_midpoint_samples, extend_S,
                                   extend_T, integral_bilinear, integral_f3, integral_f4,
                                   quad_B, quad_F, quad_F_parts, triangulate)
from gfm_poisson.grid import Grid, GridFunction, HalfGridField, restrict
from gfm_poisson.weak import (bilinear, discretize, functional, functional_f3, functional_f4,
                              sample_beta)

from _util import make_case, random_beta_case, random_full, random_h0, unit


def test_triangles_tile_domain():
    g = Grid(0.0, 2.0, -1.0, 0.5, 6, 4)
    tri = triangulate(g)
    assert tri.size == 2 * 7 * 5
    assert np.sum(tri.area) == pytest.approx(3.0, rel=1e-13)
    assert np.allclose(tri.area, g.dx * g.dy / 2, rtol=1e-14)
    # lower triangle of cell (i, j) has vertices (i,j), (i+1,j), (i,j+1)
    assert tri.nodes[0].tolist() == [[0, 0], [1, 0], [0, 1]]
    assert tri.nodes[35].tolist() == [[1, 1], [0, 1], [1, 0]]


def test_arm_pairs_cover_cell_area():
    g = Grid.unit_square(5, 3)
    tri = triangulate(g)
    for axis in ("x", "y"):
        arms = tri.edge_arms(axis)
        n = (g.I + 1) * (g.J + 2) if axis == "x" else (g.I + 2) * (g.J + 1)
        area = np.bincount(arms, weights=tri.area, minlength=n)
        shape = (g.I + 1, g.J + 2) if axis == "x" else (g.I + 2, g.J + 1)
        area = area.reshape(shape)
        inner = area[:, 1:-1] if axis == "x" else area[1:-1, :]
        assert np.allclose(inner, g.dx * g.dy, rtol=1e-14)
        # every triangle is counted once per axis
        assert np.sum(area) == pytest.approx(g.area, rel=1e-13)


def test_extend_T_reproduces_constants_and_linears():
    g = Grid(0.0, 1.0, 0.0, 2.0, 4, 6)
    one = extend_T(restrict(lambda x, y: 1.0 + 0 * x, g))
    assert np.all(one.grad == 0)
    lin = extend_T(restrict(lambda x, y: x + 0 * y, g))
    assert np.allclose(lin.grad, [1.0, 0.0], rtol=0, atol=1e-13)
    aff = extend_T(restrict(lambda x, y: 2 - 3 * x + 0.5 * y, g))
    pts = np.random.default_rng(1).uniform(0, 1, (2, 50)) * [[1.0], [2.0]]
    assert np.allclose(aff.evaluate(*pts), 2 - 3 * pts[0] + 0.5 * pts[1], atol=1e-13)


def test_extend_T_hat_value_at_centroid():
    g = Grid.unit_square(3, 3)
    hat = extend_T(unit(g, 1, 1))
    cx, cy = (1 + 2 + 1) / 3 * g.dx, (1 + 1 + 2) / 3 * g.dy   # lower triangle of cell (1,1)
    assert hat.evaluate(cx, cy) == pytest.approx(1 / 3)


def test_extend_T_lower_gradient_and_continuity(rng):
    g = Grid(0.0, 1.5, 0.0, 1.0, 5, 4)
    w = random_full(g, rng)
    t = extend_T(w)
    n_low = (g.I + 1) * (g.J + 1)
    v = w.values
    gx = ((v[1:, :] - v[:-1, :]) / g.dx)[:, :-1].ravel()
    gy = ((v[:, 1:] - v[:, :-1]) / g.dy)[:-1, :].ravel()
    assert np.allclose(t.grad[:n_low, 0], gx, rtol=1e-13, atol=1e-13)
    assert np.allclose(t.grad[:n_low, 1], gy, rtol=1e-13, atol=1e-13)
    # affine reconstruction from each triangle's own gradient agrees on shared edges
    def from_gradient(k, px, py):
        x0, y0 = t.tri.vertices[k, 0]
        i0, j0 = t.tri.nodes[k, 0]
        return v[i0, j0] + t.grad[k, 0] * (px - x0) + t.grad[k, 1] * (py - y0)

    for i in range(g.I + 1):
        for j in range(g.J + 1):
            lo, up = i * (g.J + 1) + j, n_low + i * (g.J + 1) + j
            mx, my = (i + 0.5) * g.dx, (j + 0.5) * g.dy          # diagonal midpoint
            assert from_gradient(lo, mx, my) == pytest.approx(from_gradient(up, mx, my), abs=1e-13)
            if j < g.J:                                        # top edge vs next cell's bottom
                above = i * (g.J + 1) + j + 1
                mx, my = (i + 0.5) * g.dx, (j + 1) * g.dy
                assert from_gradient(up, mx, my) == pytest.approx(from_gradient(above, mx, my), abs=1e-13)


def test_extend_S_constant_and_strip():
    g = Grid.unit_square(1, 1)
    assert np.all(extend_S(HalfGridField.full(g, "x", 2.5)).values == 2.5)
    # x-arm values on the 2x2 cell layout: arm (i+1/2, j) holds 10*i + j
    vals = np.array([[0.0, 1.0, 2.0], [10.0, 11.0, 12.0]])
    s = extend_S(HalfGridField(g, "x", vals)).values
    lower = s[:4].reshape(2, 2)        # cell (i, j): bottom edge is arm (i+1/2, j)
    upper = s[4:].reshape(2, 2)        # cell (i, j): top edge is arm (i+1/2, j+1)
    assert lower.tolist() == [[0.0, 1.0], [10.0, 11.0]]
    assert upper.tolist() == [[1.0, 2.0], [11.0, 12.0]]
    vals = np.array([[0.0, 1.0], [10.0, 11.0], [20.0, 21.0]])
    s = extend_S(HalfGridField(g, "y", vals)).values
    assert s[:4].reshape(2, 2).tolist() == [[0.0, 1.0], [10.0, 11.0]]      # left edge (i, j+1/2)
    assert s[4:].reshape(2, 2).tolist() == [[10.0, 11.0], [20.0, 21.0]]    # right edge (i+1, j+1/2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.sampled_from(["x", "y"]), st.integers(0, 2 ** 31))
def test_extend_S_multiplicative(I, J, axis, seed):
    r = np.random.default_rng(seed)
    g = Grid.unit_square(I, J)
    shape = (I + 1, J + 2) if axis == "x" else (I + 2, J + 1)
    a = HalfGridField(g, axis, r.standard_normal(shape))
    b = HalfGridField(g, axis, r.standard_normal(shape))
    assert np.array_equal(extend_S(a * b).values, (extend_S(a) * extend_S(b)).values)


def test_integral_bilinear_examples(rng):
    g = Grid.unit_square(6, 6)
    coeff = sample_beta(make_case(), g)
    psi = random_h0(g, rng)
    assert integral_bilinear(GridFunction.zeros(g), psi, coeff.beta1, coeff.beta2) == 0.0
    t = extend_T(psi)
    grad_sq = np.sum(t.tri.area * np.sum(t.grad ** 2, axis=1))
    assert integral_bilinear(psi, psi, coeff.beta1, coeff.beta2) == pytest.approx(grad_sq, rel=1e-13)


@pytest.mark.parametrize("n", [8, 16])
def test_sum_integral_identities(n, rng):
    case = random_beta_case(rng)
    g = Grid.unit_square(n, n)
    disc = discretize(case, g)
    for _ in range(20):
        v, psi, a, b = random_h0(g, rng), random_h0(g, rng), random_full(g, rng), random_full(g, rng)
        c = disc.coeff
        assert integral_bilinear(v, psi, c.beta1, c.beta2) == pytest.approx(bilinear(v, psi, c), rel=1e-13)
        assert integral_f3(a, psi, c.beta1, c.beta2, disc.arms) == pytest.approx(
            functional_f3(a, psi, c, disc.arms), rel=1e-12, abs=1e-14)
        assert integral_f4(b, disc.levelset, psi, disc.arms) == pytest.approx(
            functional_f4(b, disc.levelset, psi, disc.arms), rel=1e-12, abs=1e-14)


def test_geometric_beta_samples_match_scheme(cases):
    for case in cases.values():
        g = Grid(*case.domain, 9, 7)
        c = sample_beta(case, g)
        assert np.array_equal(edge_midpoint_samples(g, case.beta, "x").values, c.beta1.values)
        assert np.array_equal(edge_midpoint_samples(g, case.beta, "y").values, c.beta2.values)


def test_rules_weights():
    for n in (1, 2, 5):
        for pts, w in (edge_midpoint_rule(n), centroid_rule(n)):
            assert np.sum(w) == pytest.approx(1.0)
            assert np.allclose(pts.sum(axis=1), 1.0)
            assert np.all(pts >= 0)


def test_quad_B_examples():
    g = Grid.unit_square(7, 7)
    tx = extend_T(restrict(lambda x, y: x + 0 * y, g))
    assert quad_B(tx, tx, lambda x, y: 1.0 + 0 * x) == pytest.approx(1.0, rel=1e-14)
    assert quad_B(tx, tx, lambda x, y: 1 + x * y) == pytest.approx(1.25, rel=1e-14)
    rng = np.random.default_rng(3)
    u, p = extend_T(random_h0(g, rng)), extend_T(random_h0(g, rng))
    exact = np.sum(u.tri.area * np.sum(u.grad * p.grad, axis=1))
    assert quad_B(u, p, lambda x, y: 1.0 + 0 * x) == pytest.approx(exact, rel=1e-13)


def test_quad_F_zero_data_and_hat():
    g = Grid.unit_square(5, 5)
    hat = extend_T(unit(g, 3, 2))
    assert quad_F(make_case(), hat) == 0.0
    assert quad_F(make_case(f=1.0), hat, refinement=2) == pytest.approx(g.dx * g.dy, rel=1e-13)


def _planar_b_case(s):
    return make_case(phi=lambda x, y: x - s, b=1.0,
                     phi_grad_fn=lambda x, y: (1.0 + 0 * x, 0 * y))


def _line_integral(field, s, n=4000):
    y = (np.arange(n) + 0.5) / n
    return np.mean(field.evaluate(np.full(n, s), y))


def test_quad_F_planar_line_integral_aligned():
    g = Grid.unit_square(4, 4)
    psi = extend_T(GridFunction.from_interior(g, np.random.default_rng(5).standard_normal((4, 4))))
    s = 0.4 + 32 / 64 * g.dx           # on a sub-triangle edge at refinement 64
    parts = quad_F_parts(_planar_b_case(s), psi, refinement=64)
    assert parts[3] == pytest.approx(_line_integral(psi, s), abs=1e-6)


def test_quad_F_planar_line_integral_converges():
    g = Grid.unit_square(4, 4)
    psi = extend_T(GridFunction.from_interior(g, np.random.default_rng(5).standard_normal((4, 4))))
    s = 0.4137
    exact = _line_integral(psi, s)
    errs = [abs(quad_F_parts(_planar_b_case(s), psi, refinement=r)[3] - exact) for r in (4, 16, 64)]
    assert errs[2] < errs[0] / 4 and errs[2] < 1e-3
    val, est = quad_F(_planar_b_case(s), psi, refinement=64, return_error=True)
    assert est > 0 and abs(val - exact) < 10 * est


def test_extension_bounds(cases, rng):
    g = Grid.unit_square(9, 9)
    A = cases["A"]
    coeff = sample_beta(A, g)
    r = check_extension_bounds(random_h0(g, rng), coeff, A)
    assert r.lower_ok and r.upper_ok and r.ratio == pytest.approx(1.0, rel=1e-13)
    zero = check_extension_bounds(GridFunction.zeros(g), coeff, A)
    assert zero.discrete == 0.0 and zero.continuous == 0.0 and zero.lower_ok and zero.upper_ok
    case = random_beta_case(rng)
    coeff = sample_beta(case, g)
    for _ in range(20):
        r = check_extension_bounds(random_h0(g, rng), coeff, case)
        assert r.lower_ok and r.upper_ok


def test_strong_approximation_examples():
    lin = check_strong_approximation(lambda x, y: 2 * x - y, (2, 3, 4),
                                     grad_fn=lambda x, y: (2.0 + 0 * x, -1.0 + 0 * y))
    assert max(lin.values) < 1e-12
    zero = check_strong_approximation(lambda x, y: 0 * x, 3)
    assert zero.values == [0.0, 0.0, 0.0]
    s = check_strong_approximation(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), (3, 4, 5))
    assert all(0.4 <= r <= 0.6 for r in s.ratios)


def test_strong_approximation_reaches_one_percent():
    s = check_strong_approximation(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
                                   range(2, 10),
                                   grad_fn=lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                                                         np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)))
    assert s.monotone and s.reduction < 1e-2


def test_weak_consistency_constant_beta_is_exact(cases):
    r = check_weak_consistency(cases["A"], levels=(2, 3, 4))
    assert max(r.bilinear.values) < 1e-13
    assert r.bilinear.tends_to_zero()


def test_weak_consistency_source_only():
    case = make_case(f=1.0)
    r = check_weak_consistency(case, levels=(2, 3, 4))
    # hat functions integrate to dx*dy, so the Riemann sum of F1 is exact for T psi
    assert max(r.functional.values) < 1e-13


def test_weak_consistency_rejects_empty_levels(cases):
    with pytest.raises(ValueError):
        check_weak_consistency(cases["A"], levels=())
    with pytest.raises(ValueError):
        check_strong_approximation(lambda x, y: x, 0)


def test_disc_to_cont_detects_offset(cases):
    g = Grid.unit_square(7, 7)
    clean = check_disc_to_cont(cases["C"], g, samples=10)
    bad = check_disc_to_cont(cases["C"], g, samples=10, beta_offset=0.25)
    assert clean.worst < 1e-13
    assert bad.bilinear > 1e-3 and bad.f3 > 1e-3


def test_functional_matches_quadrature_when_fine(cases):
    case = cases["C"]
    g = Grid(*case.domain, 63, 63)
    psi_fn = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    psi = GridFunction.from_interior(g, restrict(psi_fn, g).interior)
    disc = discretize(case, g)
    assert functional(disc, psi) == pytest.approx(quad_F(case, extend_T(psi), 8), rel=0.05)

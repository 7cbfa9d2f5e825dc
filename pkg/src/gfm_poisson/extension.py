"""Piecewise-linear and piecewise-constant extensions of grid data to a
triangulation, exact integral forms of the discrete sums, and quadrature of
the continuous bilinear form and load functional.

Every grid cell ``(i, j)``, ``i = 0..I``, ``j = 0..J``, is split into a lower
triangle ``{(i,j), (i+1,j), (i,j+1)}`` and an upper triangle
``{(i+1,j+1), (i,j+1), (i+1,j)}``.  Triangles are stored flat: all lower
triangles first (cell-major, ``j`` fastest), then all upper triangles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .cases import ProblemCase, fd_gradient
from .grid import Grid, GridFunction, HalfGridField, restrict
from .interface import ArmFractions, LevelSetData


@dataclass(frozen=True, eq=False)
class Triangulation:
    grid: Grid
    nodes: np.ndarray = field(repr=False)      # (T, 3, 2) integer node indices (i, j)
    vertices: np.ndarray = field(repr=False)   # (T, 3, 2) coordinates
    area: np.ndarray = field(repr=False)       # (T,)

    @property
    def size(self) -> int:
        return self.area.shape[0]

    def points(self, bary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates ``(T, P)`` of barycentric points ``bary`` (shape ``(P, 3)``)."""
        xy = np.einsum("pk,tkd->tpd", bary, self.vertices)
        return xy[..., 0], xy[..., 1]

    def edge_arms(self, axis: str) -> np.ndarray:
        """For each triangle, the flat index of the arm along its ``axis`` edge.

        Derived from the vertex indices; every triangle must own exactly one
        horizontal and one vertical edge.
        """
        return _edge_arms(self.grid, axis)


@lru_cache(maxsize=32)
def triangulate(grid: Grid) -> Triangulation:
    I, J = grid.I, grid.J
    ci, cj = np.meshgrid(np.arange(I + 1), np.arange(J + 1), indexing="ij")
    ci, cj = ci.ravel(), cj.ravel()
    lower = np.stack([np.stack([ci, cj], -1), np.stack([ci + 1, cj], -1),
                      np.stack([ci, cj + 1], -1)], axis=1)
    upper = np.stack([np.stack([ci + 1, cj + 1], -1), np.stack([ci, cj + 1], -1),
                      np.stack([ci + 1, cj], -1)], axis=1)
    nodes = np.concatenate([lower, upper])
    verts = np.empty(nodes.shape)
    verts[..., 0] = grid.x_w + nodes[..., 0] * grid.dx
    verts[..., 1] = grid.y_s + nodes[..., 1] * grid.dy
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    for arr in (nodes, verts, area):
        arr.flags.writeable = False
    return Triangulation(grid, nodes, verts, area)


@lru_cache(maxsize=64)
def _edge_arms(grid: Grid, axis: str) -> np.ndarray:
    tri = triangulate(grid)
    nodes = tri.nodes
    arm = np.full(tri.size, -1)
    hits = np.zeros(tri.size, dtype=int)
    for k0, k1 in ((0, 1), (1, 2), (2, 0)):
        p, q = nodes[:, k0], nodes[:, k1]
        di, dj = q[:, 0] - p[:, 0], q[:, 1] - p[:, 1]
        if axis == "x":
            sel = (dj == 0) & (np.abs(di) == 1)
            idx = np.minimum(p[:, 0], q[:, 0]) * (grid.J + 2) + p[:, 1]
        else:
            sel = (di == 0) & (np.abs(dj) == 1)
            idx = p[:, 0] * (grid.J + 1) + np.minimum(p[:, 1], q[:, 1])
        arm[sel] = idx[sel]
        hits += sel
    if np.any(hits != 1):
        raise RuntimeError(f"triangles without a unique {axis}-edge: "
                           f"{np.flatnonzero(hits != 1)[:5]}")
    arm.flags.writeable = False
    return arm


@dataclass(frozen=True, eq=False)
class PiecewiseLinearField:
    tri: Triangulation
    values: np.ndarray = field(repr=False)   # nodal, (I+2, J+2)
    grad: np.ndarray = field(repr=False)     # (T, 2)

    def at(self, bary: np.ndarray) -> np.ndarray:
        """Values ``(T, P)`` at barycentric points of every triangle."""
        nv = self.values[self.tri.nodes[..., 0], self.tri.nodes[..., 1]]   # (T, 3)
        return nv @ bary.T

    def evaluate(self, x, y) -> np.ndarray:
        g = self.tri.grid
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        s = (x - g.x_w) / g.dx
        t = (y - g.y_s) / g.dy
        i = np.clip(np.floor(s).astype(int), 0, g.I)
        j = np.clip(np.floor(t).astype(int), 0, g.J)
        s, t = s - i, t - j
        v = self.values
        low = s + t <= 1.0
        lower = v[i, j] + s * (v[i + 1, j] - v[i, j]) + t * (v[i, j + 1] - v[i, j])
        upper = (v[i + 1, j + 1] + (1 - s) * (v[i, j + 1] - v[i + 1, j + 1])
                 + (1 - t) * (v[i + 1, j] - v[i + 1, j + 1]))
        return np.where(low, lower, upper)


@dataclass(frozen=True, eq=False)
class PiecewiseConstantField:
    tri: Triangulation
    values: np.ndarray = field(repr=False)   # (T,)
    axis: str = "x"

    def __mul__(self, other: "PiecewiseConstantField") -> "PiecewiseConstantField":
        return PiecewiseConstantField(self.tri, self.values * other.values, self.axis)


def extend_T(w: GridFunction) -> PiecewiseLinearField:
    """Continuous piecewise-linear interpolant of nodal values."""
    tri = triangulate(w.grid)
    nv = w.values[tri.nodes[..., 0], tri.nodes[..., 1]]           # (T, 3)
    e = np.stack([tri.vertices[:, 1] - tri.vertices[:, 0],
                  tri.vertices[:, 2] - tri.vertices[:, 0]], axis=1)  # (T, 2, 2)
    dv = np.stack([nv[:, 1] - nv[:, 0], nv[:, 2] - nv[:, 0]], axis=1)
    grad = np.linalg.solve(e, dv[..., None])[..., 0]
    return PiecewiseLinearField(tri, w.values, grad)


def extend_S(f: HalfGridField) -> PiecewiseConstantField:
    """Assign each arm value to the triangles that have that arm as an edge."""
    tri = triangulate(f.grid)
    return PiecewiseConstantField(tri, f.values.ravel()[tri.edge_arms(f.axis)], f.axis)


def _zero_outer_rows(f: HalfGridField) -> HalfGridField:
    """Zero x-arms on rows ``j = 0, J+1`` (y-arms on columns ``i = 0, I+1``)."""
    v = np.array(f.values)
    if f.axis == "x":
        v[:, [0, -1]] = 0.0
    else:
        v[[0, -1], :] = 0.0
    return HalfGridField(f.grid, f.axis, v)


def integral_bilinear(v: GridFunction, psi: GridFunction,
                      beta_x: HalfGridField, beta_y: HalfGridField) -> float:
    tv, tp = extend_T(v), extend_T(psi)
    sx, sy = extend_S(beta_x), extend_S(beta_y)
    integrand = sx.values * tv.grad[:, 0] * tp.grad[:, 0] + sy.values * tv.grad[:, 1] * tp.grad[:, 1]
    return float(np.sum(integrand * tv.tri.area))


def integral_f3(a: GridFunction, psi: GridFunction, beta_x: HalfGridField,
                beta_y: HalfGridField, arms: ArmFractions) -> float:
    ta, tp = extend_T(a), extend_T(psi)
    kx = extend_S(beta_x) * extend_S(_zero_outer_rows(arms.chi1))
    ky = extend_S(beta_y) * extend_S(_zero_outer_rows(arms.chi2))
    integrand = kx.values * ta.grad[:, 0] * tp.grad[:, 0] + ky.values * ta.grad[:, 1] * tp.grad[:, 1]
    return float(-np.sum(integrand * ta.tri.area))


def integral_f4(b: GridFunction, ls: LevelSetData, psi: GridFunction,
                arms: ArmFractions) -> float:
    t1 = extend_T(b * ls.n1 * psi)
    t2 = extend_T(b * ls.n2 * psi)
    cx = extend_S(_zero_outer_rows(arms.chi1))
    cy = extend_S(_zero_outer_rows(arms.chi2))
    integrand = cx.values * t1.grad[:, 0] + cy.values * t2.grad[:, 1]
    return float(np.sum(integrand * t1.tri.area))


def edge_midpoint_samples(grid: Grid, fn: Callable, axis: str) -> HalfGridField:
    """Sample ``fn`` at the midpoint of each triangle edge along ``axis``.

    Computed from the triangulation geometry, independently of
    :func:`gfm_poisson.weak.sample_beta`.
    """
    tri = triangulate(grid)
    k = 1 if axis == "x" else 2   # lower triangles: edge v0-v1 horizontal, v0-v2 vertical
    n_low = (grid.I + 1) * (grid.J + 1)
    shape = (grid.I + 1, grid.J + 2) if axis == "x" else (grid.I + 2, grid.J + 1)
    out = np.full(shape[0] * shape[1], np.nan)
    arms = tri.edge_arms(axis)
    mid = 0.5 * (tri.vertices[:, 0] + tri.vertices[:, k])
    out[arms[:n_low]] = fn(mid[:n_low, 0], mid[:n_low, 1])
    # arms only reached from upper triangles (top row / right column)
    upper = tri.vertices[n_low:]
    k_up = 1 if axis == "x" else 2
    mid_up = 0.5 * (upper[:, 0] + upper[:, k_up])
    missing = np.isnan(out[arms[n_low:]])
    out[arms[n_low:][missing]] = fn(mid_up[missing, 0], mid_up[missing, 1])
    return HalfGridField(grid, axis, out.reshape(shape))


# ----------------------------------------------------------------------------
# continuous-side quadrature

@lru_cache(maxsize=16)
def _subtriangles(n: int) -> list[np.ndarray]:
    """Barycentric vertices (3, 3) of the ``n*n`` congruent sub-triangles."""
    subs = []
    for a in range(n):
        for b in range(n - a):
            p = lambda i, j: np.array([n - i - j, i, j], float) / n
            subs.append(np.stack([p(a, b), p(a + 1, b), p(a, b + 1)]))
            if a + b < n - 1:
                subs.append(np.stack([p(a + 1, b + 1), p(a, b + 1), p(a + 1, b)]))
    return subs


@lru_cache(maxsize=16)
def edge_midpoint_rule(n: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Composite 3-point edge-midpoint rule on ``n*n`` sub-triangles; weights sum to 1."""
    pts = []
    for s in _subtriangles(n):
        pts += [0.5 * (s[0] + s[1]), 0.5 * (s[1] + s[2]), 0.5 * (s[2] + s[0])]
    pts = np.array(pts)
    return pts, np.full(len(pts), 1.0 / len(pts))


@lru_cache(maxsize=16)
def centroid_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    pts = np.array([s.mean(axis=0) for s in _subtriangles(n)])
    return pts, np.full(len(pts), 1.0 / len(pts))


def quad_B(u: PiecewiseLinearField, psi: PiecewiseLinearField, beta: Callable,
           refinement: int = 1) -> float:
    """``int beta grad u . grad psi`` by the edge-midpoint rule (degree 2 exact)."""
    bary, w = edge_midpoint_rule(refinement)
    x, y = u.tri.points(bary)
    beta_avg = np.asarray(beta(x, y), float) @ w
    dots = np.sum(u.grad * psi.grad, axis=1)
    return float(np.sum(u.tri.area * beta_avg * dots))


def _divergence(fx: Callable, fy: Callable, x, y, step: float = 1e-5) -> np.ndarray:
    return ((fx(x + step, y) - fx(x - step, y)) + (fy(x, y + step) - fy(x, y - step))) / (2 * step)


def quad_F_parts(case: ProblemCase, psi: PiecewiseLinearField, refinement: int = 8) -> np.ndarray:
    """The four continuous functional pieces ``[F1, F2, F3, F4]`` applied to ``psi``.

    Composite centroid rule on ``refinement**2`` sub-triangles per cell; the
    inside indicator comes from the sign of the analytic level set at each
    quadrature point, never from the discrete characteristic function.
    """
    bary, w = centroid_rule(refinement)
    tri = psi.tri
    x, y = tri.points(bary)
    weight = tri.area[:, None] * w[None, :]
    pv = psi.at(bary)
    px, py = psi.grad[:, 0:1], psi.grad[:, 1:2]
    inside = case.inside(x, y)

    f1 = np.sum(weight * case.f(x, y) * pv)
    gx, gy = fd_gradient(case.g_fn, x, y)
    f2 = np.sum(weight * case.beta(x, y) * (gx * px + gy * py))
    ax, ay = fd_gradient(case.a_fn, x, y)
    f3 = -np.sum(weight * inside * case.beta(x, y) * (ax * px + ay * py))

    def bn1(xx, yy):
        return case.b_fn(xx, yy) * case.normal(xx, yy)[0]

    def bn2(xx, yy):
        return case.b_fn(xx, yy) * case.normal(xx, yy)[1]
    div_bn = _divergence(bn1, bn2, x, y)
    f4 = np.sum(weight * inside * (pv * div_bn + bn1(x, y) * px + bn2(x, y) * py))
    return np.array([f1, f2, f3, f4])


def quad_F(case: ProblemCase, psi: PiecewiseLinearField, refinement: int = 8,
           return_error: bool = False):
    """Continuous ``F(psi)``; with ``return_error`` also ``|Q(n) - Q(n/2)|``."""
    value = float(np.sum(quad_F_parts(case, psi, refinement)))
    if not return_error:
        return value
    coarse = float(np.sum(quad_F_parts(case, psi, max(1, refinement // 2))))
    return value, abs(value - coarse)


# ----------------------------------------------------------------------------
# structural-condition checks

class ExtensionBound(NamedTuple):
    lower_ok: bool
    upper_ok: bool
    ratio: float
    discrete: float
    continuous: float


def check_extension_bounds(psi: GridFunction, coeff, case: ProblemCase,
                           slack: float = 1e-6) -> ExtensionBound:
    """``m/M ||psi||_h^2 <= ||T psi||^2 <= M/m ||psi||_h^2`` with relative slack."""
    from .weak import bilinear

    disc = bilinear(psi, psi, coeff)
    tp = extend_T(psi)
    cont = quad_B(tp, tp, case.beta)
    lo, hi = case.m / case.M, case.M / case.m
    if disc == 0.0:
        return ExtensionBound(cont == 0.0, cont == 0.0, float("nan"), disc, cont)
    ratio = cont / disc
    return ExtensionBound(ratio >= lo * (1 - slack), ratio <= hi * (1 + slack),
                          ratio, disc, cont)


def level_grid(domain, level: int) -> Grid:
    """Grid with ``2**level`` cells per side."""
    n = 2 ** level
    return Grid(*domain, n - 1, n - 1)


def _levels(levels, first: int = 3) -> list[int]:
    if isinstance(levels, int):
        if levels < 1:
            raise ValueError("need at least one level")
        return list(range(first, first + levels))
    out = list(levels)
    if not out:
        raise ValueError("need at least one level")
    return out


class RefinementSequence(NamedTuple):
    levels: list
    values: list

    @property
    def ratios(self) -> list:
        return [b / a if a else float("nan") for a, b in zip(self.values, self.values[1:])]

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.values, self.values[1:]))

    @property
    def reduction(self) -> float:
        return self.values[-1] / self.values[0] if self.values[0] else 0.0

    def tends_to_zero(self, fraction: float = 0.1, floor: float = 1e-12) -> bool:
        """Monotone decrease ending below ``fraction`` of the start.

        A sequence that sits entirely below ``floor`` counts as converged:
        the quantity is zero up to roundoff and has nothing left to decrease.
        """
        if max(self.values) <= floor:
            return True
        return self.monotone and self.reduction < fraction


def gradient_error(psi_h: PiecewiseLinearField, grad_fn: Callable, refinement: int = 4) -> float:
    """``|| grad(T psi_h) - grad psi ||_{L2}`` by composite centroid quadrature."""
    bary, w = centroid_rule(refinement)
    x, y = psi_h.tri.points(bary)
    gx, gy = grad_fn(x, y)
    sq = (psi_h.grad[:, 0:1] - gx) ** 2 + (psi_h.grad[:, 1:2] - gy) ** 2
    return float(np.sqrt(np.sum(psi_h.tri.area * (sq @ w))))


def check_strong_approximation(psi_fn: Callable, levels=(3, 4, 5),
                               domain=(0.0, 1.0, 0.0, 1.0),
                               grad_fn: Optional[Callable] = None,
                               refinement: int = 4) -> RefinementSequence:
    """Gradient error of the interpolant of ``psi_fn`` on successive levels."""
    if grad_fn is None:
        grad_fn = lambda x, y: fd_gradient(psi_fn, x, y)
    lv = _levels(levels)
    errs = [gradient_error(extend_T(restrict(psi_fn, level_grid(domain, k))), grad_fn, refinement)
            for k in lv]
    return RefinementSequence(lv, errs)


class ConsistencyResult(NamedTuple):
    bilinear: RefinementSequence
    functional: RefinementSequence


def default_test_functions(domain):
    x_w, x_e, y_s, y_n = domain

    def psi_fn(x, y):
        return (np.sin(np.pi * (x - x_w) / (x_e - x_w))
                * np.sin(np.pi * (y - y_s) / (y_n - y_s)))

    def v_fn(x, y):
        s = (x - x_w) / (x_e - x_w)
        t = (y - y_s) / (y_n - y_s)
        return 16.0 * s * (1 - s) * t * (1 - t) * (1.0 + s * t)
    return psi_fn, v_fn


def check_weak_consistency(case: ProblemCase, psi_fn: Optional[Callable] = None,
                           levels=(4, 5, 6, 7), v_fn: Optional[Callable] = None,
                           refinement: int = 8) -> ConsistencyResult:
    """Deviations ``|B^h[v,psi] - B[Tv,T psi]|`` and ``|F^h(psi) - F(T psi)|`` per level.

    Both continuous quantities are integrated on the level's own
    triangulation with ``refinement**2`` sub-triangles per cell and the
    analytic coefficient and level set.
    """
    from .weak import bilinear, discretize, functional

    default_psi, default_v = default_test_functions(case.domain)
    psi_fn = psi_fn or default_psi
    v_fn = v_fn or default_v
    lv = _levels(levels, first=4)
    dev_b, dev_f = [], []
    for k in lv:
        grid = level_grid(case.domain, k)
        disc = discretize(case, grid)
        psi = restrict(psi_fn, grid)
        v = restrict(v_fn, grid)
        psi = GridFunction.from_interior(grid, psi.interior)
        v = GridFunction.from_interior(grid, v.interior)
        tp, tv = extend_T(psi), extend_T(v)
        dev_b.append(abs(bilinear(v, psi, disc.coeff) - quad_B(tv, tp, case.beta, refinement)))
        dev_f.append(abs(functional(disc, psi) - quad_F(case, tp, refinement)))
    return ConsistencyResult(RefinementSequence(lv, dev_b), RefinementSequence(lv, dev_f))


class IdentityResiduals(NamedTuple):
    bilinear: float
    f3: float
    f4: float

    @property
    def worst(self) -> float:
        return max(self)


def _relative(a: float, b: float, scale: float) -> float:
    return abs(a - b) / scale if scale > 0 else abs(a - b)


def check_disc_to_cont(case: ProblemCase, grid: Grid, samples: int = 200, seed: int = 0,
                       beta_offset: float = 0.5) -> IdentityResiduals:
    """Largest relative gap between each discrete sum and its exact integral form.

    The sums use the scheme's coefficient samples (taken at ``beta_offset``
    along each arm); the integrals use β sampled independently at the
    midpoints of the triangle edges.  Gaps are measured relative to the sum
    of absolute per-triangle contributions, so they sit at roundoff when the
    two agree and at O(1) otherwise.
    """
    from .weak import bilinear, discretize, functional_f3, functional_f4

    disc = discretize(case, grid, beta_offset=beta_offset)
    bx = edge_midpoint_samples(grid, case.beta, "x")
    by = edge_midpoint_samples(grid, case.beta, "y")
    tri = triangulate(grid)
    rng = np.random.default_rng(seed)
    worst = np.zeros(3)
    for _ in range(samples):
        v = GridFunction.from_interior(grid, rng.standard_normal((grid.I, grid.J)))
        psi = GridFunction.from_interior(grid, rng.standard_normal((grid.I, grid.J)))
        a = GridFunction(grid, rng.standard_normal(grid.shape))
        b = GridFunction(grid, rng.standard_normal(grid.shape))
        tv, tp, ta = extend_T(v), extend_T(psi), extend_T(a)
        sx, sy = extend_S(bx).values, extend_S(by).values
        scale_b = np.sum(tri.area * (np.abs(sx * tv.grad[:, 0] * tp.grad[:, 0])
                                     + np.abs(sy * tv.grad[:, 1] * tp.grad[:, 1])))
        scale_3 = np.sum(tri.area * (np.abs(sx * ta.grad[:, 0] * tp.grad[:, 0])
                                     + np.abs(sy * ta.grad[:, 1] * tp.grad[:, 1])))
        t1 = extend_T(b * disc.levelset.n1 * psi)
        t2 = extend_T(b * disc.levelset.n2 * psi)
        scale_4 = np.sum(tri.area * (np.abs(t1.grad[:, 0]) + np.abs(t2.grad[:, 1])))
        gaps = (
            _relative(bilinear(v, psi, disc.coeff), integral_bilinear(v, psi, bx, by), scale_b),
            _relative(functional_f3(a, psi, disc.coeff, disc.arms),
                      integral_f3(a, psi, bx, by, disc.arms), scale_3),
            _relative(functional_f4(b, disc.levelset, psi, disc.arms),
                      integral_f4(b, disc.levelset, psi, disc.arms), scale_4),
        )
        worst = np.maximum(worst, gaps)
    return IdentityResiduals(*map(float, worst))

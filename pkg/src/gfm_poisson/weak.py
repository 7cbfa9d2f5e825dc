"""Discrete weak formulation: the bilinear form, the four functional pieces and
the assembled symmetric positive-definite system.

Sign convention: the discrete problem is ``-B^h[v, psi] = F^h(psi)`` for all
test vectors; we store the positive matrix ``A`` of ``B^h`` and solve
``A v = -F``, i.e. ``rhs[k, l] = -F^h(e_kl)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cases import ProblemCase
from .grid import Grid, GridFunction, HalfGridField, diff_x, diff_y, restrict
from .interface import ArmFractions, LevelSetData, arm_fractions, levelset_from_values


class CoefficientBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientSamples:
    beta1: HalfGridField
    beta2: HalfGridField
    m: float
    M: float


def sample_beta(case: ProblemCase, grid: Grid, offset: float = 0.5) -> CoefficientSamples:
    """Point samples of the coefficient on x-arms and y-arms.

    ``offset`` places the sample along each arm (0.5 = midpoint); any other
    value is only useful for fault-injection tests.
    """
    bx = case.beta(*grid.arm_points("x", offset))
    by = case.beta(*grid.arm_points("y", offset))
    for name, vals in (("beta1", bx), ("beta2", by)):
        lo, hi = float(vals.min()), float(vals.max())
        if lo < case.m or hi > case.M:
            raise CoefficientBoundsError(
                f"{case.name}: {name} samples span [{lo:g}, {hi:g}] outside "
                f"[m, M] = [{case.m:g}, {case.M:g}]")
    return CoefficientSamples(HalfGridField(grid, "x", bx), HalfGridField(grid, "y", by),
                              case.m, case.M)


@dataclass(frozen=True)
class Discretization:
    """Everything the assemblers need, sampled on one grid."""

    grid: Grid
    coeff: CoefficientSamples
    levelset: LevelSetData
    arms: ArmFractions
    f: GridFunction
    a: GridFunction
    b: GridFunction
    g: GridFunction

    @property
    def boundary(self) -> GridFunction:
        """Dirichlet ring for ``u``: ``g - a*chi`` on the boundary, zero inside."""
        ring = (self.g - self.a * self.levelset.chi).values.copy()
        ring[1:-1, 1:-1] = 0.0
        return GridFunction(self.grid, ring)


def discretize(case: ProblemCase, grid: Grid, beta_offset: float = 0.5) -> Discretization:
    nodal = getattr(case.phi_fn, "nodal_on", None)
    phi_vals = nodal(grid) if nodal is not None else None
    phi = GridFunction(grid, phi_vals) if phi_vals is not None else restrict(case.phi_fn, grid)
    ls = levelset_from_values(phi)
    return Discretization(
        grid=grid,
        coeff=sample_beta(case, grid, beta_offset),
        levelset=ls,
        arms=arm_fractions(phi),
        f=restrict(case.f, grid),
        a=restrict(case.a_fn, grid),
        b=restrict(case.b_fn, grid),
        g=restrict(case.g_fn, grid),
    )


def _require_homogeneous(psi: GridFunction) -> None:
    if not psi.vanishes_on_boundary():
        raise ValueError("test function must vanish on the boundary ring")


def _x_rows(field_: HalfGridField) -> np.ndarray:
    # x-arms i = 0..I on rows j = 1..J
    return field_.values[:, 1:-1]


def _y_cols(field_: HalfGridField) -> np.ndarray:
    # y-arms j = 0..J on columns i = 1..I
    return field_.values[1:-1, :]


def bilinear(v: GridFunction, psi: GridFunction, coeff: CoefficientSamples) -> float:
    _require_homogeneous(psi)
    g = v.grid
    sx = np.sum(_x_rows(coeff.beta1) * _x_rows(diff_x(v)) * _x_rows(diff_x(psi)))
    sy = np.sum(_y_cols(coeff.beta2) * _y_cols(diff_y(v)) * _y_cols(diff_y(psi)))
    return float((sx + sy) * g.dx * g.dy)


def discrete_norm(psi: GridFunction, coeff: CoefficientSamples) -> float:
    return float(np.sqrt(bilinear(psi, psi, coeff)))


def functional_f1(f: GridFunction, psi: GridFunction) -> float:
    g = f.grid
    return float(np.sum(f.interior * psi.interior) * g.dx * g.dy)


def functional_f2(g: GridFunction, psi: GridFunction, coeff: CoefficientSamples) -> float:
    return bilinear(g, psi, coeff)


def functional_f3(a: GridFunction, psi: GridFunction, coeff: CoefficientSamples,
                  arms: ArmFractions) -> float:
    _require_homogeneous(psi)
    g = a.grid
    sx = np.sum(_x_rows(coeff.beta1) * _x_rows(diff_x(a)) * _x_rows(diff_x(psi))
                * _x_rows(arms.chi1))
    sy = np.sum(_y_cols(coeff.beta2) * _y_cols(diff_y(a)) * _y_cols(diff_y(psi))
                * _y_cols(arms.chi2))
    return float(-(sx + sy) * g.dx * g.dy)


def functional_f4(b: GridFunction, ls: LevelSetData, psi: GridFunction,
                  arms: ArmFractions) -> float:
    _require_homogeneous(psi)
    g = b.grid
    # b n psi is zero on the boundary ring because psi is
    p1 = b * ls.n1 * psi
    p2 = b * ls.n2 * psi
    sx = np.sum(_x_rows(diff_x(p1)) * _x_rows(arms.chi1))
    sy = np.sum(_y_cols(diff_y(p2)) * _y_cols(arms.chi2))
    return float((sx + sy) * g.dx * g.dy)


def functional(disc: Discretization, psi: GridFunction) -> float:
    """``F^h = F^h_1 + F^h_2 + F^h_3 + F^h_4``."""
    return (functional_f1(disc.f, psi)
            + functional_f2(disc.g, psi, disc.coeff)
            + functional_f3(disc.a, psi, disc.coeff, disc.arms)
            + functional_f4(disc.b, disc.levelset, psi, disc.arms))


# ----------------------------------------------------------------------------
# five-point systems

@dataclass(frozen=True, eq=False)
class FivePointSystem:
    """Symmetric 5-point operator over the ``I x J`` interior nodes.

    ``west[i, j]`` couples node ``(i, j)`` to ``(i-1, j)`` (interior indices);
    couplings to boundary nodes are zero and live in the right-hand side.
    ``boundary`` is the ring the solution takes outside the unknowns.
    """

    grid: Grid
    diag: np.ndarray = field(repr=False)
    west: np.ndarray = field(repr=False)
    east: np.ndarray = field(repr=False)
    south: np.ndarray = field(repr=False)
    north: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    boundary: GridFunction = field(repr=False)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        from ._backend import matvec5
        return matvec5(self.diag, self.west, self.east, self.south, self.north,
                       np.ascontiguousarray(x, dtype=float))

    def quadratic(self, x: np.ndarray) -> float:
        return float(np.sum(x * self.matvec(x)))

    def to_csr(self) -> sp.csr_matrix:
        I, J = self.grid.I, self.grid.J
        idx = np.arange(I * J).reshape(I, J)
        rows = [idx.ravel()]
        cols = [idx.ravel()]
        vals = [self.diag.ravel()]
        for coef, src, dst in (
                (self.west[1:, :], idx[1:, :], idx[:-1, :]),
                (self.east[:-1, :], idx[:-1, :], idx[1:, :]),
                (self.south[:, 1:], idx[:, 1:], idx[:, :-1]),
                (self.north[:, :-1], idx[:, :-1], idx[:, 1:])):
            rows.append(src.ravel())
            cols.append(dst.ravel())
            vals.append(coef.ravel())
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(I * J, I * J))

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def residual(self, u: GridFunction) -> np.ndarray:
        return self.rhs - self.matvec(u.interior)


@dataclass(frozen=True, eq=False)
class SparseSpdSystem(FivePointSystem):
    pass


def five_point(wx: np.ndarray, wy: np.ndarray):
    """Diagonal and neighbour arrays from arm weights.

    ``wx`` has shape ``(I+1, J)`` (x-arms on interior rows), ``wy`` has shape
    ``(I, J+1)``.  Each arm adds its weight to the diagonal of both interior
    endpoints and subtracts it from their mutual coupling.
    """
    diag = wx[:-1, :] + wx[1:, :] + wy[:, :-1] + wy[:, 1:]
    east = -wx[1:, :].copy()
    east[-1, :] = 0.0
    west = np.zeros_like(east)
    west[1:, :] = east[:-1, :]
    north = -wy[:, 1:].copy()
    north[:, -1] = 0.0
    south = np.zeros_like(north)
    south[:, 1:] = north[:, :-1]
    return diag, west, east, south, north


def _scatter_x(alpha: np.ndarray, grid: Grid) -> np.ndarray:
    """``F(e_kl)`` for ``F(psi) = sum_x-arms alpha * (grad_x psi) dx dy``."""
    return grid.dy * (alpha[:-1, :] - alpha[1:, :])


def _scatter_y(alpha: np.ndarray, grid: Grid) -> np.ndarray:
    return grid.dx * (alpha[:, :-1] - alpha[:, 1:])


def weak_matrix(coeff: CoefficientSamples):
    g = coeff.beta1.grid
    wx = _x_rows(coeff.beta1) * (g.dy / g.dx)
    wy = _y_cols(coeff.beta2) * (g.dx / g.dy)
    return five_point(wx, wy)


def weak_load(disc: Discretization) -> np.ndarray:
    """``F^h(e_kl)`` at every interior node, distributed arm by arm."""
    grid, c, arms = disc.grid, disc.coeff, disc.arms
    b1, b2 = _x_rows(c.beta1), _y_cols(c.beta2)
    chi1, chi2 = _x_rows(arms.chi1), _y_cols(arms.chi2)

    load = disc.f.interior * (grid.dx * grid.dy)
    # F2 = B^h[g, .]
    load = load + _scatter_x(b1 * _x_rows(diff_x(disc.g)), grid)
    load = load + _scatter_y(b2 * _y_cols(diff_y(disc.g)), grid)
    # F3
    load = load - _scatter_x(b1 * _x_rows(diff_x(disc.a)) * chi1, grid)
    load = load - _scatter_y(b2 * _y_cols(diff_y(disc.a)) * chi2, grid)
    # F4: node (k,l) collects (b n) at itself times the chi-weighted arm difference
    bn1 = (disc.b * disc.levelset.n1).interior
    bn2 = (disc.b * disc.levelset.n2).interior
    load = load + bn1 * _scatter_x(chi1, grid) + bn2 * _scatter_y(chi2, grid)
    return load


def weak_system(disc: Discretization) -> SparseSpdSystem:
    diag, west, east, south, north = weak_matrix(disc.coeff)
    return SparseSpdSystem(disc.grid, diag, west, east, south, north,
                           -weak_load(disc), GridFunction.zeros(disc.grid))


def assemble_weak_system(case: ProblemCase, grid: Grid) -> SparseSpdSystem:
    return weak_system(discretize(case, grid))

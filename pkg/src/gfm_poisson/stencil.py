"""The Ghost-Fluid finite-difference scheme, assembled pointwise.

At every interior node

    D_x(beta1 D_x u) + D_y(beta2 D_y u)
        = -D_x(beta1 a1 D_x chi) - D_y(beta2 a2 D_y chi)
          - b [n1 D_x chi1 + n2 D_y chi2] + f,

where ``D`` applied to an arm field is the backward difference to nodes.
The stored system is in PDE units with the sign flipped so the matrix is
positive definite: ``S u = r`` with ``S = -(D_x beta1 D_x + D_y beta2 D_y)``.
Hence ``A_weak = dx*dy * S``.  Boundary neighbours are moved to ``r`` as
``lift = sum beta/d^2 * u_boundary``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cases import ProblemCase
from .grid import Grid, GridFunction, HalfGridField, arm_divergence, diff_x, diff_y
from .interface import ArmFractions
from .weak import Discretization, FivePointSystem, discretize, five_point


@dataclass(frozen=True, eq=False)
class StencilSystem(FivePointSystem):
    lift: np.ndarray = field(default=None, repr=False)


def ghost_values(a: GridFunction, arms: ArmFractions) -> tuple[HalfGridField, HalfGridField]:
    """Arm values ``a1``, ``a2`` from the discrete product rule.

    The weights are reversed relative to ``chi1``: ``a1 = a_{i+1}(1-theta) + a_i theta``.
    """
    v = a.values
    tx, ty = arms.theta_x.values, arms.theta_y.values
    a1 = v[1:, :] * (1.0 - tx) + v[:-1, :] * tx
    a2 = v[:, 1:] * (1.0 - ty) + v[:, :-1] * ty
    return HalfGridField(a.grid, "x", a1), HalfGridField(a.grid, "y", a2)


def discrete_product_rule_check(a: GridFunction, arms: ArmFractions, chi: GridFunction) -> float:
    """Largest residual of ``D(a chi) = (D a) chi^alpha + a^alpha (D chi)`` over all arms."""
    a1, a2 = ghost_values(a, arms)
    ac = a * chi
    rx = diff_x(ac).values - (diff_x(a).values * arms.chi1.values
                              + a1.values * diff_x(chi).values)
    ry = diff_y(ac).values - (diff_y(a).values * arms.chi2.values
                              + a2.values * diff_y(chi).values)
    return float(max(np.max(np.abs(rx)), np.max(np.abs(ry))))


def reconstruct_u(v: GridFunction, g: GridFunction, a: GridFunction,
                  chi: GridFunction) -> GridFunction:
    return v + g - a * chi


def jump_terms(disc: Discretization) -> np.ndarray:
    """The three interface corrections at interior nodes (right-hand side minus ``f``)."""
    c, arms, ls = disc.coeff, disc.arms, disc.levelset
    a1, a2 = ghost_values(disc.a, arms)
    # raw 0/1 chi on arms versus fractional chi1/chi2 at nodes: distinct objects
    flux_x = HalfGridField(disc.grid, "x", c.beta1.values * a1.values * diff_x(ls.chi).values)
    flux_y = HalfGridField(disc.grid, "y", c.beta2.values * a2.values * diff_y(ls.chi).values)
    jump_a = -arm_divergence(flux_x) - arm_divergence(flux_y)
    jump_b = -disc.b.interior * (ls.n1.interior * arm_divergence(arms.chi1)
                                 + ls.n2.interior * arm_divergence(arms.chi2))
    return jump_a + jump_b


def dirichlet_lift(coeff, boundary: GridFunction) -> np.ndarray:
    g = boundary.grid
    u = boundary.values
    cx = coeff.beta1.values[:, 1:-1] / g.dx ** 2
    cy = coeff.beta2.values[1:-1, :] / g.dy ** 2
    lift = np.zeros((g.I, g.J))
    lift[0, :] += cx[0, :] * u[0, 1:-1]
    lift[-1, :] += cx[-1, :] * u[-1, 1:-1]
    lift[:, 0] += cy[:, 0] * u[1:-1, 0]
    lift[:, -1] += cy[:, -1] * u[1:-1, -1]
    return lift


def stencil_system(disc: Discretization) -> StencilSystem:
    g = disc.grid
    c = disc.coeff
    wx = c.beta1.values[:, 1:-1] / g.dx ** 2
    wy = c.beta2.values[1:-1, :] / g.dy ** 2
    diag, west, east, south, north = five_point(wx, wy)
    boundary = disc.boundary
    lift = dirichlet_lift(c, boundary)
    rhs = -(jump_terms(disc) + disc.f.interior) + lift
    return StencilSystem(g, diag, west, east, south, north, rhs, boundary, lift)


def assemble_stencil_system(case: ProblemCase, grid: Grid) -> StencilSystem:
    return stencil_system(discretize(case, grid))


def pde_residual(disc: Discretization, u: GridFunction) -> np.ndarray:
    """Pointwise scheme residual ``L u - RHS`` at interior nodes, PDE units."""
    c = disc.coeff
    lu = (arm_divergence(HalfGridField(u.grid, "x", c.beta1.values * diff_x(u).values))
          + arm_divergence(HalfGridField(u.grid, "y", c.beta2.values * diff_y(u).values)))
    return lu - (jump_terms(disc) + disc.f.interior)

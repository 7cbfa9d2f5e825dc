"""Level-set sampling, the discrete characteristic function and arm fractions."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Grid, GridFunction, HalfGridField, restrict

log = logging.getLogger(__name__)

DEGENERATE_GRADIENT = 1e-12


@dataclass(frozen=True)
class LevelSetData:
    phi: GridFunction
    chi: GridFunction
    n1: GridFunction
    n2: GridFunction
    degenerate: int = 0

    @property
    def grid(self) -> Grid:
        return self.phi.grid


@dataclass(frozen=True)
class ArmFractions:
    theta_x: HalfGridField
    chi1: HalfGridField
    theta_y: HalfGridField
    chi2: HalfGridField


def characteristic(phi: GridFunction) -> GridFunction:
    """1 where ``phi <= 0`` (nodes on the interface count as inside), else 0."""
    return GridFunction(phi.grid, (phi.values <= 0.0).astype(float))


def levelset_from_values(phi: GridFunction) -> LevelSetData:
    """Characteristic function and central-difference unit normals from nodal phi."""
    g = phi.grid
    p = phi.values
    px = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * g.dx)
    py = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * g.dy)
    norm = np.hypot(px, py)
    ok = norm >= DEGENERATE_GRADIENT
    safe = np.where(ok, norm, 1.0)
    n1 = np.zeros(g.shape)
    n2 = np.zeros(g.shape)
    n1[1:-1, 1:-1] = np.where(ok, px / safe, 0.0)
    n2[1:-1, 1:-1] = np.where(ok, py / safe, 0.0)
    degenerate = int(np.count_nonzero(~ok))
    if degenerate:
        log.warning("%d interior node(s) with degenerate level-set gradient; "
                    "normals set to zero there", degenerate)
    return LevelSetData(phi, characteristic(phi), GridFunction(g, n1),
                        GridFunction(g, n2), degenerate)


def build_levelset(phi_fn: Callable, grid: Grid) -> LevelSetData:
    return levelset_from_values(restrict(phi_fn, grid))


def _theta(p_left: np.ndarray, p_right: np.ndarray) -> np.ndarray:
    den = np.abs(p_left) + np.abs(p_right)
    return np.where(den > 0.0, np.abs(p_right) / np.where(den > 0.0, den, 1.0), 0.0)


def arm_fractions(phi: GridFunction) -> ArmFractions:
    """Weights ``theta`` and the inside fractions ``chi1`` / ``chi2`` of every arm."""
    g = phi.grid
    p = phi.values
    c = (p <= 0.0).astype(float)
    tx = _theta(p[:-1, :], p[1:, :])
    ty = _theta(p[:, :-1], p[:, 1:])
    chi1 = c[:-1, :] * (1.0 - tx) + c[1:, :] * tx
    chi2 = c[:, :-1] * (1.0 - ty) + c[:, 1:] * ty
    return ArmFractions(HalfGridField(g, "x", tx), HalfGridField(g, "x", chi1),
                        HalfGridField(g, "y", ty), HalfGridField(g, "y", chi2))

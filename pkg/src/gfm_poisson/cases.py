"""Problem definitions: level set, two-sided coefficient, jump data and exact solutions.

All callables take broadcastable ``(x, y)`` arrays and are vectorised.

Boundary convention: the Dirichlet ring imposed on ``u`` is ``g - a*chi``, where
``chi`` marks the inside of the interface.  This equals ``g`` whenever ``a``
vanishes on the boundary and keeps the substitution ``v = u - g + a*chi``
homogeneous on the boundary for interfaces that cut the boundary (case B).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .grid import Grid

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CaseConsistencyError(ValueError):
    """A problem case whose data contradict its exact solution or its bounds."""


def _shape(x, y):
    return np.broadcast(np.asarray(x, dtype=float), np.asarray(y, dtype=float)).shape


def constant(c: float) -> Fn:
    return lambda x, y: np.full(_shape(x, y), float(c))


def smooth_cutoff(phi_fn: Fn, inner: float, outer: float) -> Fn:
    """C2 band function: 1 for ``|phi| <= inner``, 0 for ``|phi| >= outer``."""
    def w(x, y):
        t = np.clip((np.abs(phi_fn(x, y)) - inner) / (outer - inner), 0.0, 1.0)
        return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    return w


@dataclass(frozen=True)
class Branch:
    """A smooth function with its gradient and Laplacian."""

    value: Fn
    grad: Callable
    laplacian: Fn


U_FAMILIES: dict[str, Branch] = {
    "zero": Branch(constant(0.0), lambda x, y: (constant(0.0)(x, y),) * 2, constant(0.0)),
    "one": Branch(constant(1.0), lambda x, y: (constant(0.0)(x, y),) * 2, constant(0.0)),
    "linear": Branch(lambda x, y: x + y,
                     lambda x, y: (constant(1.0)(x, y), constant(1.0)(x, y)),
                     constant(0.0)),
    "quadratic": Branch(lambda x, y: x ** 2 + y ** 2,
                        lambda x, y: (2.0 * x + 0.0 * y, 2.0 * y + 0.0 * x),
                        constant(4.0)),
    "sincos": Branch(lambda x, y: np.sin(x) * np.cos(y),
                     lambda x, y: (np.cos(x) * np.cos(y), -np.sin(x) * np.sin(y)),
                     lambda x, y: -2.0 * np.sin(x) * np.cos(y)),
    "sinsin": Branch(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
                     lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                                   np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)),
                     lambda x, y: -2.0 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y)),
}


def circle_levelset(cx: float, cy: float, r: float) -> tuple[Fn, Callable]:
    def phi(x, y):
        return np.hypot(x - cx, y - cy) - r

    def grad(x, y):
        d = np.hypot(x - cx, y - cy)
        d = np.where(d > 0.0, d, 1.0)
        return (x - cx) / d, (y - cy) / d
    return phi, grad


def plane_levelset(nx: float, ny: float, c: float) -> tuple[Fn, Callable]:
    s = float(np.hypot(nx, ny))
    if s == 0.0:
        raise ValueError("plane normal must be nonzero")
    nx, ny, c = nx / s, ny / s, c / s
    return (lambda x, y: nx * x + ny * y - c,
            lambda x, y: (constant(nx)(x, y), constant(ny)(x, y)))


@dataclass(frozen=True)
class NodalLevelSet:
    """Level set given by nodal values; evaluates by bilinear interpolation."""

    grid: Grid
    values: np.ndarray

    def __call__(self, x, y):
        g = self.grid
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        s = np.clip((x - g.x_w) / g.dx, 0.0, g.I + 1)
        t = np.clip((y - g.y_s) / g.dy, 0.0, g.J + 1)
        i = np.minimum(np.floor(s).astype(int), g.I)
        j = np.minimum(np.floor(t).astype(int), g.J)
        s -= i
        t -= j
        v = self.values
        return ((1 - s) * (1 - t) * v[i, j] + s * (1 - t) * v[i + 1, j]
                + (1 - s) * t * v[i, j + 1] + s * t * v[i + 1, j + 1])

    def nodal_on(self, grid: Grid) -> Optional[np.ndarray]:
        return self.values if grid == self.grid else None


@dataclass(frozen=True)
class ProblemCase:
    name: str
    domain: tuple[float, float, float, float]
    phi_fn: Fn
    beta_minus_fn: Fn
    beta_plus_fn: Fn
    m: float
    M: float
    f_minus_fn: Fn
    f_plus_fn: Fn
    a_fn: Fn
    b_fn: Fn
    g_fn: Fn
    u_minus_fn: Optional[Fn] = None
    u_plus_fn: Optional[Fn] = None
    phi_grad_fn: Optional[Callable] = None
    grad_u_minus_fn: Optional[Callable] = None
    grad_u_plus_fn: Optional[Callable] = None
    closed_interface: bool = True

    def grid(self, I: int, J: Optional[int] = None) -> Grid:
        return Grid(*self.domain, I, I if J is None else J)

    def inside(self, x, y) -> np.ndarray:
        return self.phi_fn(x, y) <= 0.0

    def _pick(self, minus: Fn, plus: Fn, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.where(self.inside(x, y), minus(x, y), plus(x, y))

    def beta(self, x, y) -> np.ndarray:
        return self._pick(self.beta_minus_fn, self.beta_plus_fn, x, y)

    def f(self, x, y) -> np.ndarray:
        return self._pick(self.f_minus_fn, self.f_plus_fn, x, y)

    @property
    def has_exact(self) -> bool:
        return self.u_minus_fn is not None and self.u_plus_fn is not None

    def u_exact(self, x, y) -> np.ndarray:
        if not self.has_exact:
            raise ValueError(f"case {self.name!r} has no exact solution")
        return self._pick(self.u_minus_fn, self.u_plus_fn, x, y)

    def boundary_value(self, x, y) -> np.ndarray:
        """Dirichlet data actually imposed on ``u``: ``g - a*chi``."""
        return self.g_fn(x, y) - self.a_fn(x, y) * self.inside(x, y)

    def normal(self, x, y):
        if self.phi_grad_fn is not None:
            gx, gy = self.phi_grad_fn(x, y)
        else:
            gx, gy = fd_gradient(self.phi_fn, x, y)
        s = np.hypot(gx, gy)
        s = np.where(s > 0.0, s, 1.0)
        return gx / s, gy / s


def fd_gradient(fn: Fn, x, y, step: float = 1e-5):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return ((fn(x + step, y) - fn(x - step, y)) / (2 * step),
            (fn(x, y + step) - fn(x, y - step)) / (2 * step))


def manufactured_case(name: str, domain, phi: tuple[Fn, Optional[Callable]],
                      beta_minus: float, beta_plus: float,
                      u_minus: Branch, u_plus: Branch, *,
                      band: Optional[tuple[float, float]] = None,
                      bubble: float = 0.0, closed_interface: bool = True) -> ProblemCase:
    """Case with piecewise-constant coefficient and exact branches ``u_minus``/``u_plus``.

    ``a`` and ``b`` are the exact jumps extended off the interface and
    multiplied by a band cutoff in ``|phi|`` so they vanish near the boundary
    (and near the centre of a circle, where the normal is singular).  ``g`` is
    ``u_plus`` minus ``bubble * sin(pi x~) sin(pi y~)`` on the rescaled domain,
    which keeps ``g = u`` on the boundary while giving the homogeneous unknown
    ``v`` a nonzero profile.
    """
    phi_fn, phi_grad = phi
    if phi_grad is None:
        phi_grad = lambda x, y: fd_gradient(phi_fn, x, y)
    x_w, x_e, y_s, y_n = domain
    bm, bp = float(beta_minus), float(beta_plus)
    w = smooth_cutoff(phi_fn, *band) if band is not None else constant(1.0)

    def normal(x, y):
        gx, gy = phi_grad(x, y)
        s = np.hypot(gx, gy)
        s = np.where(s > 0.0, s, 1.0)
        return gx / s, gy / s

    def a_fn(x, y):
        return (u_plus.value(x, y) - u_minus.value(x, y)) * w(x, y)

    def b_fn(x, y):
        n1, n2 = normal(x, y)
        gpx, gpy = u_plus.grad(x, y)
        gmx, gmy = u_minus.grad(x, y)
        return ((bp * gpx - bm * gmx) * n1 + (bp * gpy - bm * gmy) * n2) * w(x, y)

    def bubble_fn(x, y):
        return (np.sin(np.pi * (x - x_w) / (x_e - x_w))
                * np.sin(np.pi * (y - y_s) / (y_n - y_s)))

    def g_fn(x, y):
        return u_plus.value(x, y) - bubble * bubble_fn(x, y)

    return ProblemCase(
        name=name, domain=tuple(map(float, domain)), phi_fn=phi_fn,
        beta_minus_fn=constant(bm), beta_plus_fn=constant(bp),
        m=min(bm, bp), M=max(bm, bp),
        f_minus_fn=lambda x, y: bm * u_minus.laplacian(x, y),
        f_plus_fn=lambda x, y: bp * u_plus.laplacian(x, y),
        a_fn=a_fn, b_fn=b_fn, g_fn=g_fn,
        u_minus_fn=u_minus.value, u_plus_fn=u_plus.value,
        phi_grad_fn=phi_grad,
        grad_u_minus_fn=u_minus.grad, grad_u_plus_fn=u_plus.grad,
        closed_interface=closed_interface,
    )


def case_smooth() -> ProblemCase:
    """A: no interface, unit coefficient, ``u = sin(pi x) sin(pi y)``."""
    u = U_FAMILIES["sinsin"]
    zero = constant(0.0)
    return ProblemCase(
        name="smooth", domain=(0.0, 1.0, 0.0, 1.0),
        phi_fn=constant(1.0), beta_minus_fn=constant(1.0), beta_plus_fn=constant(1.0),
        m=1.0, M=1.0, f_minus_fn=u.laplacian, f_plus_fn=u.laplacian,
        a_fn=zero, b_fn=zero, g_fn=zero,
        u_minus_fn=u.value, u_plus_fn=u.value,
        phi_grad_fn=lambda x, y: (zero(x, y), zero(x, y)),
        grad_u_minus_fn=u.grad, grad_u_plus_fn=u.grad,
        closed_interface=True,
    )


def case_planar(s: float = 0.613, beta_minus: float = 2.0, beta_plus: float = 1.0,
                jump: float = 0.5, flux_jump: float = 1.0) -> ProblemCase:
    """B: vertical interface ``x = s``; 1D two-material solution with ``(beta u')' = 1``.

    Branches ``u- = x^2/(2 beta-) + c1 x`` and ``u+ = x^2/(2 beta+) + d1 x + d0``
    with ``u-(0) = 0``, ``u+(1) = 1``, ``[u] = jump`` and ``[beta u'] = flux_jump``
    at ``x = s``.
    """
    bm, bp = beta_minus, beta_plus
    # unknowns (c1, d1, d0)
    mat = np.array([[0.0, 1.0, 1.0],
                    [-s, s, 1.0],
                    [-bm, bp, 0.0]])
    rhs = np.array([1.0 - 1.0 / (2 * bp),
                    jump - s * s / (2 * bp) + s * s / (2 * bm),
                    flux_jump])
    c1, d1, d0 = np.linalg.solve(mat, rhs)

    um = Branch(lambda x, y: x ** 2 / (2 * bm) + c1 * x + 0.0 * y,
                lambda x, y: (x / bm + c1 + 0.0 * y, constant(0.0)(x, y)),
                constant(1.0 / bm))
    up = Branch(lambda x, y: x ** 2 / (2 * bp) + d1 * x + d0 + 0.0 * y,
                lambda x, y: (x / bp + d1 + 0.0 * y, constant(0.0)(x, y)),
                constant(1.0 / bp))
    case = manufactured_case("planar", (0.0, 1.0, 0.0, 1.0), plane_levelset(1.0, 0.0, s),
                             bm, bp, um, up, band=None, bubble=1.0,
                             closed_interface=False)
    return case


def case_circle(beta_minus: float = 10.0, beta_plus: float = 1.0,
                name: str = "circle") -> ProblemCase:
    """C: circle of radius 1/4 about the centre, ``u- = x^2 + y^2``, ``u+ = sin x cos y``."""
    return manufactured_case(name, (0.0, 1.0, 0.0, 1.0), circle_levelset(0.5, 0.5, 0.25),
                             beta_minus, beta_plus,
                             U_FAMILIES["quadratic"], U_FAMILIES["sincos"],
                             band=(0.1, 0.2), bubble=1.0)


def case_contrast() -> ProblemCase:
    """D: case C with coefficient contrast 1000."""
    return case_circle(beta_minus=1000.0, beta_plus=1.0, name="contrast")


def interface_points(case: ProblemCase, n: int = 400, seed: int = 0) -> np.ndarray:
    """Points on the zero level set, found by Newton projection of random samples."""
    rng = np.random.default_rng(seed)
    x_w, x_e, y_s, y_n = case.domain
    x = rng.uniform(x_w, x_e, n)
    y = rng.uniform(y_s, y_n, n)
    for _ in range(50):
        p = case.phi_fn(x, y)
        gx, gy = (case.phi_grad_fn or (lambda a, b: fd_gradient(case.phi_fn, a, b)))(x, y)
        s = gx ** 2 + gy ** 2
        s = np.where(s > 0.0, s, np.inf)
        x = x - p * gx / s
        y = y - p * gy / s
    keep = ((np.abs(case.phi_fn(x, y)) < 1e-13)
            & (x > x_w) & (x < x_e) & (y > y_s) & (y < y_n))
    return np.stack([x[keep], y[keep]])


def check_case(case: ProblemCase, coarsest_h: float = 1.0 / 17, tol: float = 1e-10) -> None:
    """Raise :class:`CaseConsistencyError` if the data contradict the exact branches."""
    x_w, x_e, y_s, y_n = case.domain
    t = np.linspace(0.0, 1.0, 101)
    bx = np.concatenate([x_w + t * (x_e - x_w), x_w + t * (x_e - x_w),
                         np.full_like(t, x_w), np.full_like(t, x_e)])
    by = np.concatenate([np.full_like(t, y_s), np.full_like(t, y_n),
                         y_s + t * (y_n - y_s), y_s + t * (y_n - y_s)])
    beta_b = case.beta(bx, by)
    if np.any(beta_b < case.m) or np.any(beta_b > case.M):
        raise CaseConsistencyError(f"{case.name}: coefficient outside [m, M]")

    if case.closed_interface:
        clearance = np.min(np.abs(case.phi_fn(bx, by)))
        if clearance < 2 * coarsest_h:
            raise CaseConsistencyError(
                f"{case.name}: interface within {clearance:.3g} of the boundary")
        for label, fn in (("a", case.a_fn), ("b", case.b_fn)):
            if np.max(np.abs(fn(bx, by))) > tol:
                raise CaseConsistencyError(f"{case.name}: jump data {label} nonzero on the boundary")

    if not case.has_exact:
        return
    ub = case.u_exact(bx, by)
    gap = np.max(np.abs(case.boundary_value(bx, by) - ub))
    if gap > tol * max(1.0, np.max(np.abs(ub))):
        raise CaseConsistencyError(f"{case.name}: boundary data off by {gap:.3g}")

    pts = interface_points(case)
    if pts.shape[1] == 0:
        return
    x, y = pts
    jump = case.u_plus_fn(x, y) - case.u_minus_fn(x, y)
    err_a = np.max(np.abs(case.a_fn(x, y) - jump))
    if err_a > tol * max(1.0, np.max(np.abs(jump))):
        raise CaseConsistencyError(f"{case.name}: [u] != a on the interface ({err_a:.3g})")
    if case.grad_u_minus_fn is None or case.grad_u_plus_fn is None:
        return
    n1, n2 = case.normal(x, y)
    gpx, gpy = case.grad_u_plus_fn(x, y)
    gmx, gmy = case.grad_u_minus_fn(x, y)
    bp = case.beta_plus_fn(x, y)
    bm = case.beta_minus_fn(x, y)
    flux = (bp * gpx - bm * gmx) * n1 + (bp * gpy - bm * gmy) * n2
    err_b = np.max(np.abs(case.b_fn(x, y) - flux))
    if err_b > tol * max(1.0, np.max(np.abs(flux))):
        raise CaseConsistencyError(f"{case.name}: [beta u_n] != b on the interface ({err_b:.3g})")


BUILTIN = {
    "smooth": case_smooth,
    "planar": case_planar,
    "circle": case_circle,
    "contrast": case_contrast,
}
ALIASES = {"A": "smooth", "B": "planar", "C": "circle", "D": "contrast"}


def builtin_cases() -> list[ProblemCase]:
    cases = [make() for make in BUILTIN.values()]
    for case in cases:
        check_case(case)
    return cases


def get_case(name: str) -> ProblemCase:
    key = ALIASES.get(name, name)
    if key not in BUILTIN:
        raise KeyError(name)
    case = BUILTIN[key]()
    check_case(case)
    return case


# ----------------------------------------------------------------------------
# plain-text case files

def read_phi_file(path: str | Path, domain) -> NodalLevelSet:
    """``I J`` on the first line, then one row of ``I+2`` values per ``j = 0..J+1``."""
    tokens = Path(path).read_text().split()
    try:
        I, J = int(tokens[0]), int(tokens[1])
        vals = np.array([float(t) for t in tokens[2:]])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed level-set file") from exc
    if vals.size != (I + 2) * (J + 2):
        raise ValueError(f"{path}: expected {(I + 2) * (J + 2)} values, got {vals.size}")
    grid = Grid(*domain, I, J)
    return NodalLevelSet(grid, vals.reshape(J + 2, I + 2).T.copy())


def load_case_file(path: str | Path) -> ProblemCase:
    """Read a ``key = value`` case description.

    Keys: ``name``, ``domain`` (x_w x_e y_s y_n), ``phi`` (``circle cx cy r``,
    ``plane nx ny c`` or ``file PATH``), ``beta_minus``, ``beta_plus``,
    ``u_minus``, ``u_plus`` (names from :data:`U_FAMILIES`), optional ``band``
    (inner outer) and ``bubble``.
    """
    path = Path(path)
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key] = value

    domain = tuple(float(v) for v in cfg.get("domain", "0 1 0 1").split())
    if len(domain) != 4:
        raise ValueError(f"{path}: domain needs four numbers")
    kind, *params = cfg.get("phi", "").split()
    closed = True
    if kind == "circle":
        phi = circle_levelset(*map(float, params))
    elif kind == "plane":
        phi = plane_levelset(*map(float, params))
        closed = False
    elif kind == "file":
        target = Path(params[0])
        if not target.is_absolute():
            target = path.parent / target
        phi = (read_phi_file(target, domain), None)
        closed = False
    else:
        raise ValueError(f"{path}: unknown level set {kind!r}")

    try:
        um = U_FAMILIES[cfg.get("u_minus", "zero")]
        up = U_FAMILIES[cfg.get("u_plus", "zero")]
    except KeyError as exc:
        raise ValueError(f"{path}: unknown solution family {exc}") from None
    band = tuple(float(v) for v in cfg["band"].split()) if "band" in cfg else None
    case = manufactured_case(cfg.get("name", path.stem), domain, phi,
                             float(cfg.get("beta_minus", 1.0)),
                             float(cfg.get("beta_plus", 1.0)),
                             um, up, band=band, bubble=float(cfg.get("bubble", 0.0)),
                             closed_interface=closed)
    case = replace(case, closed_interface=closed)
    check_case(case)
    return case

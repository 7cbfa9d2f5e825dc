"""Command-line front end: ``gfm-poisson solve|converge|verify``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 inconsistent case.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cases import ALIASES, BUILTIN, CaseConsistencyError, get_case, load_case_file
from .harness import convergence_study, run_structural_battery, solve_case
from .solver import ConvergenceError
from .weak import CoefficientBoundsError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CASE = 0, 1, 2, 3
CSV_HEADER = "I,J,h,err_l2,err_h1,cg_iters,wall_ms"

log = logging.getLogger("gfm_poisson")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    case: str
    nx: int = 32
    ny: int = 32
    levels: int = 4
    path: str = "both"
    tol: float = 1e-10
    out: Optional[str] = None
    format: str = "csv"
    first_level: int = 4
    no_timing: bool = False
    threads: Optional[int] = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gfm-poisson",
                description="Interface Poisson solver with jump conditions on a rectangle.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--case", required=True,
                        help="builtin name (smooth|planar|circle|contrast or A-D) or case file")
    common.add_argument("--path", choices=("weak", "stencil", "both"), default=None)
    common.add_argument("--tol", type=float, default=1e-10, help="CG relative residual")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "plain"), default="csv")

    s = sub.add_parser("solve", parents=[common], help="solve on one grid and dump u")
    s.add_argument("--nx", type=int, default=32, help="interior nodes in x")
    s.add_argument("--ny", type=int, default=32, help="interior nodes in y")

    c = sub.add_parser("converge", parents=[common], help="refinement study as CSV rows")
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--first-level", type=int, default=4,
                   help="coarsest grid has 2**FIRST_LEVEL cells per side")
    c.add_argument("--no-timing", action="store_true",
                   help="write wall_ms as 0 so output is byte-identical across runs")

    v = sub.add_parser("verify", parents=[common], help="structural-condition battery")
    v.add_argument("--levels", type=int, default=4)
    v.add_argument("--first-level", type=int, default=4)
    return p


def _threads_from_env() -> Optional[int]:
    raw = os.environ.get("GFM_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"GFM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"GFM_THREADS must be a positive integer, got {raw!r}")
    return n


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Validate the command line; raises :class:`UsageError` on bad input."""
    ns = _build_parser().parse_args(argv)
    if ns.case not in BUILTIN and ns.case not in ALIASES and not Path(ns.case).is_file():
        raise UsageError(f"unknown case {ns.case!r} (not a builtin name or a readable file)")
    if not ns.tol > 0:
        raise UsageError("--tol must be positive")
    cfg = dict(command=ns.command, case=ns.case, tol=ns.tol, out=ns.out, format=ns.format,
               threads=_threads_from_env())
    if ns.command == "solve":
        if ns.nx < 1 or ns.ny < 1:
            raise UsageError("--nx and --ny must be at least 1")
        cfg.update(nx=ns.nx, ny=ns.ny, path=ns.path or "both")
    else:
        if ns.levels < 1:
            raise UsageError("--levels must be at least 1")
        if ns.first_level < 1:
            raise UsageError("--first-level must be at least 1")
        cfg.update(levels=ns.levels, first_level=ns.first_level, path=ns.path or "stencil")
        if ns.command == "converge":
            cfg["no_timing"] = ns.no_timing
        elif ns.path is not None:
            raise UsageError("--path does not apply to verify")
    return RunConfig(**cfg)


def _load_case(name: str):
    if name in BUILTIN or name in ALIASES:
        return get_case(name)
    return load_case_file(name)


def _paths(path: str) -> list[str]:
    return ["weak", "stencil"] if path == "both" else [path]


def format_rows(rows, fmt: str = "csv", timing: bool = True) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(CSV_HEADER + "\n")
        for r in rows:
            ms = r.wall_time * 1e3 if timing else 0.0
            buf.write(f"{r.I},{r.J},{r.h:.17g},{r.err_l2:.17g},{r.err_h1:.17g},"
                      f"{r.cg_iters},{ms:.3f}\n")
    else:
        buf.write(f"{'I':>6} {'J':>6} {'h':>12} {'err_l2':>12} {'err_h1':>12} "
                  f"{'cg_iters':>8} {'wall_ms':>10}\n")
        for r in rows:
            ms = r.wall_time * 1e3 if timing else 0.0
            buf.write(f"{r.I:>6} {r.J:>6} {r.h:>12.5e} {r.err_l2:>12.5e} {r.err_h1:>12.5e} "
                      f"{r.cg_iters:>8} {ms:>10.1f}\n")
    return buf.getvalue()


def format_solution(u) -> str:
    """Full node lattice, one line per ``j``, values space-separated."""
    return "\n".join(" ".join(f"{v:.17g}" for v in u.values[:, j])
                     for j in range(u.values.shape[1])) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _run_solve(cfg: RunConfig, case) -> int:
    from .grid import Grid, restrict
    grid = Grid(*case.domain, cfg.nx, cfg.ny)
    results = {p: solve_case(case, grid, p, cfg.tol) for p in _paths(cfg.path)}
    report = []
    for p, (u, info) in results.items():
        line = (f"{p}: backend={info.backend} iterations={info.iterations} "
                f"residual={info.residual_norm:.3e}")
        if case.has_exact:
            err = np.max(np.abs((u - restrict(case.u_exact, grid)).interior))
            line += f" max_error={err:.6e}"
        report.append(line)
    if len(results) == 2:
        uw, us = results["weak"][0], results["stencil"][0]
        gap = np.max(np.abs(uw.values - us.values)) / max(np.max(np.abs(us.values)), 1e-300)
        report.append(f"weak/stencil relative gap: {gap:.3e}")
        if gap > 1e-8:
            sys.stderr.write("\n".join(report) + "\n")
            sys.stderr.write("error: weak and stencil solutions disagree\n")
            return EXIT_NUMERICAL
    u = results["stencil" if "stencil" in results else "weak"][0]
    _emit(format_solution(u), cfg.out)
    sys.stderr.write("\n".join(report) + "\n")
    return EXIT_OK


def _run_converge(cfg: RunConfig, case) -> int:
    all_rows = {p: convergence_study(case, cfg.levels, p, cfg.first_level, cfg.tol)
                for p in _paths(cfg.path)}
    if len(all_rows) == 2:
        for rw, rs in zip(all_rows["weak"], all_rows["stencil"]):
            if abs(rw.err_l2 - rs.err_l2) > 1e-8 * max(rs.err_l2, 1e-12) + 1e-12:
                sys.stderr.write(f"error: paths disagree at I={rs.I}\n")
                return EXIT_NUMERICAL
    rows = all_rows["stencil" if "stencil" in all_rows else "weak"]
    _emit(format_rows(rows, cfg.format, timing=not cfg.no_timing), cfg.out)
    return EXIT_OK


def _run_verify(cfg: RunConfig, case) -> int:
    levels = list(range(cfg.first_level, cfg.first_level + cfg.levels))
    report = run_structural_battery(case, levels)
    _emit(report.table() + "\n", cfg.out)
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def run(cfg: RunConfig) -> int:
    try:
        case = _load_case(cfg.case)
    except CaseConsistencyError as exc:
        sys.stderr.write(f"error: inconsistent case: {exc}\n")
        return EXIT_CASE
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"error: cannot load case {cfg.case!r}: {exc}\n")
        return EXIT_USAGE
    if cfg.threads is not None:
        log.debug("GFM_THREADS=%d (kernels are serial; value accepted as an upper bound)",
                  cfg.threads)
    handlers = {"solve": _run_solve, "converge": _run_converge, "verify": _run_verify}
    try:
        return handlers[cfg.command](cfg, case)
    except ConvergenceError as exc:
        r = exc.report
        sys.stderr.write(f"error: {exc}\n  iterations={r.iterations} residual={r.residual_norm:.3e} "
                         f"tol={r.tolerance:g}\n")
        return EXIT_NUMERICAL
    except CoefficientBoundsError as exc:
        sys.stderr.write(f"error: inconsistent case: {exc}\n")
        return EXIT_CASE
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

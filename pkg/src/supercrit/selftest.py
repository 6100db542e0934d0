"""Fast invariant checks run by ``supercrit selftest``.

Each check is small enough that the whole suite finishes in a few seconds on
one core. A check returns ``(ok, detail)``.
"""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import diagnostics as dg
from .evolve import FieldState, cfl_dt, evolve_nonlinear, steps_for
from .exponents import ModelParams, margin_root, p_window
from .grid import build_basis, build_grid, laplacian_apply
from .scenario import parse_text


def _exponents():
    lo, hi = p_window(7)
    ok = abs(lo - 0.8) < 1e-14 and abs(hi - margin_root(7)) < 1e-8
    return ok, f"d=7 window ({lo:.6g}, {hi:.10g})"


def _self_adjoint():
    grid = build_grid(10.0, 128, 3)
    rng = np.random.default_rng(1)
    f, g = rng.standard_normal((2, grid.N))
    lhs = grid.inner(laplacian_apply(grid, f), g)
    rhs = grid.inner(f, laplacian_apply(grid, g))
    err = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return err < 1e-12, f"<Lf,g> vs <f,Lg> relative {err:.2e}"


def _parseval():
    grid = build_grid(10.0, 128, 3)
    basis = build_basis(grid)
    f = np.random.default_rng(2).standard_normal(grid.N)
    c = basis.coefficients(f)
    ref = grid.inner(f, f)
    err = abs(np.sum(c**2) - ref) / ref
    return err < 1e-10, f"Parseval relative {err:.2e}"


def _energy():
    grid = build_grid(20.0, 256, 3)
    params = ModelParams(3, 6.0)
    state = FieldState(0.0, np.exp(-0.5 * grid.nodes**2), np.zeros(grid.N))
    dt, _ = steps_for(1.0, cfl_dt(grid, 0.25), 1)
    traj = evolve_nonlinear(state, params, grid, 1.0, dt, 8)
    E0 = dg.energy(traj[0], grid, params).total
    E1 = dg.energy(traj.final(), grid, params).total
    drift = abs(E1 - E0) / E0
    return drift < 1e-3, f"energy drift {drift:.2e}"


def _round_trip():
    sc = parse_text("[model]\nd = 3\np = 6\n[run]\nT = 1\n", name="selftest")
    back = parse_text(sc.to_text())
    return back == sc, "scenario echo re-parses to an equal scenario"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "exponents": _exponents,
    "self_adjoint": _self_adjoint,
    "parseval": _parseval,
    "energy": _energy,
    "round_trip": _round_trip,
}


def run_selftest(echo: Callable[[str], None] = print) -> bool:
    all_ok = True
    for name, check in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<13} {detail}  ({time.perf_counter() - t0:.2f}s)")
    return all_ok

"""Multi-run protocols: scattering, stability under perturbation, focusing
blowup, and the long-time dispersal probe."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .evolve import (
    BLOWUP_THRESHOLD,
    FieldState,
    Trajectory,
    _trapezoid_weights,
    evolve_nonlinear,
    evolve_split,
    leapfrog_power,
    pair_norm,
)
from .exponents import ModelParams, morawetz_exponent, xy_exponents
from .grid import RadialGrid, SpectralBasis, lp_norm

log = logging.getLogger(__name__)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


class Report:
    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@dataclass
class ScatterReport(Report):
    times: list
    deltas: list
    data_norm: float
    final_relative: float
    pullback_norms: list
    boundary_touched: bool = False


def scattering_detect(params: ModelParams, state0: FieldState, grid: RadialGrid,
                      basis: SpectralBasis, T_list: Sequence[float], dt: float, *,
                      nonlinear: bool = True, support_threshold: float = 1e-6) -> ScatterReport:
    """Pull snapshots at each ``T_i`` back to t = 0 with the linear flow and report
    the Cauchy differences ``δ_i = ‖w(T_{i+1}) - w(T_i)‖`` in the critical norm.

    The pullback uses the linear leapfrog group of the same ``dt``, so a purely
    linear orbit pulls back to its data exactly and ``δ_i`` measures only the
    nonlinear interaction.
    """
    if params.focusing:
        raise ValueError("scattering detection expects the defocusing equation")
    T_list = sorted(float(T) for T in T_list)
    data_norm = dg.critical_pair_norm(basis, state0, params)
    if data_norm == 0:
        raise ValueError("zero data: nothing to scatter")
    r0 = dg.support_radius(state0, grid, support_threshold)
    if T_list[-1] + r0 >= grid.R_max:
        raise ValueError(f"T_max + support = {T_list[-1] + r0:.3g} reaches R_max={grid.R_max}")
    steps = [int(round(T / dt)) for T in T_list]
    stride = math.gcd(*steps)
    traj, Z, Zv = evolve_split(state0, params, grid, T_list[-1], dt, stride, nonlinear=nonlinear)
    touched = any(dg.support_radius(traj[i], grid, support_threshold) > grid.R_max - 5 * grid.h
                  for i in range(len(traj)))
    if touched:
        raise RuntimeError("solution reached the outer wall; enlarge R_max")
    a0, b0 = basis.coefficients(state0.u), basis.coefficients(state0.v)
    pulled = []
    for n in steps:
        i = n // stride
        za, zb = leapfrog_power(basis, basis.coefficients(Z[i]), basis.coefficients(Zv[i]),
                                -n, dt)
        pulled.append((za, zb))
    deltas = [pair_norm(basis, pulled[k + 1][0] - pulled[k][0], pulled[k + 1][1] - pulled[k][1],
                        params.s_c) for k in range(len(pulled) - 1)]
    norms = [pair_norm(basis, a0 + za, b0 + zb, params.s_c) for za, zb in pulled]
    final = deltas[-1] / data_norm if deltas else 0.0
    return ScatterReport(T_list, deltas, data_norm, final, norms)


def y_norm(basis: SpectralBasis, profile: np.ndarray, duration: float,
           params: ModelParams) -> float:
    """Y-size of a time-independent source ``e(x)`` held on an interval of length
    ``duration``."""
    xy = xy_exponents(params.d, params.p)
    deriv = basis.apply(profile, basis.mu ** (xy.deriv_order / 2))
    return duration ** (1 / xy.time_exp_Y) * lp_norm(basis.grid, deriv, xy.space_exp_Y)


def _spacetime_norm(grid: RadialGrid, U: np.ndarray, spacing: float, q: float) -> float:
    per_time = np.array([grid.integrate(np.abs(u) ** q) for u in U])
    return float(np.dot(_trapezoid_weights(len(U), spacing), per_time)) ** (1 / q)


@dataclass
class StabilityReport(Report):
    epsilons: list
    D: list
    valid: list
    slope: Optional[float]
    M: float
    L: float
    forcing: bool
    monotone: bool = False


def stability_experiment(params: ModelParams, base_state: FieldState, grid: RadialGrid,
                         basis: SpectralBasis, eps_ladder: Sequence[float],
                         e_profile: Optional[np.ndarray], T: float, dt: float,
                         record_stride: int = 4) -> StabilityReport:
    """Measure ``D(ε) = ‖u - ũ‖_S`` for data perturbed by ``ε`` in the critical norm.

    ``ũ`` evolves ``base_state``; each ``u`` starts from ``base_state + ε·bump``,
    with the bump the base shape normalised in ``Ḣ^{s_c} × Ḣ^{s_c-1}``. If
    ``e_profile`` is given it is rescaled to Y-size ``ε`` over ``[0, T]`` and
    applied to ``u`` as a constant source. The slope is a least-squares fit of
    ``log D`` against ``log ε`` over the valid rungs with ``ε > 0``.
    """
    base = evolve_nonlinear(base_state, params, grid, T, dt, record_stride)
    if base.overflow_halt:
        raise RuntimeError(f"base run blew up at t={base.halt_time:.4g}")
    q = (params.d + 1) * params.p / 2
    M = max(dg.critical_pair_norm(basis, base[i], params) for i in range(len(base)))
    L = _spacetime_norm(grid, base.U, base.spacing, q)
    norm = dg.critical_pair_norm(basis, base_state, params)
    if norm == 0:
        raise ValueError("base data must be nonzero to define the perturbation shape")
    unit = None
    if e_profile is not None:
        size = y_norm(basis, np.asarray(e_profile, float), T, params)
        unit = np.asarray(e_profile, float) / size if size > 0 else None

    D, valid = [], []
    for eps in eps_ladder:
        if eps == 0:
            D.append(0.0)
            valid.append(True)
            continue
        start = FieldState(base_state.t, base_state.u * (1 + eps / norm),
                           base_state.v * (1 + eps / norm))
        forcing = None
        if unit is not None:
            src = eps * unit
            forcing = lambda t, u, src=src: src
        run = evolve_nonlinear(start, params, grid, T, dt, record_stride, forcing=forcing)
        if run.overflow_halt or len(run) != len(base):
            D.append(math.nan)
            valid.append(False)
            continue
        D.append(_spacetime_norm(grid, run.U - base.U, base.spacing, q))
        valid.append(True)
    pts = [(e, d) for e, d, ok in zip(eps_ladder, D, valid) if ok and e > 0 and d > 0]
    slope = None
    if len(pts) >= 2:
        x, y = np.log([e for e, _ in pts]), np.log([d for _, d in pts])
        slope = float(np.polyfit(x, y, 1)[0])
    order = np.argsort(eps_ladder)
    good = [D[i] for i in order if valid[i]]
    monotone = all(a <= b for a, b in zip(good, good[1:]))
    return StabilityReport(list(eps_ladder), D, valid, slope, M, L, unit is not None, monotone)


@dataclass
class BlowupReport(Report):
    blowup: bool
    t_halt: Optional[float]
    times: list
    crit_norm_series: list
    initial_norm: float
    halt_norm: Optional[float]
    growth: Optional[float]
    message: str = ""


def blowup_contrast(params_focusing: ModelParams, state0: FieldState, grid: RadialGrid,
                    basis: SpectralBasis, dt: float, *, T_max: float = 10.0,
                    threshold: float = BLOWUP_THRESHOLD, record_stride: int = 1) -> BlowupReport:
    """Run the focusing equation until the amplitude threshold trips or ``T_max``."""
    if not params_focusing.focusing:
        raise ValueError("blowup_contrast needs the focusing sign")
    traj = evolve_nonlinear(state0, params_focusing, grid, T_max, dt, record_stride,
                            threshold=threshold)
    norms = [dg.critical_pair_norm(basis, traj[i], params_focusing) for i in range(len(traj))]
    times = list(traj.times)
    initial = norms[0]
    if traj.overflow_halt:
        with np.errstate(over="ignore", invalid="ignore"):
            halt = dg.critical_pair_norm(basis, traj.halt_state, params_focusing)
        times.append(traj.halt_time)
        norms.append(halt)
        growth = halt / initial if initial > 0 else math.inf
        return BlowupReport(True, traj.halt_time, times, norms, initial, halt, growth)
    return BlowupReport(False, None, times, norms, initial, None, None,
                        f"no blowup detected before T_max={T_max}")


@dataclass
class DispersalReport(Report):
    times: list
    N_series: list
    near_origin_potential: list
    horizons: list
    morawetz_lhs: list
    morawetz: dict
    exponent: float
    lhs_growth: Optional[float] = None


def dispersal_probe(params: ModelParams, state0: FieldState, grid: RadialGrid,
                    basis: SpectralBasis, T: float, dt: float, *, C: float = 1.0,
                    record_stride: int = 4, horizons: Optional[Sequence[float]] = None,
                    traj: Optional[Trajectory] = None) -> DispersalReport:
    """Long defocusing run comparing the weighted near-origin potential with the
    Morawetz growth ``T^{d-2-4/p}``."""
    if params.focusing:
        raise ValueError("dispersal probe expects the defocusing equation")
    if traj is None:
        traj = evolve_nonlinear(state0, params, grid, T, dt, record_stride)
    if traj.boundary_touched:
        raise RuntimeError("solution reached the outer wall; enlarge R_max")
    N_series, near = [], []
    p = params.p
    for i in range(len(traj)):
        st = traj[i]
        if not np.any(st.u) and not np.any(st.v):
            N_series.append(0.0)
            near.append(0.0)
            continue
        N_t = dg.frequency_scale_proxy(basis, st, params)
        inside = grid.nodes <= C / N_t
        N_series.append(N_t)
        near.append(N_t * grid.integrate(np.where(inside, np.abs(st.u) ** (p + 2), 0.0)))
    horizons = [T] if horizons is None else sorted(horizons)
    lhs = [dg.morawetz_lhs(traj, H) for H in horizons]
    rep = dg.morawetz_report(traj, params, basis)
    growth = lhs[-1] / lhs[0] if len(lhs) > 1 and lhs[0] > 0 else None
    return DispersalReport(list(traj.times), N_series, near, horizons, lhs, asdict(rep),
                           morawetz_exponent(params.d, params.p), growth)

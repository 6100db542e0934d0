"""Run orchestration and persistence: CSV series, JSON reports, manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from . import diagnostics as dg
from . import experiments as ex
from .evolve import cfl_dt, evolve_nonlinear, steps_for
from .grid import build_basis, build_grid
from .scenario import Scenario, initial_state

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_SOFT = 3


def default_out_root() -> Path:
    return Path(os.environ.get("SUPERCRIT_OUT", "runs"))


def _fmt(x) -> str:
    return repr(float(x) + 0.0)  # + 0.0 folds -0.0 into 0.0


def write_csv(path: Path, header: list[str], rows) -> str:
    """Write rows with round-trip float formatting; returns the sha256 of the file."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(ex._jsonable(obj), indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    scenario: str
    version: str
    wall_time: float
    flags: dict
    files: dict
    csv_sha256: str
    exit_code: int = EXIT_OK

    def write(self, path: Path) -> None:
        write_json(path, asdict(self))


@dataclass
class _Setup:
    scenario: Scenario
    grid: object
    basis: object
    state0: object
    dt: float
    out: Path


def _setup(sc: Scenario, out_root: Optional[Path]) -> _Setup:
    grid = build_grid(sc.grid.R_max, sc.grid.N, sc.model.d)
    basis = build_basis(grid)
    state0 = initial_state(sc, grid, basis)
    dt = cfl_dt(grid, sc.run.cfl_factor, basis)
    out = Path(out_root if out_root is not None else default_out_root()) / sc.run.name
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.txt").write_text(sc.to_text())
    return _Setup(sc, grid, basis, state0, dt, out)


def _finish(s: _Setup, t0: float, flags: dict, files: dict, digest: str, code: int) -> RunManifest:
    files = {"scenario": "scenario.txt", **files}
    man = RunManifest(s.scenario.to_text(), __version__, time.perf_counter() - t0, flags,
                      files, digest, code)
    man.write(s.out / "manifest.json")
    missing = [f for f in files.values() if not (s.out / f).exists()]
    if missing:
        raise RuntimeError(f"manifest references missing files: {missing}")
    return man


def run_scenario(sc: Scenario, out_root: Optional[Path] = None) -> RunManifest:
    """Evolve the scenario and stream one diagnostics row per snapshot."""
    t0 = time.perf_counter()
    s = _setup(sc, out_root)
    params = sc.params
    dt, _ = steps_for(sc.run.T, s.dt, sc.run.record_stride) if sc.run.T > 0 else (s.dt, 0)
    traj = evolve_nonlinear(s.state0, params, s.grid, sc.run.T, dt, sc.run.record_stride,
                            threshold=sc.run.blowup_threshold,
                            support_threshold=sc.diagnostics.support_threshold)
    weight = dg.morawetz_weight(sc.morawetz_R, params.d)
    rows = (dg.diagnostics_record(traj[i], s.grid, s.basis, params, weight, sc.diagnostics.tail_C,
                                  sc.diagnostics.support_threshold).row()
            for i in range(len(traj)))
    digest = write_csv(s.out / "series.csv", dg.DiagnosticsRecord.columns(), rows)

    E0 = dg.energy(traj[0], s.grid, params).total
    E1 = dg.energy(traj.final(), s.grid, params).total
    report = {
        "protocol": "simulate",
        "parameters": sc.to_dict(),
        "dt": dt,
        "snapshots": len(traj),
        "energy_initial": E0,
        "energy_final": E1,
        "energy_drift": abs(E1 - E0) / abs(E0) if E0 else 0.0,
        "scattering_size": dg.scattering_size(traj) if len(traj) > 1 else 0.0,
        "halt_time": traj.halt_time,
        "warnings": list(sc.warnings),
    }
    write_json(s.out / "report.json", report)
    flags = {"boundary_touched": traj.boundary_touched, "overflow_halt": traj.overflow_halt}
    code = EXIT_SOFT if any(flags.values()) else EXIT_OK
    return _finish(s, t0, flags, {"series": "series.csv", "report": "report.json"}, digest, code)


def _protocol(s: _Setup, t0: float, name: str, measured: dict, checks: dict,
              header: list[str], rows, flags: Optional[dict] = None) -> RunManifest:
    digest = write_csv(s.out / "series.csv", header, rows)
    write_json(s.out / "report.json", {
        "protocol": name,
        "parameters": s.scenario.to_dict(),
        "measured": measured,
        "acceptance": checks,
    })
    flags = dict(flags or {})
    code = EXIT_OK if all(checks.values()) and not any(flags.values()) else EXIT_SOFT
    return _finish(s, t0, flags, {"series": "series.csv", "report": "report.json"}, digest, code)


def run_scatter(sc: Scenario, out_root: Optional[Path] = None) -> RunManifest:
    t0 = time.perf_counter()
    s = _setup(sc, out_root)
    dt, _ = steps_for(min(sc.run.scatter_times), s.dt, 1)
    rep = ex.scattering_detect(sc.params, s.state0, s.grid, s.basis, sc.run.scatter_times, dt)
    d = rep.deltas
    checks = {
        "strictly_decreasing": all(b < a for a, b in zip(d, d[1:])),
        "final_below_1e-4": rep.final_relative < 1e-4,
    }
    rows = [(T, d[i - 1] if i else 0.0, n) for i, (T, n) in enumerate(zip(rep.times,
                                                                          rep.pullback_norms))]
    return _protocol(s, t0, "scatter", rep.to_dict(), checks, ["T", "delta", "pullback_norm"], rows)


def run_stability(sc: Scenario, out_root: Optional[Path] = None) -> RunManifest:
    t0 = time.perf_counter()
    s = _setup(sc, out_root)
    profile = s.state0.u if sc.run.forcing else None
    dt, _ = steps_for(sc.run.T, s.dt, sc.run.record_stride)
    rep = ex.stability_experiment(sc.params, s.state0, s.grid, s.basis, sc.run.eps_ladder,
                                  profile, sc.run.T, dt, sc.run.record_stride)
    checks = {"monotone": rep.monotone,
              "slope_at_least_0.8": rep.slope is not None and rep.slope >= 0.8}
    rows = list(zip(rep.epsilons, rep.D))
    return _protocol(s, t0, "stability", rep.to_dict(), checks, ["eps", "D"], rows)


def run_blowup(sc: Scenario, out_root: Optional[Path] = None) -> RunManifest:
    t0 = time.perf_counter()
    s = _setup(sc, out_root)
    rep = ex.blowup_contrast(sc.params, s.state0, s.grid, s.basis, s.dt, T_max=sc.run.T,
                             threshold=sc.run.blowup_threshold, record_stride=sc.run.record_stride)
    checks = {"blowup_detected": rep.blowup,
              "norm_growth_above_10": bool(rep.growth is not None and rep.growth > 10)}
    rows = list(zip(rep.times, rep.crit_norm_series))
    return _protocol(s, t0, "blowup", rep.to_dict(), checks, ["t", "crit_norm"], rows)


def run_morawetz(sc: Scenario, out_root: Optional[Path] = None) -> RunManifest:
    t0 = time.perf_counter()
    s = _setup(sc, out_root)
    T = sc.run.T
    dt, _ = steps_for(T, s.dt, sc.run.record_stride)
    rep = ex.dispersal_probe(sc.params, s.state0, s.grid, s.basis, T, dt,
                             C=sc.diagnostics.concentration_C, record_stride=sc.run.record_stride,
                             horizons=[T / 2, T])
    checks = {"lhs_growth_below_2": rep.lhs_growth is not None and rep.lhs_growth < 2}
    rows = list(zip(rep.times, rep.N_series, rep.near_origin_potential))
    return _protocol(s, t0, "morawetz", rep.to_dict(), checks,
                     ["t", "N_proxy", "near_origin_potential"], rows)


PROTOCOLS = {
    "simulate": run_scenario,
    "scatter": run_scatter,
    "stability": run_stability,
    "blowup": run_blowup,
    "morawetz": run_morawetz,
}

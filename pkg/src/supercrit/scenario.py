"""Scenario files: a flat ``key = value`` format with one level of sections.

    # comment
    [model]
    d = 3
    p = 6
    sign = defocusing

Unknown keys, type errors and range violations raise :class:`ScenarioError`
carrying the offending line number. Parameters outside the theorem window
only warn, since boundary cases are exactly what the laboratory is for.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .exponents import DEFOCUSING, FOCUSING, ModelParams, p_window
from .grid import RadialGrid, SpectralBasis

FAMILIES = ("gaussian", "bump", "mode")
SIGNS = {"defocusing": DEFOCUSING, "focusing": FOCUSING}


class ScenarioError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ScenarioWarning(UserWarning):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


@dataclass(frozen=True)
class ModelSection:
    d: int = 3
    p: float = 6.0
    sign: str = "defocusing"


@dataclass(frozen=True)
class GridSection:
    R_max: float = 20.0
    N: int = 1024


@dataclass(frozen=True)
class DataSection:
    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    mode_index: int = 0
    noise: float = 0.0


@dataclass(frozen=True)
class RunSection:
    name: str = "scenario"
    T: float = 5.0
    cfl_factor: float = 0.5
    record_stride: int = 4
    blowup_threshold: float = 1e6
    seed: int = 0
    scatter_times: tuple = (2.0, 4.0, 8.0, 16.0)
    eps_ladder: tuple = (1e-3, 1e-2, 1e-1)
    forcing: bool = False


@dataclass(frozen=True)
class DiagnosticsSection:
    morawetz_R: float = 0.0  # 0 means "use T"
    concentration_C: float = 1.0
    tail_C: float = 1.0
    support_threshold: float = 1e-6


_SECTIONS = {
    "model": ModelSection,
    "grid": GridSection,
    "data": DataSection,
    "run": RunSection,
    "diagnostics": DiagnosticsSection,
}


def _convert(kind, text: str):
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is tuple:
        return _floats(text)
    return text


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Scenario:
    model: ModelSection = ModelSection()
    grid: GridSection = GridSection()
    data: DataSection = DataSection()
    run: RunSection = RunSection()
    diagnostics: DiagnosticsSection = DiagnosticsSection()
    warnings: tuple = field(default=(), compare=False)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.model.d, float(self.model.p), SIGNS[self.model.sign])

    @property
    def morawetz_R(self) -> float:
        return self.diagnostics.morawetz_R or self.run.T or 1.0

    def expected_support(self) -> float:
        d = self.data
        if d.family == "gaussian":
            tail = math.sqrt(2 * math.log(1 / self.diagnostics.support_threshold))
            return d.center + d.width * tail
        if d.family == "bump":
            return d.center + d.width
        return self.grid.R_max

    def to_text(self) -> str:
        lines = []
        for sec in _SECTIONS:
            lines.append(f"[{sec}]")
            part = getattr(self, sec)
            for f in fields(part):
                lines.append(f"{f.name} = {_format(getattr(part, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {sec: {f.name: getattr(getattr(self, sec), f.name)
                      for f in fields(getattr(self, sec))} for sec in _SECTIONS}


def _validate(sc: Scenario, lines: dict) -> list[str]:
    def fail(sec, key, msg):
        raise ScenarioError(f"{sec}.{key}: {msg}", lines.get((sec, key)))

    m, g, d, r, dg = sc.model, sc.grid, sc.data, sc.run, sc.diagnostics
    if not 3 <= m.d <= 9:
        fail("model", "d", f"dimension must be in 3..9, got {m.d}")
    if not m.p > 0:
        fail("model", "p", f"power must be positive, got {m.p}")
    if m.sign not in SIGNS:
        fail("model", "sign", f"expected one of {sorted(SIGNS)}, got {m.sign!r}")
    if not g.R_max > 0:
        fail("grid", "R_max", "must be positive")
    if g.N < 16:
        fail("grid", "N", "need at least 16 cells")
    if d.family not in FAMILIES:
        fail("data", "family", f"expected one of {FAMILIES}, got {d.family!r}")
    if not d.width > 0:
        fail("data", "width", "must be positive")
    if not 0 <= d.mode_index < g.N:
        fail("data", "mode_index", f"must be in [0, {g.N})")
    if r.T < 0:
        fail("run", "T", "must be non-negative")
    if not 0 < r.cfl_factor <= 1:
        fail("run", "cfl_factor", "must lie in (0, 1]")
    if r.record_stride < 1:
        fail("run", "record_stride", "must be >= 1")
    if not r.blowup_threshold > 0:
        fail("run", "blowup_threshold", "must be positive")
    if any(e < 0 or e > 0.5 for e in r.eps_ladder):
        fail("run", "eps_ladder", "values must lie in [0, 0.5]")
    if any(t <= 0 for t in r.scatter_times):
        fail("run", "scatter_times", "times must be positive")
    if not dg.support_threshold > 0:
        fail("diagnostics", "support_threshold", "must be positive")

    notes = []
    lo, hi = p_window(m.d)
    if not lo < m.p < hi:
        notes.append(f"p = {m.p:g} outside theorem window ({lo:g}, {hi:g}) for d = {m.d}")
    reach = r.T + sc.expected_support()
    if reach >= g.R_max:
        notes.append(f"T + expected support = {reach:.3g} reaches R_max = {g.R_max:g}; "
                     "the wall may be touched")
    for note in notes:
        warnings.warn(note, ScenarioWarning, stacklevel=3)
    return notes


def parse_text(text: str, name: Optional[str] = None) -> Scenario:
    values: dict[str, dict[str, Any]] = {sec: {} for sec in _SECTIONS}
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ScenarioError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ScenarioError("key outside of any section", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        types = {f.name: f.type for f in fields(_SECTIONS[section])}
        if key not in types:
            raise ScenarioError(f"unknown key {section}.{key}", lineno)
        if (section, key) in lines:
            raise ScenarioError(f"duplicate key {section}.{key}", lineno)
        kind = {"int": int, "float": float, "bool": bool, "tuple": tuple}.get(types[key], str)
        try:
            values[section][key] = _convert(kind, val)
        except ValueError:
            raise ScenarioError(f"{section}.{key}: cannot read {val!r} as {types[key]}",
                                lineno) from None
        lines[(section, key)] = lineno

    if name is not None and "name" not in values["run"]:
        values["run"]["name"] = name
    sc = Scenario(**{sec: cls(**values[sec]) for sec, cls in _SECTIONS.items()})
    notes = _validate(sc, lines)
    return replace(sc, warnings=tuple(notes))


def parse_scenario(path) -> Scenario:
    path = Path(path)
    return parse_text(path.read_text(), name=path.stem)


def initial_state(sc: Scenario, grid: RadialGrid, basis: Optional[SpectralBasis] = None):
    """Initial Cauchy datum described by the ``[data]`` section."""
    from .evolve import FieldState

    d = sc.data
    r = grid.nodes
    s = (r - d.center) / d.width
    if d.family == "gaussian":
        u = d.amplitude * np.exp(-0.5 * s**2)
    elif d.family == "bump":
        u = d.amplitude * np.where(np.abs(s) < 1, (1 - s**2) ** 3, 0.0)
    else:
        if basis is None:
            raise ValueError("mode data needs the spectral basis")
        vk = basis.V[:, d.mode_index]
        u = d.amplitude * vk / np.abs(vk).max()
    if d.noise:
        if basis is None:
            raise ValueError("noisy data needs the spectral basis")
        rng = np.random.default_rng(sc.run.seed)
        k = min(32, grid.N)
        coef = np.zeros(grid.N)
        coef[:k] = rng.standard_normal(k) / (1 + np.arange(k)) ** 2
        bump = basis.synthesize(coef)
        u = u + d.noise * bump / np.abs(bump).max()
    return FieldState(0.0, u, np.zeros_like(u))

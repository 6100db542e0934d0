"""Time stepping: velocity-Verlet leapfrog for the nonlinear flow, the exact
spectral linear propagator, and a Duhamel-formula consistency check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exponents import ModelParams
from .grid import RadialGrid, SpectralBasis, gershgorin_bound, laplacian_apply

BLOWUP_THRESHOLD = 1e6
SUPPORT_THRESHOLD = 1e-6

# (t, u) -> source e, entering as u_tt - Δu + F(u) + e = 0
Forcing = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FieldState:
    t: float
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError(f"u and v must be 1-d of equal length, got {u.shape}, {v.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, grid: RadialGrid, t: float = 0.0) -> "FieldState":
        return cls(t, np.zeros(grid.N), np.zeros(grid.N))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def reversed(self) -> "FieldState":
        return replace(self, v=-self.v)


class BlowupDetected(ArithmeticError):
    def __init__(self, state: FieldState, threshold: float):
        super().__init__(f"max|u| exceeded {threshold:g} at t={state.t:.6g}")
        self.state = state
        self.threshold = threshold


def nonlinearity(u: np.ndarray, params: ModelParams) -> np.ndarray:
    """``F(u) = sign * |u|^p u`` (zero maps to zero for any p > 0)."""
    with np.errstate(over="ignore", invalid="ignore"):
        return params.sign * np.abs(u) ** params.p * u


def cfl_dt(grid: RadialGrid, factor: float, basis: Optional[SpectralBasis] = None) -> float:
    """Time step with ``dt * sqrt(spectral bound) = factor``.

    Leapfrog is linearly stable for ``dt * sqrt(max mu) < 2``, so any factor up to
    one leaves a margin. With a basis the exact spectral radius is used, otherwise
    the Gershgorin bound.
    """
    if not 0 < factor <= 1:
        raise ValueError(f"CFL factor must lie in (0, 1], got {factor}")
    bound = float(basis.mu[-1]) if basis is not None else gershgorin_bound(grid)
    return factor / math.sqrt(bound)


def _acceleration(u, t, params, grid, nonlinear, forcing):
    a = laplacian_apply(grid, u)
    if nonlinear:
        a -= nonlinearity(u, params)
    if forcing is not None:
        a -= forcing(t, u)
    return a


def step_leapfrog(
    state: FieldState,
    params: ModelParams,
    grid: RadialGrid,
    dt: float,
    *,
    nonlinear: bool = True,
    forcing: Optional[Forcing] = None,
    threshold: float = BLOWUP_THRESHOLD,
) -> FieldState:
    """One kick-drift-kick step. Raises :class:`BlowupDetected` past ``threshold``."""
    a = _acceleration(state.u, state.t, params, grid, nonlinear, forcing)
    v = state.v + 0.5 * dt * a
    u = state.u + dt * v
    t = state.t + dt
    v = v + 0.5 * dt * _acceleration(u, t, params, grid, nonlinear, forcing)
    new = FieldState(t, u, v)
    _check_blowup(new, threshold)
    return new


def _check_blowup(state: FieldState, threshold: float) -> None:
    peak = np.max(np.abs(state.u))
    if not (peak <= threshold) or not np.all(np.isfinite(state.v)):
        raise BlowupDetected(state, threshold)


@dataclass(eq=False)
class Trajectory:
    params: ModelParams
    grid: RadialGrid
    dt: float
    stride: int
    times: np.ndarray
    U: np.ndarray
    V: np.ndarray
    nonlinear: bool = True
    forced: bool = False
    boundary_touched: bool = False
    overflow_halt: bool = False
    halt_time: Optional[float] = None
    halt_state: Optional[FieldState] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> FieldState:
        return FieldState(float(self.times[i]), self.U[i], self.V[i])

    @property
    def snapshots(self) -> list[FieldState]:
        return [self[i] for i in range(len(self))]

    @property
    def spacing(self) -> float:
        return self.dt * self.stride

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a recorded snapshot time")
        return i

    def final(self) -> FieldState:
        return self[len(self) - 1]


def steps_for(T: float, dt_max: float, stride: int) -> tuple[float, int]:
    """Step size ``<= dt_max`` that lands exactly on ``T`` with a whole number of records."""
    n_rec = max(1, math.ceil(T / (dt_max * stride) - 1e-9))
    return T / (n_rec * stride), n_rec * stride


def evolve_nonlinear(
    state0: FieldState,
    params: ModelParams,
    grid: RadialGrid,
    T: float,
    dt: float,
    record_stride: int = 1,
    *,
    nonlinear: bool = True,
    forcing: Optional[Forcing] = None,
    threshold: float = BLOWUP_THRESHOLD,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> Trajectory:
    """Run leapfrog from ``state0`` for ``round(T / dt)`` steps, recording every
    ``record_stride`` steps. Blowup halts the run and is reported in the flags."""
    from .diagnostics import support_radius

    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    n_steps = int(round(T / dt))
    edge = grid.R_max - 5 * grid.h

    times, U, V = [state0.t], [state0.u.copy()], [state0.v.copy()]
    traj = Trajectory(params, grid, dt, record_stride, None, None, None,
                      nonlinear=nonlinear, forced=forcing is not None)
    traj.boundary_touched = support_radius(state0, grid, support_threshold) > edge

    u, v, t0 = state0.u.copy(), state0.v.copy(), state0.t
    a = _acceleration(u, t0, params, grid, nonlinear, forcing)
    half = 0.5 * dt
    for n in range(1, n_steps + 1):
        t = t0 + n * dt
        v += half * a
        u += dt * v
        a = _acceleration(u, t, params, grid, nonlinear, forcing)
        v += half * a
        peak = np.max(np.abs(u))
        if not (peak <= threshold) or not np.isfinite(v).all():
            traj.overflow_halt = True
            traj.halt_time = t
            traj.halt_state = FieldState(t, u.copy(), v.copy())
            break
        if n % record_stride == 0:
            times.append(t)
            U.append(u.copy())
            V.append(v.copy())
            if not traj.boundary_touched:
                traj.boundary_touched = support_radius(FieldState(t, u, v), grid,
                                                       support_threshold) > edge
    traj.times = np.array(times)
    traj.U = np.array(U)
    traj.V = np.array(V)
    return traj


def linear_propagate(basis: SpectralBasis, state0: FieldState, t: float) -> FieldState:
    """Exact solution of ``u_tt = L_h u`` at time ``state0.t + t``."""
    a = basis.coefficients(state0.u)
    b = basis.coefficients(state0.v)
    w = basis.freq
    c, s = np.cos(w * t), np.sin(w * t)
    return FieldState(state0.t + t, basis.synthesize(c * a + s / w * b),
                      basis.synthesize(-w * s * a + c * b))


def leapfrog_frequencies(basis: SpectralBasis, dt: float) -> np.ndarray:
    """Per-step rotation angles of the linear leapfrog map, ``2 asin(dt sqrt(mu)/2)``."""
    theta = dt * basis.freq
    if theta.max() >= 2:
        raise ValueError(f"dt={dt} violates the leapfrog stability limit")
    return 2 * np.arcsin(theta / 2)


def leapfrog_power(basis: SpectralBasis, a: np.ndarray, b: np.ndarray, n: int,
                   dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``n`` linear leapfrog steps to modal coefficients ``(a, b)``.

    Each mode evolves by ``A^n = cos(nφ) I + sin(nφ)/sin(φ) (A - cos(φ) I)``,
    ``A`` being the one-step kick-drift-kick matrix; ``n`` may be negative.
    """
    phi = leapfrog_frequencies(basis, dt)
    mu = basis.mu
    cn, sn = np.cos(n * phi), np.sin(n * phi) / np.sin(phi)
    # A - cos(φ) I has zero diagonal: off-diagonals dt and -mu dt (1 - dt^2 mu / 4).
    return cn * a + sn * dt * b, cn * b - sn * mu * dt * (1 - dt**2 * mu / 4) * a


def discrete_linear_propagate(basis: SpectralBasis, state0: FieldState, n: int,
                              dt: float) -> FieldState:
    """``n`` linear leapfrog steps in closed form (``n`` may be negative)."""
    a, b = leapfrog_power(basis, basis.coefficients(state0.u), basis.coefficients(state0.v),
                          n, dt)
    return FieldState(state0.t + n * dt, basis.synthesize(a), basis.synthesize(b))


def _trapezoid_weights(n: int, ds: float) -> np.ndarray:
    w = np.full(n, ds)
    if n > 0:
        w[0] = w[-1] = ds / 2
    if n == 1:
        w[0] = 0.0
    return w


def pair_norm(basis: SpectralBasis, a: np.ndarray, b: np.ndarray, s: float) -> float:
    """``Ḣ^s × Ḣ^(s-1)`` norm from modal coefficients of ``(u, u_t)``."""
    mu = basis.mu
    return math.sqrt(basis.grid.omega * float(np.sum(mu**s * a**2 + mu ** (s - 1) * b**2)))


def duhamel_residual(traj: Trajectory, basis: SpectralBasis, t_index: int, *,
                     max_spacing: float = 0.05, relative: bool = False) -> float:
    """Critical-norm mismatch between snapshot ``t_index`` and the Duhamel formula
    built from the initial snapshot and trapezoid quadrature of ``F(u(s))``."""
    if traj.forced:
        raise ValueError("Duhamel check needs an unforced trajectory")
    if traj.spacing > max_spacing:
        raise ValueError(f"snapshot spacing {traj.spacing:.3g} exceeds {max_spacing:.3g}")
    s_c = traj.params.s_c
    t0, t = traj.times[0], traj.times[t_index]
    w = basis.freq
    lin = linear_propagate(basis, traj[0], t - t0)
    a = basis.coefficients(lin.u)
    b = basis.coefficients(lin.v)
    if traj.nonlinear and t_index > 0:
        F = basis.coefficients(nonlinearity(traj.U[: t_index + 1], traj.params))
        lag = (t - traj.times[: t_index + 1])[:, None] * w
        q = _trapezoid_weights(t_index + 1, traj.spacing)[:, None]
        a = a - np.sum(q * np.sin(lag) * F, axis=0) / w
        b = b - np.sum(q * np.cos(lag) * F, axis=0)
    da = a - basis.coefficients(traj.U[t_index])
    db = b - basis.coefficients(traj.V[t_index])
    res = pair_norm(basis, da, db, s_c)
    if relative:
        scale = pair_norm(basis, basis.coefficients(traj.U[0]),
                          basis.coefficients(traj.V[0]), s_c)
        return res / scale if scale > 0 else res
    return res


def evolve_split(
    state0: FieldState,
    params: ModelParams,
    grid: RadialGrid,
    T: float,
    dt: float,
    record_stride: int = 1,
    *,
    nonlinear: bool = True,
    threshold: float = BLOWUP_THRESHOLD,
) -> tuple[Trajectory, np.ndarray, np.ndarray]:
    """Leapfrog run carried as ``u = u_free + z``.

    ``u_free`` is the linear leapfrog orbit of the data and ``z`` the nonlinear
    remainder, stepped with the same kicks. The sum is the ordinary leapfrog
    orbit, but ``z`` keeps full relative precision even when it is many orders
    of magnitude below the data (small-data scattering). Returns the trajectory
    of ``u`` and the recorded remainder snapshots ``(Z, Zv)``.
    """
    n_steps = int(round(T / dt))
    f, fv = state0.u.copy(), state0.v.copy()
    z, zv = np.zeros_like(f), np.zeros_like(f)
    af = laplacian_apply(grid, f)
    az = -nonlinearity(f, params) if nonlinear else np.zeros_like(f)
    times, U, V, Z, Zv = [state0.t], [f.copy()], [fv.copy()], [z.copy()], [zv.copy()]
    traj = Trajectory(params, grid, dt, record_stride, None, None, None, nonlinear=nonlinear)
    half = 0.5 * dt
    for n in range(1, n_steps + 1):
        t = state0.t + n * dt
        fv += half * af
        zv += half * az
        f += dt * fv
        z += dt * zv
        af = laplacian_apply(grid, f)
        az = laplacian_apply(grid, z)
        if nonlinear:
            az -= nonlinearity(f + z, params)
        fv += half * af
        zv += half * az
        if not (np.max(np.abs(f + z)) <= threshold):
            traj.overflow_halt = True
            traj.halt_time = t
            break
        if n % record_stride == 0:
            times.append(t)
            U.append(f + z)
            V.append(fv + zv)
            Z.append(z.copy())
            Zv.append(zv.copy())
    traj.times, traj.U, traj.V = np.array(times), np.array(U), np.array(V)
    return traj, np.array(Z), np.array(Zv)

"""Scalar observables of a field state or trajectory.

Spatial integrals carry the angular factor, so every number here is an
integral over R^d. Inequalities of the ``≲`` kind are never asserted here;
the functions return both sides and let callers look at the ratio.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .evolve import FieldState, Trajectory, _trapezoid_weights, nonlinearity, pair_norm
from .exponents import ModelParams, morawetz_exponent
from .grid import RadialGrid, SpectralBasis, _face_conductance, laplacian_apply


class EnergyParts(NamedTuple):
    total: float
    kinetic: float
    gradient: float
    potential: float


def energy(state: FieldState, grid: RadialGrid, params: ModelParams) -> EnergyParts:
    """Discrete energy; ``potential`` carries the sign of the nonlinearity."""
    u, v = state.u, state.v
    kinetic = 0.5 * grid.integrate(v**2)
    gradient = -0.5 * grid.integrate(u * laplacian_apply(grid, u))
    potential = params.sign * grid.integrate(np.abs(u) ** (params.p + 2)) / (params.p + 2)
    return EnergyParts(kinetic + gradient + potential, kinetic, gradient, potential)


def _spacetime_density(traj: Trajectory, t_lo: float, t_hi: float, density):
    if not t_hi > t_lo:
        raise ValueError(f"empty interval [{t_lo}, {t_hi}]")
    eps = 1e-9 * max(1.0, abs(t_hi))
    if t_lo < traj.times[0] - eps or t_hi > traj.times[-1] + eps:
        raise ValueError(f"[{t_lo}, {t_hi}] outside recorded range "
                         f"[{traj.times[0]}, {traj.times[-1]}]")
    sel = np.flatnonzero((traj.times >= t_lo - eps) & (traj.times <= t_hi + eps))
    per_time = np.array([density(i) for i in sel])
    return float(np.dot(_trapezoid_weights(len(sel), traj.spacing), per_time))


def scattering_size(traj: Trajectory, t_lo: Optional[float] = None,
                    t_hi: Optional[float] = None) -> float:
    """Spacetime ``L^{(d+1)p/2}`` norm over the recorded snapshots in ``[t_lo, t_hi]``."""
    t_lo = traj.times[0] if t_lo is None else t_lo
    t_hi = traj.times[-1] if t_hi is None else t_hi
    q = (traj.grid.d + 1) * traj.params.p / 2
    total = _spacetime_density(traj, t_lo, t_hi,
                               lambda i: traj.grid.integrate(np.abs(traj.U[i]) ** q))
    return total ** (1 / q)


def critical_norms(basis: SpectralBasis, state: FieldState, params: ModelParams):
    """``(‖u‖_{Ḣ^{s_c}}, ‖u_t‖_{Ḣ^{s_c-1}})``."""
    s_c = params.s_c
    a = basis.coefficients(state.u)
    b = basis.coefficients(state.v)
    om = basis.grid.omega
    return (math.sqrt(om * float(np.sum(basis.mu**s_c * a**2))),
            math.sqrt(om * float(np.sum(basis.mu ** (s_c - 1) * b**2))))


def critical_pair_norm(basis: SpectralBasis, state: FieldState, params: ModelParams) -> float:
    return pair_norm(basis, basis.coefficients(state.u), basis.coefficients(state.v), params.s_c)


# --- Morawetz ---------------------------------------------------------------

_MAX_PSI2 = 15 / 8  # max |ψ''| of the quintic transition


@dataclass(frozen=True)
class MorawetzWeight:
    """``a(x) = R ψ(|x|/R)`` with ψ(s) = s on [0, 1], ψ = 3/2 on [2, ∞).

    On [1, 2], ψ' = 1 - S(s - 1) with S the quintic smoothstep, so a is C^3
    and ψ(2) = 1 + ∫_0^1 (1 - S) = 3/2.
    """

    R: float
    d: int

    def _tau(self, r):
        s = np.asarray(r, dtype=float) / self.R
        return s, np.clip(s - 1, 0.0, 1.0), (s > 1) & (s < 2)

    def a(self, r):
        s, tau, mid = self._tau(r)
        inner = 1 + tau - (tau**6 - 3 * tau**5 + 2.5 * tau**4)
        return self.R * np.where(s <= 1, s, np.where(mid, inner, 1.5))

    def da(self, r):
        s, tau, mid = self._tau(r)
        smooth = 6 * tau**5 - 15 * tau**4 + 10 * tau**3
        return np.where(s <= 1, 1.0, np.where(mid, 1 - smooth, 0.0))

    def d2a(self, r):
        _, tau, mid = self._tau(r)
        return np.where(mid, -30 * tau**2 * (tau - 1) ** 2, 0.0) / self.R

    def d3a(self, r):
        _, tau, mid = self._tau(r)
        return np.where(mid, -(120 * tau**3 - 180 * tau**2 + 60 * tau), 0.0) / self.R**2

    def d4a(self, r):
        _, tau, mid = self._tau(r)
        return np.where(mid, -(360 * tau**2 - 360 * tau + 60), 0.0) / self.R**3

    def lap(self, r):
        """``Δa = a'' + (d-1) a'/r``."""
        r = np.asarray(r, dtype=float)
        return self.d2a(r) + (self.d - 1) * self.da(r) / r

    def bilap(self, r):
        """``ΔΔa`` away from the origin (pointwise, piecewise smooth)."""
        r = np.asarray(r, dtype=float)
        k = self.d - 1
        g1 = self.d3a(r) + k * (self.d2a(r) / r - self.da(r) / r**2)
        g2 = self.d4a(r) + k * (self.d3a(r) / r - 2 * self.d2a(r) / r**2
                                + 2 * self.da(r) / r**3)
        return g2 + k * g1 / r


def morawetz_weight(R: float, d: int) -> MorawetzWeight:
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    return MorawetzWeight(float(R), int(d))


def _skew_half(grid: RadialGrid, weight: MorawetzWeight) -> np.ndarray:
    """Face coefficients of the skew part of ``a'∂_r + Δa/2``."""
    alpha = grid.faces ** (grid.d - 1) * weight.da(grid.faces)
    return 0.5 * alpha


def _virial(grid: RadialGrid, weight: MorawetzWeight, u: np.ndarray) -> np.ndarray:
    """``W (a' ∂_r + Δa/2) u`` discretised as an exactly antisymmetric matrix."""
    c = _skew_half(grid, weight)
    out = np.zeros_like(u)
    out[..., :-1] += c[1:-1] * u[..., 1:]
    out[..., 1:] -= c[1:-1] * u[..., :-1]
    return out


def morawetz_functional(state: FieldState, grid: RadialGrid, weight: MorawetzWeight) -> float:
    """``M = -∫ a' u_t u_r + ½ Δa u u_t dx``.

    The operator ``a'∂_r + ½Δa`` is skew-adjoint, and it is discretised so that it
    stays exactly skew-adjoint in the grid inner product. That keeps the
    semi-discrete identity ``dM/dt = morawetz_rate`` exact.
    """
    return -grid.omega * float(np.dot(_virial(grid, weight, state.u), state.v))


def morawetz_rate(state: FieldState, grid: RadialGrid, weight: MorawetzWeight,
                  params: ModelParams) -> float:
    """Exact time derivative of the discrete :func:`morawetz_functional` along the
    semi-discrete flow; a consistent discretisation of
    ``∫ a'' u_r² + sign·p/(2(p+2)) Δa |u|^{p+2} - ¼ ΔΔa u²``."""
    Ku = _virial(grid, weight, state.u)
    accel = laplacian_apply(grid, state.u) - nonlinearity(state.u, params)
    return -grid.omega * float(np.dot(Ku, accel))


def _centered_gradient(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    g = np.gradient(u, grid.h, edge_order=2)
    return g


def morawetz_rate_pointwise(state: FieldState, grid: RadialGrid, weight: MorawetzWeight,
                            params: ModelParams) -> float:
    """Direct quadrature of the rate integrand with closed-form weight derivatives.

    In d = 3, ``Δa = 2/|x|`` near the origin so ``-ΔΔa = 8π δ_0``; that point mass
    is added explicitly using the extrapolated ``u(0)``.
    """
    r, u = grid.nodes, state.u
    ur = _centered_gradient(grid, u)
    p = params.p
    dens = (weight.d2a(r) * ur**2
            + params.sign * p / (2 * (p + 2)) * weight.lap(r) * np.abs(u) ** (p + 2)
            - 0.25 * weight.bilap(r) * u**2)
    out = grid.integrate(dens)
    if grid.d == 3:
        u0 = (9 * u[0] - u[1]) / 8
        out += 2 * math.pi * u0**2
    return out


class MorawetzBalance(NamedTuple):
    delta_M: float
    integral_rate: float
    max_abs_M: float

    @property
    def defect(self) -> float:
        return abs(self.delta_M - self.integral_rate)


def morawetz_balance(traj: Trajectory, weight: MorawetzWeight,
                     i1: int = 0, i2: Optional[int] = None) -> MorawetzBalance:
    """``M(t2) - M(t1)`` against trapezoid quadrature of the rate over the snapshots."""
    i2 = len(traj) - 1 if i2 is None else i2
    grid, params = traj.grid, traj.params
    M = np.array([morawetz_functional(traj[i], grid, weight) for i in range(i1, i2 + 1)])
    rate = np.array([morawetz_rate(traj[i], grid, weight, params) for i in range(i1, i2 + 1)])
    integral = float(np.dot(_trapezoid_weights(len(rate), traj.spacing), rate))
    return MorawetzBalance(float(M[-1] - M[0]), integral, float(np.abs(M).max()))


@dataclass(frozen=True)
class MorawetzReport:
    lhs: float
    rhs: float
    ratio: float
    T: float
    exponent: float
    sup_norm: float


def morawetz_lhs(traj: Trajectory, T: Optional[float] = None) -> float:
    """``∫_0^T ∫_{|x| ≤ T} |u|^{p+2} / |x| dx dt``."""
    t0 = traj.times[0]
    T = traj.times[-1] - t0 if T is None else T
    grid, p = traj.grid, traj.params.p
    inside = grid.nodes <= T
    dens = lambda i: grid.integrate(np.where(inside, np.abs(traj.U[i]) ** (p + 2) / grid.nodes, 0))
    return _spacetime_density(traj, t0, t0 + T, dens)


def morawetz_report(traj: Trajectory, params: ModelParams, basis: SpectralBasis,
                    support_threshold: float = 1e-6) -> MorawetzReport:
    T = float(traj.times[-1] - traj.times[0])
    grid = traj.grid
    r0 = support_radius(traj[0], grid, support_threshold)
    if T > grid.R_max - r0:
        raise ValueError(f"T={T} exceeds R_max - support = {grid.R_max - r0:.3g}")
    lhs = morawetz_lhs(traj) if T > 0 else 0.0
    B = max(critical_pair_norm(basis, traj[i], params) for i in range(len(traj)))
    exponent = morawetz_exponent(params.d, params.p)
    rhs = T**exponent * (B**2 + B ** (params.p + 2)) if T > 0 else 0.0
    ratio = lhs / rhs if rhs > 0 else 0.0
    return MorawetzReport(lhs, rhs, ratio, T, exponent, B)


# --- support, annulus, frequency scale --------------------------------------

def support_radius(state: FieldState, grid: RadialGrid, threshold: float = 1e-6) -> float:
    """Outermost node where ``|u| + |u_t|`` exceeds ``threshold`` times its maximum."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    amp = np.abs(state.u) + np.abs(state.v)
    peak = amp.max()
    if not peak > 0:
        return 0.0
    idx = np.flatnonzero(amp > threshold * peak)
    return float(grid.nodes[idx[-1]])


def energy_density_cells(state: FieldState, grid: RadialGrid, params: ModelParams,
                         mask: np.ndarray) -> float:
    """Energy of the cells in ``mask``: kinetic and potential per cell, gradient on
    the faces joining two selected cells (so the full mask gives :func:`energy`
    up to the wall face)."""
    u, v = state.u, state.v
    w = grid.weights
    cell = w * (0.5 * v**2 + params.sign * np.abs(u) ** (params.p + 2) / (params.p + 2))
    cond = _face_conductance(grid)[1:-1]
    face = 0.5 * cond * np.diff(u) ** 2
    both = mask[:-1] & mask[1:]
    return grid.omega * (float(cell[mask].sum()) + float(face[both].sum()))


def annulus_energy(state: FieldState, grid: RadialGrid, params: ModelParams,
                   eps: float, t: float) -> float:
    """Energy in ``{t + eps <= |x| <= 1/eps - t}``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    lo, hi = t + eps, 1 / eps - t
    if not lo < hi:
        raise ValueError(f"empty annulus [{lo}, {hi}]")
    mask = (grid.nodes >= lo) & (grid.nodes <= hi)
    return energy_density_cells(state, grid, params, mask)


def _scale_distribution(basis: SpectralBasis, state: FieldState, params: ModelParams):
    s_c = params.s_c
    a = basis.coefficients(state.u)
    b = basis.coefficients(state.v)
    return basis.mu**s_c * a**2 + basis.mu ** (s_c - 1) * b**2


def frequency_scale_proxy(basis: SpectralBasis, state: FieldState, params: ModelParams) -> float:
    """Median frequency of the ``Ḣ^{s_c} × Ḣ^{s_c-1}`` spectral distribution."""
    m = _scale_distribution(basis, state, params)
    total = m.sum()
    if not total > 0:
        raise ValueError("frequency scale undefined for the zero state")
    k = int(np.searchsorted(np.cumsum(m), 0.5 * total))
    return float(basis.freq[min(k, len(m) - 1)])


def tail_mass(basis: SpectralBasis, grid: RadialGrid, state: FieldState, params: ModelParams,
              C: float, N_t: float) -> float:
    """Larger of the spatial tail ``|x| >= C/N`` and frequency tail ``|ξ| >= C N``,
    each as a fraction of the full critical mass (sharp cutoffs).

    The spatial tail is the share of ``||∇|^{s_c} u|² + ||∇|^{s_c-1} u_t|²`` lying
    outside the ball.
    """
    if not (C > 0 and N_t > 0):
        raise ValueError("C and N_t must be positive")
    m = _scale_distribution(basis, state, params)
    total = m.sum()
    if not total > 0:
        return 0.0
    # Apply the derivatives first, then restrict in space: cutting u itself would
    # create a jump whose Ḣ^{s_c} norm is not finite.
    s_c = params.s_c
    du = basis.apply(state.u, basis.mu ** (s_c / 2))
    dv = basis.apply(state.v, basis.mu ** ((s_c - 1) / 2))
    dens = du**2 + dv**2
    far = grid.nodes >= C / N_t
    spatial = float(np.dot(grid.weights, np.where(far, dens, 0.0)) / np.dot(grid.weights, dens))
    spectral = m[basis.freq >= C * N_t].sum() / total
    return float(max(spatial, spectral))


class Concentration(NamedTuple):
    lhs: float
    rhs: float


def potential_concentration(traj: Trajectory, params: ModelParams, C: float,
                            N_series: Sequence[float], t_lo: Optional[float] = None,
                            t_hi: Optional[float] = None) -> Concentration:
    """Both sides of the potential-energy concentration bound over ``[t_lo, t_hi]``:
    ``∫∫_{|x| <= C/N(t)} N |u|^{p+2}`` and ``∫ N^{4/p - (d-3)}``."""
    N_series = np.asarray(N_series, dtype=float)
    if N_series.shape != traj.times.shape:
        raise ValueError("N_series must align with the snapshot times")
    t_lo = traj.times[0] if t_lo is None else t_lo
    t_hi = traj.times[-1] if t_hi is None else t_hi
    i1 = traj.index_of(t_lo)
    if t_hi - t_lo < 1 / N_series[i1]:
        raise ValueError(f"interval shorter than 1/N(t1) = {1 / N_series[i1]:.3g}")
    grid, p, d = traj.grid, params.p, params.d

    def near(i):
        inside = grid.nodes <= C / N_series[i]
        return N_series[i] * grid.integrate(np.where(inside, np.abs(traj.U[i]) ** (p + 2), 0))

    lhs = _spacetime_density(traj, t_lo, t_hi, near)
    rhs = _spacetime_density(traj, t_lo, t_hi, lambda i: N_series[i] ** (4 / p - (d - 3)))
    return Concentration(lhs, rhs)


# --- per-snapshot record ------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E_total: float
    E_kin: float
    E_grad: float
    E_pot: float
    Hsc_u: float
    Hsc1_v: float
    M: float
    dMdt: float
    support_r: float
    N_proxy: float
    tail_eta: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> tuple:
        return astuple(self)


def diagnostics_record(state: FieldState, grid: RadialGrid, basis: SpectralBasis,
                       params: ModelParams, weight: MorawetzWeight, tail_C: float = 1.0,
                       support_threshold: float = 1e-6) -> DiagnosticsRecord:
    E = energy(state, grid, params)
    hu, hv = critical_norms(basis, state, params)
    if hu > 0 or hv > 0:
        N_t = frequency_scale_proxy(basis, state, params)
        eta = tail_mass(basis, grid, state, params, tail_C, N_t)
    else:
        N_t = eta = 0.0
    return DiagnosticsRecord(
        state.t, E.total, E.kinetic, E.gradient, E.potential, hu, hv,
        morawetz_functional(state, grid, weight), morawetz_rate(state, grid, weight, params),
        support_radius(state, grid, support_threshold), N_t, eta,
    )

"""Radial grid, flux-form radial Laplacian and its weighted eigenbasis.

Radial functions on R^d are sampled at cell centres ``r_j = (j + 1/2) h``.
The quadrature weights ``w_j = r_j^(d-1) h`` discretise ``∫ f r^(d-1) dr``;
every norm returned to callers additionally carries the unit-sphere area
``ω_{d-1}`` so that it equals the corresponding norm on all of R^d.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

log = logging.getLogger(__name__)

MAX_BASIS_N = 4096


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    R_max: float
    N: int
    d: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    faces: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = self.R_max / self.N
        nodes = (np.arange(self.N) + 0.5) * h
        faces = np.arange(self.N + 1) * h
        for name, val in (("h", h), ("nodes", nodes), ("weights", nodes ** (self.d - 1) * h),
                          ("faces", faces)):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def omega(self) -> float:
        return sphere_area(self.d)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Weighted inner product without the angular factor."""
        return float(np.dot(self.weights * f, g))

    def integrate(self, density: np.ndarray) -> float:
        """``∫_{R^d} density dx`` for a radial density sampled on the nodes."""
        return self.omega * float(np.dot(self.weights, density))

    def _check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} samples, got {f.shape[-1]}")
        return f


def build_grid(R_max: float, N: int, d: int, *, min_cells: int = 1) -> RadialGrid:
    if not R_max > 0:
        raise ValueError(f"R_max must be positive, got {R_max}")
    if N < min_cells:
        raise ValueError(f"need at least {min_cells} cells, got {N}")
    if not 3 <= d <= 9:
        raise ValueError(f"simulation supports 3 <= d <= 9, got {d}")
    return RadialGrid(float(R_max), int(N), int(d))


def _face_conductance(grid: RadialGrid) -> np.ndarray:
    """``r_{j+1/2}^(d-1) / h`` per face; the outer face sees the wall at half distance.

    The ghost value beyond the last cell is the odd reflection ``-f_{N-1}`` so the
    zero sits exactly at ``R_max`` (a plain zero ghost would put it at ``R_max + h/2``).
    """
    cond = grid.faces ** (grid.d - 1) / grid.h
    cond[-1] *= 2
    return cond


def _stencil(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper flux coefficients of L_h; row j couples to j-1 and j+1."""
    cond = _face_conductance(grid)
    return cond[:-1] / grid.weights, cond[1:] / grid.weights


def laplacian_apply(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    """Conservative radial Laplacian with Dirichlet ghost value at ``R_max``.

    Works on the last axis, so a stack of fields can be passed at once.
    """
    f = grid._check(f)
    lo, up = _stencil(grid)
    out = -(lo + up) * f
    out[..., 1:] += lo[1:] * f[..., :-1]
    out[..., :-1] += up[:-1] * f[..., 1:]
    return out


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of ``-L_h``; columns of ``V`` are weighted-orthonormal."""

    grid: RadialGrid
    mu: np.ndarray
    V: np.ndarray

    @property
    def freq(self) -> np.ndarray:
        """Modal frequencies ``sqrt(mu_k)``."""
        return np.sqrt(self.mu)

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Modal coefficients ``⟨f, v_k⟩``; accepts stacks along leading axes."""
        f = self.grid._check(f)
        return (f * self.grid.weights) @ self.V

    def synthesize(self, c: np.ndarray) -> np.ndarray:
        return c @ self.V.T

    def apply(self, f: np.ndarray, multiplier) -> np.ndarray:
        """Apply ``m(-L_h)`` given the multiplier evaluated on ``mu``."""
        return self.synthesize(self.coefficients(f) * multiplier)


def build_basis(grid: RadialGrid) -> SpectralBasis:
    if grid.N > MAX_BASIS_N:
        raise ValueError(f"dense eigensolve limited to N <= {MAX_BASIS_N}, got {grid.N}")
    t0 = time.perf_counter()
    # W L_h is symmetric; W^{1/2} L_h W^{-1/2} is its symmetric similarity form.
    w = grid.weights
    cond = _face_conductance(grid)
    off = cond[1:-1] / np.sqrt(w[:-1] * w[1:])
    diag = (cond[:-1] + cond[1:]) / w
    try:
        mu, Y = eigh_tridiagonal(diag, -off)
    except np.linalg.LinAlgError as exc:
        ratio = diag.max() / diag.min()
        raise np.linalg.LinAlgError(
            f"eigensolve failed for N={grid.N}, d={grid.d} (diagonal ratio {ratio:.3g})"
        ) from exc
    V = Y / np.sqrt(w)[:, None]
    mu.setflags(write=False)
    V.setflags(write=False)
    log.info("basis N=%d d=%d built in %.3fs", grid.N, grid.d, time.perf_counter() - t0)
    return SpectralBasis(grid, mu, V)


def sobolev_norm(basis: SpectralBasis, f: np.ndarray, s: float) -> float:
    """Discrete ``‖|∇|^s f‖_{L^2(R^d)}`` through the spectrum of ``-L_h``."""
    if s < -1:
        raise ValueError(f"s must be >= -1, got {s}")
    c = basis.coefficients(f)
    return math.sqrt(basis.grid.omega * float(np.sum(basis.mu**s * c**2)))


def lp_norm(grid: RadialGrid, f: np.ndarray, q: float) -> float:
    f = np.abs(grid._check(f))
    if math.isinf(q):
        return float(f.max(initial=0.0))
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return grid.integrate(f**q) ** (1 / q)


def gershgorin_bound(grid: RadialGrid) -> float:
    """Upper bound on the spectrum of ``-L_h``.

    Interior rows give ``4d/h^2``; the first cell's row sum is ``2^d/h^2``, which
    dominates from d = 5 on.
    """
    return max(4 * grid.d, 2**grid.d) / grid.h**2


def weighted_l2(grid: RadialGrid, f: np.ndarray) -> float:
    return math.sqrt(grid.integrate(np.asarray(f) ** 2))

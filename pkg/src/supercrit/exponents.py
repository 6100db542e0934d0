"""Scaling exponents, admissibility and parameter windows for
``u_tt - Δu ± |u|^p u = 0`` on R^d.

Everything here is plain float arithmetic; ``math.inf`` stands for an
infinite Lebesgue exponent (``1/inf == 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect

INF = math.inf

DEFOCUSING = 1
FOCUSING = -1


def _inv(q: float) -> float:
    return 0.0 if math.isinf(q) else 1.0 / q


def critical_regularity(d: int, p: float) -> float:
    """Sobolev index ``d/2 - 2/p`` left invariant by the scaling symmetry."""
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    if not p > 0:
        raise ValueError(f"power must be positive, got {p}")
    return d / 2 - 2 / p


def p_window(d: int) -> tuple[float, float]:
    """Open interval of powers covered by the spacetime-bound theorem."""
    if d < 3:
        raise ValueError(f"dimension must be >= 3, got {d}")
    p_lo = 4 / (d - 2)
    if d == 3:
        return p_lo, INF
    if d <= 6:
        return p_lo, 4 / (d - 3)
    disc = d**2 * (d - 1) ** 2 - 16 * (d + 1) ** 2
    assert disc >= 0, f"negative discriminant {disc} at d={d}"
    p_hi = (d * (d - 1) - math.sqrt(disc)) / (2 * (d + 1))
    assert p_lo < p_hi
    return p_lo, p_hi


def is_admissible(q: float, r: float, d: int) -> bool:
    """Wave-admissibility of the pair ``(q, r)`` in dimension ``d``."""
    if not (2 <= q <= INF and 2 <= r < INF):
        return False
    return _inv(q) + (d - 1) / (2 * r) <= (d - 1) / 4 + 1e-14


def scaling_gamma(q: float, r: float, d: int, p: float) -> float:
    """Derivative order ``γ`` with ``1/q + d/r = 2/p + γ``."""
    return _inv(q) + d * _inv(r) - 2 / p


def morawetz_exponent(d: int, p: float) -> float:
    """Growth exponent ``d - 2 - 4/p`` of the Morawetz bound, computed as a single
    quotient so that e.g. d=3, p=6 gives the double nearest 1/3."""
    return (p * (d - 2) - 4) / p


def smoothness_margin(d: int, p: float) -> float:
    """``p + 1 - (1/(d+1) + p/2) - s_c``; positive inside the d >= 7 window."""
    return p + 1 - (1 / (d + 1) + p / 2) - critical_regularity(d, p)


def margin_root(d: int, xtol: float = 1e-13) -> float:
    """Bisection root of :func:`smoothness_margin` on ``(4/(d-2), 2)``."""
    p_lo = 4 / (d - 2)
    return bisect(lambda p: smoothness_margin(d, p), p_lo, 2.0, xtol=xtol)


@dataclass(frozen=True)
class ModelParams:
    d: int
    p: float
    sign: int = DEFOCUSING

    def __post_init__(self):
        if self.d < 3:
            raise ValueError(f"dimension must be >= 3, got {self.d}")
        if not self.p > 0:
            raise ValueError(f"power must be positive, got {self.p}")
        if self.sign not in (DEFOCUSING, FOCUSING):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def s_c(self) -> float:
        return critical_regularity(self.d, self.p)

    @property
    def supercritical(self) -> bool:
        return self.p > 4 / (self.d - 2)

    @property
    def theorem_window(self) -> bool:
        lo, hi = p_window(self.d)
        return lo < self.p < hi

    @property
    def focusing(self) -> bool:
        return self.sign == FOCUSING


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    gamma: float

    @classmethod
    def for_model(cls, q: float, r: float, params: ModelParams) -> "AdmissiblePair":
        if not is_admissible(q, r, params.d):
            raise ValueError(f"({q}, {r}) is not wave-admissible in d={params.d}")
        return cls(q, r, scaling_gamma(q, r, params.d, params.p))


@dataclass(frozen=True)
class XYExponents:
    deriv_order: float
    time_exp_X: float
    space_exp_X: float
    time_exp_Y: float
    space_exp_Y: float


def xy_exponents(d: int, p: float) -> XYExponents:
    """Exponents of the bootstrap spaces X (solution) and Y (nonlinearity)."""
    space_X = 2 * (d + 1) / (d - 1)
    space_Y = 2 * (d + 1) / (d + 3)
    if d <= 6:
        return XYExponents(critical_regularity(d, p) - 0.5, space_X, space_X, space_Y, space_Y)
    den_X = 4 * (d + 1) + p**2 * (d + 1) - p * d * (d - 1)
    den_Y = 4 * (d + 1) + p**2 * (d + 1) - p * (d**2 - d - 4)
    if den_X <= 0 or den_Y <= 0:
        raise ValueError(
            f"time exponent denominators X={den_X:.6g}, Y={den_Y:.6g} must be positive; "
            f"p={p} lies outside the d={d} window {p_window(d)}"
        )
    num = 2 * p * (d + 1)
    return XYExponents(p / 2, num / den_X, space_X, num / den_Y, space_Y)


def sample_pairs(d: int) -> list[tuple[float, float]]:
    """A few admissible pairs worth tabulating: energy, X-norm and sharp endpoints."""
    pairs = [(INF, 2.0), (2 * (d + 1) / (d - 1),) * 2]
    if d > 3:
        pairs.append((2.0, 2 * (d - 1) / (d - 3)))
    pairs.append((4.0, 2 * (d - 1) / (d - 2)))
    pairs = list(dict.fromkeys(pairs))
    return [pr for pr in pairs if is_admissible(*pr, d)]


def exponent_table(d: int, p: float | None = None) -> dict:
    lo, hi = p_window(d)
    out: dict = {"d": d, "p_window": [lo, hi]}
    if p is not None:
        out["p"] = p
        out["s_c"] = critical_regularity(d, p)
        out["in_window"] = lo < p < hi
        out["smoothness_margin"] = smoothness_margin(d, p)
        try:
            xy = xy_exponents(d, p)
            out["xy"] = {k: getattr(xy, k) for k in XYExponents.__dataclass_fields__}
        except ValueError as exc:
            out["xy"] = {"error": str(exc)}
    out["pairs"] = [
        {"q": q, "r": r, "gamma": None if p is None else scaling_gamma(q, r, d, p)}
        for q, r in sample_pairs(d)
    ]
    return out

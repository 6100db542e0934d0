import math

import numpy as np
import pytest

from conftest import gaussian
from supercrit.evolve import FieldState, steps_for
from supercrit.experiments import (
    blowup_contrast,
    dispersal_probe,
    scattering_detect,
    stability_experiment,
    y_norm,
)
from supercrit.exponents import ModelParams
from supercrit.grid import build_basis, build_grid

FOCUSING = ModelParams(3, 6.0, -1)


@pytest.fixture(scope="module")
def wide():
    g = build_grid(40.0, 1024, 3)
    return g, build_basis(g)


def blowup_dt(basis, amplitude, params):
    # resolve both the grid and the nonlinear frequency (p+1)|u|^p of the peak
    return 0.5 / math.sqrt(basis.mu[-1] + (params.p + 1) * amplitude**params.p)


def test_scattering_linear_is_exact(wide, std_params):
    g, b = wide
    dt, _ = steps_for(2.0, g.h / 4, 1)
    rep = scattering_detect(std_params, gaussian(g, 0.5), g, b, [2, 4, 8], dt, nonlinear=False)
    assert max(rep.deltas) < 1e-12 * rep.data_norm


def test_scattering_small_data(wide, std_params):
    g, b = wide
    dt, _ = steps_for(2.0, g.h / 4, 1)
    rep = scattering_detect(std_params, gaussian(g, 0.01), g, b, [2, 4, 8, 16], dt)
    d = rep.deltas
    assert all(y < x for x, y in zip(d, d[1:]))
    assert rep.final_relative < 1e-4
    assert rep.to_dict()["times"] == [2.0, 4.0, 8.0, 16.0]


def test_scattering_preconditions(wide, std_params):
    g, b = wide
    with pytest.raises(ValueError):
        scattering_detect(std_params, FieldState.zeros(g), g, b, [2, 4], 0.01)
    with pytest.raises(ValueError):
        scattering_detect(FOCUSING, gaussian(g, 0.01), g, b, [2, 4], 0.01)
    with pytest.raises(ValueError):
        scattering_detect(std_params, gaussian(g, 0.01), g, b, [2, 39], 0.01)


def test_y_norm_scales_with_duration(basis_std, std_params):
    e = np.exp(-0.5 * basis_std.grid.nodes**2)
    y1, y2 = (y_norm(basis_std, e, T, std_params) for T in (1.0, 2.0))
    assert y2 / y1 == pytest.approx(2 ** (3 / 4))
    assert y_norm(basis_std, 3 * e, 1.0, std_params) == pytest.approx(3 * y1)


def test_stability_ladder(grid_std, basis_std, std_params):
    base = gaussian(grid_std, 0.1)
    dt, _ = steps_for(5.0, grid_std.h / 4, 4)
    rep = stability_experiment(std_params, base, grid_std, basis_std,
                               [0.0, 1e-3, 1e-2, 1e-1], None, 5.0, dt)
    assert rep.D[0] == 0.0
    assert rep.monotone and rep.slope >= 0.8
    forced = stability_experiment(std_params, base, grid_std, basis_std, [1e-3, 1e-2, 1e-1],
                                  base.u, 5.0, dt)
    assert forced.forcing and forced.monotone
    # the forcing term enters at the same order as the data perturbation
    for eps, d0, d1 in zip(forced.epsilons, rep.D[1:], forced.D):
        assert abs(d1 - d0) < 10 * eps


def test_blowup_focusing(grid_small, basis_small):
    s0 = gaussian(grid_small, 10.0)
    rep = blowup_contrast(FOCUSING, s0, grid_small, basis_small,
                          blowup_dt(basis_small, 10.0, FOCUSING), T_max=1.0)
    assert rep.blowup and rep.t_halt < 1.0
    assert rep.growth > 10
    with pytest.raises(ValueError):
        blowup_contrast(ModelParams(3, 6.0), s0, grid_small, basis_small, 1e-3)


def test_small_focusing_data_does_not_blow_up(grid_small, basis_small):
    s0 = gaussian(grid_small, 1e-3)
    dt, _ = steps_for(10.0, grid_small.h / 2, 1)
    rep = blowup_contrast(FOCUSING, s0, grid_small, basis_small, dt, T_max=10.0,
                          record_stride=50)
    assert not rep.blowup and rep.t_halt is None and "no blowup" in rep.message


def test_dispersal_zero_data(wide, std_params):
    g, b = wide
    rep = dispersal_probe(std_params, FieldState.zeros(g), g, b, 2.0, 0.02, record_stride=5)
    assert not any(rep.N_series) and not any(rep.near_origin_potential)
    assert rep.exponent == 1 / 3


def test_dispersal_growth_and_ratio_refinement(wide, std_params):
    g, b = wide
    reps = []
    for k in (2, 4):
        dt, _ = steps_for(16.0, g.h / k, 4)
        reps.append(dispersal_probe(std_params, gaussian(g), g, b, 16.0, dt, record_stride=4,
                                    horizons=[8.0, 16.0]))
    assert reps[-1].lhs_growth < 2
    r0, r1 = (r.morawetz["ratio"] for r in reps)
    assert abs(r0 / r1 - 1) < 0.05

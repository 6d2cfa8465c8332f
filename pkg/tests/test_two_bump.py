import math

import numpy as np
import pytest

from zeromass.errors import ConfigError
from zeromass.two_bump import (BumpsField, TwoBumpConfig, antipodal_config,
                               build_U, cross_term, epsilon, grad_interaction,
                               mixed_power, near_additivity_check,
                               windowed_mass_sq)

EPS_ROWS = (0.1876991, 0.09385147, 0.04692580, 0.02346290)


def test_config_validation():
    cfg = antipodal_config(8.0, 0.5)
    assert cfg.N == 3
    assert cfg.lambda_minus == 0.5
    with pytest.raises(ConfigError):
        TwoBumpConfig(y0=(2.0, 0.0, 0.0), y=(-1.0, 0.0, 0.0), lam=0.5, R=8.0)
    with pytest.raises(ConfigError):
        TwoBumpConfig(y0=(1.0, 0.0, 0.0), y=(0.0, 1.0, 0.0), lam=0.5, R=8.0)
    with pytest.raises(ConfigError):
        antipodal_config(8.0, 1.5)
    with pytest.raises(ConfigError):
        antipodal_config(0.5, 0.5)


def test_config_mirror():
    cfg = antipodal_config(8.0, 0.3)
    m = cfg.mirrored()
    assert math.isclose(m.lam, 0.7, rel_tol=1e-15)
    assert m.y0 == cfg.y
    assert math.isclose(m.lambda_minus, cfg.lambda_minus, rel_tol=1e-12)


def test_perpendicular_pair_is_rejected_for_quadrature(gs, nl):
    # |y - y0| = 2 admits off-axis pairs, but the axisymmetric grid cannot
    # represent them
    cfg = TwoBumpConfig(y0=(1.0, 0.0, 0.0), y=(0.0, math.sqrt(3.0), 0.0),
                        lam=0.5, R=8.0)
    with pytest.raises(ConfigError):
        build_U(gs.profile, nl, cfg)


def test_zero_scale_bump_dropped(gs, nl):
    fld = BumpsField(gs.profile, nl, centers_z=(-8.0, 8.0), scales=(0.0, 1.0))
    assert fld.scales == (1.0,)
    assert len(fld.centers_z) == 1


def test_epsilon_rows(interaction):
    for row, ref in zip(interaction.rows, EPS_ROWS):
        assert math.isclose(row.epsilon, ref, rel_tol=1e-5)


def test_epsilon_degenerate_lambda(gs, nl):
    assert epsilon(gs.profile, nl, antipodal_config(8.0, 0.0)) == 0.0
    assert epsilon(gs.profile, nl, antipodal_config(8.0, 1.0)) == 0.0


def test_epsilon_swap_symmetry(gs, nl):
    # at lambda = 1/2 both bumps are identical, so the swapped integrand
    # must agree through the independent quadrature route
    cfg = antipodal_config(8.0, 0.5)
    fld = build_U(gs.profile, nl, cfg)
    a = epsilon(gs.profile, nl, cfg, fld=fld)
    b = epsilon(gs.profile, nl, cfg, fld=fld, swap=True)
    assert math.isclose(a, b, rel_tol=1e-10)


def test_interaction_slopes(interaction):
    # epsilon ~ R^-(N-2); the gradient overlap carries the same decay
    assert math.isclose(interaction.eps_fit.slope, -1.0, abs_tol=2e-3)
    assert math.isclose(interaction.grad_fit.slope, -0.9759, abs_tol=1e-3)
    assert interaction.eps_fit.covers(-1.0)


def test_grad_interaction_dual_route(gs, nl, interaction):
    # independent recomputation of the R = 16 row on a finer grid
    cfg = antipodal_config(16.0, 0.5)
    fld = build_U(gs.profile, nl, cfg, h0=0.015)
    fine = grad_interaction(fld)
    row = interaction.rows[1]
    assert math.isclose(fine, row.grad_overlap, rel_tol=5e-3)


def test_cross_term_subordinate(interaction):
    # |cross| / epsilon decreasing in R is the quantitative version of the
    # cross term being higher order than the attraction
    assert interaction.ratio_decreasing
    for row in interaction.rows:
        assert abs(row.cross_over_eps) < 1.0
    assert interaction.fmin_ball >= 0.0


def test_mixed_power_rows(gs, nl, interaction):
    for row in interaction.rows:
        assert row.mixed[(5.0, 1.0)] > 0.0
    fit = interaction.mixed_fits[(5.0, 1.0)]
    # the concentrated-factor route decays at least as fast as epsilon
    assert fit.slope <= interaction.eps_fit.slope + 0.05
    cfg = antipodal_config(8.0, 0.5)
    fld = build_U(gs.profile, nl, cfg)
    with pytest.raises(ConfigError):
        mixed_power(fld, 2.0, 1.0)


def test_windowed_mass_monotone_in_window(gs, nl):
    cfg = antipodal_config(8.0, 0.5)
    fld = build_U(gs.profile, nl, cfg)
    m2 = windowed_mass_sq(fld, 2.0)
    m4 = windowed_mass_sq(fld, 4.0)
    assert 0.0 < m2 < m4


def test_cross_term_vanishes_for_far_pair(gs, nl):
    # the remainder decays like R^-2, one order beyond the attraction term
    cfg = antipodal_config(64.0, 0.5)
    fld = build_U(gs.profile, nl, cfg)
    assert abs(cross_term(fld, nl)) < 2e-3


def test_near_additivity():
    from zeromass.nonlinearity import builtin_model
    nl = builtin_model("rational_asymlinear")
    out = near_additivity_check(nl, n_pairs=10_000)
    assert out["passed"]
    assert out["sigma"] == 1.0
    assert math.isclose(out["C6"], 1.8867, rel_tol=1e-2)
    assert out["holdout_ratio_f"] <= 1.05 * out["C6"]
    assert out["holdout_ratio_F"] <= 1.05 * out["C6"]


def test_weighted_sq_fast_agrees(gs, nl, pot):
    cfg = antipodal_config(8.0, 0.5)
    fld = build_U(gs.profile, nl, cfg)
    slow = fld.weighted_sq(pot.radial.v)
    fast = fld.weighted_sq_fast(pot.radial.v)
    assert math.isclose(slow, fast, rel_tol=1e-6)

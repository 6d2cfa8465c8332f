import math

import numpy as np
import pytest

from zeromass.errors import ConfigError, DomainError, ProjectionError
from zeromass.limit_problem import RadialField, shoot
from zeromass.projection import (project, projection_landscape,
                                 two_bump_projection_scan, xi)

S_STAR_V = 1.1179554258509048
S_SCAN_REF = (1.603025, 1.784997, 1.888026, 1.943545)


def test_limit_projection_is_identity(gs, nl):
    res = project(gs.field(), None, nl)
    assert abs(res.s_star - 1.0) < 1e-8
    assert res.iterations == 0  # closed form, no root finder
    assert res.jv_scaled == 0.0
    assert math.isclose(res.projected_energy, gs.m, rel_tol=1e-10)
    assert res.unique


def test_projection_with_potential(gs, pot, nl):
    res = project(gs.field(), pot, nl)
    assert math.isclose(res.s_star, S_STAR_V, rel_tol=1e-9)
    assert res.iterations > 0
    assert abs(res.jv_scaled) < 1e-8
    assert res.projected_energy > gs.m
    # psi for a single dilated bump against this V is not globally
    # increasing, so the certificate correctly declines
    assert not res.unique
    s_vals = [s for s, _ in res.psi_samples]
    assert len(s_vals) == 32


def test_projection_dilation_covariance(gs, pot, nl):
    base = project(gs.field(), pot, nl)
    moved = project(gs.field().dilate(1.7), pot, nl)
    assert abs(moved.s_star - base.s_star / 1.7) < 1e-8
    assert math.isclose(moved.projected_energy, base.projected_energy,
                        rel_tol=1e-9)


def test_projection_expands_bracket(gs, pot, nl):
    res = project(gs.field(), pot, nl, bracket=(0.9, 1.05))
    assert res.bracket[0] < 0.9 and res.bracket[1] > 1.05
    assert math.isclose(res.s_star, S_STAR_V, rel_tol=1e-9)


def test_xi_derivative_vanishes_at_root(gs, pot, nl):
    val, der = xi(gs.field(), pot, nl, S_STAR_V)
    assert abs(der) < 1e-7
    assert val > 0
    with pytest.raises(DomainError):
        xi(gs.field(), pot, nl, -1.0)


def test_zero_field_rejected(nl, pot):
    prof, _ = shoot(nl, 3, 0.0)
    with pytest.raises(ProjectionError):
        project(RadialField(prof, nl), pot, nl)


def test_two_bump_scan(s_scan):
    for (R, s_star, energy), ref in zip(s_scan, S_SCAN_REF):
        assert math.isclose(s_star, ref, rel_tol=1e-5)
        assert energy > 0
    gaps = [abs(s - 2.0) for _, s, _ in s_scan]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_landscape_invariants(landscape, gs):
    rep = landscape
    assert rep.R == 64.0
    assert math.isclose(rep.p0, gs.m, rel_tol=1e-10)
    assert all(c.ok for c in rep.cells)
    assert len(rep.cells) == 17
    assert math.isclose(rep.max_energy, 10.458731010424252, rel_tol=1e-8)
    assert math.isclose(rep.eta, 0.14391106135715503, rel_tol=1e-6)
    assert math.isclose(rep.endpoint_max, 5.3291545873686905, rel_tol=1e-8)
    assert rep.eta > 0.0  # strict ceiling below 2 p0
    assert rep.endpoint_max < rep.max_energy
    assert math.isclose(rep.min_grad_norm, 3.9912, rel_tol=1e-3)


def test_landscape_geometry(landscape):
    by_lam = {round(c.lam, 6): c for c in landscape.cells}
    assert abs(by_lam[0.0].barycenter_z + 64.05) < 0.3
    assert abs(by_lam[1.0].barycenter_z - 64.05) < 0.3
    assert abs(by_lam[0.5].barycenter_z) < 1e-6
    # the interior maximum sits away from both endpoints
    best = max((c for c in landscape.cells if c.ok), key=lambda c: c.energy)
    assert 0.0 < best.lam < 1.0


def test_landscape_rejects_unknown_y(gs, pot, nl):
    with pytest.raises(ConfigError):
        projection_landscape(gs.profile, pot, nl, 8.0,
                             y_choices=("sideways",))


def test_landscape_serialization(landscape):
    d = landscape.as_dict()
    assert len(d["cells"]) == 17
    assert d["eta"] == landscape.eta
    assert d["cells"][0]["error"] == ""

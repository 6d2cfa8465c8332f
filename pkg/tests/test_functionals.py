import math

import numpy as np
import pytest

from zeromass.errors import ConfigError
from zeromass.functionals import (evaluate, rho_lower_bound, scaling_path,
                                  sobolev_constant)
from zeromass.potential import from_callable

S3_REF = 5.477904089531331
RHO_REF = 2.020642906140363
IV_REF = 7.3587222317
JV_REF = 2.0644525181


def test_sobolev_constant_value():
    assert math.isclose(sobolev_constant(3), S3_REF, rel_tol=1e-12)
    # closed form at N = 4: 2 |S^4|^(1/2) with |S^4| = 8 pi^2 / 3
    assert math.isclose(sobolev_constant(4),
                        2.0 * math.sqrt(8.0 * math.pi ** 2 / 3.0),
                        rel_tol=1e-12)
    with pytest.raises(ConfigError):
        sobolev_constant(2)


def test_rho_lower_bound_value(nl):
    assert math.isclose(rho_lower_bound(nl), RHO_REF, rel_tol=1e-10)


def test_limit_report_identities(gs, nl):
    rep = evaluate(gs.field(), None, nl)
    assert math.isclose(rep.I_0, gs.m, rel_tol=1e-10)
    assert rep.V_quadratic == 0.0
    assert rep.gradV_quadratic == 0.0
    # both identities hold by assembly; the content is in the pieces
    assert math.isclose(rep.I_0, 0.5 * rep.grad_norm_sq - rep.F_integral,
                        rel_tol=1e-14)
    assert abs(rep.J_0) / rep.grad_norm_sq < 1e-4
    assert rep.residual_norm < 1e-5
    assert math.isclose(rep.rho_bound, RHO_REF, rel_tol=1e-10)


def test_potential_report(gs, pot, nl):
    rep = evaluate(gs.field(), pot, nl)
    assert math.isclose(rep.I_V, IV_REF, rel_tol=1e-6)
    assert math.isclose(rep.J_V, JV_REF, rel_tol=1e-5)
    assert rep.I_V > rep.I_0
    assert rep.V_quadratic > 0.0
    assert rep.gradV_quadratic < 0.0
    d = rep.as_dict()
    assert set(d) == {"I_V", "I_0", "J_V", "J_0", "grad_norm_sq",
                      "V_quadratic", "gradV_quadratic", "F_integral",
                      "residual_norm", "rho_bound"}


def test_report_skips_residual(gs, pot, nl):
    rep = evaluate(gs.field(), pot, nl, with_residual=False)
    assert math.isnan(rep.residual_norm)


def test_profileless_potential_rejected(gs, nl):
    bare = from_callable("bare", lambda x: np.zeros(x.shape[0]), 3.0)
    with pytest.raises(ConfigError):
        evaluate(gs.field(), bare, nl)


def test_scaling_path_peak_at_identity(gs, nl):
    # the limit ground state maximizes t -> I_0(u(./t)) at t = 1
    ts = [0.6, 0.8, 1.0, 1.25, 1.6]
    path = scaling_path(gs.field(), None, nl, ts)
    vals = [v for _, v in path]
    assert max(vals) == vals[2]
    assert math.isclose(vals[2], gs.m, rel_tol=1e-8)
    with pytest.raises(ConfigError):
        scaling_path(gs.field(), None, nl, [0.0])


def test_scaling_path_with_potential_shifts_peak(gs, pot, nl):
    ts = np.linspace(0.9, 1.4, 11)
    path = scaling_path(gs.field(), pot, nl, ts)
    vals = np.array([v for _, v in path])
    k = int(vals.argmax())
    # the repulsive quadratic term pushes the peak to t > 1
    assert ts[k] > 1.0
    assert vals[k] > gs.m

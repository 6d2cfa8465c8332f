import math

import numpy as np
import pytest

from zeromass.errors import ConfigError
from zeromass.functionals import sobolev_constant
from zeromass.potential import (check_V_hypotheses, from_callable,
                                from_radial, model_potential)


def test_model_pointwise_values(pot):
    x = np.array([[1.0, 0.0, 0.0]])
    assert math.isclose(np.asarray(pot.V(x)).item(), 1.0 / 8.0, rel_tol=1e-15)
    # r V'(r) at r=1: -3 * 2^-4
    assert math.isclose(np.asarray(pot.grad_dot(x)).item(), -3.0 / 16.0,
                        rel_tol=1e-14)
    # r^2 V''(r) at r=1: 12 * 2^-5
    assert math.isclose(np.asarray(pot.hess_quad(x)).item(), 3.0 / 8.0,
                        rel_tol=1e-14)


def test_model_decay_constants(pot):
    assert pot.k == 3.0
    assert pot.A0 == 1.0
    assert pot.A1 == 3.0


def test_k_precondition():
    with pytest.raises(ConfigError):
        model_potential(1.5)
    with pytest.raises(ConfigError):
        model_potential(2.0)
    with pytest.raises(ConfigError):
        model_potential(3.0, scale=-1.0)


def test_checker_passes_model(pot):
    rep = check_V_hypotheses(pot, 3, sobolev_constant(3))
    assert rep.passed, rep.as_dict()


def test_three_integrals_exactly_zero(pot):
    """V >= 0, grad V . x <= 0, and the V4 combination stays nonneg for the
    monotone model, so three of the four signed integrals vanish exactly."""
    rep = check_V_hypotheses(pot, 3, sobolev_constant(3))
    for key in ("V1.neg_part", "V3.grad_pos_part", "V4.z_neg_part"):
        assert rep.item(key).value == 0.0
        assert rep.item(key).passed


def test_k_plus_integral_below_threshold(pot):
    S = sobolev_constant(3)
    rep = check_V_hypotheses(pot, 3, S)
    item = rep.item("V5.k_pos_part")
    assert item.passed
    assert 0.0 < item.value < (S / 3.0) ** 1.5


def test_k_sign_change_at_three(pot):
    # K(r) = k r (1+r)^(-k-2) ((k+1) r / N - (1+r)) crosses zero at r = 3
    v, dv, d2v = pot.radial.v, pot.radial.dv, pot.radial.d2v

    def K(r):
        return r * dv(r) + r ** 2 * d2v(r) / 3.0

    assert K(2.9) < 0 < K(3.1)
    assert abs(K(3.0)) < 1e-15


def test_large_scale_fails_threshold():
    rep = check_V_hypotheses(model_potential(3.0, scale=60.0), 3,
                             sobolev_constant(3))
    assert not rep.item("V5.k_pos_part").passed
    assert not rep.passed


def test_sign_changing_radial_passes():
    # a small negative well: V- is active but far below the S-threshold
    def v(r):
        r = np.asarray(r, dtype=float)
        return 0.01 * (1.0 - 2.0 * np.exp(-r)) * (1.0 + r) ** -3.0

    rep = check_V_hypotheses(
        from_radial("shallow_well", v, k=3.0), 3, sobolev_constant(3))
    assert rep.item("V1.neg_part").value > 0.0
    assert rep.item("V1.neg_part").passed


def test_callable_route_uses_mc():
    pot = from_callable(
        "aniso", lambda x: 0.05 / (1.0 + np.linalg.norm(x, axis=-1)) ** 3,
        k=3.0)
    rep = check_V_hypotheses(pot, 3, sobolev_constant(3), n_mc=20_000)
    item = rep.item("V1.neg_part")
    assert "mc" in item.note

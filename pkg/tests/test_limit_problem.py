import math

import numpy as np
import pytest

from zeromass.errors import ConfigError
from zeromass.limit_problem import (ground_state, limit_energy, ode_residual,
                                    shoot)

# frozen reference values, computed by the shooting solver at tol=1e-15 and
# cross-checked against the independent integral identities below
U0_STAR = 0.9160870149795012
M_REF = 5.3013210358907035
GRAD_REF = 15.903963107672944
ENVELOPE_C = 1.9554687932586228


def test_separatrix_value(gs):
    assert math.isclose(gs.u0, U0_STAR, rel_tol=1e-9)


def test_profile_certificates(gs):
    prof = gs.profile
    assert prof.classification == "fast_decay"
    assert prof.sup_norm < 2.0 ** 0.25
    # sup over stored nodes sits a series-head step below u(0) = u0
    assert prof.sup_norm == pytest.approx(U0_STAR, rel=1e-8)
    assert prof.plateau_stat < 1e-6
    assert math.isclose(prof.envelope_c, ENVELOPE_C, rel_tol=1e-6)


def test_decay_fits(gs):
    prof = gs.profile
    assert -1.05 < prof.decay_exponent < -0.95
    assert -2.1 < prof.grad_decay_exponent < -1.9


def test_ode_residual(gs, nl):
    assert ode_residual(gs.profile, nl) < 1e-7


def test_energy_and_identity(gs):
    # m = G/N on the limit manifold; both sides computed independently
    assert math.isclose(gs.m, M_REF, rel_tol=1e-8)
    assert math.isclose(gs.grad_norm_sq, GRAD_REF, rel_tol=1e-8)
    assert abs(gs.m - gs.grad_norm_sq / 3.0) / gs.m < 1e-4


def test_pohozaev_residual_small(gs, nl):
    m, grad = limit_energy(gs.profile, nl)
    J0 = 0.5 * grad - 3.0 * (0.5 * grad - m)  # (N-2)/2 G - N F_int
    assert abs(J0) / grad < 1e-4


def test_shoot_classifications(nl):
    _, label_lo = shoot(nl, 3, 0.5)
    assert label_lo == "slow_decay"
    _, label_hi = shoot(nl, 3, 1.1)
    assert label_hi == "crossing"


def test_shoot_degenerate_zero(nl):
    prof, label = shoot(nl, 3, 0.0)
    assert label == "slow_decay"
    assert np.all(prof.values == 0.0)


def test_shoot_rejects_bad_start(nl):
    with pytest.raises(ConfigError):
        shoot(nl, 3, float(nl.gamma))
    with pytest.raises(ConfigError):
        shoot(nl, 2, 0.5)


def test_series_head(gs, nl):
    # u(r) = u0 - f(u0) r^2 / (2N) + ... reproduces the first stored nodes
    prof = gs.profile
    r = prof.nodes[:4]
    series = gs.u0 - float(nl.f(gs.u0)) * r ** 2 / 6.0
    assert np.max(np.abs(prof.values[:4] - series)) < 1e-8


def test_radial_field_weighted_integrals(gs, pot):
    fld = gs.field()
    Vq = fld.weighted_sq(pot.radial.v)
    assert math.isclose(Vq, 4.114802391518734, rel_tol=1e-6)
    Wq = fld.weighted_sq(lambda r: r * pot.radial.dv(r))
    assert math.isclose(Wq, -8.2155021383, rel_tol=1e-5)


def test_radial_field_sixth_power(gs):
    mass, zmom = gs.field().power_moment(6.0)
    assert math.isclose(mass, 23.9985, rel_tol=1e-3)
    assert zmom == 0.0


def test_radial_field_residual(gs, pot, nl):
    fld = gs.field()
    assert fld.residual_sq(None, nl) < 1e-12
    with_v = fld.residual_sq(pot, nl)
    assert 0.2 < with_v < 0.4

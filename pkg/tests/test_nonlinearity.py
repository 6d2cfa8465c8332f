import math

import numpy as np
import pytest

from zeromass.errors import ConfigError
from zeromass.nonlinearity import (builtin_model, check_f_hypotheses, eval_g,
                                   from_table)


def test_rational_model_basics(nl):
    assert nl.N == 3
    assert nl.two_star == 6.0
    assert math.isclose(nl.gamma, 2.0 ** 0.25, rel_tol=1e-15)
    assert nl.ell == 2.0
    assert nl.f(0.0) == 0.0
    assert nl.F(0.0) == 0.0
    # f vanishes exactly at gamma: numerator has a double root there
    assert abs(nl.f(nl.gamma)) < 1e-14


def test_rational_F_is_antiderivative(nl):
    s = np.linspace(0.05, 2.0, 40)
    h = 1e-6
    dF = (np.asarray(nl.F(s + h)) - np.asarray(nl.F(s - h))) / (2 * h)
    assert np.max(np.abs(dF - np.asarray(nl.f(s)))) < 1e-7


def test_fprime_matches_difference_quotient(nl):
    s = np.geomspace(0.01, 3.0, 50)
    h = 1e-6 * s
    approx = (np.asarray(nl.f(s + h)) - np.asarray(nl.f(s - h))) / (2 * h)
    assert np.max(np.abs(approx - np.asarray(nl.fprime(s)))) < 1e-6


def test_eval_g_monotone_on_model(nl):
    s = np.geomspace(1e-3, nl.gamma * (1 - 1e-8), 300)
    g = eval_g(nl, s)
    assert np.all(np.diff(g) < 0)
    assert abs(g[0] - 7.0) < 1e-3  # limit 2* + 1 at the origin


def test_check_passes_rational(nl):
    rep = check_f_hypotheses(nl)
    assert rep.passed, rep.as_dict()
    assert len(rep.items) == 7


def test_check_flags_sine_third_order():
    rep = check_f_hypotheses(builtin_model("sine_superlinear"))
    bad = [it.key for it in rep.items if not it.passed]
    assert bad == ["f1.growth_A2"]
    assert "3" in rep.item("f1.growth_A2").note


def test_critical_power_fails_f2():
    s = np.geomspace(1e-4, 1e4, 2001)
    quintic = from_table(s, s ** 5, name="quintic")
    rep = check_f_hypotheses(quintic)
    assert not rep.item("f2.critical_zero").passed


def test_from_table_matches_closed_form(nl):
    s = np.geomspace(1e-4, 10.0, 4001)
    tab = from_table(s, np.asarray(nl.f(s)), name="rational_tab")
    probe = np.linspace(0.1, 2.0, 17)
    # pchip error peaks near the touching zero of f, where f itself ~ 1e-4
    assert np.allclose(tab.f(probe), nl.f(probe), rtol=1e-5, atol=2e-6)
    assert np.allclose(tab.F(probe), nl.F(probe), rtol=1e-4, atol=1e-7)


def test_unknown_model_name():
    with pytest.raises(ConfigError):
        builtin_model("no_such_model")

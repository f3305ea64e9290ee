import math

import numpy as np
import pytest

from cavitynet.errors import InvalidParameterError
from cavitynet.purcell import (EmitterRadiativeBudget, cavity_cavity_cooperativity,
                               cooperativity, g_from_purcell, purcell_factor, purcell_from_g)


def test_no_enhancement_is_zero():
    assert purcell_factor(EmitterRadiativeBudget(1e-6, 1e-6, 0.23)) == 0.0


def test_inhibition_warns():
    with pytest.warns(RuntimeWarning):
        assert purcell_factor(EmitterRadiativeBudget(1e-6, 2e-6, 0.23)) < 0


@pytest.mark.parametrize("kw", [dict(eta_dw=0.0), dict(eta_qe=1.5), dict(tau0=-1.0)])
def test_budget_validation(kw):
    base = dict(tau0=1e-6, tau_enhanced=1e-7, eta_dw=0.5)
    with pytest.raises(InvalidParameterError):
        EmitterRadiativeBudget(**{**base, **kw})


def test_lower_bound_with_unit_quantum_efficiency():
    p1 = purcell_factor(EmitterRadiativeBudget(960e-9, 62.1e-9, 0.23, 1.0))
    p2 = purcell_factor(EmitterRadiativeBudget(960e-9, 62.1e-9, 0.23, 0.5))
    assert p2 > p1


def test_g_purcell_round_trip():
    kappa = 2 * math.pi * 5.1e9
    g = g_from_purcell(61.0, kappa, 940e-9)
    assert math.isclose(g / (2 * math.pi), 114.7e6, rel_tol=2e-3)
    assert math.isclose(purcell_from_g(g, kappa, 940e-9), 61.0)


def test_cooperativity_validation():
    with pytest.raises(InvalidParameterError):
        cooperativity(1.0, 0.0, 1.0)


def test_unbounded_cavity_cooperativity():
    c = cavity_cavity_cooperativity(1.0, 0.0, 1.0)
    assert c.unbounded and math.isinf(c.value)
    with pytest.raises(InvalidParameterError):
        cavity_cavity_cooperativity(1.0, -1.0, 1.0)

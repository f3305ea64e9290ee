import numpy as np
import pytest

from cavitynet.errors import InvalidParameterError
from cavitynet.network import (CavityParams, DeviceConfig, effective_params,
                               effective_params_from_rates, phases_at)
from cavitynet.units import (ghz_to_rad, kappa_from_q, omega_from_wavelength, rad_to_ghz,
                             wavelength_from_omega)

from conftest import FIT_SET, fit_set_device


def test_unit_round_trips():
    assert np.isclose(wavelength_from_omega(omega_from_wavelength(1325.9)), 1325.9)
    assert np.isclose(rad_to_ghz(ghz_to_rad(5.1)), 5.1)


def test_from_q_convention():
    c = CavityParams.from_q("c", 1325.9132, 10165, 35460)
    # omega / Q_e is the largest effective external rate, 2 kappa_e.
    assert np.isclose(2 * c.kappa_e, kappa_from_q(1325.9132, 10165))
    assert np.isclose(c.q_e, 10165) and np.isclose(c.q_i, 35460)


@pytest.mark.parametrize("kw", [dict(resonance_wavelength=-1.0), dict(kappa_e=-1.0),
                                dict(kappa_i=-2.0)])
def test_cavity_validation(kw):
    base = dict(label="c", resonance_wavelength=1326.0, kappa_e=1.0, kappa_i=1.0)
    with pytest.raises(InvalidParameterError):
        CavityParams(**{**base, **kw})


def test_device_needs_two_cavities():
    c = CavityParams("c", 1326.0, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        DeviceConfig((c,), 0.0, 0.0, 1326.0)
    with pytest.raises(InvalidParameterError):
        DeviceConfig((c, c), 0.0, 0.0, 1326.0, dispersion_mode="quadratic")


def test_theta_pi_half_is_dark():
    p = effective_params_from_rates(1.0, 1.0, 0.1, 0.1, 0, 0, np.pi / 2, 0.3)
    assert np.isclose(p.kappa1_eff, 0.1)
    assert abs(p.omega1) < 1e-15


def test_theta_zero_doubles_external_rate():
    p = effective_params_from_rates(1.0, 1.0, 0.0, 0.0, 0, 0, 0.0, 0.0)
    assert np.isclose(p.kappa1_eff, 2.0)


def test_interaction_symmetry_classes(rng):
    """Shifting one phase length by pi only flips the sign of g_c and kappa_c."""
    for _ in range(50):
        t1, t2 = rng.uniform(0, 2 * np.pi, 2)
        a = effective_params_from_rates(1, 2, .1, .1, 0, 0, t1, t2)
        b = effective_params_from_rates(1, 2, .1, .1, 0, 0, t1 + np.pi, t2)
        assert np.isclose(a.g_c, -b.g_c) and np.isclose(a.kappa_c, -b.kappa_c)
        assert np.isclose(a.kappa1_eff, b.kappa1_eff)


def test_dissipator_is_positive_semidefinite(rng):
    for _ in range(200):
        k = rng.uniform(0, 3, 4)
        t = rng.uniform(0, 2 * np.pi, 2)
        for mirror in ("present", "absent"):
            p = effective_params_from_rates(*k, 0, 0, *t, mirror=mirror)
            K = np.array([[p.kappa1_eff, p.kappa_c], [p.kappa_c, p.kappa2_eff]])
            assert np.min(np.linalg.eigvalsh(K)) > -1e-12


def test_no_mirror_limit():
    p = effective_params_from_rates(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.7, 0.2, mirror="absent")
    assert np.isclose(p.g_c, 0.5 * np.sin(0.5))
    assert np.isclose(p.kappa_c, np.cos(0.5))
    assert np.isclose(p.kappa1_eff, 1.0)


def test_linear_dispersion_scales_phases():
    cfg = fit_set_device()
    from dataclasses import replace
    lin = replace(cfg, dispersion_mode="linear-in-frequency")
    lam = FIT_SET["lambda_c1"] * 0.999
    p1, p2 = phases_at(lin, lam)
    assert np.isclose(p1, FIT_SET["phi1"] / 0.999)
    assert phases_at(cfg, lam) == (cfg.phi1, cfg.phi2)


def test_fit_set_interactions():
    p = effective_params(fit_set_device())
    assert np.isclose(rad_to_ghz(p.kappa1_eff), 19.58, atol=0.01)
    assert np.isclose(rad_to_ghz(p.kappa2_eff), 7.35, atol=0.01)
    assert np.isclose(abs(rad_to_ghz(p.g_c)), 1.33, atol=0.01)
    assert np.isclose(abs(rad_to_ghz(p.kappa_c)), 3.21, atol=0.01)


def test_vectorised_matches_scalar(fit_device):
    lams = np.linspace(1325.85, 1325.95, 7)
    pv = effective_params(fit_device, lams)
    for i, lam in enumerate(lams):
        ps = effective_params(fit_device, lam)
        assert np.isclose(pv.at(i).delta1_eff, ps.delta1_eff)

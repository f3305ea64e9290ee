import warnings

import numpy as np
import pytest

from cavitynet.errors import InvalidParameterError
from cavitynet.hybridization import (EmitterParams, cavity2_sweep, diagonalize,
                                     effective_hamiltonian, emitter_lifetime, ldos_in_c1,
                                     local_density_c1, track_modes, write_sweep_csv)
from cavitynet.network import EffectiveParams, effective_params_from_rates
from cavitynet.units import ghz_to_rad

from conftest import EMITTER_WAVELENGTH, FIT_SET, TAU0, fit_set_device


def test_emitter_validation():
    with pytest.raises(InvalidParameterError):
        EmitterParams(1.0, 0.0, 2.0, 1.0)
    with pytest.raises(InvalidParameterError):
        EmitterParams.from_lifetime(-1.0, 0.0, 1e-6)


def test_diagonalize_reconstructs(rng):
    for _ in range(50):
        p = effective_params_from_rates(*rng.uniform(0.1, 2, 4), *rng.normal(size=2),
                                        *rng.uniform(0, 6, 2))
        H = effective_hamiltonian(p)
        m = diagonalize(H)
        V = m.eigenvectors
        assert np.allclose(H @ V, V * m.eigenvalues, atol=1e-10)
        assert m.decay_rates[0] >= m.decay_rates[1]
        assert m.labels == ("bright", "dark")


def test_trace_conservation(rng):
    for _ in range(100):
        p = effective_params_from_rates(*rng.uniform(0.1, 2, 4), *rng.normal(size=2),
                                        *rng.uniform(0, 6, 2))
        m = diagonalize(effective_hamiltonian(p))
        assert np.isclose(m.decay_rates.sum(), p.kappa1_eff + p.kappa2_eff, rtol=1e-12)


def test_exceptional_point_flagged():
    # Equal bare modes, g = kappa difference / 4 gives a defective matrix.
    g = 0.25
    p = EffectiveParams(0.0, 0.0, g, 1.0, 0.0, 0.0, 0j, 0j)
    m = diagonalize(effective_hamiltonian(p))
    assert m.exceptional_point
    assert np.allclose(m.eigenvalues, -0.25j, atol=1e-6)


def test_emitter_mode_is_last():
    p = effective_params_from_rates(1.0, 1.0, 0.1, 0.1, 0.0, 3.0, 0.3, 0.2)
    e = EmitterParams.from_lifetime(0.01, 0.0, 1e3)
    m = diagonalize(effective_hamiltonian(p, e))
    assert m.labels[-1] == "emitter"
    assert abs(m.gamma[-1]) ** 2 > 0.99


def test_population_ldos_has_unit_weight_per_mode():
    p = effective_params_from_rates(1.0, 1.0, 0.1, 0.1, 0.0, 0.5, 0.3, 0.2)
    m = diagonalize(effective_hamiltonian(p))
    w = np.linspace(-200, 200, 400001)
    curves = ldos_in_c1(m, w)
    for k, lab in enumerate(m.labels):
        area = np.sum(curves[lab]) * (w[1] - w[0])
        assert np.isclose(area, m.population_in_c1[k], rtol=1e-2)


def test_resolvent_ldos_normalised():
    p = effective_params_from_rates(1.0, 1.0, 0.1, 0.1, 0.0, 0.5, 0.3, 0.2)
    w = np.linspace(-2000, 2000, 2000001)
    rho = local_density_c1(p, w)
    assert np.isclose(np.sum(rho) * (w[1] - w[0]), 1.0, rtol=1e-3)


def test_zero_width_mode_is_delta():
    # Mirror-terminated pair with a lossless dark mode.
    p = effective_params_from_rates(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, np.pi)
    m = diagonalize(effective_hamiltonian(p))
    curves = ldos_in_c1(m, np.linspace(-1, 1, 11))
    assert curves.get("delta_modes") == ["dark"]


def test_golden_rule_second_order(rng):
    """Exact emitter decay agrees with g^2 perturbation theory to O(g^4)."""
    for _ in range(20):
        p = effective_params_from_rates(*rng.uniform(1, 3, 4), *rng.normal(size=2),
                                        *rng.uniform(0, 6, 2))
        kmin = min(p.kappa1_eff, p.kappa2_eff)
        e = EmitterParams.from_lifetime(1e-3 * kmin, rng.normal(), 1e4)
        est = emitter_lifetime(p, e)
        assert est.weak_coupling
        assert np.isclose(est.tau, est.tau_golden_rule, rtol=1e-5)


def test_strong_coupling_warns():
    p = effective_params_from_rates(1.0, 1.0, 0.1, 0.1, 0.0, 0.0, 0.3, 0.2)
    with pytest.warns(RuntimeWarning):
        est = emitter_lifetime(p, EmitterParams.from_lifetime(1.0, 0.0, 1e3))
    assert not est.weak_coupling


def test_track_modes_follows_identity():
    mats = [effective_hamiltonian(effective_params_from_rates(1, 1, .1, .1, 0, d, .3, .2))
            for d in np.linspace(-5, 5, 101)]
    tracked = track_modes(mats)
    overlaps = [abs(np.vdot(a.eigenvectors[:, 0], b.eigenvectors[:, 0]))
                for a, b in zip(tracked, tracked[1:])]
    assert min(overlaps) > 0.9


def test_fit_set_sweep(tmp_path):
    cfg = fit_set_device(probe=EMITTER_WAVELENGTH)
    e = EmitterParams.from_lifetime(float(ghz_to_rad(0.115)), 0.0, TAU0)
    lam2 = np.linspace(FIT_SET["lambda_c1"] + 0.15, FIT_SET["lambda_c1"] - 0.15, 31)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pts = cavity2_sweep(cfg, lam2, e)
    assert len(pts) == 31
    for pt in pts:
        cav = pt.modes.cavity_modes
        assert np.isfinite(pt.lifetime.tau) and len(cav) == 2
    path = tmp_path / "sweep.csv"
    write_sweep_csv(pts, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("delta2_GHz,re_ev_1")
    assert len(lines) == 32

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavitynet import slh
from cavitynet.errors import (InvalidParameterError, ModeConflictError, PortMismatchError,
                              SingularLoopError)
from cavitynet.network import effective_params_from_rates

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
rates = st.floats(0.0, 10.0, allow_nan=False)


def random_component(rng, label):
    """One-port, one-mode component with random (Hermitian) data."""
    c = rng.normal() + 1j * rng.normal()
    d = rng.normal()
    return slh.LinearSLH(np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]]), [[c]],
                         [rng.normal() + 1j * rng.normal()], [[d]],
                         [rng.normal() + 1j * rng.normal()], (label,), (d,))


def test_phase_series_adds_phases(rng):
    for _ in range(100):
        a, b = rng.uniform(-10, 10, 2)
        g = slh.make_phase(a) << slh.make_phase(b)
        assert np.allclose(g.scattering, [[np.exp(1j * (a + b))]], atol=1e-12)
        assert g.n_modes == 0


def test_identity_is_neutral(rng):
    g = random_component(rng, "a")
    assert (slh.identity() << g).allclose(g)
    assert (g << slh.identity()).allclose(g)


def test_series_associative(rng):
    for _ in range(20):
        g1, g2, g3 = (random_component(rng, lab) for lab in "xyz")
        assert ((g3 << g2) << g1).allclose(g3 << (g2 << g1), rtol=1e-10, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(angles, angles, rates, rates, st.floats(-5, 5), st.floats(-5, 5))
def test_network_scattering_unitary(phi1, phi2, k1, k2, d1, d2):
    g = slh.two_cavity_network(k1, k2, d1, d2, phi1, phi2, 1.0)
    assert g.is_unitary(1e-10)
    assert np.allclose(g.hamiltonian_quadratic, g.hamiltonian_quadratic.conj().T, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(angles, angles, rates, rates, st.floats(-5, 5), st.floats(-5, 5))
def test_network_matches_effective_params(phi1, phi2, k1, k2, d1, d2):
    """Composed triple and the closed-form effective parameters agree."""
    g = slh.two_cavity_network(k1, k2, d1, d2, phi1, phi2, 1.0)
    p = effective_params_from_rates(k1, k2, 0.0, 0.0, d1, d2, phi1 + phi2, phi2)
    M = g.hamiltonian_quadratic
    K = g.coupling.conj().T @ g.coupling
    scale = max(1.0, k1, k2, abs(d1), abs(d2))
    assert abs(M[0, 0] - p.delta1_eff) < 1e-10 * scale
    assert abs(M[1, 1] - p.delta2_eff) < 1e-10 * scale
    assert abs(M[0, 1] - p.g_c) < 1e-10 * scale
    assert abs(K[0, 0] - p.kappa1_eff) < 1e-10 * scale
    assert abs(K[1, 1] - p.kappa2_eff) < 1e-10 * scale
    assert abs(K[0, 1] - p.kappa_c) < 1e-10 * scale
    # The total drive of the mean-field equation is -i Omega.
    b = g.drive_vector()
    assert abs(b[0] + 1j * p.omega1) < 1e-10 * scale
    assert abs(b[1] + 1j * p.omega2) < 1e-10 * scale


def test_drive_split_between_hamiltonian_and_lindblad(rng):
    k1, k2, d1, d2, p1, p2 = *rng.uniform(0.1, 3, 2), *rng.normal(size=2), *rng.uniform(0, 6, 2)
    g = slh.two_cavity_network(k1, k2, d1, d2, p1, p2, 1.0)
    p = effective_params_from_rates(k1, k2, 0, 0, d1, d2, p1 + p2, p2)
    # Half the drive sits in H, the other half comes from the L offset.
    assert np.allclose(g.hamiltonian_linear, [p.omega1 / 2, p.omega2 / 2], atol=1e-12)


def test_single_cavity_reflection_phase():
    g = slh.two_cavity_network(1.0, 0.0, 0.0, 0.0, 0.0, 0.3, 1.0)
    assert np.isclose(g.scattering[0, 0], np.exp(2j * 0.3))


def test_series_port_mismatch():
    with pytest.raises(PortMismatchError):
        slh.series(slh.identity(2), slh.identity(1))


def test_feedback_singular_loop():
    with pytest.raises(SingularLoopError):
        slh.feedback(slh.identity(2), 0, 0)


def test_feedback_bad_port():
    with pytest.raises(PortMismatchError):
        slh.feedback(slh.identity(2), 0, 5)


def test_double_hamiltonian_declaration():
    a = slh.make_cavity_port(1.0, 0.5, "right", "a")
    b = slh.make_cavity_port(1.0, 0.5, "right", "a")
    with pytest.raises(ModeConflictError):
        a << b


def test_left_port_does_not_double_count():
    a = slh.make_cavity_port(1.0, 0.5, "right", "a")
    b = slh.make_cavity_port(1.0, 0.5, "left", "a")
    g = a + b
    assert np.isclose(g.hamiltonian_quadratic[0, 0], 0.5)


@pytest.mark.parametrize("kw", [dict(kappa_e=-1.0), dict(kappa_e=np.nan)])
def test_cavity_port_rejects_bad_rate(kw):
    with pytest.raises(InvalidParameterError):
        slh.make_cavity_port(kw["kappa_e"], 0.0, "right", "a")


def test_cavity_port_rejects_direction():
    with pytest.raises(InvalidParameterError):
        slh.make_cavity_port(1.0, 0.0, "up", "a")


def test_phase_rejects_nan():
    with pytest.raises(InvalidParameterError):
        slh.make_phase(np.inf)


def test_non_hermitian_rejected():
    with pytest.raises(InvalidParameterError):
        slh.LinearSLH(np.eye(1), [[0, 0]], [0], [[0, 1], [0, 0]], [0, 0], ("a", "b"))


def test_arrays_read_only():
    g = slh.make_phase(0.1)
    with pytest.raises(ValueError):
        g.scattering[0, 0] = 2.0

"""Unit conversions. Internally every rate is an angular frequency in rad/s."""

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

TWO_PI = 2.0 * np.pi


def ghz_to_rad(x):
    """Convert ``x/2pi`` in GHz to rad/s."""
    return np.multiply(x, TWO_PI * 1e9)


def rad_to_ghz(x):
    return np.divide(x, TWO_PI * 1e9)


def omega_from_wavelength(wavelength_nm):
    """Angular frequency ``2 pi c / lambda`` for a vacuum wavelength in nm."""
    return TWO_PI * SPEED_OF_LIGHT / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def wavelength_from_omega(omega):
    return TWO_PI * SPEED_OF_LIGHT / np.asarray(omega, dtype=float) * 1e9


def kappa_from_q(wavelength_nm, q):
    """Energy decay rate ``omega / Q`` in rad/s."""
    return omega_from_wavelength(wavelength_nm) / q


def q_from_kappa(wavelength_nm, kappa):
    return omega_from_wavelength(wavelength_nm) / kappa


def shift_wavelength(wavelength_nm, shift_ghz):
    """Wavelength after a frequency shift of ``shift_ghz`` (positive = blue)."""
    omega = omega_from_wavelength(wavelength_nm) + ghz_to_rad(shift_ghz)
    return wavelength_from_omega(omega)

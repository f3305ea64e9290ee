"""Mean-field dynamics, steady state and reflection spectra."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateSystemError, InvalidParameterError
from .network import DeviceConfig, EffectiveParams, effective_params, phases_at
from .units import ghz_to_rad, omega_from_wavelength, rad_to_ghz, wavelength_from_omega

DEGENERATE_TOL = 1e-30


@dataclass(frozen=True)
class SteadyState:
    a1: complex
    a2: complex


def _coefficients(p: EffectiveParams):
    z1 = 1j * p.delta1_eff + 0.5 * p.kappa1_eff
    z2 = 1j * p.delta2_eff + 0.5 * p.kappa2_eff
    zc = 1j * p.g_c + 0.5 * p.kappa_c
    return z1, z2, zc


def steady_state_arrays(p: EffectiveParams):
    """Vectorised steady state; singular points come back as NaN."""
    z1, z2, zc = _coefficients(p)
    den = z1 * z2 - zc ** 2
    bad = np.abs(den) <= DEGENERATE_TOL
    den = np.where(bad, np.nan, den)
    a1 = (1j * p.omega2 * zc - 1j * p.omega1 * z2) / den
    a2 = (1j * p.omega1 * zc - 1j * p.omega2 * z1) / den
    return a1, a2, bad


def steady_state(p: EffectiveParams) -> SteadyState:
    """Closed-form stationary cavity amplitudes <a1>, <a2>."""
    z1, z2, zc = _coefficients(p)
    den = z1 * z2 - zc ** 2
    if abs(den) <= DEGENERATE_TOL:
        raise DegenerateSystemError(f"steady-state determinant {den} is singular")
    a1 = (1j * p.omega2 * zc - 1j * p.omega1 * z2) / den
    a2 = (1j * p.omega1 * zc - 1j * p.omega2 * z1) / den
    return SteadyState(complex(a1), complex(a2))


def drift(p: EffectiveParams):
    """``(A, b)`` with ``d/dt (a1, a2) = A (a1, a2) + b``. Arrays broadcast."""
    z1, z2, zc = _coefficients(p)
    A = np.array([[-z1, -zc], [-zc, -z2]])
    b = np.array([-1j * p.omega1, -1j * p.omega2])
    return A, b


@dataclass
class Trajectory:
    times: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    accuracy_warning: bool = False


def evolve(p: EffectiveParams, t_final: float, dt: float, a0=(0.0, 0.0),
           store_every: int = 1) -> Trajectory:
    """Fixed-step RK4 integration of the mean-field equations.

    Meant as an independent check of :func:`steady_state`. ``p`` may hold
    arrays, in which case all parameter points are integrated together and
    ``a1``/``a2`` have shape ``(n_stored, *p_shape)``.
    """
    z1, z2, zc = _coefficients(p)
    z1, z2, zc = np.broadcast_arrays(z1, z2, zc)
    om1 = np.broadcast_to(p.omega1, z1.shape)
    om2 = np.broadcast_to(p.omega2, z1.shape)
    rate = max(np.max(np.abs(p.delta1_eff)), np.max(np.abs(p.delta2_eff)),
               np.max(np.abs(p.kappa1_eff)), np.max(np.abs(p.kappa2_eff)),
               np.max(np.abs(p.g_c)), np.max(np.abs(p.kappa_c)))
    flagged = bool(rate > 0 and dt >= 0.1 / rate)
    if flagged:
        warnings.warn("evolve: dt exceeds 0.1/max rate, RK4 accuracy not guaranteed",
                      RuntimeWarning, stacklevel=2)

    def f(x1, x2):
        return (-z1 * x1 - zc * x2 - 1j * om1,
                -zc * x1 - z2 * x2 - 1j * om2)

    n_steps = int(np.ceil(t_final / dt))
    x1 = np.full(z1.shape, a0[0], dtype=complex)
    x2 = np.full(z1.shape, a0[1], dtype=complex)
    times, out1, out2 = [0.0], [x1.copy()], [x2.copy()]
    for step in range(1, n_steps + 1):
        k1 = f(x1, x2)
        k2 = f(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1])
        k3 = f(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1])
        k4 = f(x1 + dt * k3[0], x2 + dt * k3[1])
        x1 = x1 + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        x2 = x2 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if step % store_every == 0 or step == n_steps:
            times.append(step * dt)
            out1.append(x1.copy())
            out2.append(x2.copy())
    return Trajectory(np.array(times), np.array(out1), np.array(out2), flagged)


@dataclass
class Spectrum:
    """Reflection versus probe wavelength.

    ``detuning`` is ``omega_probe - omega_ref`` in rad/s where ``omega_ref``
    corresponds to ``reference_wavelength``. ``flags`` marks points where the
    steady state was singular (their reflection is NaN).
    """

    wavelength_nm: np.ndarray
    reflection: np.ndarray
    reference_wavelength: float
    flags: np.ndarray = field(default=None)

    def __post_init__(self):
        self.wavelength_nm = np.asarray(self.wavelength_nm, dtype=float)
        self.reflection = np.asarray(self.reflection, dtype=complex)
        if self.flags is None:
            self.flags = ~np.isfinite(self.reflection)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.reflection) ** 2

    @property
    def detuning(self) -> np.ndarray:
        return omega_from_wavelength(self.wavelength_nm) - omega_from_wavelength(
            self.reference_wavelength)

    def __len__(self):
        return len(self.wavelength_nm)


def reflection(cfg: DeviceConfig, grid) -> Spectrum:
    """Reflection ``r = L_out / alpha`` at each probe wavelength in ``grid`` (nm).

    Detunings and, under linear dispersion, phases are recomputed per point.
    """
    lam = np.atleast_1d(np.asarray(grid, dtype=float))
    if lam.size == 0:
        raise InvalidParameterError("reflection grid is empty")
    if cfg.probe_amplitude == 0:
        raise InvalidParameterError("probe_amplitude must be non-zero")
    if cfg.mirror != "present":
        raise InvalidParameterError("reflection is defined for the mirror-terminated bus only")
    p = effective_params(cfg, lam)
    with np.errstate(invalid="ignore", divide="ignore"):
        a1, a2, bad = steady_state_arrays(p)
    phi1, phi2 = phases_at(cfg, lam)
    th1, th2 = phi1 + phi2, phi2
    c1, c2 = cfg.cavities
    alpha = cfg.probe_amplitude
    r = np.exp(1j * th1) * (np.exp(1j * th1) * alpha
                            + np.sqrt(2 * c1.kappa_e) * np.cos(th1) * a1
                            + np.sqrt(2 * c2.kappa_e) * np.cos(th2) * a2) / alpha
    r = np.where(bad, np.nan + 0j, r)
    return Spectrum(lam, r, cfg.reference_wavelength, np.asarray(bad, dtype=bool))


def probe_grid(center_nm: float, span_ghz: float, n_points: int) -> np.ndarray:
    """Probe wavelengths evenly spaced in frequency around ``center_nm``."""
    w0 = omega_from_wavelength(center_nm)
    offsets = ghz_to_rad(np.linspace(-span_ghz / 2, span_ghz / 2, n_points))
    return wavelength_from_omega(w0 + offsets)[::-1]


SPECTRUM_COLUMNS = ("wavelength_nm", "detuning_GHz", "re_r", "im_r", "reflectance")


def write_spectrum_csv(spec: Spectrum, path) -> None:
    det = rad_to_ghz(spec.detuning)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_COLUMNS)
        for lam, d, r, pw in zip(spec.wavelength_nm, det, spec.reflection, spec.power):
            w.writerow([f"{lam:.12g}", f"{d:.12g}", f"{r.real:.12g}", f"{r.imag:.12g}",
                        f"{pw:.12g}"])


def read_spectrum_csv(path, reference_wavelength=None) -> Spectrum:
    """Load a spectrum CSV. Missing ``re_r``/``im_r`` yields a power-only spectrum.

    For power-only data the reflection amplitude is stored as ``sqrt(|r|^2)``
    (zero phase); fitting in the power domain ignores the phase anyway.
    """
    rows = list(csv.DictReader(Path(path).read_text().splitlines()))
    if not rows:
        raise InvalidParameterError(f"{path}: no data rows")
    lam = np.array([float(r["wavelength_nm"]) for r in rows])
    if "re_r" in rows[0] and rows[0]["re_r"] not in ("", None):
        refl = np.array([complex(float(r["re_r"]), float(r["im_r"])) for r in rows])
    else:
        refl = np.sqrt(np.array([float(r["reflectance"]) for r in rows]))
    if reference_wavelength is None:
        if "detuning_GHz" in rows[0]:
            d0 = ghz_to_rad(float(rows[0]["detuning_GHz"]))
            reference_wavelength = float(wavelength_from_omega(
                omega_from_wavelength(lam[0]) - d0))
        else:
            reference_wavelength = float(np.mean(lam))
    return Spectrum(lam, refl, reference_wavelength)

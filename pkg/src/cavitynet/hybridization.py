"""Hybrid modes of the non-Hermitian effective Hamiltonian.

Basis order is ``(a1, a2[, sigma_-])``. Eigenvalues are complex frequencies
``Delta_b - i kappa_b / 2``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import InvalidParameterError
from .network import DeviceConfig, EffectiveParams, effective_params
from .units import omega_from_wavelength, rad_to_ghz

EXCEPTIONAL_COND = 1e6
ZERO_WIDTH_RTOL = 1e-12
WEAK_COUPLING_RATIO = 0.1


@dataclass(frozen=True)
class EmitterParams:
    """Two-level emitter coupled to cavity 1 (rates in rad/s, lifetime in s)."""

    g_e: float
    delta_e: float
    kappa_q: float
    tau0: float

    def __post_init__(self):
        if self.g_e < 0:
            raise InvalidParameterError(f"g_e must be >= 0, got {self.g_e}")
        if not (self.kappa_q > 0 and self.tau0 > 0):
            raise InvalidParameterError("kappa_q and tau0 must be positive")
        if abs(self.kappa_q * self.tau0 - 1.0) > 1e-9:
            raise InvalidParameterError(
                f"kappa_q = {self.kappa_q} is inconsistent with tau0 = {self.tau0}")

    @classmethod
    def from_lifetime(cls, g_e: float, delta_e: float, tau0: float) -> "EmitterParams":
        return cls(g_e, delta_e, 1.0 / tau0, tau0)


@dataclass(frozen=True)
class HybridModes:
    """Eigen-decomposition of the effective Hamiltonian.

    ``eigenvectors[:, k]`` holds the coefficients of mode ``k`` on the bare
    basis, normalised to unit length. Modes are ordered bright, dark, then the
    emitter-like mode when present.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple
    exceptional_point: bool = False

    @property
    def frequencies(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def decay_rates(self) -> np.ndarray:
        return -2.0 * self.eigenvalues.imag

    @property
    def population_in_c1(self) -> np.ndarray:
        return np.abs(self.eigenvectors[0]) ** 2

    @property
    def alpha(self):
        return self.eigenvectors[0]

    @property
    def beta(self):
        return self.eigenvectors[1]

    @property
    def gamma(self):
        if self.eigenvectors.shape[0] < 3:
            return np.zeros(self.eigenvectors.shape[1], dtype=complex)
        return self.eigenvectors[2]

    @property
    def cavity_modes(self) -> list:
        return [k for k, lab in enumerate(self.labels) if lab != "emitter"]


def effective_hamiltonian(p: EffectiveParams, e: Optional[EmitterParams] = None) -> np.ndarray:
    """Non-Hermitian single-excitation Hamiltonian, drive terms excluded."""
    coupling = p.g_c - 0.5j * p.kappa_c
    h11 = p.delta1_eff - 0.5j * p.kappa1_eff
    h22 = p.delta2_eff - 0.5j * p.kappa2_eff
    if e is None:
        return np.array([[h11, coupling], [coupling, h22]], dtype=complex)
    return np.array([[h11, coupling, e.g_e],
                     [coupling, h22, 0.0],
                     [e.g_e, 0.0, e.delta_e - 0.5j * e.kappa_q]], dtype=complex)


def diagonalize(H: np.ndarray) -> HybridModes:
    """Diagonalise a 2x2 or 3x3 effective Hamiltonian.

    The mode with the largest emitter weight is placed last; the two
    cavity-like modes are ordered bright (larger decay) then dark.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape not in ((2, 2), (3, 3)):
        raise InvalidParameterError(f"expected a 2x2 or 3x3 matrix, got {H.shape}")
    vals, vecs = np.linalg.eig(H)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    exceptional = bool(np.linalg.cond(vecs) > EXCEPTIONAL_COND)
    if exceptional:
        # Eigenvalues from the Schur form are stable at a defective point.
        T, _ = scipy.linalg.schur(H, output="complex")
        schur_vals = np.diag(T)
        order = [int(np.argmin(np.abs(schur_vals - v))) for v in vals]
        if len(set(order)) == len(vals):
            vals = schur_vals[order]
    idx = list(range(len(vals)))
    labels = ["bright", "dark"]
    if H.shape[0] == 3:
        emitter = int(np.argmax(np.abs(vecs[2]) ** 2))
        idx.remove(emitter)
    cav = sorted(idx, key=lambda k: -vals[k].imag, reverse=True)
    order = cav + ([emitter] if H.shape[0] == 3 else [])
    if H.shape[0] == 3:
        labels.append("emitter")
    return HybridModes(vals[order], vecs[:, order], tuple(labels), exceptional)


def lorentzian_density(omega, center, width):
    """Unit-area Lorentzian with full width ``width``."""
    return (width / (2 * np.pi)) / ((omega - center) ** 2 + width ** 2 / 4)


def ldos_in_c1(modes: HybridModes, omega_grid) -> dict:
    """Population-weighted hybrid-mode densities of states in cavity 1.

    Returns ``{label: curve}`` for every cavity-like mode. Modes with zero
    width are delta functions and are reported under ``"delta_modes"``
    instead of as a curve.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    out = {}
    deltas = []
    floor = ZERO_WIDTH_RTOL * max(np.max(np.abs(modes.eigenvalues)), 1e-300)
    for k in modes.cavity_modes:
        width = modes.decay_rates[k]
        label = modes.labels[k]
        if width <= floor:
            deltas.append(label)
            continue
        out[label] = modes.population_in_c1[k] * lorentzian_density(
            omega_grid, modes.frequencies[k], width)
    if deltas:
        out["delta_modes"] = deltas
    return out


@dataclass(frozen=True)
class LifetimeEstimate:
    """Emitter lifetime (s) from three routes.

    ``tau`` is exact within the linear model (3x3 diagonalisation).
    ``tau_golden_rule`` uses ``kappa_q + 2 pi g_e^2 rho_c1(Delta_e)`` with the
    local density of states of cavity 1 taken from the cavity resolvent.
    ``tau_population_weighted`` replaces that density by the sum of hybrid-mode
    Lorentzians weighted by ``|alpha_k|^2``, which ignores the
    non-orthogonality of the modes.
    """

    tau: float
    kappa_q_eff: float
    tau_golden_rule: float
    tau_population_weighted: float
    weak_coupling: bool


def local_density_c1(p: EffectiveParams, omega) -> np.ndarray:
    """``-Im G_11(omega) / pi`` of the two-cavity system (unit area)."""
    H = effective_hamiltonian(p)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    # Closed-form inverse of (omega - H) for the 2x2 case.
    a = omega - H[0, 0]
    d = omega - H[1, 1]
    g11 = d / (a * d - H[0, 1] * H[1, 0])
    return -g11.imag / np.pi


def emitter_lifetime(p: EffectiveParams, e: EmitterParams) -> LifetimeEstimate:
    """Purcell-modified emitter lifetime in seconds."""
    min_width = min(p.kappa1_eff, p.kappa2_eff)
    weak = bool(e.g_e <= WEAK_COUPLING_RATIO * min_width)
    if not weak:
        warnings.warn(f"g_e = {e.g_e:.3g} is not small compared with the cavity linewidth "
                      f"{min_width:.3g}; lifetime is outside the weak-coupling regime",
                      RuntimeWarning, stacklevel=2)
    modes = diagonalize(effective_hamiltonian(p, e))
    k_eff = float(modes.decay_rates[-1])
    fgr = e.kappa_q + 2 * np.pi * e.g_e ** 2 * float(local_density_c1(p, e.delta_e)[0])
    cavity = diagonalize(effective_hamiltonian(p))
    pop = e.kappa_q
    for k in range(2):
        width = cavity.decay_rates[k]
        if width > 0:
            pop += (2 * np.pi * e.g_e ** 2 * cavity.population_in_c1[k]
                    * lorentzian_density(e.delta_e, cavity.frequencies[k], width))
    return LifetimeEstimate(1.0 / k_eff, k_eff, 1.0 / fgr, 1.0 / pop, weak)


def track_modes(matrices: Sequence[np.ndarray]) -> list:
    """Diagonalise a sweep, keeping mode identity by eigenvector overlap.

    The first point uses the bright/dark/emitter ordering of
    :func:`diagonalize`; each later point is permuted to maximise
    ``|<v_prev|v_new>|`` with the previous point.
    """
    out = []
    prev = None
    for H in matrices:
        modes = diagonalize(H)
        if prev is not None:
            overlap = np.abs(prev.eigenvectors.conj().T @ modes.eigenvectors)
            rows, cols = scipy.optimize.linear_sum_assignment(-overlap)
            perm = cols[np.argsort(rows)]
            modes = HybridModes(modes.eigenvalues[perm], modes.eigenvectors[:, perm],
                                prev.labels, modes.exceptional_point)
        out.append(modes)
        prev = modes
    return out


@dataclass
class SweepPoint:
    delta2: float
    modes: HybridModes
    lifetime: Optional[LifetimeEstimate]
    params: EffectiveParams


def cavity2_sweep(cfg: DeviceConfig, lambda_c2_grid, emitter: Optional[EmitterParams] = None,
                  track: bool = True) -> list:
    """Hybrid modes (and emitter lifetime) while cavity 2 is tuned.

    Detunings are taken relative to ``cfg.probe_wavelength``; put the probe at
    the emitter wavelength so that ``emitter.delta_e`` is zero.
    """
    params = []
    mats = []
    for lam2 in np.asarray(lambda_c2_grid, dtype=float):
        p = effective_params(cfg.with_cavity(1, resonance_wavelength=float(lam2)))
        params.append(p)
        mats.append(effective_hamiltonian(p, emitter))
    modes = track_modes(mats) if track else [diagonalize(H) for H in mats]
    wp = omega_from_wavelength(cfg.probe_wavelength)
    points = []
    for lam2, p, m in zip(lambda_c2_grid, params, modes):
        life = emitter_lifetime(p, emitter) if emitter is not None else None
        points.append(SweepPoint(float(omega_from_wavelength(lam2) - wp), m, life, p))
    return points


def write_sweep_csv(points: Sequence[SweepPoint], path) -> None:
    """Columns ``delta2_GHz, re_ev_k, im_ev_k, pop_c1_k (k=1..3), lifetime_ns``.

    Eigenvalues are reported as value/2pi in GHz; absent modes are blank.
    """
    header = ["delta2_GHz"]
    for k in range(1, 4):
        header += [f"re_ev_{k}", f"im_ev_{k}", f"pop_c1_{k}"]
    header.append("lifetime_ns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for pt in points:
            row = [f"{rad_to_ghz(pt.delta2):.12g}"]
            n = len(pt.modes.eigenvalues)
            for k in range(3):
                if k < n:
                    ev = pt.modes.eigenvalues[k]
                    row += [f"{rad_to_ghz(ev.real):.12g}", f"{rad_to_ghz(ev.imag):.12g}",
                            f"{pt.modes.population_in_c1[k]:.12g}"]
                else:
                    row += ["", "", ""]
            row.append(f"{pt.lifetime.tau * 1e9:.12g}" if pt.lifetime else "")
            w.writerow(row)

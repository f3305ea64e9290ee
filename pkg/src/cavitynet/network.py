"""Device description and the bus-mediated effective parameters.

Two cavities sit on a bus waveguide terminated by a mirror. Cavity 1 is
``phi1 + phi2`` of propagation phase away from the mirror and cavity 2 is
``phi2`` away. Eliminating the waveguide gives renormalised detunings, a
coherent coupling ``g_c``, a correlated decay ``kappa_c`` and drive terms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .units import kappa_from_q, omega_from_wavelength

DISPERSION_MODES = ("fixed-phase", "linear-in-frequency")
MIRROR_MODES = ("present", "absent")


@dataclass(frozen=True)
class CavityParams:
    """One photonic crystal cavity. Rates are in rad/s.

    ``kappa_e`` is the coupling rate into *one* propagation direction pair as
    used in the SLH model: each direction gets amplitude ``sqrt(kappa_e/2)``,
    so the bare total external rate is ``kappa_e`` and the mirror-enhanced
    maximum is ``2 kappa_e``.
    """

    label: str
    resonance_wavelength: float
    kappa_e: float
    kappa_i: float

    def __post_init__(self):
        if not self.resonance_wavelength > 0:
            raise InvalidParameterError(
                f"{self.label}: resonance_wavelength must be > 0, got {self.resonance_wavelength}")
        if not self.kappa_e >= 0:
            raise InvalidParameterError(f"{self.label}: kappa_e must be >= 0, got {self.kappa_e}")
        if not self.kappa_i >= 0:
            raise InvalidParameterError(f"{self.label}: kappa_i must be >= 0, got {self.kappa_i}")

    @classmethod
    def from_q(cls, label, resonance_wavelength, q_e, q_i):
        """Build from quality factors.

        ``q_e`` describes the largest effective external rate, reached at an
        antinode of the mirror standing wave: ``omega / q_e = 2 kappa_e``.
        ``q_i`` is the intrinsic quality factor, ``kappa_i = omega / q_i``.
        """
        return cls(label, resonance_wavelength,
                   float(kappa_from_q(resonance_wavelength, q_e)) / 2,
                   float(kappa_from_q(resonance_wavelength, q_i)))

    @property
    def q_e(self) -> float:
        return self.omega / (2 * self.kappa_e) if self.kappa_e > 0 else np.inf

    @property
    def q_i(self) -> float:
        return self.omega / self.kappa_i if self.kappa_i > 0 else np.inf

    @property
    def omega(self) -> float:
        return float(omega_from_wavelength(self.resonance_wavelength))


@dataclass(frozen=True)
class DeviceConfig:
    """Two bus-coupled cavities with a terminating mirror.

    ``phi1`` is the propagation phase between the cavities and ``phi2`` the
    phase between cavity 2 and the mirror, both at ``reference_wavelength``
    (defaults to the probe wavelength at construction). Under
    ``dispersion_mode="linear-in-frequency"`` the phases scale with the probe
    frequency; under ``"fixed-phase"`` they are constants.
    """

    cavities: tuple
    phi1: float
    phi2: float
    probe_wavelength: float
    probe_amplitude: complex = 1.0
    dispersion_mode: str = "fixed-phase"
    mirror: str = "present"
    reference_wavelength: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "cavities", tuple(self.cavities))
        if len(self.cavities) != 2:
            raise InvalidParameterError(
                f"the bus model needs exactly two cavities, got {len(self.cavities)}")
        if not (np.isfinite(self.phi1) and np.isfinite(self.phi2)):
            raise InvalidParameterError("phases must be finite")
        if not self.probe_wavelength > 0:
            raise InvalidParameterError("probe_wavelength must be > 0")
        if self.dispersion_mode not in DISPERSION_MODES:
            raise InvalidParameterError(f"dispersion_mode must be one of {DISPERSION_MODES}")
        if self.mirror not in MIRROR_MODES:
            raise InvalidParameterError(f"mirror must be one of {MIRROR_MODES}")
        if self.reference_wavelength is None:
            object.__setattr__(self, "reference_wavelength", float(self.probe_wavelength))

    @classmethod
    def single_cavity(cls, cavity: CavityParams, theta: float, probe_wavelength=None, **kw):
        """A lone cavity at phase length ``theta`` from the mirror.

        The second slot holds a decoupled dummy cavity (``kappa_e = 0``) so the
        two-cavity formulas reduce exactly to the single-cavity response.
        """
        dummy = CavityParams("dummy", cavity.resonance_wavelength, 0.0, 1.0)
        probe = cavity.resonance_wavelength if probe_wavelength is None else probe_wavelength
        return cls((cavity, dummy), phi1=0.0, phi2=theta, probe_wavelength=probe, **kw)

    @property
    def thetas(self):
        """Cavity-to-mirror phase lengths at the reference wavelength."""
        return self.phi1 + self.phi2, self.phi2

    def with_probe(self, probe_wavelength: float) -> "DeviceConfig":
        """Same device, probed at another wavelength (phase reference kept)."""
        return replace(self, probe_wavelength=probe_wavelength)

    def with_cavity(self, index: int, **changes) -> "DeviceConfig":
        cavs = list(self.cavities)
        cavs[index] = replace(cavs[index], **changes)
        return replace(self, cavities=tuple(cavs))


@dataclass(frozen=True)
class EffectiveParams:
    """Renormalised two-mode parameters (rad/s). Fields may be numpy arrays."""

    delta1_eff: float
    delta2_eff: float
    g_c: float
    kappa1_eff: float
    kappa2_eff: float
    kappa_c: float
    omega1: complex
    omega2: complex

    def at(self, i) -> "EffectiveParams":
        """Element ``i`` of an array-valued parameter set."""
        fields = np.broadcast_arrays(*(getattr(self, f) for f in _EP_FIELDS))
        return EffectiveParams(*(np.asarray(f)[i] for f in fields))


_EP_FIELDS = ("delta1_eff", "delta2_eff", "g_c", "kappa1_eff", "kappa2_eff",
              "kappa_c", "omega1", "omega2")


def phases_at(cfg: DeviceConfig, probe_wavelength=None):
    """``(phi1, phi2)`` at the probe wavelength (arrays broadcast)."""
    lam = cfg.probe_wavelength if probe_wavelength is None else probe_wavelength
    if cfg.dispersion_mode == "fixed-phase":
        return cfg.phi1, cfg.phi2
    scale = np.asarray(cfg.reference_wavelength, dtype=float) / np.asarray(lam, dtype=float)
    return cfg.phi1 * scale, cfg.phi2 * scale


def detunings_at(cfg: DeviceConfig, probe_wavelength=None):
    """Cavity detunings ``omega_l - omega_p`` in rad/s."""
    lam = cfg.probe_wavelength if probe_wavelength is None else probe_wavelength
    wp = omega_from_wavelength(lam)
    d1 = cfg.cavities[0].omega - wp
    d2 = cfg.cavities[1].omega - wp
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


def effective_params_from_rates(kappa_e1, kappa_e2, kappa_i1, kappa_i2, delta1, delta2,
                                theta1, theta2, alpha=1.0, mirror="present") -> EffectiveParams:
    """Effective parameters from rates and cavity-to-mirror phase lengths.

    With the mirror there are two interference paths, ``theta1 - theta2``
    (direct) and ``theta1 + theta2`` (via the mirror). Without it only the
    direct path survives.
    """
    root = np.sqrt(kappa_e1 * kappa_e2)
    if mirror == "present":
        d1 = delta1 + 0.5 * kappa_e1 * np.sin(2 * theta1)
        d2 = delta2 + 0.5 * kappa_e2 * np.sin(2 * theta2)
        g_c = 0.5 * root * (np.sin(theta1 + theta2) + np.sin(theta1 - theta2))
        k1 = 2 * kappa_e1 * np.cos(theta1) ** 2 + kappa_i1
        k2 = 2 * kappa_e2 * np.cos(theta2) ** 2 + kappa_i2
        kc = root * (np.cos(theta1 + theta2) + np.cos(theta1 - theta2))
        om1 = alpha / 1j * np.sqrt(kappa_e1 / 2) * (1 + np.exp(2j * theta1))
        om2 = alpha / 1j * np.sqrt(kappa_e2 / 2) * (np.exp(1j * (theta1 + theta2))
                                                     + np.exp(1j * (theta1 - theta2)))
    elif mirror == "absent":
        d1 = delta1 + 0.0 * theta1
        d2 = delta2 + 0.0 * theta2
        g_c = 0.5 * root * np.sin(theta1 - theta2)
        k1 = kappa_e1 + kappa_i1 + 0.0 * theta1
        k2 = kappa_e2 + kappa_i2 + 0.0 * theta2
        kc = root * np.cos(theta1 - theta2)
        om1 = alpha / 1j * np.sqrt(kappa_e1 / 2) * (1 + 0.0 * theta1)
        om2 = alpha / 1j * np.sqrt(kappa_e2 / 2) * np.exp(1j * (theta1 - theta2))
    else:
        raise InvalidParameterError(f"mirror must be one of {MIRROR_MODES}")
    return EffectiveParams(d1, d2, g_c, k1, k2, kc, om1, om2)


def effective_params(cfg: DeviceConfig, probe_wavelength=None) -> EffectiveParams:
    """Effective parameters of ``cfg`` at the probe (or a given) wavelength."""
    lam = cfg.probe_wavelength if probe_wavelength is None else probe_wavelength
    c1, c2 = cfg.cavities
    delta1, delta2 = detunings_at(cfg, lam)
    phi1, phi2 = phases_at(cfg, lam)
    return effective_params_from_rates(c1.kappa_e, c2.kappa_e, c1.kappa_i, c2.kappa_i,
                                       delta1, delta2, phi1 + phi2, phi2,
                                       cfg.probe_amplitude, cfg.mirror)

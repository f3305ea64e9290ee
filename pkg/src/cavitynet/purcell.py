"""Scalar figures of merit for emitter-cavity and cavity-cavity coupling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import InvalidParameterError


@dataclass(frozen=True)
class EmitterRadiativeBudget:
    """Lifetimes (s) and branching of an emitter.

    ``eta_qe`` is the quantum efficiency and ``eta_dw`` the Debye-Waller
    factor (fraction of radiative emission in the zero-phonon line). With
    ``eta_qe = 1`` every Purcell factor computed from it is a lower bound.
    """

    tau0: float
    tau_enhanced: float
    eta_dw: float
    eta_qe: float = 1.0

    def __post_init__(self):
        if not (self.tau0 > 0 and self.tau_enhanced > 0):
            raise InvalidParameterError("lifetimes must be positive")
        if not 0 < self.eta_qe <= 1:
            raise InvalidParameterError(f"eta_qe must be in (0, 1], got {self.eta_qe}")
        if not 0 < self.eta_dw <= 1:
            raise InvalidParameterError(f"eta_dw must be in (0, 1], got {self.eta_dw}")


def purcell_factor(b: EmitterRadiativeBudget) -> float:
    """Zero-phonon-line Purcell factor ``(tau0/tau' - 1) / (eta_qe eta_dw)``.

    The total rate becomes ``gamma + P gamma_ZPL`` in the cavity, and
    ``gamma_ZPL = eta_qe eta_dw gamma``.
    """
    p = (b.tau0 / b.tau_enhanced - 1.0) / (b.eta_qe * b.eta_dw)
    if p < 0:
        warnings.warn("enhanced lifetime exceeds tau0: emission is inhibited (P < 0)",
                      RuntimeWarning, stacklevel=2)
    return p


def cooperativity(g: float, kappa: float, gamma: float) -> float:
    """``C = 4 g^2 / (kappa gamma)``; all three in the same angular units."""
    if not (kappa > 0 and gamma > 0):
        raise InvalidParameterError("kappa and gamma must be positive")
    return 4.0 * g * g / (kappa * gamma)


def purcell_from_g(g: float, kappa: float, tau0: float) -> float:
    """Resonant Purcell factor ``4 g^2 / (kappa gamma0)`` with ``gamma0 = 1/tau0``."""
    return 4.0 * g * g * tau0 / kappa


def g_from_purcell(P: float, kappa: float, tau0: float) -> float:
    """Emitter-cavity coupling (rad/s) implied by a resonant Purcell factor."""
    if P < 0 or not kappa > 0 or not tau0 > 0:
        raise InvalidParameterError("need P >= 0, kappa > 0, tau0 > 0")
    return math.sqrt(P * kappa / tau0 / 4.0)


@dataclass(frozen=True)
class CavityCooperativity:
    value: float
    unbounded: bool = False


def cavity_cavity_cooperativity(g_lm: float, kappa_h1: float, kappa_h2: float
                                ) -> CavityCooperativity:
    """``4 g_lm^2 / (kappa_h1 kappa_h2)`` for two hybrid modes.

    A vanishing hybrid decay rate with finite coupling (possible with a
    terminating mirror) is reported as ``unbounded`` with ``value = inf``.
    """
    if kappa_h1 < 0 or kappa_h2 < 0:
        raise InvalidParameterError("hybrid decay rates must be >= 0")
    if kappa_h1 == 0 or kappa_h2 == 0:
        return CavityCooperativity(math.inf if g_lm else math.nan, True)
    return CavityCooperativity(4.0 * g_lm * g_lm / (kappa_h1 * kappa_h2))

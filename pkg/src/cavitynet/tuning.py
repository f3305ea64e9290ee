"""Gas-condensation tuning of cavity resonances and its feedback controller.

A resonant laser pulse heats the ice film in proportion to the energy stored
in the cavity. Above a sublimation threshold the film thins and the cavity
blue-shifts linearly with the excess energy. Because the shift moves the
cavity away from the laser, a fixed-power pulse train is self-limiting.
Deposition of fresh gas red-shifts every cavity together.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .dynamics import probe_grid, reflection
from .errors import InvalidParameterError, NoResonanceError, StallError
from .fitting import fit_lorentzian
from .network import CavityParams, DeviceConfig
from .units import (ghz_to_rad, omega_from_wavelength, rad_to_ghz, shift_wavelength,
                    wavelength_from_omega)

REFERENCE_PULSE = 0.1  # s; the gain is quoted per pulse of this length


def kappa_vs_theta(kappa_e, kappa_i, theta):
    """Total linewidth ``kappa_e (1 + cos 2 theta) + kappa_i``."""
    if np.any(np.asarray(kappa_e) < 0) or np.any(np.asarray(kappa_i) < 0):
        raise InvalidParameterError("rates must be >= 0")
    return kappa_e * (1 + np.cos(2 * theta)) + kappa_i


def coupling_vs_theta(kappa_e, kappa_i, theta):
    """``(external fraction, |r_min|^2)`` at phase length ``theta``."""
    ke_eff = kappa_e * (1 + np.cos(2 * theta))
    kappa = ke_eff + kappa_i
    frac = ke_eff / kappa
    return frac, (2 * frac - 1) ** 2


@dataclass
class PlantCavity:
    """State of one cavity under tuning; rates in rad/s."""

    wavelength_nm: float
    kappa_e: float
    kappa_i: float
    theta: float = 0.0
    position: float = 0.0

    @property
    def kappa_e_eff(self) -> float:
        return self.kappa_e * (1 + np.cos(2 * self.theta))

    @property
    def kappa(self) -> float:
        return self.kappa_e_eff + self.kappa_i

    @property
    def frequency_ghz(self) -> float:
        return float(rad_to_ghz(omega_from_wavelength(self.wavelength_nm)))


@dataclass
class TuningPlant:
    """Cavities on a chip together with the (free) ice-film constants.

    ``sublimation_threshold`` is an intracavity energy in joules and
    ``shift_per_pulse_gain`` is in GHz per joule above threshold.
    """

    cavities: List[PlantCavity]
    sublimation_threshold: float = 2.5e-17
    shift_per_pulse_gain: float = 1e17
    global_redshift_per_deposition: float = 20.0
    deposition_jitter: float = 0.0

    def __post_init__(self):
        if self.sublimation_threshold < 0 or self.shift_per_pulse_gain < 0:
            raise InvalidParameterError("threshold and gain must be >= 0")

    @classmethod
    def uniform(cls, wavelengths_nm: Sequence[float], kappa_e_ghz=5.0, kappa_i_ghz=5.0,
                theta=0.0, **kw) -> "TuningPlant":
        cavs = [PlantCavity(float(lam), float(ghz_to_rad(kappa_e_ghz)),
                            float(ghz_to_rad(kappa_i_ghz)), theta, float(k))
                for k, lam in enumerate(wavelengths_nm)]
        return cls(cavs, **kw)

    def snapshot(self) -> "TuningPlant":
        """Independent copy, safe to read while the original is being tuned."""
        return replace(self, cavities=[replace(c) for c in self.cavities])

    @property
    def wavelengths(self) -> np.ndarray:
        return np.array([c.wavelength_nm for c in self.cavities])


def intracavity_energy(cav: PlantCavity, laser_wavelength: float, power: float) -> float:
    """Stored energy (J) for a CW drive of ``power`` (W) at ``laser_wavelength``.

    ``U = P kappa_e_eff / (Delta^2 + kappa^2 / 4)``.
    """
    delta = omega_from_wavelength(cav.wavelength_nm) - omega_from_wavelength(laser_wavelength)
    return float(power * cav.kappa_e_eff / (delta ** 2 + cav.kappa ** 2 / 4))


def apply_pulse(plant: TuningPlant, cavity_index: int, laser_wavelength: float, power: float,
                pulse_duration: float = REFERENCE_PULSE) -> float:
    """Fire one pulse; mutates ``plant`` and returns the target's shift in GHz.

    Every cavity responds according to its own detuning from the laser, so
    crosstalk appears only for near-resonant neighbours.
    """
    if power < 0:
        raise InvalidParameterError("power must be >= 0")
    dose = pulse_duration / REFERENCE_PULSE
    shifts = []
    for cav in plant.cavities:
        excess = intracavity_energy(cav, laser_wavelength, power) - plant.sublimation_threshold
        shifts.append(plant.shift_per_pulse_gain * dose * max(0.0, excess))
    for cav, s in zip(plant.cavities, shifts):
        if s > 0:
            cav.wavelength_nm = float(shift_wavelength(cav.wavelength_nm, s))
    return shifts[cavity_index]


def apply_deposition(plant: TuningPlant, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Condense more gas: every cavity red-shifts by the shared amount plus jitter."""
    n = len(plant.cavities)
    jitter = np.zeros(n)
    if plant.deposition_jitter > 0:
        if rng is None:
            raise InvalidParameterError("a random generator is required for jitter")
        jitter = rng.normal(0.0, plant.deposition_jitter, n)
    shifts = np.maximum(plant.global_redshift_per_deposition + jitter, 0.0)
    for cav, s in zip(plant.cavities, shifts):
        cav.wavelength_nm = float(shift_wavelength(cav.wavelength_nm, -s))
    return shifts


def apply_free_space_pulse(plant: TuningPlant, cavity_index: int, shift_ghz: float,
                           crosstalk_length: float = 0.0) -> np.ndarray:
    """Above-band pulse focused on one cavity.

    Neighbours at distance ``d`` (in ``position`` units) receive
    ``shift * exp(-d^2 / (2 L^2))``; ``L = 0`` means no crosstalk.
    """
    if shift_ghz < 0:
        raise InvalidParameterError("free-space pulses only blue-shift")
    x0 = plant.cavities[cavity_index].position
    shifts = np.zeros(len(plant.cavities))
    for k, cav in enumerate(plant.cavities):
        d = cav.position - x0
        if k == cavity_index:
            shifts[k] = shift_ghz
        elif crosstalk_length > 0:
            shifts[k] = shift_ghz * np.exp(-d * d / (2 * crosstalk_length ** 2))
        cav.wavelength_nm = float(shift_wavelength(cav.wavelength_nm, shifts[k]))
    return shifts


# -- controller ----------------------------------------------------------------

@dataclass
class ControllerConfig:
    target_step: float = 0.5           # GHz per pulse
    pulse_duration: float = REFERENCE_PULSE
    initial_power: float = 1e-6        # W
    max_power: float = 1e-4
    increase_factor: float = 1.05      # on undershoot
    decrease_factor: float = 0.95      # on overshoot
    tolerance: float = 0.2             # accepted relative deviation from target_step
    max_iterations: int = 500

    def __post_init__(self):
        if not self.target_step > 0:
            raise InvalidParameterError("target_step must be > 0")
        if not (self.increase_factor > 1 and 0 < self.decrease_factor < 1):
            raise InvalidParameterError("need increase_factor > 1 > decrease_factor > 0")


@dataclass
class TraceRow:
    iteration: int
    cavity: int
    wavelength_nm: float
    power: float
    shift_ghz: float


@dataclass
class TuningTrace:
    rows: List[TraceRow] = field(default_factory=list)
    success: bool = True
    final_power: float = 0.0

    @property
    def shifts(self) -> np.ndarray:
        return np.array([r.shift_ghz for r in self.rows])

    def __len__(self):
        return len(self.rows)


def tune_to_target(plant: TuningPlant, cavity_index: int, target_wavelength: float,
                   ctrl: ControllerConfig = None, power: Optional[float] = None) -> TuningTrace:
    """Blue-shift one cavity to ``target_wavelength`` in roughly equal steps.

    The laser sits on the cavity's current resonance for each pulse. After a
    pulse the power is scaled up (step too small) or down (too large). The
    loop stops once the cavity is within half a step of the target.
    """
    ctrl = ctrl or ControllerConfig()
    cav = plant.cavities[cavity_index]
    f_target = float(rad_to_ghz(omega_from_wavelength(target_wavelength)))
    trace = TuningTrace()
    if f_target < cav.frequency_ghz - 0.5 * ctrl.target_step:
        raise InvalidParameterError("target is red of the current resonance; deposit first")
    p = ctrl.initial_power if power is None else power
    for it in range(ctrl.max_iterations):
        remaining = f_target - cav.frequency_ghz
        if remaining <= 0.5 * ctrl.target_step:
            trace.final_power = p
            return trace
        desired = min(ctrl.target_step, remaining)
        shift = apply_pulse(plant, cavity_index, cav.wavelength_nm, p, ctrl.pulse_duration)
        trace.rows.append(TraceRow(it, cavity_index, cav.wavelength_nm, p, shift))
        if shift < (1 - ctrl.tolerance) * desired:
            if p >= ctrl.max_power and shift == 0:
                trace.success = False
                raise StallError("sublimation threshold not reached at maximum power", trace)
            p = min(p * ctrl.increase_factor, ctrl.max_power)
        elif shift > (1 + ctrl.tolerance) * desired:
            p *= ctrl.decrease_factor
    trace.success = False
    trace.final_power = p
    raise StallError(f"target not reached in {ctrl.max_iterations} pulses", trace)


def uniform_array_targets(frequencies_ghz: Sequence[float], spacing_ghz: float) -> np.ndarray:
    """Evenly spaced targets reachable by blue-shifts only.

    Cavities keep their frequency order; the lowest target is as red as
    possible while no cavity has to move red.
    """
    f = np.asarray(frequencies_ghz, dtype=float)
    order = np.argsort(f)
    k = np.empty(len(f))
    k[order] = np.arange(len(f))
    f0 = np.max(f - k * spacing_ghz)
    return f0 + k * spacing_ghz


def tune_uniform_array(plant: TuningPlant, spacing_ghz: float,
                       ctrl: ControllerConfig = None, max_rounds: int = 10) -> TuningTrace:
    """Tune every cavity onto an evenly spaced ladder.

    The bluest cavity is tuned first so a moving cavity never has to pass a
    neighbour that still sits at its old position. If crosstalk pushes a
    nearly degenerate neighbour past its rung, the ladder is recomputed from
    the current resonances and the pass repeated.
    """
    ctrl = ctrl or ControllerConfig()
    full = TuningTrace()
    power = ctrl.initial_power
    half = 0.5 * ctrl.target_step
    for _ in range(max_rounds):
        freqs = np.array([c.frequency_ghz for c in plant.cavities])
        targets = uniform_array_targets(freqs, spacing_ghz)
        if np.all(np.abs(freqs - targets) <= half):
            full.final_power = power
            return full
        for idx in np.argsort(-targets):
            f_now = plant.cavities[idx].frequency_ghz
            if f_now > targets[idx] + half:
                break
            lam = float(wavelength_from_omega(ghz_to_rad(targets[idx])))
            tr = tune_to_target(plant, int(idx), lam, ctrl, power=power)
            offset = len(full.rows)
            for r in tr.rows:
                full.rows.append(replace(r, iteration=r.iteration + offset))
            power = tr.final_power or power
    full.success = False
    raise StallError(f"array not uniform after {max_rounds} rounds", full)


TRACE_COLUMNS = ("iteration", "cavity", "wavelength_nm", "power", "shift_GHz")


def write_trace_csv(trace: TuningTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.rows:
            w.writerow([r.iteration, r.cavity, f"{r.wavelength_nm:.12g}", f"{r.power:.12g}",
                        f"{r.shift_ghz:.12g}"])


# -- linewidth modulation during a long tune -------------------------------------

@dataclass
class LinewidthPoint:
    resonance_nm: float
    theta: float
    kappa_fit_ghz: float
    kappa_model_ghz: float
    fraction_fit: float
    fraction_model: float


def linewidth_sweep(kappa_e_ghz: float = 11.1, kappa_i_ghz: float = 5.5,
                    start_nm: float = 1327.0, span_nm: float = 2.0, n_points: int = 41,
                    theta_ref: float = 2100.0, domain: str = "complex",
                    spectrum_span_ghz: Optional[float] = None,
                    n_spectrum: int = 801) -> List[LinewidthPoint]:
    """Simulate reflection spectra while one cavity is blue-tuned by ``span_nm``.

    The cavity-mirror phase follows ``theta = theta_ref * start_nm / lambda_c``
    (linear in frequency). Within one spectrum the phase is held fixed, since
    the dip is far narrower than the phase period. Each spectrum is fitted
    with :func:`fit_lorentzian` and compared with :func:`kappa_vs_theta`.
    Points with no resolvable dip are skipped.
    """
    ke, ki = float(ghz_to_rad(kappa_e_ghz)), float(ghz_to_rad(kappa_i_ghz))
    out = []
    for lam_c in np.linspace(start_nm, start_nm - span_nm, n_points):
        theta = theta_ref * start_nm / lam_c
        kappa = float(kappa_vs_theta(ke, ki, theta))
        frac, _ = coupling_vs_theta(ke, ki, theta)
        span = spectrum_span_ghz or 20 * rad_to_ghz(kappa)
        cfg = DeviceConfig.single_cavity(CavityParams("c", float(lam_c), ke, ki), theta)
        spec = reflection(cfg, probe_grid(lam_c, span, n_spectrum))
        branch = "over" if frac > 0.5 else "under"
        try:
            fit = fit_lorentzian(spec, coupling=branch, domain=domain, noise_floor=1e-9)
        except NoResonanceError:
            continue
        out.append(LinewidthPoint(float(lam_c), float(theta), fit.parameters["kappa_GHz"],
                                  float(rad_to_ghz(kappa)), fit.parameters["external_fraction"],
                                  float(frac)))
    return out

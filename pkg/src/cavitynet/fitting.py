"""Parameter recovery from reflection spectra.

All fits use uniform weights; measured data is power, so ``|r|^2`` is the
default fit domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import Spectrum, steady_state_arrays
from .errors import InvalidParameterError, NoResonanceError
from .lm import levenberg_marquardt
from .network import effective_params_from_rates
from .units import (ghz_to_rad, kappa_from_q, omega_from_wavelength, rad_to_ghz,
                    wavelength_from_omega)

NOISE_FLOOR = 1e-3
WEIGHTING_NOTE = "uniform"


@dataclass
class FitResult:
    """Fitted parameters with per-parameter variance estimates.

    ``residual`` is the root-mean-square misfit of ``|r|^2`` (or of the
    complex amplitude for complex fits).
    """

    parameters: dict
    residual: float
    covariance_diag: dict
    converged: bool
    derived: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"converged = {str(self.converged).lower()}",
                 f"residual_rms = {self.residual:.12g}"]
        for key, val in self.parameters.items():
            lines.append(f"{key} = {_fmt(val)}")
        for key, val in self.covariance_diag.items():
            lines.append(f"var.{key} = {_fmt(val)}")
        for key, val in self.derived.items():
            lines.append(f"derived.{key} = {_fmt(val)}")
        for key, val in self.notes.items():
            lines.append(f"note.{key} = {val}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def _fmt(val):
    if isinstance(val, (list, tuple, np.ndarray)):
        return ", ".join(f"{float(v):.12g}" for v in val)
    if isinstance(val, (int, float, np.floating)):
        return f"{float(val):.12g}"
    return str(val)


def read_fit_result(path) -> dict:
    """Parse a key-value fit file back into a flat dict of strings/floats."""
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" not in line:
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


# -- single cavity -----------------------------------------------------------

def single_cavity_reflection(omega_probe, omega0, kappa_e_eff, kappa_i, phase=0.0):
    """``e^{i phase} (1 - ke / (i (omega0 - omega_p) + (ke + ki)/2))``."""
    z = 1j * (omega0 - omega_probe) + 0.5 * (kappa_e_eff + kappa_i)
    return np.exp(1j * phase) * (1 - kappa_e_eff / z)


def rmin_squared(kappa_e_eff, kappa_i):
    """On-resonance reflectance ``(2 ke / kappa - 1)^2``."""
    return (2 * kappa_e_eff / (kappa_e_eff + kappa_i) - 1) ** 2


def external_fraction_from_rmin(rmin2, coupling="under"):
    """Invert ``|r_min|^2``: under-coupled picks ``fraction <= 0.5``."""
    root = np.sqrt(np.clip(rmin2, 0.0, 1.0))
    return (1 - root) / 2 if coupling == "under" else (1 + root) / 2


def wrap_phase(phi):
    """Map onto ``[0, 2 pi)``; ``np.mod`` alone can return ``2 pi`` for tiny negatives."""
    out = np.mod(phi, 2 * np.pi)
    out = np.where(out >= 2 * np.pi, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def _dip_guess(spec: Spectrum, noise_floor: float):
    pw = spec.power
    ok = np.isfinite(pw)
    w = omega_from_wavelength(spec.wavelength_nm[ok])
    pw = pw[ok]
    order = np.argsort(w)
    w, pw = w[order], pw[order]
    contrast = np.max(pw) - np.min(pw)
    if contrast < noise_floor:
        raise NoResonanceError(f"reflection contrast {contrast:.3g} is below the noise floor")
    i0 = int(np.argmin(pw))
    base = np.max(pw)
    half = pw[i0] + 0.5 * (base - pw[i0])
    lo = i0
    while lo > 0 and pw[lo] < half:
        lo -= 1
    hi = i0
    while hi < len(pw) - 1 and pw[hi] < half:
        hi += 1
    fwhm = max(w[hi] - w[lo], 2 * np.median(np.diff(w)))
    return w, pw, w[i0], pw[i0] / max(base, 1e-300), fwhm


def fit_lorentzian(spec: Spectrum, coupling: str = "under", domain: str = "power",
                   noise_floor: float = NOISE_FLOOR) -> FitResult:
    """Fit one cavity dip.

    In the power domain the reflectance is symmetric under exchanging the
    effective external and intrinsic rates, so the fit is done in terms of
    total width and ``|ke - ki|`` and ``coupling`` ("under" or "over")
    selects the branch. The complex domain resolves the branch directly.
    """
    if coupling not in ("under", "over"):
        raise InvalidParameterError("coupling must be 'under' or 'over'")
    if domain not in ("power", "complex"):
        raise InvalidParameterError("domain must be 'power' or 'complex'")
    w, pw, w0, rmin2, fwhm = _dip_guess(spec, noise_floor)
    frac = external_fraction_from_rmin(rmin2, coupling)
    scale = 2 * np.pi * 1e9
    ok = np.isfinite(spec.power)
    wp = omega_from_wavelength(spec.wavelength_nm[ok])

    if domain == "power":
        data = spec.power[ok]

        def model(x):
            om0, width, diff = x[0] * scale + w0, abs(x[1]) * scale, x[2] * scale
            d = om0 - wp
            return (d ** 2 + diff ** 2 / 4) / (d ** 2 + width ** 2 / 4)

        x0 = np.array([0.0, fwhm / scale, abs(1 - 2 * frac) * fwhm / scale])
        res = levenberg_marquardt(lambda x: model(x) - data, x0)
        width = abs(res.x[1]) * scale
        diff = abs(res.x[2]) * scale
        ke = (width - diff) / 2 if coupling == "under" else (width + diff) / 2
        ki = width - ke
        om0 = res.x[0] * scale + w0
        cov = res.covariance() * scale ** 2
        var_om0, var_w, var_d = np.diag(cov)
        var_ke = 0.25 * (var_w + var_d)
        n = data.size
    else:
        data = spec.reflection[ok]
        # Far from resonance r is a pure phase factor.
        phase0 = float(np.angle(data[np.argmax(np.abs(wp - w0))]))

        def resid(x):
            r = single_cavity_reflection(wp, x[0] * scale + w0, x[1] * scale, x[2] * scale, x[3])
            diff = r - data
            return np.concatenate([diff.real, diff.imag])

        x0 = np.array([0.0, frac * fwhm / scale, (1 - frac) * fwhm / scale, phase0])
        res = levenberg_marquardt(resid, x0)
        om0, ke, ki = res.x[0] * scale + w0, res.x[1] * scale, res.x[2] * scale
        cov = res.covariance()
        var_om0 = cov[0, 0] * scale ** 2
        var_ke = cov[1, 1] * scale ** 2
        var_w = (cov[1, 1] + cov[2, 2] + 2 * cov[1, 2]) * scale ** 2
        var_d = cov[2, 2] * scale ** 2
        n = data.size
    lam0 = float(wavelength_from_omega(om0))
    dlam_domega = lam0 / om0
    params = {
        "lambda0_nm": lam0,
        "kappa_e_eff_GHz": float(rad_to_ghz(ke)),
        "kappa_i_GHz": float(rad_to_ghz(ki)),
        "kappa_GHz": float(rad_to_ghz(ke + ki)),
        "external_fraction": float(ke / (ke + ki)),
    }
    if domain == "complex":
        params["phase_rad"] = wrap_phase(res.x[3])
    var = {
        "lambda0_nm": float(var_om0 * dlam_domega ** 2),
        "kappa_e_eff_GHz": float(var_ke / scale ** 2),
        "kappa_i_GHz": float((var_w + var_ke) / scale ** 2),
        "kappa_GHz": float(var_w / scale ** 2),
    }
    return FitResult(params, float(np.sqrt(2 * res.cost / n)), var, res.converged,
                     notes={"weighting": WEIGHTING_NOTE, "domain": domain,
                            "branch": coupling})


# -- two-cavity stack ----------------------------------------------------------

GLOBAL_NAMES = ("lambda_c1", "q_e", "q_i1", "q_i2", "phi1", "phi2")


def two_cavity_reflection(omega_probe, lambda_c1, lambda_c2, q_e, q_i1, q_i2, phi1, phi2):
    """Reflection of the mirror-terminated pair at fixed phases.

    ``q_e`` is shared by both cavities and refers to the maximal external
    rate, ``omega / q_e = 2 kappa_e``.
    """
    w1 = omega_from_wavelength(lambda_c1)
    w2 = omega_from_wavelength(lambda_c2)
    ke1, ke2 = w1 / (2 * q_e), w2 / (2 * q_e)
    th1, th2 = phi1 + phi2, phi2
    p = effective_params_from_rates(ke1, ke2, w1 / q_i1, w2 / q_i2,
                                    w1 - omega_probe, w2 - omega_probe, th1, th2)
    a1, a2, _ = steady_state_arrays(p)
    return np.exp(1j * th1) * (np.exp(1j * th1) + np.sqrt(2 * ke1) * np.cos(th1) * a1
                               + np.sqrt(2 * ke2) * np.cos(th2) * a2)


class _Layout:
    """Maps named model parameters onto the optimiser vector.

    Wavelengths are optimised as frequency offsets in GHz from a reference,
    quality factors as natural logs, phases in radians.
    """

    def __init__(self, n_slices, shared, omega_ref):
        self.n = n_slices
        self.shared = set(shared)
        self.omega_ref = omega_ref
        self.slots = []
        for name in GLOBAL_NAMES:
            if name in self.shared:
                self.slots.append((name, None))
            else:
                self.slots.extend((name, k) for k in range(n_slices))
        self.slots.extend(("lambda_c2", k) for k in range(n_slices))

    def encode(self, values):
        out = []
        for name, k in self.slots:
            v = np.ravel(values[name])[0 if k is None else k]
            out.append(self._to_opt(name, v))
        return np.array(out)

    def decode(self, x):
        vals = {name: np.empty(self.n) for name in GLOBAL_NAMES + ("lambda_c2",)}
        for (name, k), xi in zip(self.slots, x):
            v = self._from_opt(name, xi)
            if k is None:
                vals[name][:] = v
            else:
                vals[name][k] = v
        return vals

    def _to_opt(self, name, v):
        if name.startswith("lambda"):
            return float(rad_to_ghz(omega_from_wavelength(v) - self.omega_ref))
        if name.startswith("q"):
            return float(np.log(v))
        return float(v)

    def _from_opt(self, name, x):
        if name.startswith("lambda"):
            return float(wavelength_from_omega(self.omega_ref + ghz_to_rad(x)))
        if name.startswith("q"):
            return float(np.exp(min(x, 700.0)))  # trial steps can be wild
        return float(x)


def _stack_arrays(stack):
    omegas, data, idx = [], [], []
    for k, spec in enumerate(stack):
        ok = np.isfinite(spec.power)
        omegas.append(omega_from_wavelength(spec.wavelength_nm[ok]))
        data.append(spec.power[ok])
        idx.append(np.full(ok.sum(), k))
    return np.concatenate(omegas), np.concatenate(data), np.concatenate(idx)


def _guess_lambda_c1(stack) -> float:
    """Dip of the slice-averaged spectrum: the stationary cavity survives averaging."""
    ref = stack[0].wavelength_nm
    mean = np.mean([np.interp(ref, s.wavelength_nm[np.argsort(s.wavelength_nm)],
                              s.power[np.argsort(s.wavelength_nm)]) for s in stack], axis=0)
    return float(ref[int(np.argmin(mean))])


def fit_two_cavity_stack(stack: Sequence[Spectrum], tuning_coordinates: Sequence[float],
                         shared: Iterable[str] = GLOBAL_NAMES, initial: Optional[dict] = None,
                         phase_starts: Sequence[float] = (0.25, 0.75, 1.25, 1.75),
                         max_iter: int = 300, start_from: Optional[FitResult] = None,
                         exact_rms: float = 1e-5) -> FitResult:
    """Joint fit of a tuning stack of two-cavity reflection spectra.

    ``tuning_coordinates`` are the nominal cavity-2 wavelengths of each slice
    and seed the per-slice ``lambda_c2``. Parameters named in ``shared`` are
    common to all slices; the others are fitted per slice. The optimiser is
    restarted on a grid of ``(phi1, phi2)`` values (multiples of pi) and the
    lowest-residual basin is returned. Restarts stop early once a start
    reaches an RMS residual below ``exact_rms``.

    Reported phases lie in ``[0, 2 pi)``. ``|r|^2`` is unchanged by
    ``phi1 -> phi1 + pi`` or ``phi2 -> phi2 + pi``, so each phase is only
    determined modulo pi.
    """
    if len(stack) < 5:
        raise InvalidParameterError("a hybridisation fit needs at least 5 spectra")
    if len(tuning_coordinates) != len(stack):
        raise InvalidParameterError("one tuning coordinate per slice is required")
    shared = tuple(shared)
    unknown = set(shared) - set(GLOBAL_NAMES)
    if unknown:
        raise InvalidParameterError(f"unknown shared parameters {sorted(unknown)}")
    n = len(stack)
    wp, data, idx = _stack_arrays(stack)
    lam_c1_guess = _guess_lambda_c1(stack)
    omega_ref = float(omega_from_wavelength(lam_c1_guess))
    layout = _Layout(n, shared, omega_ref)

    base = {"lambda_c1": lam_c1_guess, "q_e": 1e4, "q_i1": 3e4, "q_i2": 3e4}
    base.update(initial or {})

    def values_for(phi1, phi2):
        v = {}
        for name in GLOBAL_NAMES:
            raw = {"phi1": phi1, "phi2": phi2}.get(name, base.get(name))
            v[name] = np.full(n, raw, dtype=float)
        v["lambda_c2"] = np.asarray(tuning_coordinates, dtype=float)
        return v

    def resid(x):
        v = layout.decode(x)
        with np.errstate(all="ignore"):
            r = two_cavity_reflection(wp, v["lambda_c1"][idx], v["lambda_c2"][idx], v["q_e"][idx],
                                      v["q_i1"][idx], v["q_i2"][idx], v["phi1"][idx],
                                      v["phi2"][idx])
        out = np.abs(r) ** 2 - data
        return np.where(np.isfinite(out), out, 1e3)

    if start_from is not None:
        starts = [layout.encode(_values_from_result(start_from, n))]
    elif "phi1" in base and "phi2" in base:
        starts = [layout.encode(values_for(base["phi1"], base["phi2"]))]
    else:
        starts = [layout.encode(values_for(a * np.pi, b * np.pi))
                  for a, b in itertools.product(phase_starts, phase_starts)]
    best = None
    for x0 in starts:
        res = levenberg_marquardt(resid, x0, max_iter=max_iter)
        if best is None or res.cost < best.cost:
            best = res
        if np.sqrt(2 * best.cost / data.size) < exact_rms:
            break
    return _stack_result(best, layout, data.size, shared)


def _values_from_result(fit: FitResult, n):
    p = fit.parameters
    v = {}
    for name in GLOBAL_NAMES:
        key = _PUBLIC_NAME[name]
        val = np.asarray(p[key], dtype=float)
        if name.startswith("phi"):
            val = val * np.pi
        v[name] = np.broadcast_to(val, (n,)).astype(float)
    v["lambda_c2"] = np.asarray(p["lambda_c2_nm"], dtype=float)
    return v


_PUBLIC_NAME = {"lambda_c1": "lambda_c1_nm", "q_e": "Q_e", "q_i1": "Q_i1", "q_i2": "Q_i2",
                "phi1": "phi1_over_pi", "phi2": "phi2_over_pi"}


def _stack_result(res, layout: _Layout, n_points: int, shared) -> FitResult:
    vals = layout.decode(res.x)
    cov = np.diag(res.covariance())
    params, var = {}, {}
    for name in GLOBAL_NAMES:
        v = vals[name]
        if name.startswith("phi"):
            v = wrap_phase(v) / np.pi
        params[_PUBLIC_NAME[name]] = float(v[0]) if name in shared else v.tolist()
    params["lambda_c2_nm"] = vals["lambda_c2"].tolist()
    # Variances mapped back through the per-slot transforms.
    for (name, k), c, xi in zip(layout.slots, cov, res.x):
        key = _PUBLIC_NAME.get(name, "lambda_c2_nm")
        if name.startswith("lambda"):
            lam = layout._from_opt(name, xi)
            dlam = lam / float(layout.omega_ref + ghz_to_rad(xi)) * 2 * np.pi * 1e9
            val = c * dlam ** 2
        elif name.startswith("q"):
            val = c * np.exp(xi) ** 2
        else:
            val = c / np.pi ** 2
        if k is None:
            var[key] = float(val)
        else:
            var.setdefault(key, []).append(float(val))
    derived = _derived_interactions(vals)
    return FitResult(params, float(np.sqrt(2 * res.cost / n_points)), var, res.converged,
                     derived=derived,
                     notes={"weighting": WEIGHTING_NOTE, "domain": "power",
                            "phase_equivalence": "phi1 and phi2 each modulo pi"})


def _derived_interactions(vals) -> dict:
    """``g_c`` and ``kappa_c`` (GHz) at the slice closest to degeneracy.

    Their common sign depends on the phase representative (``a1 -> -a1``
    under ``phi1 -> phi1 + pi``) and carries no physical meaning.
    """
    lam1 = vals["lambda_c1"]
    k = int(np.argmin(np.abs(vals["lambda_c2"] - lam1)))
    w1 = omega_from_wavelength(lam1[k])
    w2 = omega_from_wavelength(vals["lambda_c2"][k])
    th1 = vals["phi1"][k] + vals["phi2"][k]
    th2 = vals["phi2"][k]
    p = effective_params_from_rates(w1 / (2 * vals["q_e"][k]), w2 / (2 * vals["q_e"][k]),
                                    w1 / vals["q_i1"][k], w2 / vals["q_i2"][k],
                                    0.0, w2 - w1, th1, th2)
    return {"g_c_GHz": float(rad_to_ghz(p.g_c)), "kappa_c_GHz": float(rad_to_ghz(p.kappa_c)),
            "kappa1_eff_GHz": float(rad_to_ghz(p.kappa1_eff)),
            "kappa2_eff_GHz": float(rad_to_ghz(p.kappa2_eff)), "slice": k}


def phase_class(phi_over_pi) -> float:
    """Canonical representative of a fitted phase (in units of pi) modulo pi."""
    return float(np.mod(phi_over_pi, 1.0))

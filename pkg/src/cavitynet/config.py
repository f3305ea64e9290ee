"""Scenario files: YAML with explicit unit suffixes.

Every dimensional value is a string such as ``"5.1 GHz"``, ``"1325.88 nm"``,
``"0.78 pi"`` or ``"960 ns"``. Frequencies are read as omega/2pi and stored
in rad/s. Problems are collected as findings with a dotted field path
rather than raised one at a time.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional

import numpy as np
import yaml

from .errors import ConfigError, InvalidParameterError
from .hybridization import EmitterParams
from .network import DISPERSION_MODES, MIRROR_MODES, CavityParams, DeviceConfig
from .units import ghz_to_rad, omega_from_wavelength

TASKS = ("spectrum", "hybridize", "lifetime", "tune", "fit", "metrics")
SWEEP_AXES = ("probe_wavelength", "cavity2_wavelength", "theta")

# unit -> factor to the internal unit of each kind
UNITS = {
    "frequency": {"Hz": 1e-9, "kHz": 1e-6, "MHz": 1e-3, "GHz": 1.0, "THz": 1e3},  # -> GHz
    "wavelength": {"nm": 1.0, "um": 1e3, "pm": 1e-3},                             # -> nm
    "phase": {"pi": np.pi, "rad": 1.0},                                           # -> rad
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},          # -> s
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9},                      # -> W
    "energy": {"J": 1.0, "fJ": 1e-15, "aJ": 1e-18},                               # -> J
    "gain": {"GHz/J": 1.0, "GHz/fJ": 1e15, "GHz/aJ": 1e18},                       # -> GHz/J
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/]*)\s*$")


def parse_quantity(value: Any, kind: str, path: str) -> float:
    """Convert ``"<number> <unit>"`` to the internal unit of ``kind``.

    Frequencies come back in GHz (omega/2pi); use :func:`ghz_to_rad` for
    rad/s. A bare number is rejected, except for phases given in radians.
    """
    table = UNITS[kind]
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a {kind} with unit, got {value!r}")
    if isinstance(value, (int, float)):
        if kind == "phase":
            return float(value)
        raise ConfigError(f"{path}: {kind} needs a unit ({', '.join(table)}), got {value!r}")
    m = _QUANTITY.match(str(value))
    if not m:
        raise ConfigError(f"{path}: cannot parse {value!r} as a {kind}")
    number, unit = float(m.group(1)), m.group(2)
    if unit not in table:
        raise ConfigError(f"{path}: unit {unit or '(none)'!r} is not a {kind} unit "
                          f"({', '.join(table)})")
    return number * table[unit]


@dataclass
class ProbeSpec:
    center_nm: float
    span_ghz: float
    points: int


@dataclass
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class EmitterSpec:
    g_ghz: float
    wavelength_nm: float
    tau0: float
    eta_dw: float = 1.0
    eta_qe: float = 1.0

    def params(self, probe_wavelength: float) -> EmitterParams:
        delta = omega_from_wavelength(self.wavelength_nm) - omega_from_wavelength(probe_wavelength)
        return EmitterParams.from_lifetime(float(ghz_to_rad(self.g_ghz)), float(delta), self.tau0)


@dataclass
class Scenario:
    task: str
    seed: int = 0
    device: Optional[DeviceConfig] = None
    emitter: Optional[EmitterSpec] = None
    probe: Optional[ProbeSpec] = None
    sweep: Optional[SweepSpec] = None
    tuning: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    source_dir: Path = Path(".")
    sha256: str = ""


@dataclass
class Finding:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


class _Reader:
    """Pulls typed values out of nested dicts, recording problems as findings."""

    def __init__(self):
        self.findings: List[Finding] = []

    def add(self, path, message):
        self.findings.append(Finding(path, message))

    def block(self, raw, key, path, required=False):
        val = raw.get(key) if isinstance(raw, dict) else None
        if val is None:
            if required:
                self.add(f"{path}{key}", "required block is missing")
            return None
        if not isinstance(val, dict):
            self.add(f"{path}{key}", "expected a mapping")
            return None
        return val

    def quantity(self, raw, key, kind, path, required=True, default=None):
        if key not in raw:
            if required:
                self.add(f"{path}{key}", f"required {kind} is missing")
            return default
        try:
            return parse_quantity(raw[key], kind, f"{path}{key}")
        except ConfigError as exc:
            self.add(f"{path}{key}", str(exc).split(": ", 1)[-1])
            return default

    def number(self, raw, key, path, required=True, default=None, integer=False):
        if key not in raw:
            if required:
                self.add(f"{path}{key}", "required value is missing")
            return default
        val = raw[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add(f"{path}{key}", f"expected a number, got {val!r}")
            return default
        if integer and int(val) != val:
            self.add(f"{path}{key}", f"expected an integer, got {val!r}")
            return default
        return int(val) if integer else float(val)

    def choice(self, raw, key, options, path, default=None):
        val = raw.get(key, default)
        if val not in options:
            self.add(f"{path}{key}", f"must be one of {', '.join(options)}, got {val!r}")
            return default
        return val


def _cavity(r: _Reader, raw, path) -> Optional[CavityParams]:
    if not isinstance(raw, dict):
        r.add(path.rstrip("."), "expected a mapping")
        return None
    label = str(raw.get("label", path.rstrip(".")))
    lam = r.quantity(raw, "wavelength", "wavelength", path)
    if "q_e" in raw or "q_i" in raw:
        qe = r.number(raw, "q_e", path)
        qi = r.number(raw, "q_i", path)
        for key, q in (("q_e", qe), ("q_i", qi)):
            if q is not None and not q > 0:
                r.add(f"{path}{key}", f"quality factor must be > 0, got {q}")
                return None
        if None in (lam, qe, qi):
            return None
        return CavityParams.from_q(label, lam, qe, qi)
    ke = r.quantity(raw, "kappa_e", "frequency", path)
    ki = r.quantity(raw, "kappa_i", "frequency", path)
    if ki is not None and not ki > 0:
        r.add(f"{path}kappa_i", f"intrinsic loss must be > 0, got {ki} GHz")
    if ke is not None and ke < 0:
        r.add(f"{path}kappa_e", f"must be >= 0, got {ke} GHz")
    if None in (lam, ke, ki) or not ki > 0 or ke < 0:
        return None
    if not lam > 0:
        r.add(f"{path}wavelength", "must be > 0")
        return None
    return CavityParams(label, lam, float(ghz_to_rad(ke)), float(ghz_to_rad(ki)))


def _device(r: _Reader, raw) -> Optional[DeviceConfig]:
    path = "device."
    cavs_raw = raw.get("cavities")
    if not isinstance(cavs_raw, list) or len(cavs_raw) != 2:
        r.add("device.cavities", "expected a list of exactly two cavities")
        return None
    cavs = [_cavity(r, c, f"device.cavities[{k}].") for k, c in enumerate(cavs_raw)]
    phi1 = r.quantity(raw, "phi1", "phase", path)
    phi2 = r.quantity(raw, "phi2", "phase", path)
    probe = r.quantity(raw, "probe_wavelength", "wavelength", path, required=False)
    ref = r.quantity(raw, "reference_wavelength", "wavelength", path, required=False)
    disp = r.choice(raw, "dispersion", DISPERSION_MODES, path, "fixed-phase")
    mirror = r.choice(raw, "mirror", MIRROR_MODES, path, "present")
    amp = raw.get("probe_amplitude", 1.0)
    if None in cavs or phi1 is None or phi2 is None:
        return None
    if probe is None:
        probe = cavs[0].resonance_wavelength
    try:
        return DeviceConfig(tuple(cavs), phi1, phi2, probe, complex(amp), disp, mirror, ref)
    except (InvalidParameterError, TypeError, ValueError) as exc:
        r.add("device", str(exc))
        return None


def _emitter(r: _Reader, raw) -> Optional[EmitterSpec]:
    path = "emitter."
    g = r.quantity(raw, "g", "frequency", path)
    lam = r.quantity(raw, "wavelength", "wavelength", path)
    tau0 = r.quantity(raw, "tau0", "time", path)
    eta_dw = r.number(raw, "eta_dw", path, required=False, default=1.0)
    eta_qe = r.number(raw, "eta_qe", path, required=False, default=1.0)
    if g is not None and g < 0:
        r.add("emitter.g", "must be >= 0")
    if tau0 is not None and not tau0 > 0:
        r.add("emitter.tau0", "must be > 0")
    if None in (g, lam, tau0) or g < 0 or not tau0 > 0:
        return None
    return EmitterSpec(g, lam, tau0, eta_dw, eta_qe)


def _sweep(r: _Reader, raw) -> Optional[SweepSpec]:
    path = "sweep."
    axis = r.choice(raw, "axis", SWEEP_AXES, path)
    kind = {"probe_wavelength": "wavelength", "cavity2_wavelength": "wavelength",
            "theta": "phase"}.get(axis)
    pts = r.number(raw, "points", path, integer=True)
    if pts is not None and pts < 1:
        r.add("sweep.points", f"must be >= 1, got {pts}")
        pts = None
    if kind is None:
        return None
    start = r.quantity(raw, "start", kind, path)
    stop = r.quantity(raw, "stop", kind, path)
    if None in (start, stop, pts):
        return None
    return SweepSpec(axis, start, stop, pts)


def _probe(r: _Reader, raw, device) -> Optional[ProbeSpec]:
    path = "probe."
    default_center = device.probe_wavelength if device else None
    center = r.quantity(raw, "center", "wavelength", path, required=default_center is None,
                        default=default_center)
    span = r.quantity(raw, "span", "frequency", path, required=False, default=100.0)
    pts = r.number(raw, "points", path, required=False, default=401, integer=True)
    if pts is not None and pts < 1:
        r.add("probe.points", f"must be >= 1, got {pts}")
        return None
    if span is not None and span < 0:
        r.add("probe.span", "must be >= 0")
        return None
    if center is None:
        return None
    return ProbeSpec(center, span, pts)


def _physics_checks(r: _Reader, sc: Scenario):
    if sc.task == "spectrum" and sc.device is not None:
        if sc.device.mirror != "present":
            r.add("device.mirror", "reflection spectra need the terminating mirror")
        if sc.probe is not None and not (sc.sweep and sc.sweep.axis == "probe_wavelength"):
            half = sc.probe.span_ghz / 2
            for k, cav in enumerate(sc.device.cavities):
                det = (omega_from_wavelength(cav.resonance_wavelength)
                       - omega_from_wavelength(sc.probe.center_nm)) / (2 * np.pi * 1e9)
                if half > 0 and abs(det) > half and not (k == 1 and sc.sweep):
                    r.add(f"device.cavities[{k}].wavelength",
                          f"resonance lies {det:.3g} GHz from the probe centre, outside the grid")
    if sc.task in ("hybridize", "lifetime") and sc.sweep is not None \
            and sc.sweep.axis != "cavity2_wavelength":
        r.add("sweep.axis", f"task {sc.task} sweeps cavity2_wavelength")
    if sc.task == "lifetime" and sc.emitter is not None and sc.device is not None:
        lams = [c.resonance_wavelength for c in sc.device.cavities]
        if sc.sweep:
            lams += [sc.sweep.start, sc.sweep.stop]
        if not min(lams) - 1.0 <= sc.emitter.wavelength_nm <= max(lams) + 1.0:
            r.add("emitter.wavelength", "emitter is far (> 1 nm) from every cavity")


REQUIRED_BLOCKS = {
    "spectrum": ("device",),
    "hybridize": ("device", "sweep"),
    "lifetime": ("device", "sweep", "emitter"),
    "tune": ("tuning",),
    "fit": ("fit",),
    "metrics": ("metrics",),
}


def check_scenario(raw: Any, source_dir: Path = Path(".")) -> tuple:
    """Parse a loaded YAML document. Returns ``(scenario or None, findings)``."""
    r = _Reader()
    if not isinstance(raw, dict):
        r.add("(root)", "scenario must be a mapping")
        return None, r.findings
    task = r.choice(raw, "task", TASKS, "")
    seed = r.number(raw, "seed", "", required=False, default=0, integer=True)
    sc = Scenario(task=task or "", seed=seed or 0, source_dir=source_dir,
                  output_path=raw.get("output_path"))
    for name in REQUIRED_BLOCKS.get(task, ()):
        r.block(raw, name, "", required=True)
    dev_raw = r.block(raw, "device", "")
    if dev_raw is not None:
        sc.device = _device(r, dev_raw)
    em_raw = r.block(raw, "emitter", "")
    if em_raw is not None:
        sc.emitter = _emitter(r, em_raw)
    sw_raw = r.block(raw, "sweep", "")
    if sw_raw is not None:
        sc.sweep = _sweep(r, sw_raw)
    if task == "spectrum" or "probe" in raw:
        pr_raw = r.block(raw, "probe", "") or {}
        sc.probe = _probe(r, pr_raw, sc.device)
    sc.tuning = r.block(raw, "tuning", "") or {}
    sc.fit = r.block(raw, "fit", "") or {}
    sc.metrics = r.block(raw, "metrics", "") or {}
    if task == "tune" and sc.tuning:
        _check_tuning(r, sc.tuning)
    if task == "fit" and sc.fit:
        _check_fit(r, sc.fit)
    if task == "metrics" and sc.metrics:
        _check_metrics(r, sc.metrics)
    if not r.findings:
        _physics_checks(r, sc)
    return (None if r.findings else sc), r.findings


def _check_tuning(r: _Reader, t: dict):
    p = "tuning."
    program = r.choice(t, "program", ("retune", "uniform"), p, "retune")
    if "wavelengths" in t:
        if not isinstance(t["wavelengths"], list) or not t["wavelengths"]:
            r.add("tuning.wavelengths", "expected a non-empty list")
        else:
            for k, v in enumerate(t["wavelengths"]):
                r.quantity({"w": v}, "w", "wavelength", f"tuning.wavelengths[{k}]")
    else:
        rnd = r.block(t, "random", p, required=True)
        if rnd is not None:
            r.quantity(rnd, "center", "wavelength", "tuning.random.")
            r.quantity(rnd, "spread", "wavelength", "tuning.random.")
            r.number(rnd, "count", "tuning.random.", integer=True)
    ki = r.quantity(t, "kappa_i", "frequency", p, required=False, default=5.0)
    if ki is not None and not ki > 0:
        r.add("tuning.kappa_i", "intrinsic loss must be > 0")
    r.quantity(t, "kappa_e", "frequency", p, required=False)
    r.quantity(t, "theta", "phase", p, required=False)
    r.quantity(t, "threshold", "energy", p, required=False)
    r.quantity(t, "gain", "gain", p, required=False)
    if program == "retune":
        r.number(t, "cavity", p, required=False, integer=True)
        r.quantity(t, "shift", "frequency", p)
    else:
        r.quantity(t, "spacing", "frequency", p)
    ctrl = r.block(t, "controller", p) or {}
    r.quantity(ctrl, "target_step", "frequency", "tuning.controller.", required=False)
    r.quantity(ctrl, "initial_power", "power", "tuning.controller.", required=False)
    r.quantity(ctrl, "max_power", "power", "tuning.controller.", required=False)
    r.number(ctrl, "max_iterations", "tuning.controller.", required=False, integer=True)


def _check_fit(r: _Reader, f: dict):
    p = "fit."
    r.choice(f, "mode", ("lorentzian", "stack"), p, "lorentzian")
    r.choice(f, "coupling", ("under", "over"), p, "under")
    r.choice(f, "domain", ("power", "complex"), p, "power")
    if not isinstance(f.get("input"), str):
        r.add("fit.input", "required path to a spectrum CSV or stack manifest")


def _check_metrics(r: _Reader, m: dict):
    p = "metrics."
    if "lifetimes" in m:
        r.quantity(m, "tau0", "time", p)
        dw = r.number(m, "eta_dw", p, required=False, default=1.0)
        qe = r.number(m, "eta_qe", p, required=False, default=1.0)
        for key, v in (("eta_dw", dw), ("eta_qe", qe)):
            if v is not None and not 0 < v <= 1:
                r.add(f"metrics.{key}", f"must be in (0, 1], got {v}")
        if not isinstance(m["lifetimes"], list) or not m["lifetimes"]:
            r.add("metrics.lifetimes", "expected a non-empty list")
        else:
            for k, v in enumerate(m["lifetimes"]):
                r.quantity({"t": v}, "t", "time", f"metrics.lifetimes[{k}]")
    for name, keys in (("cooperativity", ("g", "kappa", "gamma")),
                       ("cavity_cooperativity", ("g", "kappa1", "kappa2"))):
        blk = r.block(m, name, p)
        if blk is not None:
            for key in keys:
                r.quantity(blk, key, "frequency", f"metrics.{name}.")
    if not any(k in m for k in ("lifetimes", "cooperativity", "cavity_cooperativity")):
        r.add("metrics", "nothing to compute: give lifetimes, cooperativity or "
                         "cavity_cooperativity")


def read_yaml(path) -> tuple:
    """Load a scenario file; returns ``(document, sha256 of the bytes)``."""
    data = Path(path).read_bytes()
    try:
        doc = yaml.safe_load(data.decode("utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"{path}: parse error at {where}: {problem}") from None
    return doc, hashlib.sha256(data).hexdigest()


def load_scenario(path) -> Scenario:
    """Read, parse and validate; raises :class:`ConfigError` listing all findings."""
    doc, digest = read_yaml(path)
    sc, findings = check_scenario(doc, Path(path).resolve().parent)
    if findings:
        raise ConfigError(f"{path}: invalid scenario\n" + "\n".join(f"  {f}" for f in findings))
    sc.sha256 = digest
    return sc


def validate_file(path) -> List[Finding]:
    """Findings for a scenario file; an empty list means it is valid."""
    try:
        doc, _ = read_yaml(path)
    except ConfigError as exc:
        return [Finding("(file)", str(exc))]
    except OSError as exc:
        return [Finding("(file)", str(exc))]
    _, findings = check_scenario(doc, Path(path).resolve().parent)
    return findings

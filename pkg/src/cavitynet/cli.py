"""Command-line entry point: ``cavitynet run|validate|fit|metrics``.

Exit codes: 0 success, 1 task error, 2 configuration error.
All frequency-like outputs are omega/2pi in GHz.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import Scenario, load_scenario, parse_quantity, validate_file
from .dynamics import probe_grid, read_spectrum_csv, reflection, write_spectrum_csv
from .errors import CavityNetError, ConfigError
from .fitting import fit_lorentzian, fit_two_cavity_stack
from .hybridization import cavity2_sweep, write_sweep_csv
from .purcell import (EmitterRadiativeBudget, cavity_cavity_cooperativity, cooperativity,
                      purcell_factor)
from .tuning import (ControllerConfig, TuningPlant, tune_to_target, tune_uniform_array,
                     write_trace_csv)
from .units import ghz_to_rad, shift_wavelength

EXIT_OK, EXIT_TASK, EXIT_CONFIG = 0, 1, 2
STACK_MANIFEST = "stack_manifest.csv"


# -- tasks -----------------------------------------------------------------------

def _spectrum_grid(sc: Scenario) -> np.ndarray:
    if sc.sweep and sc.sweep.axis == "probe_wavelength":
        return sc.sweep.values()
    return probe_grid(sc.probe.center_nm, sc.probe.span_ghz, sc.probe.points)


def task_spectrum(sc: Scenario, out: Path, threads: int) -> list:
    grid = _spectrum_grid(sc)
    cfg = sc.device
    if sc.sweep is None or sc.sweep.axis == "probe_wavelength":
        write_spectrum_csv(reflection(cfg, grid), out / "spectrum.csv")
        return ["spectrum.csv"]
    # Outer sweep: one slice per cavity-2 wavelength or cavity-1 phase length.
    (out / "stack").mkdir(exist_ok=True)
    coords = sc.sweep.values()
    rows, files = [], []
    for k, c in enumerate(coords):
        if sc.sweep.axis == "cavity2_wavelength":
            slice_cfg = cfg.with_cavity(1, resonance_wavelength=float(c))
            coord = f"{c:.12g}"
        else:
            slice_cfg = replace(cfg, phi1=float(c) - cfg.phi2)
            coord = f"{c / np.pi:.12g}"
        spec = reflection(slice_cfg, grid)
        name = f"stack/slice_{k:04d}.csv"
        write_spectrum_csv(spec, out / name)
        files.append(name)
        rows.append((name, coord, spec))
    coord_name = ("tuning_coordinate_nm" if sc.sweep.axis == "cavity2_wavelength"
                  else "theta1_over_pi")
    with open(out / STACK_MANIFEST, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", coord_name])
        for name, coord, _ in rows:
            w.writerow([name, coord])
    with open(out / "stack_reflectance.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([coord_name, "wavelength_nm", "reflectance"])
        for _, coord, spec in rows:
            for lam, pw in zip(spec.wavelength_nm, spec.power):
                w.writerow([coord, f"{lam:.12g}", f"{pw:.12g}"])
    return [STACK_MANIFEST, "stack_reflectance.csv"] + files


def task_hybridize(sc: Scenario, out: Path, threads: int) -> list:
    cfg = sc.device
    emitter = None
    if sc.task == "lifetime":
        cfg = cfg.with_probe(sc.emitter.wavelength_nm)
        emitter = sc.emitter.params(cfg.probe_wavelength)
    points = cavity2_sweep(cfg, sc.sweep.values(), emitter)
    write_sweep_csv(points, out / "sweep.csv")
    return ["sweep.csv"]


def _plant(sc: Scenario) -> TuningPlant:
    t = sc.tuning
    if "wavelengths" in t:
        lams = [parse_quantity(v, "wavelength", "tuning.wavelengths") for v in t["wavelengths"]]
    else:
        rnd = t["random"]
        rng = np.random.default_rng(sc.seed)
        c = parse_quantity(rnd["center"], "wavelength", "tuning.random.center")
        s = parse_quantity(rnd["spread"], "wavelength", "tuning.random.spread")
        lams = list(c + rng.uniform(-s / 2, s / 2, int(rnd["count"])))
    kw = {}
    if "threshold" in t:
        kw["sublimation_threshold"] = parse_quantity(t["threshold"], "energy", "tuning.threshold")
    if "gain" in t:
        kw["shift_per_pulse_gain"] = parse_quantity(t["gain"], "gain", "tuning.gain")
    return TuningPlant.uniform(
        lams,
        kappa_e_ghz=parse_quantity(t.get("kappa_e", "5 GHz"), "frequency", "tuning.kappa_e"),
        kappa_i_ghz=parse_quantity(t.get("kappa_i", "5 GHz"), "frequency", "tuning.kappa_i"),
        theta=parse_quantity(t.get("theta", 0.0), "phase", "tuning.theta"), **kw)


def _controller(t: dict) -> ControllerConfig:
    c = t.get("controller") or {}
    kw = {}
    if "target_step" in c:
        kw["target_step"] = parse_quantity(c["target_step"], "frequency", "target_step")
    if "initial_power" in c:
        kw["initial_power"] = parse_quantity(c["initial_power"], "power", "initial_power")
    if "max_power" in c:
        kw["max_power"] = parse_quantity(c["max_power"], "power", "max_power")
    if "max_iterations" in c:
        kw["max_iterations"] = int(c["max_iterations"])
    return ControllerConfig(**kw)


def task_tune(sc: Scenario, out: Path, threads: int) -> list:
    t = sc.tuning
    plant = _plant(sc)
    ctrl = _controller(t)
    if t.get("program", "retune") == "retune":
        k = int(t.get("cavity", 0))
        shift = parse_quantity(t["shift"], "frequency", "tuning.shift")
        target = float(shift_wavelength(plant.cavities[k].wavelength_nm, shift))
        trace = tune_to_target(plant, k, target, ctrl)
    else:
        trace = tune_uniform_array(plant, parse_quantity(t["spacing"], "frequency",
                                                         "tuning.spacing"), ctrl)
    write_trace_csv(trace, out / "trace.csv")
    with open(out / "final_resonances.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cavity", "wavelength_nm", "frequency_GHz"])
        for k, c in enumerate(plant.cavities):
            w.writerow([k, f"{c.wavelength_nm:.12g}", f"{c.frequency_ghz:.12g}"])
    return ["trace.csv", "final_resonances.csv"]


def read_stack_manifest(path) -> tuple:
    """``(spectra, coordinates)`` from a manifest CSV written by the spectrum task."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0] != "file":
        raise ConfigError(f"{path}: not a stack manifest")
    spectra = [read_spectrum_csv(path.parent / r[0]) for r in rows[1:]]
    coords = [float(r[1]) for r in rows[1:]]
    return spectra, coords


def run_fit(input_path: Path, mode: str, coupling: str, domain: str, out: Path,
            threads: int = 1) -> list:
    if mode == "stack":
        spectra, coords = read_stack_manifest(input_path)
        result = fit_two_cavity_stack(spectra, coords)
        result.write(out / "fit.txt")
        return ["fit.txt"]
    if input_path.name == STACK_MANIFEST or _is_manifest(input_path):
        spectra, _ = read_stack_manifest(input_path)
    else:
        spectra = [read_spectrum_csv(input_path)]
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        results = list(pool.map(lambda s: fit_lorentzian(s, coupling, domain), spectra))
    if len(results) == 1:
        results[0].write(out / "fit.txt")
        return ["fit.txt"]
    names = []
    for k, res in enumerate(results):
        names.append(f"fit_{k:04d}.txt")
        res.write(out / names[-1])
    return names


def _is_manifest(path: Path) -> bool:
    with open(path) as fh:
        return fh.readline().startswith("file,")


def task_fit(sc: Scenario, out: Path, threads: int) -> list:
    f = sc.fit
    inp = Path(f["input"])
    if not inp.is_absolute():
        inp = sc.source_dir / inp
    return run_fit(inp, f.get("mode", "lorentzian"), f.get("coupling", "under"),
                   f.get("domain", "power"), out, threads)


def compute_metrics(m: dict) -> tuple:
    """Rows of ``(tau_ns, P)`` plus a dict of scalar figures of merit."""
    rows, scalars = [], {}
    if "lifetimes" in m:
        tau0 = parse_quantity(m["tau0"], "time", "metrics.tau0")
        dw = float(m.get("eta_dw", 1.0))
        qe = float(m.get("eta_qe", 1.0))
        for k, v in enumerate(m["lifetimes"]):
            tau = parse_quantity(v, "time", f"metrics.lifetimes[{k}]")
            rows.append((tau * 1e9, purcell_factor(EmitterRadiativeBudget(tau0, tau, dw, qe))))
    if "cooperativity" in m:
        c = m["cooperativity"]
        q = {k: ghz_to_rad(parse_quantity(c[k], "frequency", f"metrics.cooperativity.{k}"))
             for k in ("g", "kappa", "gamma")}
        scalars["cooperativity"] = cooperativity(q["g"], q["kappa"], q["gamma"])
    if "cavity_cooperativity" in m:
        c = m["cavity_cooperativity"]
        q = {k: parse_quantity(c[k], "frequency", f"metrics.cavity_cooperativity.{k}")
             for k in ("g", "kappa1", "kappa2")}
        cc = cavity_cavity_cooperativity(q["g"], q["kappa1"], q["kappa2"])
        scalars["cavity_cooperativity"] = cc.value
    return rows, scalars


def write_metrics(rows, scalars, out: Path) -> list:
    names = []
    if rows:
        with open(out / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau_ns", "purcell"])
            for tau, p in rows:
                w.writerow([f"{tau:.12g}", f"{p:.12g}"])
        names.append("metrics.csv")
    if scalars:
        (out / "metrics.txt").write_text("".join(f"{k} = {v:.12g}\n" for k, v in scalars.items()))
        names.append("metrics.txt")
    return names


def print_metrics(rows, scalars):
    for tau, p in rows:
        print(f"tau = {tau:8.1f} ns  P = {p:.1f}")
    for k, v in scalars.items():
        print(f"{k} = {v:.4g}")


def task_metrics(sc: Scenario, out: Path, threads: int) -> list:
    rows, scalars = compute_metrics(sc.metrics)
    print_metrics(rows, scalars)
    return write_metrics(rows, scalars, out)


TASK_RUNNERS = {"spectrum": task_spectrum, "hybridize": task_hybridize,
                "lifetime": task_hybridize, "tune": task_tune, "fit": task_fit,
                "metrics": task_metrics}


# -- plumbing ----------------------------------------------------------------------

def write_manifest(out: Path, *, command, sha256, outputs, wall_time, seed=None, task=None):
    manifest = {
        "command": command,
        "task": task,
        "scenario_sha256": sha256,
        "code_version": __version__,
        "seed": seed,
        "wall_time_s": round(wall_time, 6),
        "outputs": outputs,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _outdir(args, sc: Scenario = None) -> Path:
    if args.output_dir:
        out = Path(args.output_dir)
    elif sc is not None and sc.output_path:
        out = Path(sc.output_path)
        if not out.is_absolute():
            out = sc.source_dir / out
    else:
        out = Path("out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    try:
        sc = load_scenario(args.scenario)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        sc.seed = args.seed
    out = _outdir(args, sc)
    try:
        outputs = TASK_RUNNERS[sc.task](sc, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CavityNetError, ValueError, ArithmeticError) as exc:
        print(f"task '{sc.task}' failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TASK
    write_manifest(out, command="run", sha256=sc.sha256, outputs=outputs,
                   wall_time=time.perf_counter() - t0, seed=sc.seed, task=sc.task)
    print(f"{sc.task}: wrote {len(outputs)} file(s) to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    findings = validate_file(args.scenario)
    if not findings:
        print(f"{args.scenario}: ok")
        return EXIT_OK
    for f in findings:
        print(f"{args.scenario}: {f}")
    return EXIT_CONFIG


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    inp = Path(args.input)
    if not inp.exists():
        print(f"config error: {inp} does not exist", file=sys.stderr)
        return EXIT_CONFIG
    out = _outdir(args)
    try:
        outputs = run_fit(inp, args.mode, args.coupling, args.domain, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CavityNetError, ValueError, KeyError) as exc:
        print(f"fit failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TASK
    write_manifest(out, command="fit", sha256=_file_hash(inp), outputs=outputs,
                   wall_time=time.perf_counter() - t0, task="fit")
    print((out / outputs[0]).read_text(), end="")
    return EXIT_OK


def cmd_metrics(args) -> int:
    t0 = time.perf_counter()
    m = {}
    if args.tau:
        if not args.tau0:
            print("config error: --tau0 is required with --tau", file=sys.stderr)
            return EXIT_CONFIG
        m.update(tau0=args.tau0, eta_dw=args.eta_dw, eta_qe=args.eta_qe, lifetimes=args.tau)
    if args.cooperativity:
        m["cooperativity"] = dict(zip(("g", "kappa", "gamma"), args.cooperativity))
    if args.cavity_cooperativity:
        m["cavity_cooperativity"] = dict(zip(("g", "kappa1", "kappa2"),
                                             args.cavity_cooperativity))
    if not m:
        print("config error: nothing to compute", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, scalars = compute_metrics(m)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CavityNetError, ValueError) as exc:
        print(f"metrics failed: {exc}", file=sys.stderr)
        return EXIT_TASK
    print_metrics(rows, scalars)
    if args.output_dir:
        out = _outdir(args)
        outputs = write_metrics(rows, scalars, out)
        write_manifest(out, command="metrics", sha256=None, outputs=outputs,
                       wall_time=time.perf_counter() - t0, task="metrics")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help="directory for outputs (created if missing)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent fits")
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser = argparse.ArgumentParser(prog="cavitynet",
                                     description="Bus-coupled cavity network simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", parents=[common], help="check a scenario without running")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fit", parents=[common], help="fit a spectrum CSV or stack manifest")
    p.add_argument("input")
    p.add_argument("--mode", choices=("lorentzian", "stack"), default="lorentzian")
    p.add_argument("--coupling", choices=("under", "over"), default="under")
    p.add_argument("--domain", choices=("power", "complex"), default="power")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("metrics", parents=[common], help="Purcell factors and cooperativities")
    p.add_argument("--tau0", help='bare lifetime, e.g. "960 ns"')
    p.add_argument("--tau", nargs="+", help='enhanced lifetimes, e.g. "62.1 ns"')
    p.add_argument("--eta-dw", type=float, default=1.0)
    p.add_argument("--eta-qe", type=float, default=1.0)
    p.add_argument("--cooperativity", nargs=3, metavar=("G", "KAPPA", "GAMMA"))
    p.add_argument("--cavity-cooperativity", nargs=3, metavar=("G", "KAPPA1", "KAPPA2"))
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

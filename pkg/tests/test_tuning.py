import csv

import numpy as np
import pytest

from cavitynet.errors import InvalidParameterError, StallError
from cavitynet.tuning import (ControllerConfig, TuningPlant, apply_deposition,
                              apply_free_space_pulse, apply_pulse, coupling_vs_theta,
                              intracavity_energy, kappa_vs_theta, linewidth_sweep,
                              tune_to_target, tune_uniform_array, uniform_array_targets,
                              write_trace_csv)
from cavitynet.units import shift_wavelength

LAM = 1326.0


def test_kappa_vs_theta_examples():
    assert np.isclose(kappa_vs_theta(1.0, 0.3, np.pi / 2), 0.3)
    frac, r2 = coupling_vs_theta(1.0, 0.5, np.pi / 2)
    assert np.isclose(frac, 0.0) and np.isclose(r2, 1.0)
    # Effective external 22.2 GHz (kappa_e = 11.1) with 5.5 GHz intrinsic.
    frac, _ = coupling_vs_theta(11.1, 5.5, 0.0)
    assert round(frac, 2) == 0.80
    with pytest.raises(InvalidParameterError):
        kappa_vs_theta(-1.0, 1.0, 0.0)


def test_far_detuned_pulse_does_nothing():
    plant = TuningPlant.uniform([LAM])
    assert apply_pulse(plant, 0, LAM + 1.0, 1e-6) == 0.0
    assert plant.cavities[0].wavelength_nm == LAM


def test_fixed_power_is_self_limiting():
    plant = TuningPlant.uniform([LAM])
    shifts = [apply_pulse(plant, 0, LAM, 1.2e-6) for _ in range(40)]
    assert all(b < a for a, b in zip(shifts, shifts[1:]) if a > 0)
    assert shifts[-1] < 1e-3 * shifts[0]
    assert sum(shifts) < 5.0


def test_neighbor_lorentzian_suppression():
    plant = TuningPlant.uniform([LAM, LAM])
    cav = plant.cavities[1]
    kappa_ghz = cav.kappa / (2e9 * np.pi)
    plant.cavities[1].wavelength_nm = float(shift_wavelength(LAM, -10 * kappa_ghz))
    on = intracavity_energy(plant.cavities[0], LAM, 1e-6)
    off = intracavity_energy(plant.cavities[1], LAM, 1e-6)
    assert off / on < 0.01
    target = apply_pulse(plant, 0, LAM, 1.5e-6)
    assert target > 0
    assert plant.cavities[1].wavelength_nm == float(shift_wavelength(LAM, -10 * kappa_ghz))


def test_retune_ten_ghz():
    plant = TuningPlant.uniform([LAM])
    target = float(shift_wavelength(LAM, 10.0))
    trace = tune_to_target(plant, 0, target)
    assert 14 <= len(trace) <= 26
    lams = [r.wavelength_nm for r in trace.rows] + [plant.cavities[0].wavelength_nm]
    assert all(b <= a for a, b in zip(lams, lams[1:]))
    f_target = TuningPlant.uniform([target]).cavities[0].frequency_ghz
    assert abs(plant.cavities[0].frequency_ghz - f_target) <= 0.25


def test_target_equals_current():
    plant = TuningPlant.uniform([LAM])
    trace = tune_to_target(plant, 0, LAM)
    assert len(trace) == 0 and trace.success


def test_red_target_rejected():
    plant = TuningPlant.uniform([LAM])
    with pytest.raises(InvalidParameterError):
        tune_to_target(plant, 0, LAM + 0.1)


def test_stall_carries_trace():
    plant = TuningPlant.uniform([LAM], sublimation_threshold=1.0)
    ctrl = ControllerConfig(initial_power=1e-6, max_power=2e-6)
    with pytest.raises(StallError) as err:
        tune_to_target(plant, 0, float(shift_wavelength(LAM, 5.0)), ctrl)
    assert len(err.value.trace) > 0 and not err.value.trace.success


def test_controller_validation():
    with pytest.raises(InvalidParameterError):
        ControllerConfig(target_step=0.0)


def test_uniform_targets_only_blue():
    f = np.array([10.0, 3.0, 7.0, 50.0])
    t = uniform_array_targets(f, 20.0)
    assert np.all(t >= f - 1e-12)
    assert np.allclose(np.diff(np.sort(t)), 20.0)


def test_uniform_array_program():
    rng = np.random.default_rng(11)
    plant = TuningPlant.uniform(LAM + rng.uniform(-0.2, 0.2, 6))
    before = plant.wavelengths.copy()
    trace = tune_uniform_array(plant, 40.0)
    freqs = np.sort([c.frequency_ghz for c in plant.cavities])
    kappa = plant.cavities[0].kappa / (2e9 * np.pi)
    assert np.all(np.abs(np.diff(freqs) - 40.0) < kappa)
    assert np.all(plant.wavelengths <= before + 1e-12)
    assert len(trace) > 0


def test_deposition_is_global_red_shift():
    plant = TuningPlant.uniform([LAM, LAM + 0.1], global_redshift_per_deposition=10.0,
                                deposition_jitter=0.5)
    before = plant.wavelengths.copy()
    apply_deposition(plant, np.random.default_rng(0))
    assert np.all(plant.wavelengths > before)
    with pytest.raises(InvalidParameterError):
        apply_deposition(plant)


def test_free_space_crosstalk():
    plant = TuningPlant.uniform([LAM, LAM, LAM])
    shifts = apply_free_space_pulse(plant, 1, 2.0)
    assert list(shifts) == [0.0, 2.0, 0.0]
    shifts = apply_free_space_pulse(plant, 1, 2.0, crosstalk_length=1.0)
    assert np.isclose(shifts[0], 2.0 * np.exp(-0.5))


def test_snapshot_is_independent():
    plant = TuningPlant.uniform([LAM])
    snap = plant.snapshot()
    apply_pulse(plant, 0, LAM, 2e-6)
    assert snap.cavities[0].wavelength_nm == LAM


def test_trace_csv(tmp_path):
    plant = TuningPlant.uniform([LAM])
    trace = tune_to_target(plant, 0, float(shift_wavelength(LAM, 2.0)))
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "cavity", "wavelength_nm", "power", "shift_GHz"]
    assert len(rows) == len(trace) + 1


def test_linewidth_modulation_matches_law():
    pts = linewidth_sweep(n_points=15)
    assert len(pts) == 15
    for p in pts:
        assert np.isclose(p.kappa_fit_ghz, p.kappa_model_ghz, rtol=1e-6)
        assert np.isclose(p.fraction_fit, p.fraction_model, atol=1e-6)

import numpy as np
import pytest

from speclogic import InputError, run, run_benchmark, synth_oscillator
from speclogic.benchmark import (
    REGIME_NAMES,
    REGIMES,
    predicted_classes,
    reference_config,
)


def test_regime_roster():
    assert len(REGIMES) == 8
    assert len(set(r.class_head for r in REGIMES)) == 8


def test_synth_deterministic():
    a, la = synth_oscillator("underdamped_low", seed=123)
    b, lb = synth_oscillator("underdamped_low", seed=123)
    assert np.array_equal(a.samples, b.samples)
    assert la == lb
    c, _ = synth_oscillator("underdamped_low", seed=124)
    assert not np.array_equal(a.samples, c.samples)


def test_synth_initial_value_is_drive_amplitude():
    # cos(0) = 1, so pinning the amplitude box fixes x(0) exactly
    series, _ = synth_oscillator("underdamped_low", params={"amp": (1.0, 1.0)}, seed=9)
    assert series.samples[0] == pytest.approx(1.0)


def test_synth_noise_changes_signal_but_keeps_label():
    clean, label = synth_oscillator("overdamped", seed=5)
    noisy, label2 = synth_oscillator("overdamped", noise_sigma=0.1, seed=5)
    assert label == label2 == "class_overdamped"
    assert not np.array_equal(clean.samples, noisy.samples)


def test_synth_validation():
    with pytest.raises(InputError):
        synth_oscillator("harmonic")
    with pytest.raises(InputError):
        synth_oscillator("overdamped", n=32)
    with pytest.raises(InputError):
        synth_oscillator("overdamped", params={"frequency": (1, 2)})


def test_each_regime_classifies_to_its_ground_truth():
    cfg = reference_config()
    for i, name in enumerate(REGIME_NAMES):
        series, truth = synth_oscillator(name, seed=1000 + i)
        result = run(series, cfg)
        assert predicted_classes(result) == [truth], name


def test_two_mode_regimes_yield_two_atoms():
    cfg = reference_config()
    for name in ("two_mode_close", "two_mode_far"):
        series, _ = synth_oscillator(name, seed=77)
        result = run(series, cfg)
        assert len(result.atoms.atoms) == 2, name


def test_benchmark_small_sweep():
    report = run_benchmark(24, 0.0, seed=11)
    assert report.samples == 24
    assert report.accuracy == 1.0
    assert report.traces_valid == 1.0
    assert not report.failures
    payload = report.to_dict()
    assert set(payload) >= {"accuracy", "confusion", "traces_valid", "samples"}


def test_benchmark_confusion_diagonal():
    report = run_benchmark(16, 0.0, seed=2)
    for truth, row in report.confusion.items():
        for predicted, count in row.items():
            assert predicted == truth, (truth, predicted)
            assert count == 2

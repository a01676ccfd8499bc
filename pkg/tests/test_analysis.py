import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attoscope import benzene_preset, default_pulse_sequence
from attoscope.analysis import (
    AnalysisResult,
    analyze_trace,
    beat_spectrum,
    demodulate,
    envelope_period,
    estimate_timing_jitter,
    fit_sinusoid,
    phase_cycle,
    remodulate,
)
from attoscope.analytic import OverlapFunction, TwoStateParams, difference_sum, signal
from attoscope.errors import SamplingError
from attoscope.propagator import IonizationTrace

W_E = 2 * math.pi * 1.172  # rad/fs


def synthetic_trace(delays, func, phases=(0.0, math.pi)):
    delays = np.asarray(delays, dtype=float)
    return IonizationTrace(delays, np.array(phases), np.column_stack([func(delays, p) for p in phases]))


def test_phase_cycle_algebra():
    c, a = 2.5, 0.75
    trace = synthetic_trace(np.arange(0, 10, 0.1), lambda t, p: c + a * np.cos(W_E * t + p))
    diff, total = phase_cycle(trace)
    assert np.allclose(diff, 2 * a * np.cos(W_E * trace.delays), rtol=0, atol=1e-14)
    assert np.allclose(total, 2 * c, rtol=0, atol=1e-14)


def test_phase_independent_trace_has_zero_diff():
    trace = synthetic_trace(np.arange(0, 5, 0.1), lambda t, p: 1.0 + 0.1 * np.sin(t))
    assert np.all(phase_cycle(trace)[0] == 0.0)


def test_phase_cycle_missing_column():
    trace = synthetic_trace(np.arange(0, 5, 0.1), lambda t, p: t, phases=(0.0, math.pi / 2))
    with pytest.raises(KeyError, match="phase"):
        phase_cycle(trace)


@settings(max_examples=40)
@given(st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8), st.lists(st.floats(-1e3, 1e3), min_size=8, max_size=8))
def test_reconstruction_identity(s0, s1):
    trace = IonizationTrace(np.arange(8.0), np.array([0.0, math.pi]), np.column_stack([s0, s1]))
    diff, total = phase_cycle(trace)
    assert np.array_equal(diff + total, 2 * np.array(s0)) or np.allclose(diff + total, 2 * np.array(s0), rtol=1e-15, atol=1e-12)
    assert np.allclose(total - diff, 2 * np.array(s1), rtol=1e-15, atol=1e-12)


def test_beat_spectrum_single_cosine():
    t = np.arange(0.0, 100.0, 0.1)
    spec = beat_spectrum(t, np.cos(2 * math.pi * 1.0 * t))
    assert len(spec.peaks) == 1
    assert spec.dominant[0] == pytest.approx(1000.0, abs=spec.resolution / 2)


def test_beat_spectrum_rejects_undersampling():
    t = np.arange(0.0, 100.0, 0.5)
    with pytest.raises(SamplingError, match="minimum required step is 400.0 as"):
        beat_spectrum(t, np.cos(W_E * t))
    with pytest.raises(SamplingError):
        beat_spectrum([0.0, 0.1, 0.3, 0.4, 0.5], np.zeros(5))


def test_demodulate_constant_envelope():
    t = np.arange(0.0, 200.0, 0.1)
    env = demodulate(t, 3.0 * np.cos(W_E * t), W_E)
    core = np.abs(env[200:-200])
    assert np.max(np.abs(core / core.mean() - 1.0)) < 1e-6
    assert core.mean() == pytest.approx(3.0, rel=1e-6)


def test_demodulate_cutoff_check():
    t = np.arange(0.0, 50.0, 0.1)
    with pytest.raises(ValueError, match="cutoff"):
        demodulate(t, np.cos(W_E * t), W_E, cutoff=W_E / 2)


def test_demodulate_recovers_analytic_overlap(preset):
    pulses = default_pulse_sequence()
    overlap = OverlapFunction(preset)
    params = TwoStateParams(math.sqrt(0.999), math.sqrt(0.001), preset.vertical_gap / 0.6582119569509066,
                            overlap_fn=overlap)
    t = np.arange(0.0, 300.0, 0.1)
    diff, _ = difference_sum(params, t)
    env = np.abs(demodulate(t, diff, params.omega_e))
    ref = np.abs(overlap(t))
    core = slice(300, -300)
    a, b = env[core] / env[core].max(), ref[core] / ref[core].max()
    assert np.max(np.abs(a - b)) < 0.02
    assert envelope_period(t[core], env[core], 10.0) == pytest.approx(36.06, abs=0.5)


def test_demodulate_remodulate_round_trip(preset):
    params = TwoStateParams(math.sqrt(0.999), math.sqrt(0.001), W_E, overlap_fn=OverlapFunction(preset))
    t = np.arange(0.0, 300.0, 0.1)
    diff, _ = difference_sum(params, t)
    back = remodulate(t, demodulate(t, diff, W_E), W_E)
    core = slice(300, -300)
    rms = np.sqrt(np.mean((back[core] - diff[core]) ** 2) / np.mean(diff[core] ** 2))
    assert rms < 0.01


def test_fit_sinusoid_recovers_parameters():
    t = np.linspace(0.0, 5.0, 400)
    y = 0.2 + 1.5 * np.cos(W_E * 1.0003 * t - 0.4)
    fit = fit_sinusoid(t, y, W_E, fit_frequency=True)
    assert fit["omega"] == pytest.approx(W_E * 1.0003, rel=1e-9)
    assert fit["amplitude"] == pytest.approx(1.5, rel=1e-9)
    assert fit["phase"] == pytest.approx(0.4, abs=1e-8)
    assert fit["offset"] == pytest.approx(0.2, abs=1e-9)


def _fine_trace(rng, jitter_as=0.0, amp_noise=0.0):
    t = np.arange(0.0, 1.0 + 1e-9, 0.001)  # 1 fs window, 1 as steps
    tj = t + rng.normal(0.0, jitter_as * 1e-3, t.size)
    return t, np.cos(W_E * tj + 0.3) + rng.normal(0.0, amp_noise, t.size)


def test_jitter_noiseless():
    t, y = _fine_trace(np.random.default_rng(1))
    assert estimate_timing_jitter(t, y, W_E) < 0.1


def test_jitter_amplitude_noise_matches_error_propagation():
    rng = np.random.default_rng(2)
    sigma = 0.01  # SNR 100
    est = np.mean([estimate_timing_jitter(*_fine_trace(rng, 0.0, sigma), W_E) for _ in range(50)])
    predicted = 1e3 * sigma / (1.0 * W_E)
    assert est <= predicted * 1.3
    assert est == pytest.approx(predicted, rel=0.3)


def test_jitter_recovers_injected_value():
    rng = np.random.default_rng(3)
    est = [estimate_timing_jitter(*_fine_trace(rng, 6.0), W_E) for _ in range(100)]
    assert np.mean(est) == pytest.approx(6.0, rel=0.2)


def test_jitter_sampling_requirements():
    t = np.arange(0.0, 0.04, 0.001)
    with pytest.raises(SamplingError, match="at least 50"):
        estimate_timing_jitter(t, np.cos(W_E * t), W_E)
    t = np.arange(0.0, 0.5, 0.001)
    with pytest.warns(RuntimeWarning, match="less than one carrier period"):
        estimate_timing_jitter(t, np.cos(W_E * t), W_E)
    t = np.arange(0.0, 5.0, 0.02)
    with pytest.warns(RuntimeWarning, match="10 as"):
        estimate_timing_jitter(t, np.cos(W_E * t), W_E)


def test_analyze_synthetic_trace_and_result_schema(tmp_path):
    t_vib = 36.06
    w_v = 2 * math.pi / t_vib

    def s(t, p):
        return 1.0 + 0.2 * (1 + 0.8 * np.cos(w_v * t)) * np.cos(W_E * t + p)

    trace = synthetic_trace(np.arange(60.0, 160.0, 0.1), s)
    t_fine = np.arange(80.0, 81.0 + 1e-9, 0.001)
    fine = synthetic_trace(t_fine, s)
    result = analyze_trace(trace, fine)
    assert result.carrier_frequency == pytest.approx(1172.0, abs=1.0)
    assert result.carrier_period == pytest.approx(1e6 / result.carrier_frequency)
    assert result.envelope_period == pytest.approx(t_vib, abs=0.5)
    assert result.envelope_period * 1e3 > result.carrier_period
    offsets = sorted(f - result.carrier_frequency for f in result.sideband_frequencies)
    assert offsets == pytest.approx([-27.73, 27.73], abs=1.0)
    assert result.modulation_depth == pytest.approx(0.8, abs=0.05)
    assert result.jitter_estimate is not None and result.jitter_estimate < 0.1
    path = tmp_path / "a.json"
    result.to_json(path)
    data = json.loads(path.read_text())
    assert data["schema"] == "attoscope.analysis/1"
    assert set(AnalysisResult.__dataclass_fields__) <= set(data)


def test_sum_has_no_carrier_component(preset):
    """Phase-cycling completeness for signals of the two-state form."""
    params = TwoStateParams(math.sqrt(0.999), math.sqrt(0.001), W_E, overlap_fn=OverlapFunction(preset))
    t = np.arange(60.0, 160.0, 0.1)
    trace = IonizationTrace(t, np.array([0.0, math.pi]),
                            np.column_stack([signal(params, t, 0.0), signal(params, t, math.pi)]))
    diff, total = phase_cycle(trace)
    d = beat_spectrum(t, diff)
    f = d.frequencies
    near = np.abs(f - d.dominant[0]) < 5.0
    spec_sum = beat_spectrum(t, total + 1e-30 * np.cos(t), threshold=0.0)
    ratio = np.max(spec_sum.amplitude[near]) / d.dominant[1]
    assert 20 * math.log10(max(ratio, 1e-300)) <= -40.0

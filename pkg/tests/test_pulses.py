import csv
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import hilbert

from attoscope.errors import ConfigurationError
from attoscope.grid import TimeGrid
from attoscope.pulses import (
    PhaseMaskTerm,
    PulseSequence,
    SpectralPulse,
    default_pulse_sequence,
    phase_cycle_schedule,
    pulse_energy,
    synthesize_field,
    write_field_csv,
)
from attoscope.units import HBAR, convert


def single(pulse):
    """Sequence whose probe is switched off."""
    return PulseSequence(pulse, replace(pulse, field_amplitude=0.0))


@pytest.fixture(scope="module")
def pulse():
    return default_pulse_sequence(field_amplitude=1.0).pump


def envelope(field):
    return np.abs(hilbert(field))


def fwhm(t, y):
    half = y.max() / 2
    above = np.flatnonzero(y >= half)
    i, j = above[0], above[-1]
    left = np.interp(half, [y[i - 1], y[i]], [t[i - 1], t[i]])
    right = np.interp(half, [y[j + 1], y[j]], [t[j + 1], t[j]])
    return right - left


def test_default_carrier_resonant_with_gap(pulse):
    assert pulse.photon_energy == pytest.approx(convert(1172.0, "THz", "eV"), rel=1e-12)
    assert pulse.wavelength_nm == pytest.approx(255.8, abs=0.05)
    assert pulse.duration == pytest.approx(15.0)


def test_transform_limited_pulse(pulse):
    tg = TimeGrid(-100.0, 100.0, 0.005)
    e = synthesize_field(single(pulse), tg, at="times")
    env = envelope(e)
    t = tg.times
    assert abs(t[np.argmax(env)]) < 0.01
    # intensity FWHM of a Gaussian spectrum with the configured time-bandwidth product
    assert fwhm(t, env**2) == pytest.approx(15.0, rel=0.01)
    assert env.max() == pytest.approx(1.0, rel=1e-3)


def test_delay_ramp_shifts_envelope(pulse):
    tg = TimeGrid(-90.0, 110.0, 0.005)
    shifted = synthesize_field(single(pulse.with_mask(PhaseMaskTerm.delay_ramp(10.0))), tg, at="times")
    env = envelope(shifted)
    i = np.argmax(env)
    t_peak = tg.times[i] + 0.5 * tg.dt * (env[i - 1] - env[i + 1]) / (env[i - 1] - 2 * env[i] + env[i + 1])
    assert t_peak == pytest.approx(10.0, abs=1e-3)
    reference = synthesize_field(single(pulse), TimeGrid(-100.0, 100.0, 0.005), at="times")
    assert np.max(np.abs(shifted - reference)) < 1e-10 * np.max(np.abs(reference))


def test_sub_period_delay_flips_carrier(pulse):
    tau = 0.4276
    tg = TimeGrid(-60.0, 60.0, 0.002)
    e0 = synthesize_field(single(pulse), tg, at="times")
    e1 = synthesize_field(single(pulse.with_mask(PhaseMaskTerm.delay_ramp(tau))), tg, at="times")
    corr = np.dot(e0, e1) / math.sqrt(np.dot(e0, e0) * np.dot(e1, e1))
    # analytic shift oracle: cos(w0 tau) times the envelope overlap exp(-tau^2 * a)
    a = 2 * math.log(2) / pulse.duration**2
    expected = math.cos(pulse.central_frequency * tau) * math.exp(-a * tau**2 / 2)
    assert corr == pytest.approx(expected, abs=1e-6)
    assert corr < -0.999


def test_pulse_energy_scaling(pulse):
    tg = TimeGrid(-100.0, 100.0, 0.005)
    e1 = pulse_energy(synthesize_field(single(pulse), tg), tg)
    e2 = pulse_energy(synthesize_field(single(replace(pulse, field_amplitude=2.0)), tg), tg)
    assert e2 / e1 == pytest.approx(4.0, abs=1e-12)
    assert e1 == pytest.approx(pulse.energy(), rel=1e-10)


def test_delay_ramp_preserves_energy(pulse):
    tg = TimeGrid(-100.0, 110.0, 0.005)
    e0 = pulse_energy(synthesize_field(single(pulse), tg), tg)
    e1 = pulse_energy(synthesize_field(single(pulse.with_mask(PhaseMaskTerm.delay_ramp(7.3))), tg), tg)
    assert e1 == pytest.approx(e0, rel=1e-10)


def periodic_field(pulse, tg):
    """Real field of the sampled spectrum on the periodic box spanned by ``tg``."""
    n = tg.n_steps
    omega = 2 * np.pi * np.fft.fftfreq(n, d=tg.dt)
    spec = 0.5 * (pulse.amplitude(omega) + np.conj(pulse.amplitude(-omega)))
    return np.fft.fftshift(np.fft.fft(spec)).real / (n * tg.dt)


def test_pi_step_preserves_energy(pulse):
    # the step leaves a 1/t tail, so the energy is compared on the periodic
    # box of the discrete spectrum where Parseval holds exactly
    tg = TimeGrid(0.0, 2**17 * 0.005, 0.005)
    step = PhaseMaskTerm.pi_step(pulse.central_frequency)
    e0 = pulse_energy(periodic_field(pulse, tg), tg)
    e1 = pulse_energy(periodic_field(pulse.with_mask(step), tg), tg)
    assert e1 == pytest.approx(e0, rel=1e-10)
    assert e0 == pytest.approx(pulse.energy(), rel=1e-10)


def test_pi_step_tail_clipping_is_reported(pulse):
    step = PhaseMaskTerm.pi_step(pulse.central_frequency)
    with pytest.warns(RuntimeWarning, match="clips"):
        synthesize_field(single(pulse.with_mask(step)), TimeGrid(-300.0, 300.0, 0.005))


def test_phase_cycle_schedule():
    base = default_pulse_sequence(delay=80.0)
    two = phase_cycle_schedule(base)
    assert [s.relative_phase for s in two] == [0.0, math.pi]
    assert all(s.pump == base.pump and s.probe == base.probe and s.delay == 80.0 for s in two)
    masks = [s.shaped_probe().phase_mask for s in two]
    assert masks[0][0] == masks[1][0] and masks[0][1] != masks[1][1]
    four = phase_cycle_schedule(base, [0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert len(four) == 4
    with pytest.raises(ValueError, match="empty schedule"):
        phase_cycle_schedule(base, [])


def test_coarse_dt_rejected(pulse):
    with pytest.raises(ConfigurationError, match="does not resolve"):
        synthesize_field(single(pulse), TimeGrid(-50.0, 50.0, 0.05))


def test_clipping_warning(pulse):
    with pytest.warns(RuntimeWarning, match="clips"):
        synthesize_field(single(pulse), TimeGrid(-10.0, 10.0, 0.005))


def test_mask_validation():
    with pytest.raises(ConfigurationError):
        PhaseMaskTerm("cubic", 1.0)
    with pytest.raises(ConfigurationError):
        SpectralPulse(7.4, 0.0)
    with pytest.raises(ConfigurationError):
        SpectralPulse(7.4, 0.2, field_amplitude=-1.0)


def test_pi_step_definition():
    term = PhaseMaskTerm.pi_step(7.0)
    assert np.array_equal(term.phase([6.9, 7.0, 7.1], 7.0), [0.0, 0.0, math.pi])


@settings(max_examples=60)
@given(
    st.permutations(
        [
            PhaseMaskTerm.constant(0.7),
            PhaseMaskTerm.delay_ramp(3.1),
            PhaseMaskTerm.chirp(40.0),
            PhaseMaskTerm.pi_step(7.36),
        ]
    )
)
def test_mask_composition_order_independent(terms):
    base = SpectralPulse(7.364, 0.185)
    w = np.linspace(6.8, 7.9, 101)
    reference = base.with_mask(*sorted(terms, key=lambda t: t.kind)).amplitude(w)
    assert np.allclose(base.with_mask(*terms).amplitude(w), reference, rtol=0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 400.0).filter(lambda t: abs(t / 0.01 - round(t / 0.01)) > 1e-3))
def test_shift_theorem_fidelity(tau):
    pulse = default_pulse_sequence(field_amplitude=1.0).pump
    tg = TimeGrid(-80.0, 500.0, 0.01)
    base = synthesize_field(single(pulse), tg, at="times")
    delayed = synthesize_field(single(pulse.with_mask(PhaseMaskTerm.delay_ramp(tau))), tg, at="times")
    # band-limited (Fourier) interpolation of the undelayed samples
    n = base.size
    omega = 2 * np.pi * np.fft.fftfreq(n, d=tg.dt)
    interp = np.fft.ifft(np.fft.fft(base) * np.exp(-1j * omega * tau)).real
    assert np.max(np.abs(delayed - interp)) < 1e-9 * np.max(np.abs(base))


def test_synthesized_field_is_real(pulse):
    e = synthesize_field(default_pulse_sequence(delay=40.0), TimeGrid(-60.0, 100.0, 0.005))
    assert e.dtype == np.float64


def test_support_widens_with_chirp(pulse):
    lo, hi = pulse.support(1e-3)
    clo, chi = pulse.with_mask(PhaseMaskTerm.chirp(200.0)).support(1e-3)
    assert chi - clo > hi - lo
    assert PulseSequence(pulse, pulse, 50.0).support(1e-3)[1] == pytest.approx(50.0 + hi)


def test_write_field_csv(tmp_path):
    path = tmp_path / "field.csv"
    write_field_csv(path, [0.0, 0.5], [1.0, -0.25])
    rows = list(csv.reader(open(path)))
    assert rows[0][0].startswith("# schema:")
    assert rows[1] == ["t_fs", "E_arb"]
    assert float(rows[3][1]) == -0.25

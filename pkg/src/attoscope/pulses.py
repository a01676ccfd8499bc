"""Spectral-domain pulse shaping and real-field synthesis.

Convention: a pulse is ``E(t) = Re z(t)`` with analytic field
``z(t) = (1/2pi) \\int A(w) exp(-i w t) dw``. A transform-limited pulse has
``A(w) = E0 sqrt(pi/a) exp(-(w-w0)**2/(4a))`` with ``a = 2 ln2 / T**2`` for an
intensity FWHM ``T``, so its envelope peaks at ``E0``. A spectral phase
``omega * tau`` delays the pulse by ``tau``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .grid import TimeGrid
from .units import HC_EV_NM, HBAR, convert

LN2 = math.log(2.0)
_KINDS = ("constant", "delay_ramp", "chirp", "pi_step")


@dataclass(frozen=True)
class PhaseMaskTerm:
    """One additive spectral-phase term.

    ``constant``: value is a phase (rad). ``delay_ramp``: value is a delay
    (fs), phase ``w*tau``. ``chirp``: value is the group-delay dispersion
    (fs^2), phase ``0.5*phi2*(w-w0)**2``. ``pi_step``: value is the step
    frequency (rad/fs), phase ``pi`` for ``w > w_step``.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown phase mask kind {self.kind!r}; expected one of {_KINDS}")

    @classmethod
    def constant(cls, phi):
        return cls("constant", float(phi))

    @classmethod
    def delay_ramp(cls, tau):
        return cls("delay_ramp", float(tau))

    @classmethod
    def chirp(cls, phi2):
        return cls("chirp", float(phi2))

    @classmethod
    def pi_step(cls, omega_step):
        return cls("pi_step", float(omega_step))

    def phase(self, omega, omega0):
        omega = np.asarray(omega, dtype=float)
        if self.kind == "constant":
            return np.full_like(omega, self.value)
        if self.kind == "delay_ramp":
            return omega * self.value
        if self.kind == "chirp":
            return 0.5 * self.value * (omega - omega0) ** 2
        return np.where(omega > self.value, np.pi, 0.0)


@dataclass(frozen=True)
class SpectralPulse:
    """Gaussian-spectrum pulse.

    ``central_frequency`` and ``spectral_fwhm`` are angular frequencies
    (rad/fs); ``spectral_fwhm`` is the FWHM of the spectral intensity.
    """

    central_frequency: float
    spectral_fwhm: float
    field_amplitude: float = 1.0
    phase_mask: tuple = ()

    def __post_init__(self):
        if not self.spectral_fwhm > 0:
            raise ConfigurationError("spectral_fwhm must be positive")
        if self.field_amplitude < 0:
            raise ConfigurationError("field_amplitude must be non-negative")
        object.__setattr__(self, "phase_mask", tuple(self.phase_mask))

    @classmethod
    def from_wavelength(cls, wavelength_nm=255.8, duration_fs=15.0, field_amplitude=1.0, phase_mask=()):
        """Pulse with a transform-limited intensity FWHM ``duration_fs``."""
        omega0 = HC_EV_NM / wavelength_nm / HBAR
        return cls(omega0, 4.0 * LN2 / duration_fs, field_amplitude, tuple(phase_mask))

    @property
    def duration(self) -> float:
        """Transform-limited intensity FWHM (fs)."""
        return 4.0 * LN2 / self.spectral_fwhm

    @property
    def carrier_period(self) -> float:
        return 2.0 * np.pi / self.central_frequency

    @property
    def photon_energy(self) -> float:
        return self.central_frequency * HBAR

    @property
    def wavelength_nm(self) -> float:
        return convert(self.central_frequency, "rad/fs", "nm")

    def with_mask(self, *terms) -> "SpectralPulse":
        return replace(self, phase_mask=self.phase_mask + tuple(terms))

    def spectral_phase(self, omega):
        omega = np.asarray(omega, dtype=float)
        total = np.zeros_like(omega)
        for term in self.phase_mask:
            total = total + term.phase(omega, self.central_frequency)
        return total

    def amplitude(self, omega):
        """Complex spectral amplitude ``A(w)`` including the phase mask."""
        omega = np.asarray(omega, dtype=float)
        a = 2.0 * LN2 / self.duration**2
        mag = self.field_amplitude * math.sqrt(np.pi / a) * np.exp(-((omega - self.central_frequency) ** 2) / (4.0 * a))
        return mag * np.exp(1j * self.spectral_phase(omega))

    def energy(self) -> float:
        """Analytic ``\\int E(t)**2 dt`` (phase masks do not change it)."""
        a = 2.0 * LN2 / self.duration**2
        return 0.5 * self.field_amplitude**2 * math.sqrt(np.pi / (2.0 * a))

    def group_delays(self) -> float:
        return sum(t.value for t in self.phase_mask if t.kind == "delay_ramp")

    def support(self, threshold=1e-6) -> tuple:
        """Time interval outside which the transform-limited envelope is below ``threshold``.

        Chirp stretches the pulse; the interval widens accordingly.
        """
        half = self.duration * math.sqrt(math.log(1.0 / threshold) / (2.0 * LN2))
        gdd = sum(abs(t.value) for t in self.phase_mask if t.kind == "chirp")
        if gdd:
            stretch = math.sqrt(1.0 + (4.0 * LN2 * gdd / self.duration**2) ** 2)
            half *= stretch
        center = self.group_delays()
        return center - half, center + half


@dataclass(frozen=True)
class PulseSequence:
    """Pump at t = 0 and a probe delayed by ``delay`` fs with relative phase ``relative_phase``."""

    pump: SpectralPulse
    probe: SpectralPulse
    delay: float = 0.0
    relative_phase: float = 0.0

    def shaped_probe(self) -> SpectralPulse:
        return self.probe.with_mask(
            PhaseMaskTerm.delay_ramp(self.delay), PhaseMaskTerm.constant(self.relative_phase)
        )

    def pulses(self):
        return (self.pump, self.shaped_probe())

    def with_delay(self, delay) -> "PulseSequence":
        return replace(self, delay=float(delay))

    def with_phase(self, phase) -> "PulseSequence":
        return replace(self, relative_phase=float(phase))

    def support(self, threshold=1e-6) -> tuple:
        lo0, hi0 = self.pump.support(threshold)
        lo1, hi1 = self.shaped_probe().support(threshold)
        return min(lo0, lo1), max(hi0, hi1)


def default_pulse_sequence(wavelength_nm=None, duration_fs=15.0, field_amplitude=0.0025, delay=0.0, phase=0.0):
    """Identical pump and probe resonant with the benzene vertical gap."""
    if wavelength_nm is None:
        wavelength_nm = convert(1172.0, "THz", "nm")
    pulse = SpectralPulse.from_wavelength(wavelength_nm, duration_fs, field_amplitude)
    return PulseSequence(pulse, pulse, delay, phase)


def _real_field(pulse: SpectralPulse, times) -> np.ndarray:
    """Real field from the Hermitian completion of the analytic spectrum."""
    times = np.asarray(times, dtype=float)
    n = times.size
    # the span is far less affected by rounding than a single difference
    dt = (times[-1] - times[0]) / (n - 1)
    nfft = 1 << int(math.ceil(math.log2(n * 4)))
    omega = 2.0 * np.pi * np.fft.fftfreq(nfft, d=dt)
    start = times[0] - (nfft - n) // 2 * dt
    pos = pulse.amplitude(omega) * np.exp(-1j * omega * start)
    neg = np.conj(pulse.amplitude(-omega) * np.exp(1j * omega * start))
    spec = 0.5 * (pos + neg)
    full = np.fft.fft(spec) / (nfft * dt)
    peak = np.max(np.abs(full))
    if peak and np.max(np.abs(full.imag)) > 1e-12 * peak:
        raise ArithmeticError("synthesized field is not real; spectrum lost Hermitian symmetry")
    offset = (nfft - n) // 2
    return full.real[offset : offset + n]


def synthesize_field(seq: PulseSequence, tg: TimeGrid, at: str = "midpoints") -> np.ndarray:
    """Real pump+probe field sampled on ``tg`` (step midpoints by default)."""
    times = tg.midpoints if at == "midpoints" else tg.times
    period = min(p.carrier_period for p in seq.pulses())
    if not tg.resolves(period):
        raise ConfigurationError(
            f"dt={tg.dt} fs does not resolve the {period:.4f} fs carrier (need dt <= {period / 50:.5f} fs)"
        )
    total = np.zeros(times.size)
    for pulse in seq.pulses():
        e = _real_field(pulse, times)
        expected = pulse.energy()
        if expected > 0:
            inside = np.sum(e**2) * tg.dt
            if abs(expected - inside) > 1e-6 * expected:
                warnings.warn(
                    f"time window clips {abs(expected - inside) / expected:.2e} of the pulse energy",
                    RuntimeWarning,
                    stacklevel=2,
                )
        total += e
    return total


def pulse_energy(field, tg: TimeGrid) -> float:
    return float(np.sum(np.asarray(field) ** 2) * tg.dt)


def phase_cycle_schedule(base: PulseSequence, phases=(0.0, np.pi)):
    phases = list(phases)
    if not phases:
        raise ValueError("empty schedule")
    return [base.with_phase(p) for p in phases]


def write_field_csv(path, times, field_values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["# schema: attoscope.field/1"])
        w.writerow(["t_fs", "E_arb"])
        for t, e in zip(times, field_values):
            w.writerow([f"{t:.17g}", f"{e:.17g}"])

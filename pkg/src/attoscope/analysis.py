"""Phase cycling, beat spectra, demodulation and timing-jitter estimation.

Traces are plain arrays here: ``delays`` in fs and signal values. Angular
frequencies are rad/fs, reported frequencies THz (1 THz = 1e-3 / fs).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import SamplingError

TWO_PI = 2.0 * np.pi


@dataclass
class AnalysisResult:
    carrier_frequency: float  # THz
    carrier_frequency_error: float  # THz
    carrier_period: float  # as
    envelope_period: float | None  # fs
    sideband_frequencies: list = field(default_factory=list)  # THz
    modulation_depth: float | None = None
    jitter_estimate: float | None = None  # as
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = "attoscope.analysis/1"
        return out

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def phase_cycle(trace, phases=(0.0, np.pi)):
    """Difference and sum of the two phase columns of ``trace``.

    ``trace`` is an :class:`~attoscope.propagator.IonizationTrace` (or any
    object with ``column(phase)``). Returns ``(diff, sum)``.
    """
    try:
        s0 = trace.column(phases[0])
        s1 = trace.column(phases[1])
    except KeyError as exc:
        raise KeyError(f"phase cycling needs phases {phases}: {exc}") from None
    return s0 - s1, s0 + s1


def _uniform_step(delays):
    delays = np.asarray(delays, dtype=float)
    if delays.size < 4:
        raise SamplingError("need at least 4 delay samples")
    steps = np.diff(delays)
    step = float(np.mean(steps))
    if not np.allclose(steps, step, rtol=1e-6, atol=1e-9):
        raise SamplingError("delay sampling is not uniform")
    return step


@dataclass
class BeatSpectrum:
    frequencies: np.ndarray  # THz
    amplitude: np.ndarray
    peaks: list  # [(frequency THz, amplitude)], strongest first
    resolution: float  # THz, 1/window

    @property
    def dominant(self):
        return self.peaks[0]


def beat_spectrum(delays, values, window="hann", pad_factor=16, nyquist_thz=1250.0, threshold=0.05):
    """Windowed spectrum of a delay trace with parabolic peak refinement.

    ``nyquist_thz`` is the highest frequency that must be resolved; the
    delay step must satisfy ``step <= 1 / (2 * nyquist_thz)``.
    """
    step = _uniform_step(delays)
    limit = 1e3 / (2.0 * nyquist_thz)  # fs
    if step > limit + 1e-12:
        raise SamplingError(
            f"delay step {step * 1e3:.1f} as under-samples {nyquist_thz:g} THz; "
            f"minimum required step is {limit * 1e3:.1f} as"
        )
    values = np.asarray(values, dtype=float)
    n = values.size
    win = sps.get_window(window, n) if window else np.ones(n)
    nfft = 1 << int(math.ceil(math.log2(n * pad_factor)))
    spec = np.abs(np.fft.rfft((values - values.mean()) * win, nfft)) * 2.0 / win.sum()
    freqs = np.fft.rfftfreq(nfft, d=step) * 1e3  # THz
    idx, _ = sps.find_peaks(spec, height=threshold * spec.max())
    peaks = []
    for i in idx:
        f, a = _parabolic(freqs, spec, i)
        peaks.append((f, a))
    peaks.sort(key=lambda p: -p[1])
    return BeatSpectrum(freqs, spec, peaks, 1e3 / (n * step))


def _parabolic(x, y, i):
    if i <= 0 or i >= len(y) - 1:
        return float(x[i]), float(y[i])
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2 * b + c
    if denom == 0:
        return float(x[i]), float(b)
    p = 0.5 * (a - c) / denom
    return float(x[i] + p * (x[1] - x[0])), float(b - 0.25 * (a - c) * p)


def demodulate(delays, values, carrier, cutoff=None, order=4):
    """Complex envelope ``O(tau)`` of ``values`` around ``carrier`` (rad/fs).

    The product ``values * exp(+i carrier tau)`` is low-passed with a
    zero-phase Butterworth filter (default cutoff ``carrier / 4``, angular)
    and doubled, so that ``values ~ Re[O exp(-i carrier tau)]``.
    """
    step = _uniform_step(delays)
    cutoff = carrier / 4.0 if cutoff is None else cutoff
    if cutoff >= carrier / 2.0:
        raise ValueError(f"cutoff {cutoff:.4g} rad/fs must stay below carrier/2 = {carrier / 2:.4g} rad/fs")
    nyq = np.pi / step  # rad/fs
    if cutoff >= nyq:
        raise SamplingError("cutoff above the sampling Nyquist frequency")
    delays = np.asarray(delays, dtype=float)
    mixed = np.asarray(values, dtype=float) * np.exp(1j * carrier * delays)
    sos = sps.butter(order, cutoff / nyq, output="sos")
    return 2.0 * (sps.sosfiltfilt(sos, mixed.real) + 1j * sps.sosfiltfilt(sos, mixed.imag))


def remodulate(delays, envelope, carrier):
    return np.real(envelope * np.exp(-1j * carrier * np.asarray(delays)))


def envelope_period(delays, envelope, min_period=None):
    """Period of ``|envelope|`` from the first autocorrelation maximum."""
    step = _uniform_step(delays)
    mag = np.abs(envelope) - np.mean(np.abs(envelope))
    n = mag.size
    ac = np.correlate(mag, mag, mode="full")[n - 1 :]
    ac = ac / (n - np.arange(n))  # unbiased
    start = 1 if min_period is None else max(1, int(min_period / step))
    idx, _ = sps.find_peaks(ac[: n // 2 + 1])
    idx = idx[idx >= start]
    if idx.size == 0:
        return None
    # first peak reaching half of the strongest one; later peaks are multiples
    best = idx[np.flatnonzero(ac[idx] >= 0.5 * ac[idx].max())[0]]
    lag, _ = _parabolic(np.arange(ac.size) * step, ac, best)
    return lag


def fit_sinusoid(delays, values, omega, fit_frequency=False):
    """Least-squares ``offset + a cos(w t) + b sin(w t)``.

    Returns a dict with ``omega``, ``amplitude``, ``phase`` (values follow
    ``amplitude * cos(omega t - phase)``), ``offset`` and ``residuals``.
    With ``fit_frequency`` the frequency is searched within one Fourier bin of
    ``omega`` and refined; ``omega_error`` reports its standard error.
    """
    t = np.asarray(delays, dtype=float)
    y = np.asarray(values, dtype=float)
    t0 = t.mean()

    def linear(w):
        design = np.column_stack([np.ones_like(t), np.cos(w * (t - t0)), np.sin(w * (t - t0))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return coef, y - design @ coef

    omega_err = None
    if fit_frequency:
        from scipy.optimize import least_squares, minimize_scalar

        def ssr(w):
            return float(np.sum(linear(w)[1] ** 2))

        # scan one Fourier bin either side of the guess, then refine the best bracket
        half = TWO_PI / max(t.max() - t.min(), 1e-12)
        grid = omega + half * np.linspace(-1.0, 1.0, 81)
        i = int(np.argmin([ssr(w) for w in grid]))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        sol = minimize_scalar(ssr, bounds=(lo, hi), method="bounded")
        # the sum of squares is flat at the minimum; finish on the residuals
        sol = least_squares(
            lambda w: linear(w[0])[1], [float(sol.x)], x_scale=[hi - lo], xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        omega = float(sol.x[0])
        dof = max(1, t.size - 4)
        s2 = float(np.sum(sol.fun**2)) / dof
        jtj = float(sol.jac[:, 0] @ sol.jac[:, 0])
        omega_err = math.sqrt(s2 / jtj) if jtj > 0 else float("inf")
    coef, resid = linear(omega)
    c, a, b = coef
    amp = math.hypot(a, b)
    phase = math.atan2(b, a) + omega * t0  # amplitude * cos(omega t - phase)
    return {
        "omega": omega,
        "omega_error": omega_err,
        "amplitude": amp,
        "phase": math.remainder(phase, TWO_PI),
        "offset": c,
        "residuals": resid,
    }


def estimate_timing_jitter(delays, values, carrier):
    """Upper limit on delay jitter (as) from a sinusoid fit at ``carrier`` (rad/fs).

    The trace is fitted by a sinusoid at ``carrier`` whose amplitude may
    drift linearly across the window. Residuals are split by the fitted
    phase: only noise in the quadrature (slope) direction can come from
    timing errors, so the squared, amplitude-normalized residuals are
    regressed on ``cos^2`` and ``sin^2`` of the local phase and the ``sin^2``
    coefficient is converted to time, ``sigma_t = sigma_phase / w``.
    Amplitude noise contributes to that coefficient too, which is why the
    result is an upper limit.
    """
    t = np.asarray(delays, dtype=float)
    if t.size < 50:
        raise SamplingError(f"jitter estimation needs at least 50 samples, got {t.size}")
    if t.max() - t.min() < TWO_PI / carrier * (1 - 1e-9):
        warnings.warn("trace spans less than one carrier period", RuntimeWarning, stacklevel=2)
    if np.max(np.diff(t)) > 0.010 + 1e-12:
        warnings.warn("delay step above 10 as; jitter estimate is coarse", RuntimeWarning, stacklevel=2)
    y = np.asarray(values, dtype=float)
    # locally sinusoidal model whose amplitude may drift linearly across the window
    u = t - t.mean()
    c, s_ = np.cos(carrier * u), np.sin(carrier * u)
    design = np.column_stack([np.ones_like(u), c, s_, u * c, u * s_])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    a_c = coef[1] + coef[3] * u
    a_s = coef[2] + coef[4] * u
    amp = np.hypot(a_c, a_s)
    theta = carrier * u - np.arctan2(a_s, a_c)
    quad = np.column_stack([np.cos(theta) ** 2, np.sin(theta) ** 2])
    k, *_ = np.linalg.lstsq(quad, (resid / amp) ** 2, rcond=None)
    sigma_phase = math.sqrt(max(float(k[1]), 0.0))
    return 1e3 * sigma_phase / carrier


def sideband_offsets(spectrum: BeatSpectrum, carrier_thz: float, window_thz: float = 100.0):
    return [f - carrier_thz for f, _ in spectrum.peaks[1:] if abs(f - carrier_thz) <= window_thz]


def analyze_trace(trace, fine_trace=None, envelope_min_period=10.0) -> AnalysisResult:
    """Full analysis of a phase-cycled trace.

    ``fine_trace`` (an attosecond-step trace) populates the jitter estimate.
    """
    diff, _ = phase_cycle(trace)
    delays = trace.delays
    spec = beat_spectrum(delays, diff)
    f_c, _ = spec.dominant
    carrier = TWO_PI * f_c * 1e-3
    env = demodulate(delays, diff, carrier)
    # ignore the filter edges when measuring the envelope
    edge = max(1, int(round(2.0 * TWO_PI / (carrier / 4.0) / _uniform_step(delays))))
    core = slice(edge, len(delays) - edge) if len(delays) > 4 * edge else slice(None)
    period = envelope_period(delays[core], env[core], envelope_min_period)
    mag = np.abs(env[core])
    depth = float((mag.max() - mag.min()) / (mag.max() + mag.min())) if mag.size else None
    notes = []
    if len(spec.peaks) < 2:
        notes.append("no sidebands above threshold")
    jitter = None
    if fine_trace is not None:
        fdiff, _ = phase_cycle(fine_trace)
        jitter = estimate_timing_jitter(fine_trace.delays, fdiff, carrier)
    return AnalysisResult(
        carrier_frequency=f_c,
        carrier_frequency_error=0.5 * (spec.frequencies[1] - spec.frequencies[0]),
        carrier_period=1e6 / f_c,
        envelope_period=period,
        sideband_frequencies=[f for f, _ in spec.peaks[1:] if abs(f - f_c) <= 100.0],
        modulation_depth=depth,
        jitter_estimate=jitter,
        notes=notes,
    )

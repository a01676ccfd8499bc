"""Perturbative two-state model of the phase-cycled ionization signal.

The signal of a ground/excited superposition probed by ionization is

    S(tau, phi) = |a0 E0^2 Qc0|^2 + |a1 E0 Qc1|^2
                  + 2 Re[a0* a1 Qc0* Qc1 E0^3 exp(-i phi) exp(-i w_e tau) O(tau)]

with ``O(tau) = <chi_0(tau)|chi_1(tau)>`` the nuclear overlap. ``O`` is
computed from grid eigenstates, which is exact field-free evolution on the
grid, with the electronic phase referenced to the vertical gap.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import SpatialGrid, build_grid
from .potentials import SystemModel, surface_eigenstates
from .pulses import SpectralPulse
from .units import HBAR


def _unit_overlap(tau):
    return np.ones_like(np.asarray(tau, dtype=float), dtype=complex)


@dataclass(frozen=True)
class TwoStateParams:
    a0: complex = 1.0
    a1: complex = 0.0
    omega_e: float = 0.0  # rad/fs
    Q_c0: complex = 1.0
    Q_c1: complex = 1.0
    E0: float = 1.0
    overlap_fn: Callable = field(default=_unit_overlap, compare=False)

    def __post_init__(self):
        norm = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"|a0|^2 + |a1|^2 must be 1, got {norm:.12g}")

    @classmethod
    def from_model(
        cls,
        model: SystemModel,
        pump: SpectralPulse,
        probe: SpectralPulse | None = None,
        variant: str = "delta",
        q_ratio: complex = 1.0,
        grid: SpatialGrid | None = None,
    ) -> "TwoStateParams":
        """Weak-field amplitudes from the pump spectrum at the vibronic lines.

        The default ``"delta"`` overlap is the vertical-promotion limit; use
        ``"ordered"`` to compare with the TDSE for finite pulses.
        """
        grid = grid or build_grid()
        lines, weights = _fc_lines(model, grid)
        amp = 0.5 * model.mu_ge / HBAR * np.abs(pump.amplitude(lines))
        p1 = float(np.sum(weights * amp**2))
        if p1 >= 1:
            raise ValueError("pump is not in the weak-field regime (excited population >= 1)")
        overlap = OverlapFunction(model, grid, variant, pump, probe or pump)
        return cls(
            math.sqrt(1 - p1),
            math.sqrt(p1),
            model.vertical_gap / HBAR,
            1.0,
            complex(q_ratio),
            pump.field_amplitude,
            overlap,
        )


@dataclass
class CoherenceTrace:
    delays: np.ndarray
    rho01: np.ndarray
    rho00: np.ndarray
    rho11: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["# schema: attoscope.coherence/1"])
            w.writerow(["delay_fs", "re_rho01", "im_rho01", "rho00", "rho11"])
            for t, r, p0, p1 in zip(self.delays, self.rho01, self.rho00, self.rho11):
                w.writerow([f"{t:.17g}", f"{r.real:.17g}", f"{r.imag:.17g}", f"{p0:.17g}", f"{p1:.17g}"])


def _fc_lines(model, grid):
    """Transition angular frequencies (rad/fs) and FC factors from v=0."""
    eg, vg = surface_eigenstates(model, model.ground, grid)
    ee, ve = surface_eigenstates(model, model.excited, grid)
    c = (ve.conj().T @ vg[:, 0]) * grid.dx
    return (ee - eg[0]) / HBAR, np.abs(c) ** 2


class OverlapFunction:
    """tau -> <chi_0(tau)|chi_1(tau)> for a model.

    ``variant="delta"`` promotes chi_0 vertically (delta-pulse limit).
    ``variant="filtered"`` weights each excited level by
    ``A_pump(w_v) * conj(A_probe(w_v))``, so spectral phase masks on the
    pulses (chirp, pi steps) enter the vibrational phases.
    ``variant="ordered"`` replaces the probe spectrum by its time-ordered
    response :func:`probe_response`: within the probe, excitation from the
    ground state has to happen before ionization, which gives detuned
    lines opposite phases.
    """

    def __init__(self, model, grid=None, variant="delta", pump=None, probe=None):
        if variant not in ("delta", "filtered", "ordered"):
            raise ValueError(f"unknown overlap variant {variant!r}")
        if variant != "delta" and pump is None:
            raise ValueError(f"{variant} overlap needs a pump pulse")
        self.grid = grid or build_grid()
        freqs, fc = _fc_lines(model, self.grid)
        self.detuning = freqs - model.vertical_gap / HBAR
        if variant != "delta":
            probe = probe or pump
            resp = probe.amplitude(freqs) if variant == "filtered" else probe_response(probe, freqs)
            w = fc * pump.amplitude(freqs) * np.conj(resp)
            w = w / np.sum(np.abs(w))
        else:
            w = fc.astype(complex)
        self.weights = w
        self.variant = variant

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(tau, self.detuning))
        return phases @ self.weights


def probe_response(probe: SpectralPulse, omegas, n_samples: int = 8192) -> np.ndarray:
    """Time-ordered excite-then-ionize response of a pulse at ``omegas`` (rad/fs).

    With the complex envelope ``e(t) = z(t) exp(i w_L t)``,

        K(w) = int |e(t)|^2 G(w, t) dt / int |e(t)|^2 dt,
        G(w, t) = int_{-inf}^{t} e(t') exp(i (w - w_L) t') dt',

    i.e. the amplitude excited at ``w`` up to time ``t`` weighted by the
    instantaneous (flat-continuum) ionization rate. For a long pulse
    ``G -> A(w)`` and ``K`` tends to the spectrum itself.
    """
    w_l = probe.central_frequency
    lo, hi = probe.support(1e-8)
    span = 2.0 * (hi - lo)
    dt = span / n_samples
    t = lo - 0.5 * (hi - lo) + dt * np.arange(n_samples)
    # envelope from the spectrum: e(t) = (1/2pi) int A(w_L + d) exp(-i d t) dd
    d = 2.0 * np.pi * np.fft.fftfreq(n_samples, d=dt)
    spec = probe.amplitude(w_l + d) * np.exp(1j * d * t[0])
    env = np.fft.fft(spec) / (n_samples * dt)
    rate = np.abs(env) ** 2
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.empty(omegas.size, dtype=complex)
    for i, w in enumerate(omegas):
        running = np.cumsum(env * np.exp(1j * (w - w_l) * t)) * dt
        out[i] = np.sum(rate * running) / np.sum(rate)
    return out


def vibrational_overlap(model: SystemModel, tau, variant="delta", pump=None, probe=None, grid=None):
    """Nuclear overlap <chi_0(tau)|chi_1(tau)> (complex), scalar or array."""
    if np.any(np.asarray(tau) < 0):
        raise ValueError("tau must be non-negative")
    out = OverlapFunction(model, grid, variant, pump, probe)(tau)
    return complex(out) if np.ndim(out) == 0 else out


def signal(params: TwoStateParams, tau, phi):
    p = params
    tau = np.asarray(tau, dtype=float)
    direct = abs(p.a0 * p.E0**2 * p.Q_c0) ** 2 + abs(p.a1 * p.E0 * p.Q_c1) ** 2
    cross = (
        np.conj(p.a0) * p.a1 * np.conj(p.Q_c0) * p.Q_c1 * p.E0**3
        * np.exp(-1j * phi) * np.exp(-1j * p.omega_e * tau) * p.overlap_fn(tau)
    )
    out = direct + 2.0 * np.real(cross)
    return float(out) if out.ndim == 0 else out


def density_matrix(params: TwoStateParams, tau) -> CoherenceTrace:
    p = params
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    rho01 = np.conj(p.a0) * p.a1 * np.exp(-1j * p.omega_e * tau) * p.overlap_fn(tau)
    return CoherenceTrace(
        tau,
        np.asarray(rho01, dtype=complex),
        np.full(tau.size, abs(p.a0) ** 2),
        np.full(tau.size, abs(p.a1) ** 2),
    )


def difference_sum(params: TwoStateParams, delays):
    """Closed-form ``S(tau,0) - S(tau,pi)`` and ``S(tau,0) + S(tau,pi)``."""
    p = params
    rho = density_matrix(params, delays)
    diff = 4.0 * np.real(np.conj(p.Q_c0) * p.Q_c1 * p.E0**3 * rho.rho01)
    total = 2.0 * rho.rho00 * abs(p.Q_c0 * p.E0**2) ** 2 + 2.0 * rho.rho11 * abs(p.Q_c1 * p.E0) ** 2
    return diff, total

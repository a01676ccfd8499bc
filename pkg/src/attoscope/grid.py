"""Spatial and temporal grids and the multi-channel vibronic state.

The nuclear coordinate is the dimensionless normal coordinate of a reference
oscillator (the ground-state mode of the model): kinetic energy is
``0.5 * hbar * omega_ref * k**2`` and a harmonic surface of frequency omega
has curvature ``hbar * omega**2 / omega_ref``. With this convention the
ground vibrational state of the reference oscillator is ``exp(-x**2 / 2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid ``x_j = x_min + j*dx``, ``j = 0..n_points-1``."""

    n_points: int
    x_min: float
    x_max: float

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / (self.n_points * self.dx)

    def refined(self) -> "SpatialGrid":
        """Same extent with twice the points."""
        return SpatialGrid(2 * self.n_points, self.x_min, self.x_max)


def build_grid(n_points: int = 256, x_min: float = -8.0, x_max: float = 8.0) -> SpatialGrid:
    if not x_max > x_min:
        raise ConfigurationError(f"degenerate extent: x_min={x_min}, x_max={x_max}")
    n_points = int(n_points)
    if n_points < 16 or n_points & (n_points - 1):
        raise ConfigurationError(f"n_points must be power of two and >= 16, got {n_points}")
    return SpatialGrid(n_points, float(x_min), float(x_max))


@dataclass(frozen=True)
class TimeGrid:
    """Propagation time axis with ``n_steps`` steps of length ``dt`` (fs)."""

    t_start: float
    t_end: float
    dt: float = 0.005

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise ConfigurationError("t_end must exceed t_start")

    @property
    def n_steps(self) -> int:
        return int(math.ceil((self.t_end - self.t_start) / self.dt - 1e-9))

    @property
    def times(self) -> np.ndarray:
        """Step boundaries, ``n_steps + 1`` values."""
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.t_start + self.dt * (np.arange(self.n_steps) + 0.5)

    def resolves(self, period: float, samples_per_period: float = 50.0) -> bool:
        return self.dt <= period / samples_per_period


class VibronicState:
    """Complex amplitudes of every electronic channel on a shared grid.

    Channel 0 is the ground state, 1 the excited state and 2.. the
    continuum bins.
    """

    def __init__(self, grid: SpatialGrid, channels):
        channels = np.array(channels, dtype=complex, copy=True)
        if channels.ndim != 2 or channels.shape[1] != grid.n_points:
            raise GridMismatchError(
                f"channel array shape {channels.shape} does not match grid of {grid.n_points} points"
            )
        self.grid = grid
        self.channels = channels

    @classmethod
    def zeros(cls, grid: SpatialGrid, n_channels: int) -> "VibronicState":
        return cls(grid, np.zeros((n_channels, grid.n_points), dtype=complex))

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    def channel_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.channels) ** 2, axis=1) * self.grid.dx

    def total_norm(self) -> float:
        return float(np.sum(self.channel_norms()))

    def copy(self) -> "VibronicState":
        return VibronicState(self.grid, self.channels)

    def expectation_x(self, channel: int) -> float:
        rho = np.abs(self.channels[channel]) ** 2
        return float(np.sum(rho * self.grid.x) / np.sum(rho))

    def momentum_norm(self) -> float:
        """Total norm evaluated in momentum space (Parseval check)."""
        phi = np.fft.fft(self.channels, axis=1) * self.grid.dx / math.sqrt(2.0 * np.pi)
        return float(np.sum(np.abs(phi) ** 2) * self.grid.dk)


def gaussian_wavefunction(grid: SpatialGrid, center: float, width: float) -> np.ndarray:
    """Normalized real Gaussian with ``<(x-center)**2> = width**2``."""
    x = grid.x - center
    psi = np.exp(-(x**2) / (4.0 * width**2))
    return psi / math.sqrt(np.sum(psi**2) * grid.dx)


def harmonic_ground_state(
    grid: SpatialGrid,
    omega_vib: float,
    center: float = 0.0,
    omega_ref: float | None = None,
    n_channels: int = 3,
) -> VibronicState:
    """Harmonic ground state placed in channel 0.

    ``omega_vib`` and ``omega_ref`` are vibrational quanta in eV; ``omega_ref``
    defaults to ``omega_vib`` (the coordinate is then that oscillator's own
    dimensionless coordinate, with ``<x**2> = 1/2``).
    """
    if not omega_vib > 0:
        raise ConfigurationError(f"omega_vib must be positive, got {omega_vib}")
    omega_ref = omega_vib if omega_ref is None else omega_ref
    extent = grid.x_max - grid.x_min
    if not (grid.x_min + 0.1 * extent <= center <= grid.x_max - 0.1 * extent):
        warnings.warn(
            f"center {center} lies within 10% of the grid boundary; expect boundary contamination",
            RuntimeWarning,
            stacklevel=2,
        )
    width = math.sqrt(omega_ref / (2.0 * omega_vib))
    state = VibronicState.zeros(grid, n_channels)
    state.channels[0] = gaussian_wavefunction(grid, center, width)
    return state


def overlap(a, b, grid: SpatialGrid) -> complex:
    """Inner product ``sum(conj(a) * b) * dx`` of two channel wavefunctions."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (grid.n_points,) or b.shape != (grid.n_points,):
        raise GridMismatchError(
            f"wavefunctions of shape {a.shape} and {b.shape} are not both on a {grid.n_points}-point grid"
        )
    return complex(np.vdot(a, b) * grid.dx)

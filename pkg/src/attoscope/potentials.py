"""Electronic surfaces, transition dipoles and the discretized continuum.

All surfaces share the dimensionless coordinate of the ground-state mode
(see :mod:`attoscope.grid`). Energies are in eV, vibrational frequencies in
cm^-1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .grid import SpatialGrid, build_grid
from .units import convert, wavenumber_to_ev

BENZENE_GAP_THZ = 1172.0
BENZENE_EXCITED_CM = 925.0
BENZENE_GROUND_CM = 993.0


@dataclass(frozen=True)
class PotentialSurface:
    kind: str = "harmonic"
    minimum_position: float = 0.0
    vib_frequency: float = BENZENE_GROUND_CM
    vertical_offset: float = 0.0
    dissociation_energy: float | None = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "morse"):
            raise ConfigurationError(f"unknown surface kind {self.kind!r}")
        if not self.vib_frequency > 0:
            raise ConfigurationError("vib_frequency must be positive")
        if self.kind == "morse" and not (self.dissociation_energy and self.dissociation_energy > 0):
            raise ConfigurationError("morse surface needs a positive dissociation_energy")

    @property
    def quantum(self) -> float:
        """Vibrational quantum in eV."""
        return wavenumber_to_ev(self.vib_frequency)


def evaluate_potential(surface: PotentialSurface, x, reference_frequency: float | None = None):
    """Potential energy (eV) of ``surface`` at dimensionless coordinates ``x``.

    ``reference_frequency`` (cm^-1) fixes the coordinate scale; it defaults to
    the surface's own frequency, for which ``V(x_min + 1) = offset + quantum/2``.
    """
    x = np.asarray(x, dtype=float)
    ref = surface.vib_frequency if reference_frequency is None else reference_frequency
    curvature = surface.quantum * surface.vib_frequency / ref  # hbar w^2 / w_ref
    dx = x - surface.minimum_position
    if surface.kind == "harmonic":
        return surface.vertical_offset + 0.5 * curvature * dx**2
    d = surface.dissociation_energy
    a = math.sqrt(curvature / (2.0 * d))
    return surface.vertical_offset + d * (1.0 - np.exp(-a * dx)) ** 2


@dataclass(frozen=True)
class ContinuumSpec:
    ionization_potential: float = 9.24
    n_bins: int = 16
    epsilon_min: float = 0.05
    epsilon_max: float = 1.0
    ionic_vib_frequency: float = BENZENE_GROUND_CM

    def __post_init__(self):
        if self.n_bins < 1:
            raise ConfigurationError("continuum needs at least one bin")
        if not self.epsilon_max > self.epsilon_min:
            raise ConfigurationError("epsilon_max must exceed epsilon_min")

    @property
    def bin_width(self) -> float:
        return (self.epsilon_max - self.epsilon_min) / self.n_bins

    @property
    def energies(self) -> np.ndarray:
        """Photoelectron energies at the bin centres (eV)."""
        return self.epsilon_min + self.bin_width * (np.arange(self.n_bins) + 0.5)

    @property
    def ionic_surface(self) -> PotentialSurface:
        return PotentialSurface("harmonic", 0.0, self.ionic_vib_frequency, self.ionization_potential)

    def refined(self) -> "ContinuumSpec":
        return replace(self, n_bins=2 * self.n_bins)


@dataclass(frozen=True)
class SystemModel:
    """Two neutral surfaces plus an ionization continuum, Condon dipoles."""

    ground: PotentialSurface = field(default_factory=PotentialSurface)
    excited: PotentialSurface = field(default_factory=PotentialSurface)
    continuum: ContinuumSpec = field(default_factory=ContinuumSpec)
    mu_ge: float = 1.0
    mu_ec: float = 1.0
    mu_gc_direct: float = 0.0
    name: str = "custom"

    @property
    def n_channels(self) -> int:
        return 2 + self.continuum.n_bins

    @property
    def reference_frequency(self) -> float:
        """Coordinate-defining frequency (cm^-1): the ground-state mode."""
        return self.ground.vib_frequency

    @property
    def kinetic_quantum(self) -> float:
        return self.ground.quantum

    def surface_potential(self, surface: PotentialSurface, x):
        return evaluate_potential(surface, x, self.reference_frequency)

    @property
    def vertical_gap(self) -> float:
        """Excited minus ground energy at the ground-state minimum (eV)."""
        x0 = self.ground.minimum_position
        return float(self.surface_potential(self.excited, x0) - self.surface_potential(self.ground, x0))

    @property
    def carrier_frequency_thz(self) -> float:
        return convert(self.vertical_gap, "eV", "THz")

    def channel_potentials(self, grid: SpatialGrid) -> np.ndarray:
        """Diagonal potentials (n_channels, n_points) in eV."""
        x = grid.x
        pots = np.empty((self.n_channels, grid.n_points))
        pots[0] = self.surface_potential(self.ground, x)
        pots[1] = self.surface_potential(self.excited, x)
        ion = self.surface_potential(self.continuum.ionic_surface, x)
        pots[2:] = ion[None, :] + self.continuum.energies[:, None]
        return pots

    def coupling_matrix(self) -> np.ndarray:
        """Real symmetric dipole pattern; the interaction is ``-E(t) * M``.

        Continuum couplings carry ``sqrt(bin_width)`` so that summed rates
        converge as the continuum is refined.
        """
        n = self.n_channels
        m = np.zeros((n, n))
        w = math.sqrt(self.continuum.bin_width)
        m[0, 1] = m[1, 0] = self.mu_ge
        m[1, 2:] = m[2:, 1] = self.mu_ec * w
        if self.mu_gc_direct:
            m[0, 2:] = m[2:, 0] = self.mu_gc_direct * w
        return m

    def with_continuum(self, continuum: ContinuumSpec) -> "SystemModel":
        return replace(self, continuum=continuum)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemModel":
        data = dict(data)
        return cls(
            ground=PotentialSurface(**data.pop("ground")),
            excited=PotentialSurface(**data.pop("excited")),
            continuum=ContinuumSpec(**data.pop("continuum")),
            **data,
        )


def benzene_preset(
    displacement: float = 1.0,
    ground_frequency: float = BENZENE_GROUND_CM,
    excited_frequency: float = BENZENE_EXCITED_CM,
    gap_thz: float = BENZENE_GAP_THZ,
    ionization_potential: float = 9.24,
    n_bins: int = 16,
    epsilon_min: float = 0.05,
    epsilon_max: float = 1.0,
    mu_ge: float = 1.0,
    mu_ec: float = 1.0,
) -> SystemModel:
    """Benzene S0/S1 model along the breathing mode.

    The excited-state offset is chosen so that the vertical gap at the
    ground-state minimum equals ``h * gap_thz``; ``displacement`` is the
    excited-state minimum in ground-mode dimensionless units.
    """
    ground = PotentialSurface("harmonic", 0.0, ground_frequency, 0.0)
    gap = convert(gap_thz, "THz", "eV")
    curvature = wavenumber_to_ev(excited_frequency) * excited_frequency / ground_frequency
    excited = PotentialSurface(
        "harmonic", displacement, excited_frequency, gap - 0.5 * curvature * displacement**2
    )
    continuum = ContinuumSpec(ionization_potential, n_bins, epsilon_min, epsilon_max, ground_frequency)
    return SystemModel(ground, excited, continuum, mu_ge, mu_ec, 0.0, name="benzene")


PRESETS = {"benzene": benzene_preset}


# -- grid eigenstates -------------------------------------------------------

def kinetic_matrix(grid: SpatialGrid, kinetic_quantum: float) -> np.ndarray:
    """Dense FFT (Fourier-grid) representation of ``0.5*hbar*w_ref*k**2``."""
    n = grid.n_points
    tk = 0.5 * kinetic_quantum * grid.k**2
    eye = np.eye(n)
    return np.fft.ifft(tk[:, None] * np.fft.fft(eye, axis=0), axis=0)


@lru_cache(maxsize=64)
def _eigh_cached(grid: SpatialGrid, kinetic_quantum: float, potential_key: bytes):
    potential = np.frombuffer(potential_key, dtype=float)
    h = kinetic_matrix(grid, kinetic_quantum) + np.diag(potential)
    h = 0.5 * (h + h.conj().T)
    energies, vecs = np.linalg.eigh(h)
    vecs = vecs / math.sqrt(grid.dx)
    # fix the sign so each eigenfunction is positive where it peaks first
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        i = np.argmax(np.abs(col) > 0.5 * np.abs(col).max())
        vecs[:, j] = col * (np.conj(col[i]) / abs(col[i]))
    energies.setflags(write=False)
    vecs.setflags(write=False)
    return energies, vecs


def surface_eigenstates(model: SystemModel, surface: PotentialSurface, grid: SpatialGrid):
    """Eigen-energies (eV) and grid-normalized eigenfunctions (columns)."""
    pot = np.ascontiguousarray(model.surface_potential(surface, grid.x), dtype=float)
    return _eigh_cached(grid, float(model.kinetic_quantum), pot.tobytes())


def franck_condon_progression(model: SystemModel, n_levels: int, grid: SpatialGrid | None = None):
    """Vibronic lines from the ground vibrational state to excited levels.

    Returns a list of ``(v, transition_energy_eV, amplitude)`` with amplitude
    ``<chi_v^e | chi_0^g>`` from grid eigenfunctions.
    """
    if model.ground.kind != "harmonic" or model.excited.kind != "harmonic":
        raise ConfigurationError("franck_condon_progression supports harmonic surfaces only")
    grid = grid or build_grid()
    eg, vg = surface_eigenstates(model, model.ground, grid)
    ee, ve = surface_eigenstates(model, model.excited, grid)
    chi0 = vg[:, 0]
    out = []
    for v in range(n_levels):
        amp = np.vdot(ve[:, v], chi0) * grid.dx
        out.append((v, float(ee[v] - eg[0]), float(amp.real)))
    return out

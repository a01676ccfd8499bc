"""Simulation and phase-cycling analysis of pump-probe electronic coherence.

A coupled electronic-nuclear wavepacket (ground, excited and a discretized
ionization continuum along one vibrational coordinate) is propagated under a
shaped DUV pulse pair. Ionization yields recorded versus delay and relative
phase are combined (in-phase minus out-of-phase) to expose the electronic
coherence and its vibrational envelope.
"""

from .errors import (
    ConfigurationError,
    GridMismatchError,
    SamplingError,
    ScanError,
    UnitarityError,
)
from .units import convert
from .grid import (
    SpatialGrid,
    TimeGrid,
    VibronicState,
    build_grid,
    harmonic_ground_state,
    overlap,
)
from .potentials import (
    ContinuumSpec,
    PotentialSurface,
    SystemModel,
    benzene_preset,
    evaluate_potential,
    franck_condon_progression,
)
from .pulses import (
    PhaseMaskTerm,
    PulseSequence,
    SpectralPulse,
    default_pulse_sequence,
    phase_cycle_schedule,
    pulse_energy,
    synthesize_field,
)
from .propagator import (
    IonizationTrace,
    PropagationResult,
    ScanSpec,
    SplitOperatorPropagator,
    convergence_check,
    propagate,
    run_delay_scan,
)
from .analytic import (
    CoherenceTrace,
    TwoStateParams,
    density_matrix,
    difference_sum,
    signal,
    vibrational_overlap,
)
from .analysis import (
    AnalysisResult,
    beat_spectrum,
    demodulate,
    estimate_timing_jitter,
    phase_cycle,
)
from .estimators import AnalyticSignalModel, PhaseCycleAnalyzer, PumpProbeSimulator

__version__ = "0.1.0"

"""Estimator-style wrappers (scikit-learn conventions).

The simulators have no learnable parameters: ``fit`` only validates the
hyper-parameters and builds the model, ``predict`` maps rows of
``[delay_fs, phase_rad]`` to ionization yields. The analyzer learns the
carrier and envelope of a trace in ``fit`` and ``transform`` returns the
phase-cycled difference and sum columns.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import analyze_trace, phase_cycle
from .analytic import TwoStateParams, signal
from .errors import ConfigurationError
from .potentials import PRESETS
from .propagator import IonizationTrace, Numerics, ScanSpec, run_delay_scan
from .pulses import default_pulse_sequence


def _check_delay_phase(X):
    X = check_array(X, dtype=float, ensure_min_features=2)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns [delay_fs, phase_rad], got {X.shape[1]}")
    return X


class _ModelMixin:
    def _build(self):
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.preset!r}; available: {sorted(PRESETS)}")
        model = PRESETS[self.preset](displacement=self.displacement)
        pulses = default_pulse_sequence(duration_fs=self.duration_fs, field_amplitude=self.field_amplitude)
        return model, pulses


class PumpProbeSimulator(_ModelMixin, RegressorMixin, BaseEstimator):
    """Full TDSE simulation of phase-cycled pump-probe ionization."""

    def __init__(
        self,
        preset="benzene",
        displacement=1.0,
        duration_fs=15.0,
        field_amplitude=0.0025,
        n_points=256,
        dt_fs=0.005,
        method="split",
        workers=1,
    ):
        self.preset = preset
        self.displacement = displacement
        self.duration_fs = duration_fs
        self.field_amplitude = field_amplitude
        self.n_points = n_points
        self.dt_fs = dt_fs
        self.method = method
        self.workers = workers

    def fit(self, X=None, y=None):
        self.model_, self.pulses_ = self._build()
        self.numerics_ = Numerics(n_points=self.n_points, dt=self.dt_fs)
        self.numerics_.grid  # validates the grid
        return self

    def simulate(self, delays, phases=(0.0, np.pi)) -> IonizationTrace:
        check_is_fitted(self, "model_")
        spec = ScanSpec(
            tuple(delays), tuple(phases), self.model_, self.pulses_, self.numerics_, self.method, self.workers
        )
        return run_delay_scan(spec)

    def predict(self, X):
        X = _check_delay_phase(X)
        delays = np.unique(X[:, 0])
        phases = np.unique(X[:, 1])
        trace = self.simulate(delays, phases)
        i = np.searchsorted(delays, X[:, 0])
        j = np.searchsorted(phases, X[:, 1])
        return trace.yields[i, j]


class AnalyticSignalModel(_ModelMixin, RegressorMixin, BaseEstimator):
    """Perturbative two-state signal; same predict interface as the simulator."""

    def __init__(
        self, preset="benzene", displacement=1.0, duration_fs=15.0, field_amplitude=0.0025,
        variant="delta", q_ratio=1.0,
    ):
        self.preset = preset
        self.displacement = displacement
        self.duration_fs = duration_fs
        self.field_amplitude = field_amplitude
        self.variant = variant
        self.q_ratio = q_ratio

    def fit(self, X=None, y=None):
        model, pulses = self._build()
        self.params_ = TwoStateParams.from_model(model, pulses.pump, pulses.probe, self.variant, self.q_ratio)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = _check_delay_phase(X)
        return np.array([signal(self.params_, t, p) for t, p in X])


class PhaseCycleAnalyzer(TransformerMixin, BaseEstimator):
    """Learns carrier/envelope observables of a trace; transforms to (diff, sum)."""

    def __init__(self, envelope_min_period_fs=10.0):
        self.envelope_min_period_fs = envelope_min_period_fs

    def fit(self, trace, y=None, fine_trace=None):
        if not isinstance(trace, IonizationTrace):
            raise TypeError("PhaseCycleAnalyzer.fit expects an IonizationTrace")
        self.result_ = analyze_trace(trace, fine_trace, self.envelope_min_period_fs)
        self.carrier_frequency_ = self.result_.carrier_frequency
        self.carrier_period_ = self.result_.carrier_period
        self.envelope_period_ = self.result_.envelope_period
        self.sideband_frequencies_ = self.result_.sideband_frequencies
        return self

    def transform(self, trace):
        check_is_fitted(self, "result_")
        diff, total = phase_cycle(trace)
        return np.column_stack([diff, total])

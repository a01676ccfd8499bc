import numpy as np
import pytest

from attoscope import benzene_preset, default_pulse_sequence
from attoscope.propagator import Numerics, ScanSpec


@pytest.fixture(scope="session")
def preset():
    return benzene_preset()


@pytest.fixture(scope="session")
def small_model():
    """Preset with a coarse continuum, for quick propagation tests."""
    return benzene_preset(n_bins=4)


@pytest.fixture(scope="session")
def fast_numerics():
    return Numerics(n_points=64, dt=0.01)


@pytest.fixture
def fast_spec(small_model, fast_numerics):
    def make(delays, phases=(0.0, np.pi), **kw):
        kw.setdefault("model", small_model)
        kw.setdefault("numerics", fast_numerics)
        kw.setdefault("pulses", default_pulse_sequence())
        return ScanSpec(tuple(delays), tuple(phases), **kw)

    return make

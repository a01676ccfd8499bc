import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attoscope.errors import ConfigurationError, GridMismatchError
from attoscope.grid import (
    TimeGrid,
    VibronicState,
    build_grid,
    gaussian_wavefunction,
    harmonic_ground_state,
    overlap,
)
from attoscope.potentials import surface_eigenstates
from attoscope.units import UNITS, convert, wavenumber_to_ev

positive = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(value=positive, a=st.sampled_from(UNITS), b=st.sampled_from(UNITS))
def test_round_trip_conversion(value, a, b):
    back = convert(convert(value, a, b), b, a)
    assert back == pytest.approx(value, rel=1e-12)


def test_vibrational_period_inverse_pair():
    period = convert(925.0, "cm-1", "fs")
    assert period == pytest.approx(36.06, abs=5e-3)
    assert convert(period, "fs", "cm-1") == pytest.approx(925.0, rel=1e-12)
    assert convert(36.06, "fs", "cm-1") == pytest.approx(925.0, rel=2e-4)


def test_known_conversions():
    assert convert(1172.0, "THz", "eV") == pytest.approx(4.847, abs=1e-3)
    assert convert(1172.0, "THz", "as") == pytest.approx(853.2, abs=0.05)
    assert convert(925.0, "cm-1", "THz") == pytest.approx(27.73, abs=0.01)
    assert convert(1.0, "eV", "nm") == pytest.approx(1239.84, abs=0.01)


def test_unknown_unit():
    with pytest.raises(ValueError, match="unknown unit"):
        convert(1.0, "furlong", "fs")


def test_build_grid_examples():
    assert build_grid(256, -8, 8).dx == 0.0625
    with pytest.raises(ConfigurationError, match="degenerate extent"):
        build_grid(16, 0, 0)
    with pytest.raises(ConfigurationError, match="n_points must be power of two"):
        build_grid(100, -8, 8)
    with pytest.raises(ConfigurationError):
        build_grid(8, -8, 8)


@given(st.integers(min_value=4, max_value=12), st.floats(0.5, 50.0))
def test_momentum_grid_reciprocity(power, half):
    g = build_grid(2**power, -half, half)
    assert g.dk * g.dx * g.n_points == pytest.approx(2 * math.pi, rel=1e-12)
    assert g.x.size == g.n_points and g.k.size == g.n_points


def test_time_grid():
    tg = TimeGrid(0.0, 1.0, 0.005)
    assert tg.n_steps == 200
    assert tg.times.size == 201
    assert tg.midpoints[0] == pytest.approx(0.0025)
    assert tg.resolves(0.8532)
    assert not TimeGrid(0.0, 1.0, 0.05).resolves(0.8532)
    with pytest.raises(ConfigurationError):
        TimeGrid(0.0, 1.0, 0.0)
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 0.0, 0.1)


def test_harmonic_ground_state_moments():
    g = build_grid()
    w = wavenumber_to_ev(993.0)
    state = harmonic_ground_state(g, w, 0.0)
    assert state.total_norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(state.expectation_x(0)) < 1e-10
    rho = np.abs(state.channels[0]) ** 2
    var = np.sum(rho * g.x**2) * g.dx
    # dimensionless harmonic ground state: <x^2> = 1/2
    assert var == pytest.approx(0.5, rel=1e-8)
    assert np.all(state.channels[1:] == 0)


def test_harmonic_ground_state_width_with_reference():
    g = build_grid()
    w, ref = wavenumber_to_ev(925.0), wavenumber_to_ev(993.0)
    state = harmonic_ground_state(g, w, 0.0, omega_ref=ref)
    var = np.sum(np.abs(state.channels[0]) ** 2 * g.x**2) * g.dx
    assert var == pytest.approx(ref / (2 * w), rel=1e-8)


def test_harmonic_ground_state_errors_and_warnings():
    g = build_grid()
    with pytest.raises(ConfigurationError):
        harmonic_ground_state(g, 0.0)
    with pytest.warns(RuntimeWarning, match="boundary"):
        harmonic_ground_state(g, 0.1, center=7.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        harmonic_ground_state(g, 0.1, center=6.0)


def test_overlap_examples(preset):
    g = build_grid()
    chi = gaussian_wavefunction(g, 0.0, 0.7)
    assert overlap(chi, chi, g) == pytest.approx(1.0 + 0j, abs=1e-12)
    sigma, s = 0.7, 1.3
    moved = gaussian_wavefunction(g, s, sigma)
    assert abs(overlap(chi, moved, g)) == pytest.approx(math.exp(-(s**2) / (8 * sigma**2)), abs=1e-8)
    _, vecs = surface_eigenstates(preset, preset.ground, g)
    assert abs(overlap(vecs[:, 0], vecs[:, 1], g)) < 1e-10


def test_overlap_grid_mismatch():
    g = build_grid()
    with pytest.raises(GridMismatchError):
        overlap(np.ones(256), np.ones(128), g)


@settings(max_examples=50)
@given(
    st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    st.floats(0.3, 1.5),
    st.floats(0.3, 1.5),
)
def test_overlap_conjugate_symmetric(params, w1, w2):
    g = build_grid(64)
    c1, k1, c2, k2 = params
    a = gaussian_wavefunction(g, c1, w1) * np.exp(1j * k1 * g.x)
    b = gaussian_wavefunction(g, c2, w2) * np.exp(1j * k2 * g.x)
    assert overlap(a, b, g) == np.conj(overlap(b, a, g))


@settings(max_examples=30)
@given(st.floats(-2, 2), st.floats(0.4, 1.2), st.floats(-4, 4))
def test_parseval(center, width, k0):
    g = build_grid()
    state = VibronicState.zeros(g, 3)
    state.channels[1] = gaussian_wavefunction(g, center, width) * np.exp(1j * k0 * g.x)
    assert state.momentum_norm() == pytest.approx(state.total_norm(), rel=1e-12)


def test_vibronic_state_shape_check():
    g = build_grid(64)
    with pytest.raises(GridMismatchError):
        VibronicState(g, np.zeros((3, 32)))
    s = VibronicState.zeros(g, 5)
    assert s.n_channels == 5
    c = s.copy()
    c.channels[0, 0] = 1
    assert s.channels[0, 0] == 0


def test_grid_doubling_convergence(preset):
    """Observables at 256 and 512 points agree to 1e-8."""
    from attoscope.analytic import vibrational_overlap

    coarse = build_grid(256)
    fine = coarse.refined()
    for tau in (0.0, 18.03, 36.06):
        a = vibrational_overlap(preset, tau, grid=coarse)
        b = vibrational_overlap(preset, tau, grid=fine)
        assert abs(a - b) < 1e-8
    e0 = surface_eigenstates(preset, preset.excited, coarse)[0][:5]
    e1 = surface_eigenstates(preset, preset.excited, fine)[0][:5]
    assert np.max(np.abs(e0 - e1)) < 1e-8

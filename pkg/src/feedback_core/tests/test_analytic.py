import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feedback_core.analytic import (
    LOG_GAMMA_ORDER,
    SeriesTruncation,
    empty_cavity_photon_number,
    empty_cavity_two_time,
    jcm_ground_amplitude,
    jcm_ground_amplitudes,
    mirror_emitter_amplitude,
    mirror_emitter_amplitudes,
    series_truncation,
)
from feedback_core.dde import LinearDDESystem, integrate
from feedback_core.errors import NegativeTime, OutOfRangeTime, UnsupportedCoupling
from feedback_core.models import ModelParams, TimeGrid


def _mirror_dde(params: ModelParams, grid: TimeGrid) -> np.ndarray:
    system = LinearDDESystem.from_lists(
        A=[[-params.gamma]],
        B=[[params.gamma_tau]],
        tau=params.tau,
        initial_state=[1.0],
    )
    return integrate(system, grid).values[0]


def _jcm_dde(params: ModelParams, grid: TimeGrid) -> np.ndarray:
    M = params.coupling_M
    system = LinearDDESystem.from_lists(
        A=[[0.0, -1j * M], [-1j * M, -params.gamma]],
        B=[[0.0, 0.0], [0.0, params.gamma_tau]],
        tau=params.tau,
        initial_state=[1.0, 0.0],
    )
    return integrate(system, grid).values[1]


def test_first_interval_is_plain_decay(mirror_params):
    for t in (0.0, 0.3, 0.99):
        assert mirror_emitter_amplitude(mirror_params, t) == pytest.approx(
            math.exp(-t), abs=1e-15
        )


def test_second_interval_adds_one_echo():
    params = ModelParams(gamma=1.0, tau=1.0, phase=0.7)
    t = 1.6
    expected = math.exp(-t) + params.gamma_tau * 0.6 * math.exp(-0.6)
    assert mirror_emitter_amplitude(params, t) == pytest.approx(expected, abs=1e-15)


@given(t=st.floats(min_value=0.0, max_value=50.0), tau=st.floats(0.1, 10.0))
def test_series_support_ends_at_floor(t, tau):
    params = ModelParams(gamma=1.0, tau=tau)
    assert series_truncation(params, t).n_max == math.floor(t / tau)


def test_negative_time_is_rejected(mirror_params):
    with pytest.raises(NegativeTime):
        mirror_emitter_amplitude(mirror_params, -0.1)
    with pytest.raises(NegativeTime):
        series_truncation(mirror_params, -1.0)


def test_truncation_caps_the_order(mirror_params):
    full = mirror_emitter_amplitude(mirror_params, 2.5)
    capped = mirror_emitter_amplitude(mirror_params, 2.5, SeriesTruncation(n_max=0))
    assert capped == pytest.approx(math.exp(-2.5))
    assert full != capped


@pytest.mark.parametrize("phase", [0.0, math.pi / 2, math.pi])
def test_mirror_series_solves_the_delay_equation(phase):
    params = ModelParams(gamma=1.0, tau=1.0, phase=phase)
    grid = TimeGrid.from_tau(1.0, steps_per_tau=2000, n_intervals=5)
    series = mirror_emitter_amplitudes(params, grid.times())
    np.testing.assert_allclose(series, _mirror_dde(params, grid), rtol=0, atol=1e-8)
    assert np.all(np.abs(series) <= 1.0 + 1e-12)


@pytest.mark.parametrize("t", [1.5, 3.7, 7.2])
def test_mirror_series_at_sample_times(t):
    params = ModelParams(gamma=1.0, tau=1.0)
    grid = TimeGrid.from_tau(1.0, steps_per_tau=1000, n_intervals=8)
    dde = _mirror_dde(params, grid)
    assert mirror_emitter_amplitude(params, t) == pytest.approx(
        dde[grid.index_of(t)], abs=1e-10
    )


@pytest.mark.parametrize("tau", [0.5, 2.0])
def test_jcm_series_matches_dde(tau):
    params = ModelParams(gamma=1.0, tau=tau, coupling_M=0.5)
    grid = TimeGrid.from_tau(tau, steps_per_tau=1000, n_intervals=5)
    series = jcm_ground_amplitudes(params, grid.times())
    np.testing.assert_allclose(series, _jcm_dde(params, grid), rtol=0, atol=1e-8)
    assert np.all(np.abs(series) <= 1.0 + 1e-12)


def test_jcm_first_interval_is_critically_damped():
    params = ModelParams(gamma=1.0, tau=2.0, coupling_M=0.5)
    t = 1.3
    expected = -1j * 0.5 * t * math.exp(-0.5 * t)
    assert jcm_ground_amplitude(params, t) == pytest.approx(expected, abs=1e-15)


def test_jcm_high_orders_use_log_gamma():
    params = ModelParams(gamma=1.0, tau=0.1, coupling_M=0.5, phase=0.3)
    grid = TimeGrid.from_tau(0.1, steps_per_tau=100, n_intervals=30)
    assert series_truncation(params, grid.t_end).n_max > LOG_GAMMA_ORDER
    series = jcm_ground_amplitudes(params, grid.times())
    np.testing.assert_allclose(series, _jcm_dde(params, grid), rtol=0, atol=1e-7)


def test_jcm_needs_critical_coupling():
    params = ModelParams(gamma=1.0, tau=1.0, coupling_M=1.0)
    with pytest.raises(UnsupportedCoupling):
        jcm_ground_amplitude(params, 0.5)


def test_empty_cavity_is_the_squared_mirror_amplitude():
    params = ModelParams(gamma=0.8, tau=1.5, phase=1.1)
    N0 = 7.0
    for t in np.linspace(0.0, 2.99, 40):
        expected = N0 * abs(mirror_emitter_amplitude(params, float(t))) ** 2
        assert empty_cavity_photon_number(params, N0, float(t)) == pytest.approx(
            expected, rel=1e-12
        )


@given(
    t=st.floats(min_value=0.0, max_value=1.999),
    phase=st.floats(min_value=-math.pi, max_value=math.pi),
    N0=st.floats(min_value=0.0, max_value=100.0),
)
def test_empty_cavity_moment_is_non_negative(t, phase, N0):
    params = ModelParams(gamma=1.0, tau=1.0, phase=phase)
    assert empty_cavity_photon_number(params, N0, t) >= -1e-12


def test_empty_cavity_closed_forms_stop_at_their_interval(mirror_params):
    with pytest.raises(OutOfRangeTime):
        empty_cavity_photon_number(mirror_params, 1.0, 2.0)
    with pytest.raises(OutOfRangeTime):
        empty_cavity_two_time(mirror_params, 1.0, 1.0)
    assert empty_cavity_two_time(mirror_params, 3.0, 0.5) == pytest.approx(
        3.0 * math.exp(-0.5)
    )

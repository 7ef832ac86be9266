import math

import numpy as np
import pytest

from feedback_core.analytic import mirror_emitter_amplitudes
from feedback_core.continuum import (
    MIN_WINDOW_PERIODS,
    build_modes,
    convergence_study,
    evolve_emitter_only,
    evolve_jcm,
    kernel,
    locate_kink,
)
from feedback_core.dde import LinearDDESystem, integrate
from feedback_core.errors import (
    ConfigError,
    GridMisaligned,
    TooFewModes,
    WindowTooNarrow,
)
from feedback_core.models import ModelParams, TimeGrid

TAU = 1.0
WINDOW = MIN_WINDOW_PERIODS * 2.0 * math.pi / TAU


def test_window_must_resolve_the_delay():
    with pytest.raises(WindowTooNarrow):
        build_modes(1.0, TAU, 501, window=10.0)


def test_spacing_must_resolve_a_roundtrip():
    with pytest.raises(TooFewModes):
        build_modes(1.0, TAU, 101, WINDOW)
    with pytest.raises(TooFewModes):
        build_modes(1.0, TAU, 1, WINDOW)


def test_mode_grid_bookkeeping():
    grid = build_modes(0.7, TAU, 501, WINDOW)
    assert grid.gamma_check == pytest.approx(0.7, rel=1e-14)
    assert grid.mode_spacing == pytest.approx(2.0 * WINDOW / 500)
    assert grid.poincare_time == pytest.approx(2.0 * math.pi / grid.mode_spacing)
    assert grid.detunings[0] == -WINDOW and grid.detunings[-1] == WINDOW


def test_unstructured_kernel_weight():
    grid = build_modes(1.0, TAU, 501, WINDOW, structured=False)
    expected = grid.n_modes * grid.mode_spacing / math.pi
    assert kernel(grid, np.array([0.0]))[0] == pytest.approx(expected, rel=1e-12)


def test_structured_kernel_has_a_peak_at_the_delay():
    grid = build_modes(1.0, TAU, 2001, 4 * WINDOW)
    s = np.array([0.5 * TAU, TAU])
    off_peak, on_peak = np.abs(kernel(grid, s))
    assert on_peak > 20 * off_peak


def test_run_must_stay_below_the_revival_time():
    grid = build_modes(1.0, TAU, 501, WINDOW)
    time = TimeGrid.from_tau(TAU, steps_per_tau=100, n_intervals=13)
    assert time.t_end > grid.poincare_time
    with pytest.raises(ConfigError):
        evolve_emitter_only(grid, time)


def test_time_grid_must_share_the_delay():
    grid = build_modes(1.0, TAU, 501, WINDOW)
    with pytest.raises(GridMisaligned):
        evolve_emitter_only(grid, TimeGrid.from_tau(2.0, steps_per_tau=100))


def test_unstructured_modes_give_markovian_decay():
    grid = build_modes(1.0, TAU, 501, WINDOW, structured=False)
    time = TimeGrid.from_tau(TAU, steps_per_tau=2000, n_intervals=3)
    run = evolve_emitter_only(grid, time)
    t = time.times()
    fit = (t >= 0.5) & (t <= 3.0)
    slope = np.polyfit(t[fit], np.log(np.abs(run.c_e[fit]) ** 2), 1)[0]
    assert -slope == pytest.approx(2.0, rel=0.02)


def test_structured_modes_follow_the_series():
    params = ModelParams(gamma=1.0, tau=TAU)
    grid = build_modes(1.0, TAU, 501, WINDOW)
    time = TimeGrid.from_tau(TAU, steps_per_tau=2000, n_intervals=3)
    run = evolve_emitter_only(grid, time)
    reference = mirror_emitter_amplitudes(params, time.times())
    assert np.max(np.abs(run.c_e - reference)) < 0.05
    assert np.max(np.abs(run.norm - 1.0)) < 1e-7


def test_kink_is_at_the_delay():
    grid = build_modes(1.0, TAU, 501, WINDOW)
    time = TimeGrid.from_tau(TAU, steps_per_tau=500, n_intervals=2)
    run = evolve_emitter_only(grid, time)
    n = time.steps_per_tau
    kink = locate_kink(np.abs(run.c_e), n - 50, n + 50)
    assert abs(kink - n) <= 1


def test_jcm_oracle_follows_the_amplitude_dde():
    params = ModelParams(gamma=1.0, tau=TAU, coupling_M=1.0)
    grid = build_modes(1.0, TAU, 501, WINDOW)
    time = TimeGrid.from_tau(TAU, steps_per_tau=2000, n_intervals=3)
    run = evolve_jcm(grid, params, time)
    system = LinearDDESystem.from_lists(
        A=[[0.0, -1j], [-1j, -1.0]],
        B=[[0.0, 0.0], [0.0, params.gamma_tau]],
        tau=TAU,
        initial_state=[1.0, 0.0],
    )
    c_g = integrate(system, time).values[1]
    assert np.max(np.abs(np.abs(run.c_g) ** 2 - np.abs(c_g) ** 2)) < 0.05
    assert run.amplitudes.names == ("c_e", "c_g")


def test_runs_are_bitwise_repeatable():
    grid = build_modes(1.0, TAU, 501, WINDOW)
    time = TimeGrid.from_tau(TAU, steps_per_tau=200, n_intervals=1)
    first = evolve_emitter_only(grid, time)
    second = evolve_emitter_only(grid, time)
    np.testing.assert_array_equal(first.c_e, second.c_e)


@pytest.mark.slow
def test_deviation_shrinks_as_modes_double():
    params = ModelParams(gamma=1.0, tau=TAU)
    time = TimeGrid.from_tau(TAU, steps_per_tau=4000, n_intervals=3)
    spacing = 2.0 * WINDOW / 2000
    points = convergence_study(params, [2001, 4001, 8001], spacing, time)
    deviations = [p.max_deviation for p in points]
    assert deviations[0] > deviations[1] > deviations[2]
    assert [p.n_modes for p in points] == [2001, 4001, 8001]

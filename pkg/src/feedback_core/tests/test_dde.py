import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from feedback_core.analytic import mirror_emitter_amplitudes
from feedback_core.dde import (
    HistoryBuffer,
    LinearDDESystem,
    half_step_stencil,
    half_step_value,
    integrate,
    integrate_with_drive,
)
from feedback_core.errors import (
    ConfigError,
    DriveLengthMismatch,
    GridMisaligned,
    NonFiniteState,
)
from feedback_core.models import ComplexTrajectory, ModelParams, TimeGrid


def test_interior_stencil_is_centered():
    start, weights = half_step_stencil(5, seg_len=10)
    assert start == 4
    np.testing.assert_allclose(weights, np.array([-1, 9, 9, -1]) / 16)


def test_stencil_stays_inside_its_segment():
    assert half_step_stencil(10, seg_len=10)[0] == 10
    assert half_step_stencil(19, seg_len=10)[0] == 17
    assert half_step_stencil(9, seg_len=10)[0] == 7


@given(
    seg_len=st.integers(min_value=3, max_value=20),
    m=st.integers(min_value=0, max_value=59),
    coeffs=st.lists(st.floats(-5.0, 5.0), min_size=4, max_size=4),
)
def test_stencil_is_exact_for_cubics(seg_len, m, coeffs):
    x = np.arange(60 + seg_len, dtype=float)
    samples = np.polyval(coeffs, x).astype(complex)
    expected = np.polyval(coeffs, m + 0.5)
    scale = 1.0 + np.max(np.abs(samples))
    assert abs(half_step_value(samples, m, seg_len) - expected) <= 1e-12 * scale


def test_short_segments_are_rejected():
    with pytest.raises(ConfigError):
        half_step_stencil(0, seg_len=2)


def test_history_reads_zero_before_start():
    history = HistoryBuffer(dim=2, n_delay=4)
    history.push(0, np.array([1.0, 2.0]))
    np.testing.assert_array_equal(history.get(-3), [0.0, 0.0])
    np.testing.assert_array_equal(history.delayed(2, 0), [0.0, 0.0])
    for step in range(1, 12):
        history.push(step, np.array([step, -step], dtype=complex))
    with pytest.raises(IndexError):
        history.get(2)
    np.testing.assert_array_equal(history.delayed(11, 0), [7.0, -7.0])


def test_pure_decay():
    system = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[0.0]], tau=1.0, initial_state=[1.0]
    )
    grid = TimeGrid.from_tau(1.0, steps_per_tau=1000, n_intervals=5)
    values = integrate(system, grid).values[0]
    np.testing.assert_allclose(values, np.exp(-grid.times()), rtol=0, atol=1e-12)


def test_without_delay_matches_matrix_exponential():
    A = np.array([[-0.5, 1j], [1j, -0.2]])
    system = LinearDDESystem(
        A=A, B=np.zeros((2, 2)), tau=0.5, initial_state=np.array([1.0, 0.0])
    )
    grid = TimeGrid.from_tau(0.5, steps_per_tau=500, n_intervals=6)
    values = integrate(system, grid).values
    expected = expm(A * grid.t_end) @ np.array([1.0, 0.0])
    np.testing.assert_allclose(values[:, -1], expected, atol=1e-11)


def test_delay_is_off_before_tau():
    grid = TimeGrid.from_tau(1.0, steps_per_tau=100, n_intervals=3)
    open_loop = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[0.0]], tau=1.0, initial_state=[1.0]
    )
    closed_loop = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[0.9j]], tau=1.0, initial_state=[1.0]
    )
    a = integrate(open_loop, grid).channel(0)
    b = integrate(closed_loop, grid).channel(0)
    n = grid.steps_per_tau
    np.testing.assert_array_equal(a[: n + 1], b[: n + 1])
    assert abs(a[-1] - b[-1]) > 1e-3


def test_kink_sits_on_the_delay():
    system = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[1.0]], tau=1.0, initial_state=[1.0]
    )
    grid = TimeGrid.from_tau(1.0, steps_per_tau=200, n_intervals=2)
    values = integrate(system, grid).values[0].real
    slopes = np.diff(values) / grid.dt
    jumps = np.abs(np.diff(slopes))
    assert int(np.argmax(jumps)) + 1 == grid.steps_per_tau


def test_misaligned_system_is_rejected():
    system = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[1.0]], tau=1.0, initial_state=[1.0]
    )
    with pytest.raises(GridMisaligned):
        integrate(system, TimeGrid.from_tau(1.1, steps_per_tau=10))


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError):
        LinearDDESystem.from_lists(
            A=[[-1.0, 0.0], [0.0, -1.0]], B=[[0.0]], tau=1.0, initial_state=[1, 0]
        )


def test_divergence_raises_with_step():
    system = LinearDDESystem.from_lists(
        A=[[1e200]], B=[[0.0]], tau=1.0, initial_state=[1.0]
    )
    with pytest.raises(NonFiniteState) as excinfo:
        integrate(system, TimeGrid.from_tau(1.0, steps_per_tau=4))
    assert excinfo.value.step == 1


def test_constant_drive():
    system = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[0.0]], tau=1.0, initial_state=[0.0]
    )
    grid = TimeGrid.from_tau(1.0, steps_per_tau=400, n_intervals=3)
    drive = ComplexTrajectory(dt=grid.dt, values=np.ones(grid.n_steps + 1, complex))
    values = integrate_with_drive(system, drive, grid).values[0]
    np.testing.assert_allclose(values, 1.0 - np.exp(-grid.times()), atol=1e-12)


def test_constant_drive_without_dynamics_is_a_ramp():
    system = LinearDDESystem.from_lists(
        A=[[0.0]], B=[[0.0]], tau=1.0, initial_state=[0.5]
    )
    grid = TimeGrid.from_tau(1.0, steps_per_tau=10, n_intervals=3)
    rate = 0.25 - 0.5j
    drive = ComplexTrajectory(
        dt=grid.dt, values=np.full(grid.n_steps + 1, rate, dtype=complex)
    )
    values = integrate_with_drive(system, drive, grid).channel(0)
    np.testing.assert_allclose(values, 0.5 + rate * grid.times(), atol=1e-14)


def test_delayed_run_is_fourth_order():
    params = ModelParams(gamma=1.0, tau=1.0, phase=0.0)
    system = LinearDDESystem.from_lists(
        A=[[-params.gamma]], B=[[params.gamma_tau]], tau=1.0, initial_state=[1.0]
    )
    errors = []
    for steps in (25, 50):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=steps, n_intervals=3)
        values = integrate(system, grid).channel(0)
        exact = mirror_emitter_amplitudes(params, grid.times())
        errors.append(np.max(np.abs(values - exact)))
    assert errors[0] / errors[1] >= 8.0


def test_smooth_drive_is_fourth_order():
    system = LinearDDESystem.from_lists(
        A=[[-0.5]], B=[[0.0]], tau=1.0, initial_state=[0.0]
    )
    errors = []
    for steps in (50, 100):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=steps, n_intervals=2)
        t = grid.times()
        drive = ComplexTrajectory(dt=grid.dt, values=np.exp(1j * 3.0 * t))
        values = integrate_with_drive(system, drive, grid).values[0]
        # ẋ = −x/2 + e^{3it}, x(0) = 0
        exact = (np.exp(3j * t) - np.exp(-0.5 * t)) / (0.5 + 3j)
        errors.append(np.max(np.abs(values - exact)))
    assert errors[0] / errors[1] > 10.0


def test_drive_must_cover_the_grid():
    system = LinearDDESystem.from_lists(
        A=[[-1.0]], B=[[0.0]], tau=1.0, initial_state=[0.0]
    )
    grid = TimeGrid.from_tau(1.0, steps_per_tau=10, n_intervals=2)
    short = ComplexTrajectory(dt=grid.dt, values=np.ones(grid.n_steps, complex))
    with pytest.raises(DriveLengthMismatch):
        integrate_with_drive(system, short, grid)


def test_coarse_step_is_logged(caplog):
    system = LinearDDESystem.from_lists(
        A=[[-5.0]], B=[[0.0]], tau=1.0, initial_state=[1.0]
    )
    integrate(system, TimeGrid.from_tau(1.0, steps_per_tau=10))
    assert any("coarse" in r.message for r in caplog.records)

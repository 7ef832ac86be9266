"""Comparisons between solvers on a shared grid."""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.signal import find_peaks

from feedback_core.continuum import MIN_WINDOW_PERIODS, convergence_study
from feedback_core.dde import LinearDDESystem, integrate
from feedback_core.enums import InitialKind, RhsVariant
from feedback_core.errors import GridMismatch
from feedback_core.factorized import run_factorized
from feedback_core.hierarchy import InitialState, run_hierarchy
from feedback_core.models import ComplexTrajectory, ModelParams, TimeGrid

from .enums import BenchmarkKind
from .scenario import ScenarioConfig

logger = logging.getLogger(__name__)

# Window, in units of τ, for the stabilization metric.
STABILIZATION_WINDOW = (8, 12)


class Deviation(BaseModel):
    model_config = ConfigDict(frozen=True)

    max: float
    mean: float


class Comparison(BaseModel):
    """Outcome of one benchmark; ``table`` rows go to a CSV next to the report."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: BenchmarkKind
    metrics: dict[str, float]
    times: np.ndarray | None = None
    series: dict[str, np.ndarray] = {}
    table_header: list[str] = []
    table: list[list] = []


def deviation(a: np.ndarray, b: np.ndarray, dt_a: float, dt_b: float) -> Deviation:
    """Pointwise |a − b| on a shared grid."""
    if a.shape != b.shape or not math.isclose(dt_a, dt_b, rel_tol=1e-12):
        raise GridMismatch(
            f"grids differ: {a.shape} at dt={dt_a} vs {b.shape} at dt={dt_b}",
            field="grid",
        )
    diff = np.abs(a - b)
    return Deviation(max=float(diff.max()), mean=float(diff.mean()))


def stabilization_cv(
    values: np.ndarray, grid: TimeGrid, window: tuple[int, int] = STABILIZATION_WINDOW
) -> float:
    """Coefficient of variation of the maxima inside ``window`` (in τ).

    NaN when the run is shorter than the window or shows fewer than two maxima.
    """
    lo, hi = (k * grid.steps_per_tau for k in window)
    if hi > grid.n_steps:
        return math.nan
    peaks, _ = find_peaks(values[lo : hi + 1])
    if len(peaks) < 2:
        return math.nan
    heights = values[lo + peaks]
    return float(np.std(heights) / np.mean(heights))


def jcm_amplitudes(
    params: ModelParams, grid: TimeGrid, feedback: bool = True
) -> ComplexTrajectory:
    """(c_e, c_g) from the amplitude delay system, emitter excited."""
    M = params.coupling_M
    rate = params.gamma_tau if feedback else 0j
    system = LinearDDESystem.from_lists(
        A=[[0.0, -1j * M], [-1j * M, -params.gamma]],
        B=[[0.0, 0.0], [0.0, rate]],
        tau=params.tau,
        initial_state=[1.0, 0.0],
    )
    return integrate(system, grid)


def _hierarchy_vs_dde(config: ScenarioConfig, grid: TimeGrid) -> Comparison:
    run = run_hierarchy(config.params, grid, feedback=config.feedback)
    oracle = jcm_amplitudes(config.params, grid, config.feedback)
    reference = np.abs(oracle.channel(1)) ** 2
    dev = deviation(run.photon_number, reference, grid.dt, oracle.dt)
    return Comparison(
        kind=BenchmarkKind.HIERARCHY_VS_DDE,
        metrics={
            "max_deviation": dev.max,
            "mean_deviation": dev.mean,
            "stabilization_cv": stabilization_cv(run.photon_number, grid),
            "memory_budget_last": float(run.memory_budget[-1]),
        },
        times=grid.times(),
        series={"hierarchy": run.photon_number, "dde": reference},
    )


def _continuum_vs_analytic(config: ScenarioConfig, grid: TimeGrid) -> Comparison:
    counts = config.continuum.mode_counts
    window = config.continuum.omega_window
    if window is None:
        window = MIN_WINDOW_PERIODS * 2.0 * math.pi / config.params.tau
    spacing = 2.0 * window / (counts[0] - 1)
    points = convergence_study(config.params, counts, spacing, grid)
    metrics = {f"max_deviation_{p.n_modes}": p.max_deviation for p in points}
    deviations = [p.max_deviation for p in points]
    decreasing = all(a > b for a, b in zip(deviations, deviations[1:]))
    metrics["monotone"] = float(decreasing)
    return Comparison(
        kind=BenchmarkKind.CONTINUUM_VS_ANALYTIC,
        metrics=metrics,
        table_header=["n_modes", "omega_window", "max_deviation"],
        table=[[p.n_modes, p.omega_window, p.max_deviation] for p in points],
    )


def _factorized_vs_hierarchy(config: ScenarioConfig, grid: TimeGrid) -> Comparison:
    # one photon, emitter ground: the factorization is not expected to hold here
    initial = InitialState(kind=InitialKind.CAVITY_PHOTONS, photons=1.0)
    exact = run_hierarchy(config.params, grid, initial, feedback=config.feedback)
    factorized = run_factorized(config.params, 1.0, grid, feedback=config.feedback)
    dev = deviation(factorized.photon_number, exact.photon_number, grid.dt, grid.dt)
    return Comparison(
        kind=BenchmarkKind.FACTORIZED_VS_HIERARCHY,
        metrics={"max_deviation": dev.max, "mean_deviation": dev.mean},
        times=grid.times(),
        series={
            "factorized": factorized.photon_number,
            "hierarchy": exact.photon_number,
        },
    )


def _printed_vs_derived(config: ScenarioConfig, grid: TimeGrid) -> Comparison:
    derived = run_hierarchy(config.params, grid, feedback=config.feedback)
    printed = run_hierarchy(
        config.params,
        grid,
        variant=RhsVariant.PRINTED,
        printed_g=config.printed_g,
        feedback=config.feedback,
    )
    oracle = jcm_amplitudes(config.params, grid, config.feedback)
    reference = np.abs(oracle.channel(1)) ** 2
    return Comparison(
        kind=BenchmarkKind.PRINTED_VS_DERIVED,
        metrics={
            "max_deviation": deviation(
                printed.photon_number, derived.photon_number, grid.dt, grid.dt
            ).max,
            "derived_vs_dde": deviation(
                derived.photon_number, reference, grid.dt, grid.dt
            ).max,
            "printed_vs_dde": deviation(
                printed.photon_number, reference, grid.dt, grid.dt
            ).max,
        },
        times=grid.times(),
        series={"derived": derived.photon_number, "printed": printed.photon_number},
    )


def _self(config: ScenarioConfig, grid: TimeGrid) -> Comparison:
    first = run_hierarchy(config.params, grid, feedback=config.feedback)
    second = run_hierarchy(config.params, grid, feedback=config.feedback)
    dev = deviation(first.photon_number, second.photon_number, grid.dt, grid.dt)
    return Comparison(
        kind=BenchmarkKind.SELF,
        metrics={"max_deviation": dev.max, "mean_deviation": dev.mean},
    )


_BENCHMARKS = {
    BenchmarkKind.HIERARCHY_VS_DDE: _hierarchy_vs_dde,
    BenchmarkKind.CONTINUUM_VS_ANALYTIC: _continuum_vs_analytic,
    BenchmarkKind.FACTORIZED_VS_HIERARCHY: _factorized_vs_hierarchy,
    BenchmarkKind.PRINTED_VS_DERIVED: _printed_vs_derived,
    BenchmarkKind.SELF: _self,
}


def benchmark(config: ScenarioConfig) -> Comparison:
    """Run the comparison named by ``config.benchmark``."""
    grid = config.time_grid()
    comparison = _BENCHMARKS[config.benchmark](config, grid)
    logger.info("benchmark %s: %s", config.benchmark.value, comparison.metrics)
    return comparison

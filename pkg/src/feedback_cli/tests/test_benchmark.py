import math

import numpy as np
import pytest

from feedback_cli.benchmark import benchmark, deviation, stabilization_cv
from feedback_cli.enums import BenchmarkKind
from feedback_cli.presets import Preset
from feedback_cli.runner import run_scenario, solve
from feedback_cli.scenario import load_scenario, parse
from feedback_core.errors import GridMismatch
from feedback_core.models import TimeGrid


@pytest.fixture
def benchmark_document(small_document):
    small_document["solver"] = "benchmark"
    small_document["grid"] = {"steps_per_tau": 200, "n_intervals": 3}
    return small_document


def test_deviation_needs_a_shared_grid():
    with pytest.raises(GridMismatch):
        deviation(np.zeros(3), np.zeros(4), 0.1, 0.1)
    with pytest.raises(GridMismatch):
        deviation(np.zeros(3), np.zeros(3), 0.1, 0.2)
    dev = deviation(np.array([0.0, 1.0]), np.array([0.5, 1.0]), 0.1, 0.1)
    assert (dev.max, dev.mean) == (0.5, 0.25)


class TestStabilization:
    def test_short_runs_have_no_window(self):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=100, n_intervals=10)
        assert math.isnan(stabilization_cv(np.ones(grid.n_steps + 1), grid))

    def test_constant_oscillation_has_zero_spread(self):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=100, n_intervals=12)
        values = np.cos(2.0 * math.pi * grid.times()) ** 2
        assert stabilization_cv(values, grid) == pytest.approx(0.0, abs=1e-12)

    def test_decaying_oscillation_spreads(self):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=100, n_intervals=12)
        t = grid.times()
        values = np.exp(-0.5 * t) * np.cos(2.0 * math.pi * t) ** 2
        assert stabilization_cv(values, grid) > 0.05

    def test_flat_curves_have_no_maxima(self):
        grid = TimeGrid.from_tau(1.0, steps_per_tau=100, n_intervals=12)
        assert math.isnan(stabilization_cv(np.zeros(grid.n_steps + 1), grid))


@pytest.mark.slow
def test_rabi_period_delay_stabilizes_the_oscillation():
    output = solve(load_scenario(None, Preset.RABI_TAU))
    assert output.metrics["stabilization_cv"] < 0.05


def test_hierarchy_agrees_with_the_amplitude_dde(benchmark_document):
    comparison = benchmark(parse(benchmark_document))
    assert comparison.kind == BenchmarkKind.HIERARCHY_VS_DDE
    assert comparison.metrics["max_deviation"] < 1e-6
    assert comparison.metrics["memory_budget_last"] == 3 * 2 * 200
    assert set(comparison.series) == {"hierarchy", "dde"}


def test_printed_variant_is_measured_against_both(benchmark_document):
    benchmark_document["benchmark"] = "printed-vs-derived"
    metrics = benchmark(parse(benchmark_document)).metrics
    assert set(metrics) == {"max_deviation", "derived_vs_dde", "printed_vs_dde"}
    assert metrics["derived_vs_dde"] < 1e-6
    assert metrics["printed_vs_dde"] > metrics["derived_vs_dde"]


def test_self_comparison_is_exact(benchmark_document):
    benchmark_document["benchmark"] = "self"
    metrics = benchmark(parse(benchmark_document)).metrics
    assert metrics["max_deviation"] == 0.0


def test_factorized_against_hierarchy(benchmark_document):
    benchmark_document["benchmark"] = "factorized-vs-hierarchy"
    comparison = benchmark(parse(benchmark_document))
    assert math.isfinite(comparison.metrics["max_deviation"])
    assert comparison.series["hierarchy"][0] == 1.0


def test_benchmark_run_writes_the_comparison(benchmark_document, tmp_path):
    report = run_scenario(parse(benchmark_document), tmp_path)
    assert set(report.digests) == {"comparison.csv"}
    header = (tmp_path / "comparison.csv").read_text().splitlines()[0]
    assert header == "t,hierarchy,dde"
    assert report.metrics["stabilization_cv"] is None


def test_continuum_table(benchmark_document, tmp_path):
    benchmark_document["benchmark"] = "continuum-vs-analytic"
    benchmark_document["grid"] = {"steps_per_tau": 2000, "n_intervals": 2}
    benchmark_document["continuum"] = {"mode_counts": [501, 1001]}
    report = run_scenario(parse(benchmark_document), tmp_path)
    assert set(report.metrics) >= {
        "max_deviation_501",
        "max_deviation_1001",
        "monotone",
    }
    lines = (tmp_path / "table.csv").read_text().splitlines()
    assert lines[0] == "n_modes,omega_window,max_deviation"
    assert [line.split(",")[0] for line in lines[1:]] == ["501", "1001"]
    assert report.metrics["max_deviation_501"] < 0.05

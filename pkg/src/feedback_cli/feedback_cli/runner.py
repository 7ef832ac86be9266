"""Run one scenario: dispatch to a solver, write trajectories and the report."""

import json
import logging
import math
import time
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from feedback_core.analytic import (
    empty_cavity_photon_number,
    empty_cavity_two_time,
    jcm_ground_amplitudes,
    mirror_emitter_amplitudes,
)
from feedback_core.continuum import (
    MIN_WINDOW_PERIODS,
    build_modes,
    evolve_emitter_only,
    evolve_jcm,
)
from feedback_core.dde import LinearDDESystem, integrate
from feedback_core.enums import InitialKind, MirrorModel
from feedback_core.errors import ConfigError
from feedback_core.factorized import run_factorized
from feedback_core.hierarchy import CorrelatorBlock, InitialState, run_hierarchy
from feedback_core.models import ComplexTrajectory, TimeGrid

from .benchmark import Comparison, benchmark, stabilization_cv
from .enums import SolverName, SystemModel
from .scenario import ScenarioConfig
from .writers import (
    digests,
    write_block_dump,
    write_channel_csv,
    write_observables_csv,
    write_table_csv,
)

logger = logging.getLogger(__name__)

_MIRROR_MODELS = {
    SystemModel.MIRROR: MirrorModel.EMITTER,
    SystemModel.CAVITY: MirrorModel.CAVITY,
}


class SolverOutput(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray | None = None
    photon_number: np.ndarray | None = None
    emitter_population: np.ndarray | None = None
    channels: dict[str, ComplexTrajectory] = {}
    blocks: tuple[CorrelatorBlock, ...] = ()
    memory_budget: tuple[int, ...] = ()
    metrics: dict[str, float] = {}
    comparison: Comparison | None = None


class RunReport(BaseModel):
    """Config echo, bookkeeping, metrics and file digests of one run.

    Everything except ``wall_time_s`` is a function of the config alone.
    """

    model_config = ConfigDict(frozen=True)

    config: dict[str, Any]
    solver: SolverName
    memory_budget: list[int]
    metrics: dict[str, float | None]
    digests: dict[str, str]
    wall_time_s: float

    def deterministic(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"wall_time_s"})


def _single_mode(
    model: MirrorModel, amplitude: np.ndarray, weight: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """(photon number, emitter population) of a lone emitter or cavity mode."""
    occupation = weight * np.abs(amplitude) ** 2
    if model == MirrorModel.EMITTER:
        return np.zeros_like(occupation), occupation
    return occupation, np.zeros_like(occupation)


def _initial(config: ScenarioConfig) -> InitialState:
    return InitialState(kind=config.initial.kind, photons=config.initial.photons)


def _require_feedback(config: ScenarioConfig) -> None:
    if not config.feedback:
        raise ConfigError(
            f"the {config.solver.value} solver always includes the feedback loop",
            field="feedback",
        )


def _analytic(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    _require_feedback(config)
    params = config.params
    times = grid.times()
    if config.model in _MIRROR_MODELS:
        c = mirror_emitter_amplitudes(params, times)
        photons, population = _single_mode(_MIRROR_MODELS[config.model], c)
        channel = ComplexTrajectory(dt=grid.dt, values=c)
        return SolverOutput(
            times=times,
            photon_number=photons,
            emitter_population=population,
            channels={"amplitude": channel},
        )
    if config.model == SystemModel.JCM:
        c_g = jcm_ground_amplitudes(params, times)
        return SolverOutput(
            times=times,
            photon_number=np.abs(c_g) ** 2,
            emitter_population=np.full(times.shape, math.nan),
            channels={"c_g": ComplexTrajectory(dt=grid.dt, values=c_g)},
        )
    # closed forms stop at 2τ
    n0 = config.initial.photons
    stop = min(grid.n_steps, 2 * grid.steps_per_tau - 1)
    times = grid.times(stop=stop)
    photons = np.array([empty_cavity_photon_number(params, n0, t) for t in times])
    first = grid.times(stop=grid.steps_per_tau - 1)
    two_time = np.array([empty_cavity_two_time(params, n0, t) for t in first])
    return SolverOutput(
        times=times,
        photon_number=photons,
        emitter_population=np.zeros_like(photons),
        channels={
            "two_time": ComplexTrajectory(dt=grid.dt, values=two_time.astype(complex))
        },
    )


def amplitude_system(
    config: ScenarioConfig,
) -> tuple[LinearDDESystem, tuple[str, ...]]:
    """Amplitude delay system of the configured model, with channel names."""
    params = config.params
    rate = params.gamma_tau if config.feedback else 0j
    if config.model in _MIRROR_MODELS or config.model == SystemModel.EMPTY_CAVITY:
        system = LinearDDESystem.from_lists(
            A=[[-params.gamma]], B=[[rate]], tau=params.tau, initial_state=[1.0]
        )
        return system, ("amplitude",)
    M = params.coupling_M
    start = [1.0, 0.0]
    if config.initial.kind == InitialKind.CAVITY_PHOTONS:
        start = [0.0, 1.0]
    system = LinearDDESystem.from_lists(
        A=[[0.0, -1j * M], [-1j * M, -params.gamma]],
        B=[[0.0, 0.0], [0.0, rate]],
        tau=params.tau,
        initial_state=start,
    )
    return system, ("c_e", "c_g")


def _dde(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    if config.model == SystemModel.JCM:
        _initial(config).check(config.params)
    system, names = amplitude_system(config)
    trajectory = integrate(system, grid)
    values = np.atleast_2d(trajectory.values)
    channels = {
        name: ComplexTrajectory(dt=grid.dt, values=values[k].copy())
        for k, name in enumerate(names)
    }
    weight = 1.0
    if config.initial.kind == InitialKind.CAVITY_PHOTONS:
        weight = config.initial.photons
    if config.model == SystemModel.JCM:
        photons = weight * np.abs(values[1]) ** 2
        population = weight * np.abs(values[0]) ** 2
    else:
        model = _MIRROR_MODELS.get(config.model, MirrorModel.CAVITY)
        photons, population = _single_mode(model, values[0], weight)
    return SolverOutput(
        times=grid.times(),
        photon_number=photons,
        emitter_population=population,
        channels=channels,
    )


def _continuum(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    _require_feedback(config)
    params = config.params
    settings = config.continuum
    window = settings.omega_window or MIN_WINDOW_PERIODS * 2.0 * math.pi / params.tau
    modes = build_modes(
        params.gamma,
        params.tau,
        settings.n_modes,
        window,
        params.phase,
        settings.structured,
    )
    if config.model == SystemModel.JCM:
        run = evolve_jcm(modes, params, grid)
        photons = np.abs(run.c_g) ** 2
        population = np.abs(run.c_e) ** 2
    elif config.model in _MIRROR_MODELS:
        run = evolve_emitter_only(modes, grid)
        photons, population = _single_mode(_MIRROR_MODELS[config.model], run.c_e)
    else:
        raise ConfigError("the continuum solver has no empty-cavity model", "model")
    channels = {
        name: ComplexTrajectory(dt=grid.dt, values=run.amplitudes.channel(name).copy())
        for name in run.amplitudes.names
    }
    return SolverOutput(
        times=grid.times(),
        photon_number=photons,
        emitter_population=population,
        channels=channels,
        metrics={"max_norm_drift": float(np.max(np.abs(run.norm - 1.0)))},
    )


def _hierarchy(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    run = run_hierarchy(
        config.params,
        grid,
        _initial(config),
        variant=config.variant,
        printed_g=config.printed_g,
        keep_blocks=config.outputs.dump,
        feedback=config.feedback,
    )
    origin = run.origin.trajectory
    channels = {
        f"origin_{name}": ComplexTrajectory(dt=grid.dt, values=origin.channel(name))
        for name in origin.names
    }
    return SolverOutput(
        times=grid.times(),
        photon_number=run.photon_number,
        emitter_population=run.emitter_population,
        channels=channels,
        blocks=run.blocks,
        memory_budget=run.memory_budget,
        metrics={
            "max_imag_residue": run.max_imag_residue,
            "max_corner_jump": max(run.corner_jumps, default=0.0),
            "stabilization_cv": stabilization_cv(run.photon_number, grid),
        },
    )


def _factorized(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    initial = config.initial
    # kind defaults to cavity_photons here; an explicit emitter_excited kind
    # means an empty cavity, as for the hierarchy
    photons = initial.photons if initial.kind == InitialKind.CAVITY_PHOTONS else 0.0
    excited = initial.emitter_excited or initial.kind == InitialKind.EMITTER_EXCITED
    run = run_factorized(
        config.params, photons, grid, emitter_excited=excited, feedback=config.feedback
    )
    return SolverOutput(
        times=grid.times(),
        photon_number=run.photon_number,
        emitter_population=run.emitter_population,
        metrics={"min_photon_number": float(run.photon_number.min())},
    )


def _benchmark(config: ScenarioConfig, grid: TimeGrid) -> SolverOutput:
    comparison = benchmark(config)
    return SolverOutput(metrics=dict(comparison.metrics), comparison=comparison)


_SOLVERS = {
    SolverName.ANALYTIC: _analytic,
    SolverName.DDE: _dde,
    SolverName.CONTINUUM: _continuum,
    SolverName.HIERARCHY: _hierarchy,
    SolverName.FACTORIZED: _factorized,
    SolverName.BENCHMARK: _benchmark,
}


def solve(config: ScenarioConfig) -> SolverOutput:
    return _SOLVERS[config.solver](config, config.time_grid())


def _write(output: SolverOutput, config: ScenarioConfig, out_dir: Path) -> list[Path]:
    written: list[Path] = []
    if (
        config.outputs.observables
        and output.times is not None
        and output.photon_number is not None
        and output.emitter_population is not None
    ):
        written.append(
            write_observables_csv(
                out_dir / "observables.csv",
                output.times,
                output.photon_number,
                output.emitter_population,
            )
        )
    if config.outputs.channels and output.channels:
        channel_dir = out_dir / "channels"
        channel_dir.mkdir(exist_ok=True)
        for name, trajectory in output.channels.items():
            written.append(
                write_channel_csv(
                    channel_dir / f"{name}.csv",
                    trajectory.times(),
                    np.asarray(trajectory.values),
                )
            )
    if output.blocks:
        dump_dir = out_dir / "dump"
        dump_dir.mkdir(exist_ok=True)
        for block in output.blocks:
            written.extend(write_block_dump(dump_dir, block))
    comparison = output.comparison
    if comparison is not None and comparison.times is not None:
        names = list(comparison.series)
        rows = [
            [t, *(float(comparison.series[n][k]) for n in names)]
            for k, t in enumerate(comparison.times.tolist())
        ]
        header = ["t", *names]
        written.append(write_table_csv(out_dir / "comparison.csv", header, rows))
    if comparison is not None and comparison.table:
        written.append(
            write_table_csv(
                out_dir / "table.csv", comparison.table_header, comparison.table
            )
        )
    return written


def _clean(metrics: dict[str, float]) -> dict[str, float | None]:
    return {k: (None if math.isnan(v) else v) for k, v in sorted(metrics.items())}


def run_scenario(config: ScenarioConfig, out_dir: Path) -> RunReport:
    """Execute ``config`` and write its files and ``report.json`` to ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    output = solve(config)
    written = _write(output, config, out_dir)
    metrics = dict(output.metrics)
    if output.photon_number is not None:
        metrics["final_photon_number"] = float(output.photon_number[-1])
    report = RunReport(
        config=config.model_dump(mode="json"),
        solver=config.solver,
        memory_budget=list(output.memory_budget),
        metrics=_clean(metrics),
        digests=digests(written, out_dir),
        wall_time_s=time.perf_counter() - started,
    )
    (out_dir / "report.json").write_text(
        json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8"
    )
    logger.info(
        "%s run %s written to %s (%d files)",
        config.solver.value,
        config.name,
        out_dir,
        len(written),
    )
    return report

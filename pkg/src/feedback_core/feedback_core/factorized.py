"""Excitation-manifold factorization for a cavity holding many photons.

The emitter equation Ṗ_j = −iM (1 − 2P†_j P_j) c_j couples one excitation
manifold to the next through the excited-state density. Replacing
⟨(P†P) X⟩ by ⟨P†P⟩⟨X⟩ closes the same correlator block the hierarchy
tracks, now with density-weighted terms:

    pc_j += −2iM p(t) cc_j
    cp_j += +2iM p(t−jτ) cc_j
    pp_j += −2iM p(t) cp_j + 2iM p(t−jτ) pc_j        (j ≥ 1)

where p = ⟨P†P⟩. For j = 0 the density equation is kept exact,
ṗ = iM(⟨P†c⟩* − ⟨P†c⟩), since P P = 0 removes its cubic terms. The
fixed-origin correlators follow the factorized equations as well and ride
along as four extra channels; p(t − jτ) is read from the population record.
"""

import logging
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .dde import rk4_march, stage_sample
from .enums import RhsVariant
from .errors import ConfigError
from .hierarchy import MIN_STEPS_PER_TAU, MemoryStore, derive_block_rhs
from .models import ModelParams, TimeGrid, require_valid

logger = logging.getLogger(__name__)


class FactorizedState(NamedTuple):
    """One stage of the factorized system inside interval i."""

    block: np.ndarray
    """(4, i+1) correlators cc, pc, cp, pp by lag."""
    origin: np.ndarray
    """(4,) fixed-origin correlators in the same row order."""
    delayed_population: np.ndarray
    """(i,) p(t − jτ) for j = 1..i."""


class DelayedRead(NamedTuple):
    """Previous-interval values at t − τ."""

    cc: np.ndarray
    cp: np.ndarray
    origin_cc: complex
    origin_cp: complex


def factorized_rhs(
    state: FactorizedState,
    read: DelayedRead | None,
    params: ModelParams,
    rate: complex | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the block and of the origin correlators."""
    block = state.block
    i = block.shape[1] - 1
    M = params.coupling_M
    rate = params.gamma_tau if rate is None else rate
    memory_read = (read.cc, read.cp) if read is not None and i > 0 else None

    d = derive_block_rhs(block, params, memory_read, RhsVariant.DERIVED, None, rate)
    cc, pc, cp, _ = block
    p = block[3, 0].real
    p_lag = np.concatenate([[p], state.delayed_population])
    d[1] += -2j * M * p * cc
    d[2] += 2j * M * p_lag * cc
    d[3, 1:] += -2j * M * p * cp[1:] + 2j * M * p_lag[1:] * pc[1:]

    z_cc, z_pc, z_cp, z_pp = state.origin
    delayed_cc = read.origin_cc if read is not None else 0j
    delayed_cp = read.origin_cp if read is not None else 0j
    rate_c = rate.conjugate()
    exchange = 1j * M * (1.0 - 2.0 * p)
    d_origin = np.array(
        [
            -params.gamma * z_cc + rate_c * delayed_cc + 1j * M * z_pc,
            exchange * z_cc,
            -params.gamma * z_cp + rate_c * delayed_cp + 1j * M * z_pp,
            exchange * z_cp,
        ]
    )
    return d, d_origin


class FactorizedRun(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    initial_photons: float
    photon_number: np.ndarray
    emitter_population: np.ndarray

    @property
    def total_excitation(self) -> np.ndarray:
        return self.photon_number + self.emitter_population

    def times(self) -> np.ndarray:
        return self.grid.times()


def run_factorized(
    params: ModelParams,
    N0: float,
    grid: TimeGrid,
    emitter_excited: bool = False,
    feedback: bool = True,
) -> FactorizedRun:
    """Photon number and emitter population for ``N0`` initial cavity photons.

    The emitter starts in its ground state unless ``emitter_excited``.
    """
    require_valid(params, grid)
    if N0 < 0:
        raise ConfigError(f"N0 must be non-negative, got {N0}", field="initial.photons")
    n_delay = grid.steps_per_tau
    if n_delay < MIN_STEPS_PER_TAU:
        raise ConfigError(
            f"need at least {MIN_STEPS_PER_TAU} steps per tau, got {n_delay}",
            field="steps_per_tau",
        )
    rate = params.gamma_tau if feedback else 0j
    p0 = 1.0 if emitter_excited else 0.0

    block = np.array([[N0], [0.0], [0.0], [p0]], dtype=complex)
    origin = np.array([N0, 0.0, 0.0, p0], dtype=complex)
    memory = MemoryStore.empty(n_delay)
    previous_origin: np.ndarray | None = None
    population_history: list[np.ndarray] = []
    photons: list[np.ndarray] = []
    population: list[np.ndarray] = []

    for i in range(grid.n_intervals):
        start = i * n_delay
        width = i + 1
        seed = block
        drives = memory.drives(seed) if i > 0 else None
        # rows j−1 hold p over interval i−j, j = 1..i
        lagged = (
            np.stack(population_history[::-1])
            if population_history
            else np.zeros((0, n_delay + 1))
        )

        def rhs(step: int, stage: int, y: np.ndarray) -> np.ndarray:
            m = step - start
            read = None
            if drives is not None and previous_origin is not None:
                origin_now = stage_sample(previous_origin, m, stage, n_delay)
                read = DelayedRead(
                    cc=stage_sample(drives[0], m, stage, n_delay),
                    cp=stage_sample(drives[1], m, stage, n_delay),
                    origin_cc=origin_now[0],
                    origin_cp=origin_now[1],
                )
            state = FactorizedState(
                block=y[:-4].reshape(4, width),
                origin=y[-4:],
                delayed_population=stage_sample(lagged, m, stage, n_delay),
            )
            d_block, d_origin = factorized_rhs(state, read, params, rate)
            return np.concatenate([d_block.ravel(), d_origin])

        y0 = np.concatenate([seed.ravel(), origin])
        samples = rk4_march(rhs, y0, n_delay, grid.dt, start_index=start)
        values = samples[:-4].reshape(4, width, n_delay + 1)
        origin_values = samples[-4:]

        memory = MemoryStore(
            interval_index=i,
            cc=values[0, :, :n_delay].copy(),
            cp=values[2, :, :n_delay].copy(),
        )
        previous_origin = origin_values[[0, 2]]
        population_history.append(values[3, 0].real.copy())
        photons.append(values[0, 0, :n_delay].real)
        population.append(values[3, 0, :n_delay].real)

        origin = origin_values[:, -1]
        block = np.concatenate([values[..., -1], origin[:, None]], axis=1)
        logger.debug(
            "factorized interval %d: photon number %.6g", i, values[0, 0, -1].real
        )

    photons.append(block[0, :1].real)
    population.append(block[3, :1].real)
    run = FactorizedRun(
        grid=grid,
        initial_photons=N0,
        photon_number=np.concatenate(photons),
        emitter_population=np.concatenate(population),
    )
    logger.info(
        "factorized run: N0=%g, %d intervals, final photon number %.6g",
        N0,
        grid.n_intervals,
        run.photon_number[-1],
    )
    return run

"""Two-time correlator hierarchy with memory that grows linearly in time.

Within interval i (t ∈ [iτ, (i+1)τ]) the block tracks, for j = 0..i,

    cc_j = ⟨c†(t) c(t−jτ)⟩    pc_j = ⟨P†(t) c(t−jτ)⟩
    cp_j = ⟨c†(t) P(t−jτ)⟩    pp_j = ⟨P†(t) P(t−jτ)⟩

with the equations of motion obtained by the product rule from

    ċ = −Γ c + Γ_τ c(t−τ) Θ(t−τ) − iM P,    Ṗ = −iM c.

The cubic part 2iM P†P c of the emitter equation vanishes on every tracked
expectation value in the single-excitation sector and is left out, which
makes the block linear and closed. The delayed leg of the first operator
either closes on the block itself (j = 0, by conjugation) or reads the
previous interval's cc and cp trajectories (j ≥ 1), so only those two
families are carried from one interval to the next. The newborn column
j = i starts from the fixed-origin correlators ⟨X†(iτ) Y(0)⟩.
"""

import logging
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dde import LinearDDESystem, integrate, rk4_march, stage_sample
from .enums import Channel, InitialKind, RhsVariant
from .errors import ConfigError, MissingMemory
from .models import ComplexTrajectory, ModelParams, TimeGrid, require_valid

logger = logging.getLogger(__name__)

# Row order of a block state.
CHANNELS = (Channel.CC, Channel.PC, Channel.CP, Channel.PP)
_ROW = {channel: row for row, channel in enumerate(CHANNELS)}

# The half-step stencil needs at least this many steps per τ.
MIN_STEPS_PER_TAU = 3


class InitialState(BaseModel):
    """Excited emitter with an empty cavity, or a cavity holding photons.

    With M > 0 the cavity may hold at most one photon on average (a mixture
    of vacuum and one photon); with M = 0 the cavity is linear and any
    photon number is exact.
    """

    model_config = ConfigDict(frozen=True)

    kind: InitialKind = InitialKind.EMITTER_EXCITED
    photons: float = Field(default=1.0, ge=0.0)

    @property
    def emitter_population(self) -> float:
        return 1.0 if self.kind == InitialKind.EMITTER_EXCITED else 0.0

    @property
    def cavity_photons(self) -> float:
        return self.photons if self.kind == InitialKind.CAVITY_PHOTONS else 0.0

    def check(self, params: ModelParams) -> None:
        if self.cavity_photons > 1.0 and params.coupling_M > 0:
            raise ConfigError(
                f"{self.photons} cavity photons leave the single-excitation sector"
                " when M > 0",
                field="initial.photons",
            )


class OriginCorrelators(BaseModel):
    """⟨c†(t)c(0)⟩, ⟨P†(t)c(0)⟩, ⟨c†(t)P(0)⟩, ⟨P†(t)P(0)⟩ over the full horizon."""

    model_config = ConfigDict(frozen=True)

    trajectory: ComplexTrajectory

    def corner(self, step: int) -> np.ndarray:
        """The four origin correlators at a global step, in block row order."""
        return np.asarray(self.trajectory.at(step))

    def channel(self, channel: Channel) -> np.ndarray:
        return self.trajectory.channel(channel.value)


def _origin_pair(
    params: ModelParams, grid: TimeGrid, start: tuple[complex, complex], rate: complex
) -> np.ndarray:
    if not any(start):
        return np.zeros((2, grid.n_steps + 1), dtype=complex)
    M = params.coupling_M
    system = LinearDDESystem.from_lists(
        A=[[-params.gamma, 1j * M], [1j * M, 0.0]],
        B=[[rate.conjugate(), 0.0], [0.0, 0.0]],
        tau=params.tau,
        initial_state=list(start),
    )
    return integrate(system, grid).values


def evolve_origin_correlators(
    params: ModelParams,
    grid: TimeGrid,
    initial: InitialState | None = None,
    feedback: bool = True,
) -> OriginCorrelators:
    """Correlators with the second operator frozen at t = 0.

    The c(0) pair and the P(0) pair obey the same delay system,

        Ż_c· = −Γ Z_c· + Γ_τ* Z_c·(t−τ) Θ(t−τ) + iM Z_P·,    Ż_P· = iM Z_c·,

    and differ only in their start values.
    """
    initial = initial or InitialState()
    rate = params.gamma_tau if feedback else 0j
    with_c = _origin_pair(params, grid, (initial.cavity_photons, 0.0), rate)
    with_p = _origin_pair(params, grid, (0.0, initial.emitter_population), rate)
    values = np.stack([with_c[0], with_c[1], with_p[0], with_p[1]])
    trajectory = ComplexTrajectory(
        dt=grid.dt, values=values, names=tuple(c.value for c in CHANNELS)
    )
    return OriginCorrelators(trajectory=trajectory)


class MemoryStore(BaseModel):
    """cc_j and cp_j of one finished interval, N_Δ samples each.

    Row j holds the correlator with lag j; the sample at the interval's end
    is the next interval's corner value and is not stored again.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    interval_index: int = Field(ge=-1)
    cc: np.ndarray
    cp: np.ndarray

    @model_validator(mode="after")
    def check_rows(self) -> Self:
        rows = self.interval_index + 1
        if self.cc.shape != self.cp.shape or self.cc.shape[0] != rows:
            raise ValueError(
                f"interval {self.interval_index} needs {rows} rows per family,"
                f" got {self.cc.shape} and {self.cp.shape}"
            )
        self.cc.setflags(write=False)
        self.cp.setflags(write=False)
        return self

    @classmethod
    def empty(cls, steps_per_tau: int) -> "MemoryStore":
        """Memory before the first interval: nothing stored."""
        blank = np.zeros((0, steps_per_tau), dtype=complex)
        return cls(interval_index=-1, cc=blank, cp=blank.copy())

    @property
    def n_rows(self) -> int:
        return self.cc.shape[0]

    @property
    def size(self) -> int:
        """Stored complex values."""
        return self.cc.size + self.cp.size

    def drives(self, corner: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """cc and cp over the whole previous interval, closed by ``corner``.

        ``corner`` is the current block's start value; its first ``n_rows``
        columns continue the stored rows.
        """
        rows = self.n_rows
        cc = np.concatenate([self.cc, corner[_ROW[Channel.CC], :rows, None]], axis=1)
        cp = np.concatenate([self.cp, corner[_ROW[Channel.CP], :rows, None]], axis=1)
        return cc, cp


class CorrelatorBlock(BaseModel):
    """All correlators of one interval, shape ``(4, i+1, N_Δ+1)``."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    interval_index: int = Field(ge=0)
    start_index: int = Field(ge=0)
    dt: float = Field(gt=0.0)
    values: np.ndarray

    @model_validator(mode="after")
    def check_shape(self) -> Self:
        if self.values.ndim != 3 or self.values.shape[:2] != (
            4,
            self.interval_index + 1,
        ):
            raise ValueError(
                f"block {self.interval_index} has shape {self.values.shape}"
            )
        self.values.setflags(write=False)
        return self

    @property
    def n_samples(self) -> int:
        return self.values.shape[-1]

    def correlator(self, channel: Channel, j: int) -> ComplexTrajectory:
        if not 0 <= j <= self.interval_index:
            raise IndexError(f"lag {j} outside block {self.interval_index}")
        return ComplexTrajectory(
            start_index=self.start_index,
            dt=self.dt,
            values=self.values[_ROW[channel], j],
        )

    @property
    def start(self) -> np.ndarray:
        return self.values[..., 0]

    @property
    def end(self) -> np.ndarray:
        return self.values[..., -1]

    def channel_names(self) -> list[str]:
        lags = range(self.values.shape[1])
        return [f"{c.value}[{j}]" for c in CHANNELS for j in lags]

    def hermiticity_residue(self) -> float:
        """Largest imaginary part of the equal-time observables cc_0 and pp_0."""
        return float(
            max(
                np.max(np.abs(self.values[_ROW[Channel.CC], 0].imag)),
                np.max(np.abs(self.values[_ROW[Channel.PP], 0].imag)),
            )
        )


def derive_block_rhs(
    block: np.ndarray,
    params: ModelParams,
    memory_read: tuple[np.ndarray, np.ndarray] | None = None,
    variant: RhsVariant = RhsVariant.DERIVED,
    printed_g: float | None = None,
    rate: complex | None = None,
) -> np.ndarray:
    """Time derivative of a ``(4, i+1)`` block state, all lags at once.

    ``memory_read`` holds cc_{j−1} and cp_{j−1} of the previous interval at
    t − τ for j = 1..i. The printed variant replaces the cc memory read by
    the self-coupling Γ_τ*·cc_j and uses ``printed_g`` (default M) for the
    exchange term iM·pc_j of the cc equation. ``rate`` overrides Γ_τ (zero
    for an open feedback loop).
    """
    i = block.shape[1] - 1
    cc, pc, cp, pp = block
    gamma, M = params.gamma, params.coupling_M
    rate = params.gamma_tau if rate is None else rate
    rate_c = rate.conjugate()

    d = np.empty_like(block)
    d[0] = -2.0 * gamma * cc + 1j * M * pc - 1j * M * cp
    d[1] = -gamma * pc + 1j * M * cc - 1j * M * pp
    d[2] = -gamma * cp + 1j * M * pp - 1j * M * cc
    d[3] = 1j * M * cp - 1j * M * pc
    if i == 0:
        return d

    if memory_read is None or memory_read[0].shape[0] != i:
        raise MissingMemory(f"interval {i} needs {i} stored lags per family")
    s_cc, s_cp = memory_read

    # delayed leg of the second operator: lag j -> j+1
    d[0, :-1] += rate * cc[1:]
    d[1, :-1] += rate * pc[1:]
    # delayed leg of the first operator
    d[0, 0] += rate_c * np.conj(cc[1])
    d[2, 0] += rate_c * np.conj(pc[1])
    d[2, 1:] += rate_c * s_cp
    if variant == RhsVariant.PRINTED:
        g = M if printed_g is None else printed_g
        d[0] += 1j * (g - M) * pc
        d[0, 1:] += rate_c * cc[1:]
    else:
        d[0, 1:] += rate_c * s_cc
    return d


def corner_seed(
    i: int,
    previous: CorrelatorBlock | None,
    origin: OriginCorrelators,
    grid: TimeGrid,
    initial: InitialState,
) -> np.ndarray:
    """Start values of block ``i``: continuity for j < i, origin corner for j = i."""
    seed = np.empty((4, i + 1), dtype=complex)
    if i == 0:
        seed[:, 0] = [initial.cavity_photons, 0.0, 0.0, initial.emitter_population]
        return seed
    if previous is None or previous.interval_index != i - 1:
        raise MissingMemory(f"block {i} needs the end of block {i - 1}")
    seed[:, :i] = previous.end
    seed[:, i] = origin.corner(i * grid.steps_per_tau)
    return seed


def advance_interval(
    i: int,
    seed: np.ndarray,
    memory: MemoryStore,
    params: ModelParams,
    grid: TimeGrid,
    variant: RhsVariant = RhsVariant.DERIVED,
    printed_g: float | None = None,
    rate: complex | None = None,
) -> tuple[CorrelatorBlock, MemoryStore]:
    """Integrate block ``i`` over its interval and hand on the next memory."""
    n_delay = grid.steps_per_tau
    if i > 0 and memory.n_rows != i:
        raise MissingMemory(
            f"interval {i} needs memory of interval {i - 1},"
            f" got interval {memory.interval_index}"
        )
    drives = memory.drives(seed) if i > 0 else None
    start = i * n_delay
    shape = (4, i + 1)

    def rhs(step: int, stage: int, y: np.ndarray) -> np.ndarray:
        read = None
        if drives is not None:
            m = step - start
            read = (
                stage_sample(drives[0], m, stage, n_delay),
                stage_sample(drives[1], m, stage, n_delay),
            )
        return derive_block_rhs(
            y.reshape(shape), params, read, variant, printed_g, rate
        ).ravel()

    samples = rk4_march(rhs, seed.ravel(), n_delay, grid.dt, start_index=start)
    values = samples.reshape(4, i + 1, n_delay + 1)
    block = CorrelatorBlock(
        interval_index=i, start_index=start, dt=grid.dt, values=values
    )
    next_memory = MemoryStore(
        interval_index=i,
        cc=values[_ROW[Channel.CC], :, :n_delay].copy(),
        cp=values[_ROW[Channel.CP], :, :n_delay].copy(),
    )
    logger.debug("interval %d done: %d channels", i, 4 * (i + 1))
    return block, next_memory


class HierarchyRun(BaseModel):
    """Observables of a hierarchy run plus its bookkeeping."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    photon_number: np.ndarray
    emitter_population: np.ndarray
    memory_budget: tuple[int, ...]
    corner_jumps: tuple[float, ...]
    max_imag_residue: float
    origin: OriginCorrelators
    blocks: tuple[CorrelatorBlock, ...] = ()

    def times(self) -> np.ndarray:
        return self.grid.times()


def run_hierarchy(
    params: ModelParams,
    grid: TimeGrid,
    initial: InitialState | None = None,
    variant: RhsVariant = RhsVariant.DERIVED,
    printed_g: float | None = None,
    keep_blocks: bool = False,
    feedback: bool = True,
) -> HierarchyRun:
    """March the correlator blocks over ``grid.n_intervals`` intervals.

    ``memory_budget[i]`` counts the complex values held on entering interval
    i: the stored cc and cp lags plus the photon-number record so far.
    ``feedback=False`` opens the loop (Γ_τ = 0) while keeping the decay Γ.
    """
    require_valid(params, grid)
    initial = initial or InitialState()
    initial.check(params)
    n_delay = grid.steps_per_tau
    if n_delay < MIN_STEPS_PER_TAU:
        raise ConfigError(
            f"need at least {MIN_STEPS_PER_TAU} steps per tau, got {n_delay}",
            field="steps_per_tau",
        )

    origin = evolve_origin_correlators(params, grid, initial, feedback)
    rate = None if feedback else 0j
    memory = MemoryStore.empty(n_delay)
    photons: list[np.ndarray] = []
    population: list[np.ndarray] = []
    budget: list[int] = []
    jumps: list[float] = []
    blocks: list[CorrelatorBlock] = []
    previous: CorrelatorBlock | None = None
    residue = 0.0

    for i in range(grid.n_intervals):
        recorded = sum(p.size for p in photons)
        budget.append(memory.size + recorded)
        seed = corner_seed(i, previous, origin, grid, initial)
        if previous is not None:
            jumps.append(float(np.max(np.abs(previous.end - seed[:, :i]))))
        block, memory = advance_interval(
            i, seed, memory, params, grid, variant, printed_g, rate
        )
        residue = max(residue, block.hermiticity_residue())
        photons.append(block.values[_ROW[Channel.CC], 0, :n_delay].real)
        population.append(block.values[_ROW[Channel.PP], 0, :n_delay].real)
        if keep_blocks:
            blocks.append(block)
        previous = block

    assert previous is not None
    photons.append(previous.values[_ROW[Channel.CC], 0, -1:].real)
    population.append(previous.values[_ROW[Channel.PP], 0, -1:].real)
    run = HierarchyRun(
        grid=grid,
        photon_number=np.concatenate(photons),
        emitter_population=np.concatenate(population),
        memory_budget=tuple(budget),
        corner_jumps=tuple(jumps),
        max_imag_residue=residue,
        origin=origin,
        blocks=tuple(blocks),
    )
    logger.info(
        "hierarchy run: %d intervals, final photon number %.6g",
        grid.n_intervals,
        run.photon_number[-1],
    )
    return run


def photon_number(run: HierarchyRun) -> np.ndarray:
    """⟨c†c⟩(t) on the run's grid."""
    return run.photon_number


def emitter_population(run: HierarchyRun) -> np.ndarray:
    return run.emitter_population

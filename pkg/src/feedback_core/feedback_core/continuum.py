"""Explicit-reservoir oracle in the single-excitation sector.

The continuum in front of the mirror is replaced by ``n_modes`` discrete modes
on a symmetric detuning window [−W, W] around the system frequency, in units
with c = 1 (so L = τ/2). A standing-wave mode couples with
G_k = g0·√2·sin(kL)·√Δω, an unstructured one with G_k = g0·√Δω, where
Γ = π g0². Both give the instantaneous kernel 2Γδ(s); the structured one adds
the retarded peaks −Γ_τ δ(s−τ) − Γ_τ* δ(s+τ), so eliminating the modes
reproduces ċ_e = −Γ c_e + Γ_τ c_e(t−τ)Θ(t−τ).

Finite windows smooth every δ-peak over ~1/W (an initial Zeno-like transient
and a rounded kink at t = τ), and the discrete spectrum revives at the
Poincaré time 2π/Δω, which every run must stay below. Mode sums are plain
``np.dot`` over the ascending detuning grid, so repeated runs are bitwise
identical.
"""

import logging
import math
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analytic import mirror_emitter_amplitudes
from .dde import rk4_march
from .errors import ConfigError, GridMisaligned, TooFewModes, WindowTooNarrow
from .models import ALIGNMENT_RTOL, ComplexTrajectory, ModelParams, TimeGrid

logger = logging.getLogger(__name__)

# The window must resolve the delay: W ≥ MIN_WINDOW_PERIODS · 2π/τ.
MIN_WINDOW_PERIODS = 20
# The spacing must resolve one roundtrip: Δω·τ < 2π/MIN_MODES_PER_ROUNDTRIP.
MIN_MODES_PER_ROUNDTRIP = 10


class ModeGrid(BaseModel):
    """Discretized reservoir with couplings G_k = g0·sin(kL) (scaled per mode)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma: float = Field(ge=0.0)
    tau: float = Field(gt=0.0)
    phase: float = 0.0
    n_modes: int = Field(ge=2)
    omega_window: float = Field(gt=0.0)
    structured: bool = True
    detunings: np.ndarray
    couplings: np.ndarray

    @model_validator(mode="after")
    def check_arrays(self) -> Self:
        if self.detunings.shape != (self.n_modes,) or self.couplings.shape != (
            self.n_modes,
        ):
            raise ValueError("detunings and couplings need one entry per mode")
        self.detunings.setflags(write=False)
        self.couplings.setflags(write=False)
        return self

    @property
    def mode_spacing(self) -> float:
        return 2.0 * self.omega_window / (self.n_modes - 1)

    @property
    def g0(self) -> float:
        return math.sqrt(self.gamma / math.pi)

    @property
    def gamma_check(self) -> float:
        """π g0²/c recomputed from g0."""
        return math.pi * self.g0**2

    @property
    def poincare_time(self) -> float:
        return 2.0 * math.pi / self.mode_spacing


def build_modes(
    gamma: float,
    tau: float,
    n_modes: int,
    window: float,
    phase: float = 0.0,
    structured: bool = True,
) -> ModeGrid:
    """Uniform mode grid centred on the rotating-frame origin."""
    if n_modes < 2:
        raise TooFewModes(f"need at least 2 modes, got {n_modes}", field="n_modes")
    min_window = MIN_WINDOW_PERIODS * 2.0 * math.pi / tau
    if window < min_window * (1.0 - 1e-12):
        raise WindowTooNarrow(
            f"window {window:.4g} does not resolve tau={tau}; need >= {min_window:.4g}",
            field="omega_window",
        )
    spacing = 2.0 * window / (n_modes - 1)
    if spacing * tau >= 2.0 * math.pi / MIN_MODES_PER_ROUNDTRIP:
        raise TooFewModes(
            f"mode spacing * tau = {spacing * tau:.4g} must stay below"
            f" {2.0 * math.pi / MIN_MODES_PER_ROUNDTRIP:.4g}",
            field="n_modes",
        )
    detunings = np.linspace(-window, window, n_modes)
    g0 = math.sqrt(gamma / math.pi)
    if structured:
        # k·L = (ω_sys + Δ)·τ/2 with ω_sys·τ/2 = φ/2
        kL = 0.5 * phase + 0.5 * tau * detunings
        couplings = g0 * math.sqrt(2.0 * spacing) * np.sin(kL)
    else:
        couplings = np.full(n_modes, g0 * math.sqrt(spacing))
    return ModeGrid(
        gamma=gamma,
        tau=tau,
        phase=phase,
        n_modes=n_modes,
        omega_window=window,
        structured=structured,
        detunings=detunings,
        couplings=couplings.astype(complex),
    )


def kernel(grid: ModeGrid, s: np.ndarray) -> np.ndarray:
    """Σ_k |G_k|² e^{−iΔ_k s}, the discretized memory kernel."""
    weights = np.abs(grid.couplings) ** 2
    return np.exp(-1j * np.outer(np.atleast_1d(s), grid.detunings)) @ weights


class ContinuumRun(BaseModel):
    """System amplitudes plus the total single-excitation norm per step."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitudes: ComplexTrajectory
    norm: np.ndarray

    @property
    def c_e(self) -> np.ndarray:
        return self.amplitudes.channel("c_e")

    @property
    def c_g(self) -> np.ndarray:
        return self.amplitudes.channel("c_g")


def _check_time(grid: ModeGrid, time: TimeGrid) -> None:
    if not math.isclose(time.tau, grid.tau, rel_tol=ALIGNMENT_RTOL, abs_tol=0.0):
        raise GridMisaligned(
            f"time grid tau {time.tau} differs from mode grid tau {grid.tau}",
            field="dt",
        )
    if time.t_end >= grid.poincare_time:
        raise ConfigError(
            f"t_end={time.t_end:.4g} reaches the revival time"
            f" {grid.poincare_time:.4g}; add modes",
            field="n_modes",
        )
    if time.t_end >= 0.5 * grid.poincare_time:
        logger.warning(
            "t_end=%.4g is past half the revival time %.4g",
            time.t_end,
            grid.poincare_time,
        )


def _run(
    rhs, y0: np.ndarray, n_system: int, names: tuple[str, ...], time: TimeGrid
) -> ContinuumRun:
    norm = np.empty(time.n_steps + 1)

    def record_norm(step: int, y: np.ndarray) -> None:
        norm[step] = np.vdot(y, y).real

    values = rk4_march(
        rhs, y0, time.n_steps, time.dt, on_step=record_norm, n_recorded=n_system
    )
    amplitudes = ComplexTrajectory(dt=time.dt, values=values, names=names)
    return ContinuumRun(amplitudes=amplitudes, norm=norm)


def evolve_emitter_only(grid: ModeGrid, time: TimeGrid) -> ContinuumRun:
    """c_e(t) for an emitter in front of the mirror, c_e(0) = 1, vacuum modes."""
    _check_time(grid, time)
    G, detunings = grid.couplings, grid.detunings

    def rhs(step: int, stage: int, y: np.ndarray) -> np.ndarray:
        dy = np.empty_like(y)
        dy[0] = -1j * np.dot(G, y[1:])
        dy[1:] = -1j * (detunings * y[1:] + G * y[0])
        return dy

    y0 = np.zeros(grid.n_modes + 1, dtype=complex)
    y0[0] = 1.0
    run = _run(rhs, y0, 1, ("c_e",), time)
    logger.info(
        "continuum emitter run: %d modes, max norm drift %.2e",
        grid.n_modes,
        float(np.max(np.abs(run.norm - 1.0))),
    )
    return run


def evolve_jcm(grid: ModeGrid, params: ModelParams, time: TimeGrid) -> ContinuumRun:
    """Emitter coupled to a cavity that couples to the mode continuum."""
    _check_time(grid, time)
    G, detunings = grid.couplings, grid.detunings
    M = params.coupling_M

    def rhs(step: int, stage: int, y: np.ndarray) -> np.ndarray:
        dy = np.empty_like(y)
        dy[0] = -1j * M * y[1]
        dy[1] = -1j * M * y[0] - 1j * np.dot(G, y[2:])
        dy[2:] = -1j * (detunings * y[2:] + G * y[1])
        return dy

    y0 = np.zeros(grid.n_modes + 2, dtype=complex)
    y0[0] = 1.0
    run = _run(rhs, y0, 2, ("c_e", "c_g"), time)
    logger.info(
        "continuum JCM run: %d modes, max norm drift %.2e",
        grid.n_modes,
        float(np.max(np.abs(run.norm - 1.0))),
    )
    return run


def locate_kink(values: np.ndarray, lo: int, hi: int) -> int:
    """Index in ``[lo, hi)`` where the second difference of ``values`` peaks."""
    second = np.abs(np.diff(values[lo - 1 : hi + 1], n=2))
    return lo + int(np.argmax(second))


class ConvergencePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_modes: int
    omega_window: float
    max_deviation: float


def convergence_study(
    params: ModelParams,
    mode_counts: list[int],
    mode_spacing: float,
    time: TimeGrid,
) -> list[ConvergencePoint]:
    """Emitter oracle against the series at fixed spacing (window grows)."""
    reference = mirror_emitter_amplitudes(params, time.times())
    points = []
    for n_modes in mode_counts:
        window = 0.5 * (n_modes - 1) * mode_spacing
        grid = build_modes(params.gamma, params.tau, n_modes, window, params.phase)
        run = evolve_emitter_only(grid, time)
        deviation = float(np.max(np.abs(run.c_e - reference)))
        logger.info("n_modes=%d window=%.4g deviation=%.3e", n_modes, window, deviation)
        points.append(
            ConvergencePoint(
                n_modes=n_modes, omega_window=window, max_deviation=deviation
            )
        )
    return points

"""Method-of-steps integration of linear complex delay systems.

Solves ẋ(t) = A·x(t) + B·x(t−τ)·Θ(t−τ) (+ d(t)) on a delay-aligned grid with
a classical fourth-order Runge-Kutta step. The history before t = 0 is zero
and the delayed channel switches on for steps starting at t ≥ τ, so the kink
of the solution at every multiple of τ lies on a grid point.

RK4 needs the delayed (or driven) channel at half steps. Those values come
from a four-point Lagrange stencil over exact grid samples, kept inside one
τ-segment so that no stencil straddles a kink. Every other lookup is an exact
integer offset.
"""

import logging
import math
from collections.abc import Callable
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigError, DriveLengthMismatch, GridMisaligned, NonFiniteState
from .models import ALIGNMENT_RTOL, ComplexTrajectory, TimeGrid

logger = logging.getLogger(__name__)

# Stage positions inside one step: base point, midpoint, end point.
BASE, HALF, END = 0, 1, 2

# ‖A‖·dt above this is logged as a step-size warning.
STEP_WARNING = 0.1

# Lagrange weights for the value at (start + offset + 1/2), nodes start..start+3,
# keyed by offset.
_HALF_WEIGHTS = {
    0: np.array([5.0, 15.0, -5.0, 1.0]) / 16.0,
    1: np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0,
    2: np.array([1.0, -5.0, 15.0, 5.0]) / 16.0,
}

# One RHS evaluation: (step, stage, state) -> derivative.
StageRhs = Callable[[int, int, np.ndarray], np.ndarray]


def half_step_stencil(m: int, seg_len: int, origin: int = 0) -> tuple[int, np.ndarray]:
    """First node and weights for the value at index ``m + 1/2``.

    Segments are ``[origin + k·seg_len, origin + (k+1)·seg_len]``; the four
    nodes never leave the segment that contains ``[m, m+1]``.
    """
    if seg_len < 3:
        raise ConfigError(f"need at least 3 steps per segment, got {seg_len}")
    k = (m - origin) // seg_len
    lo = origin + k * seg_len
    hi = lo + seg_len
    start = min(max(m - 1, lo), hi - 3)
    return start, _HALF_WEIGHTS[m - start]


def half_step_value(samples: np.ndarray, m: int, seg_len: int) -> np.ndarray:
    """Value at local index ``m + 1/2`` of ``samples[..., 0:n]``."""
    start, weights = half_step_stencil(m, seg_len)
    return samples[..., start : start + 4] @ weights


def stage_sample(samples: np.ndarray, m: int, stage: int, seg_len: int) -> np.ndarray:
    """Sampled channel at the given RK stage of the step starting at local ``m``."""
    if stage == HALF:
        return half_step_value(samples, m, seg_len)
    return samples[..., m + stage // 2]


class HistoryBuffer:
    """Ring of the most recent ``n_delay + lookback`` states, by global step.

    Steps before 0 read as the zero vector.
    """

    def __init__(self, dim: int, n_delay: int, lookback: int = 4) -> None:
        self.n_delay = n_delay
        self.size = n_delay + lookback
        self._ring = np.zeros((self.size, dim), dtype=complex)
        self._zero = np.zeros(dim, dtype=complex)
        self._latest = -1

    def push(self, step: int, state: np.ndarray) -> None:
        self._ring[step % self.size] = state
        self._latest = step

    def get(self, step: int) -> np.ndarray:
        if step < 0:
            return self._zero
        if step > self._latest or step <= self._latest - self.size:
            raise IndexError(f"step {step} not held (latest {self._latest})")
        return self._ring[step % self.size]

    def half(self, m: int) -> np.ndarray:
        """State at step ``m + 1/2``, interpolated inside m's τ-segment."""
        if m < 0:
            return self._zero
        start, weights = half_step_stencil(m, self.n_delay)
        nodes = np.stack([self.get(start + k) for k in range(4)])
        return weights @ nodes

    def delayed(self, step: int, stage: int) -> np.ndarray:
        """x(t − τ) for the given RK stage of the step starting at ``step``."""
        m = step - self.n_delay
        if stage == BASE:
            return self.get(m)
        if stage == HALF:
            return self.half(m)
        return self.get(m + 1)


class LinearDDESystem(BaseModel):
    """ẋ = A·x + B·x(t−τ)·Θ(t−τ) with zero history on [−τ, 0)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    A: np.ndarray
    B: np.ndarray
    tau: float = Field(gt=0.0)
    initial_state: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> Self:
        dim = self.initial_state.shape[0]
        for name in ("A", "B"):
            matrix = getattr(self, name)
            if matrix.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim}x{dim}, got {matrix.shape}")
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f"{name} has non-finite entries")
        return self

    @classmethod
    def from_lists(
        cls, A: list, B: list, tau: float, initial_state: list
    ) -> "LinearDDESystem":
        return cls(
            A=np.asarray(A, dtype=complex),
            B=np.asarray(B, dtype=complex),
            tau=tau,
            initial_state=np.asarray(initial_state, dtype=complex),
        )

    @property
    def dim(self) -> int:
        return self.initial_state.shape[0]


def rk4_march(
    rhs: StageRhs,
    x0: np.ndarray,
    n_steps: int,
    dt: float,
    start_index: int = 0,
    on_step: Callable[[int, np.ndarray], None] | None = None,
    n_recorded: int | None = None,
) -> np.ndarray:
    """Classical RK4 over ``n_steps`` steps; returns samples ``(channels, n_steps+1)``.

    ``rhs`` receives the global step index of the step's base point and the
    stage (BASE, HALF or END). ``on_step`` sees every accepted state, starting
    with ``x0``. Only the first ``n_recorded`` components are kept in the
    returned samples (all by default).
    """
    x = np.array(x0, dtype=complex)
    n_recorded = x.shape[0] if n_recorded is None else n_recorded
    out = np.empty((n_recorded, n_steps + 1), dtype=complex)
    out[:, 0] = x[:n_recorded]
    if on_step is not None:
        on_step(start_index, x)
    half_dt = 0.5 * dt
    for local in range(n_steps):
        step = start_index + local
        k1 = rhs(step, BASE, x)
        k2 = rhs(step, HALF, x + half_dt * k1)
        k3 = rhs(step, HALF, x + half_dt * k2)
        k4 = rhs(step, END, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(step + 1)
        out[:, local + 1] = x[:n_recorded]
        if on_step is not None:
            on_step(step + 1, x)
    return out


def _check_grid(system: LinearDDESystem, grid: TimeGrid) -> None:
    if not math.isclose(grid.tau, system.tau, rel_tol=ALIGNMENT_RTOL, abs_tol=0.0):
        raise GridMisaligned(
            f"grid spans {grid.tau} per {grid.steps_per_tau} steps, system tau is"
            f" {system.tau}",
            field="dt",
        )
    stiffness = float(np.linalg.norm(system.A, 2)) * grid.dt
    if stiffness >= STEP_WARNING:
        logger.warning("step size is coarse: ||A||*dt = %.3g", stiffness)


def integrate(system: LinearDDESystem, grid: TimeGrid) -> ComplexTrajectory:
    """Integrate the homogeneous system over ``grid.n_steps`` steps."""
    return _integrate(system, grid, drive=None)


def integrate_with_drive(
    system: LinearDDESystem, drive: ComplexTrajectory, grid: TimeGrid
) -> ComplexTrajectory:
    """Integrate ẋ = A·x + B·x(t−τ)Θ + d(t) with d sampled on the same grid."""
    samples = np.atleast_2d(drive.values)
    if (
        drive.start_index != 0
        or samples.shape[-1] != grid.n_steps + 1
        or samples.shape[0] != system.dim
    ):
        raise DriveLengthMismatch(
            f"drive must cover steps 0..{grid.n_steps} with {system.dim} channels,"
            f" got shape {samples.shape} from step {drive.start_index}"
        )
    return _integrate(system, grid, drive=samples)


def _integrate(
    system: LinearDDESystem, grid: TimeGrid, drive: np.ndarray | None
) -> ComplexTrajectory:
    _check_grid(system, grid)
    n_delay = grid.steps_per_tau
    history = HistoryBuffer(system.dim, n_delay)
    A, B = system.A, system.B
    feedback = bool(np.any(B))

    def rhs(step: int, stage: int, x: np.ndarray) -> np.ndarray:
        dx = A @ x
        if feedback and step >= n_delay:
            dx = dx + B @ history.delayed(step, stage)
        if drive is not None:
            dx = dx + stage_sample(drive, step, stage, n_delay)
        return dx

    values = rk4_march(
        rhs, system.initial_state, grid.n_steps, grid.dt, on_step=history.push
    )
    logger.debug(
        "integrated %d steps of a %d-dim delay system", grid.n_steps, system.dim
    )
    return ComplexTrajectory(dt=grid.dt, values=values)

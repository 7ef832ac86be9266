import cmath
import math
from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
from returns.result import Failure, Result, Success

from .errors import (
    ConfigError,
    GridMisaligned,
    NegativeRate,
    NonPositiveTau,
    TrajectoryIndexError,
)

# Relative slack when comparing N_Δ·dt with τ.
ALIGNMENT_RTOL = 1e-12


class ModelParams(BaseModel):
    """Physical rates and delay in the frame rotating at the system frequency.

    Range checks live in :func:`validate` so that invalid inputs can be
    reported as a list instead of failing on the first field.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(allow_inf_nan=False)
    tau: float = Field(allow_inf_nan=False)
    coupling_M: float = Field(default=0.0, allow_inf_nan=False)
    phase: float = Field(default=0.0, allow_inf_nan=False)

    @property
    def gamma_tau(self) -> complex:
        return gamma_tau(self)

    def with_updates(self, **changes: float) -> "ModelParams":
        return self.model_copy(update=changes)


class TimeGrid(BaseModel):
    """Delay-aligned uniform grid: ``steps_per_tau`` steps of ``dt`` per τ."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0.0, allow_inf_nan=False)
    steps_per_tau: PositiveInt
    n_intervals: PositiveInt = 1

    @classmethod
    def from_tau(cls, tau: float, steps_per_tau: int, n_intervals: int = 1) -> Self:
        if tau <= 0:
            raise NonPositiveTau(f"tau must be positive, got {tau}", field="tau")
        return cls(
            dt=tau / steps_per_tau, steps_per_tau=steps_per_tau, n_intervals=n_intervals
        )

    @classmethod
    def from_dt(cls, tau: float, dt: float, n_intervals: int = 1) -> Self:
        """Grid for a requested step; alignment is checked by :func:`validate`."""
        if tau <= 0:
            raise NonPositiveTau(f"tau must be positive, got {tau}", field="tau")
        return cls(
            dt=dt, steps_per_tau=max(1, round(tau / dt)), n_intervals=n_intervals
        )

    @property
    def tau(self) -> float:
        return self.steps_per_tau * self.dt

    @property
    def n_steps(self) -> int:
        return self.steps_per_tau * self.n_intervals

    @property
    def t_end(self) -> float:
        return self.time_of(self.n_steps)

    def time_of(self, step: int) -> float:
        return step * self.dt

    def index_of(self, t: float) -> int:
        return round(t / self.dt)

    def times(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Sample times for the inclusive index range ``[start, stop]``."""
        stop = self.n_steps if stop is None else stop
        return np.arange(start, stop + 1) * self.dt

    def with_intervals(self, n_intervals: int) -> "TimeGrid":
        return self.model_copy(update={"n_intervals": n_intervals})


class ComplexTrajectory(BaseModel):
    """Complex samples on a grid, addressed by global step index.

    ``values`` has shape ``(n_samples,)`` for one channel or
    ``(channels, n_samples)`` for several. The array is read-only.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    start_index: int = 0
    dt: float = Field(gt=0.0)
    values: np.ndarray
    names: tuple[str, ...] = ()

    @model_validator(mode="after")
    def freeze_values(self) -> Self:
        if self.values.ndim not in (1, 2):
            raise ValueError("values must be 1-D or 2-D")
        self.values.setflags(write=False)
        return self

    @property
    def start_time(self) -> float:
        return self.start_index * self.dt

    @property
    def n_samples(self) -> int:
        return self.values.shape[-1]

    @property
    def end_index(self) -> int:
        return self.start_index + self.n_samples - 1

    @property
    def n_channels(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    def times(self) -> np.ndarray:
        return (self.start_index + np.arange(self.n_samples)) * self.dt

    def at(self, step: int) -> complex | np.ndarray:
        if not self.start_index <= step <= self.end_index:
            raise TrajectoryIndexError(
                f"step {step} outside [{self.start_index}, {self.end_index}]"
            )
        return self.values[..., step - self.start_index]

    def channel(self, key: int | str) -> np.ndarray:
        if self.values.ndim == 1:
            return self.values
        index = self.names.index(key) if isinstance(key, str) else key
        return self.values[index]

    def slice_interval(self, i: int, n_per_interval: int) -> "ComplexTrajectory":
        """Samples of interval ``i``, both end points included."""
        lo = i * n_per_interval
        hi = lo + n_per_interval
        if lo < self.start_index or hi > self.end_index:
            raise TrajectoryIndexError(
                f"interval {i} spans steps {lo}..{hi},"
                f" held {self.start_index}..{self.end_index}"
            )
        local = lo - self.start_index
        return ComplexTrajectory(
            start_index=lo,
            dt=self.dt,
            values=self.values[..., local : local + n_per_interval + 1],
            names=self.names,
        )


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    field: str
    message: str

    def to_error(self) -> ConfigError:
        error_type = _VIOLATION_ERRORS.get(self.code, ConfigError)
        return error_type(self.message, field=self.field)


class CheckedConfig(BaseModel):
    """Parameters and grid that passed :func:`validate`."""

    model_config = ConfigDict(frozen=True)

    params: ModelParams
    grid: TimeGrid


_VIOLATION_ERRORS: dict[str, type[ConfigError]] = {
    "NonPositiveTau": NonPositiveTau,
    "GridMisaligned": GridMisaligned,
    "NegativeRate": NegativeRate,
}


def validate(
    params: ModelParams, grid: TimeGrid
) -> Result[CheckedConfig, list[Violation]]:
    violations: list[Violation] = []
    if params.tau <= 0:
        violations.append(
            Violation(
                code="NonPositiveTau",
                field="tau",
                message=f"tau must be positive, got {params.tau}",
            )
        )
    for name in ("gamma", "coupling_M"):
        value = getattr(params, name)
        if value < 0:
            violations.append(
                Violation(
                    code="NegativeRate",
                    field=name,
                    message=f"{name} must be non-negative, got {value}",
                )
            )
    if params.tau > 0 and not math.isclose(
        grid.tau, params.tau, rel_tol=ALIGNMENT_RTOL, abs_tol=0.0
    ):
        violations.append(
            Violation(
                code="GridMisaligned",
                field="dt",
                message=(
                    f"tau={params.tau} is not an integer multiple of dt={grid.dt}"
                    f" (nearest N_delta={grid.steps_per_tau} spans {grid.tau})"
                ),
            )
        )
    if violations:
        return Failure(violations)
    return Success(CheckedConfig(params=params, grid=grid))


def require_valid(params: ModelParams, grid: TimeGrid) -> CheckedConfig:
    """Like :func:`validate` but raises the first violation."""
    match validate(params, grid):
        case Success(checked):
            return checked
        case Failure(violations):
            raise violations[0].to_error()
    raise AssertionError("unreachable")


def gamma_tau(params: ModelParams) -> complex:
    """Complex feedback rate Γ_τ = Γ·e^{iφ}."""
    return params.gamma * cmath.exp(1j * params.phase)

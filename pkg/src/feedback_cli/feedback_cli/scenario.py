"""Scenario documents: preset expansion, JSON-schema checks, parsing."""

import json
import logging
import math
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    ValidationError,
    model_validator,
)
from returns.result import Failure, Success

from feedback_core.enums import InitialKind, RhsVariant
from feedback_core.errors import ConfigError
from feedback_core.models import ModelParams, TimeGrid, Violation, validate

from .enums import BenchmarkKind, SolverName, SweepAxis, SystemModel
from .presets import PRESETS, Preset

logger = logging.getLogger(__name__)


class ScenarioInvalid(ConfigError):
    """Several configuration problems, each as ``(field, message)``."""

    def __init__(self, problems: list[tuple[str, str]]) -> None:
        super().__init__(
            "; ".join(f"{field}: {message}" for field, message in problems),
            field=problems[0][0] if problems else None,
        )
        self.problems = problems


class GridConfig(BaseModel):
    """Either ``steps_per_tau`` or ``dt``; ``t_end`` overrides ``n_intervals``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    steps_per_tau: PositiveInt | None = None
    dt: float | None = Field(default=None, gt=0.0)
    n_intervals: PositiveInt = 12
    t_end: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_step(self) -> "GridConfig":
        if (self.steps_per_tau is None) == (self.dt is None):
            raise ValueError("grid needs exactly one of steps_per_tau and dt")
        return self

    def build(self, tau: float) -> TimeGrid:
        n_intervals = self.n_intervals
        if self.t_end is not None:
            n_intervals = max(1, math.ceil(self.t_end / tau - 1e-9))
        if self.steps_per_tau is not None:
            return TimeGrid.from_tau(tau, self.steps_per_tau, n_intervals)
        assert self.dt is not None
        return TimeGrid.from_dt(tau, self.dt, n_intervals)


class InitialConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InitialKind = InitialKind.EMITTER_EXCITED
    photons: float = Field(default=1.0, ge=0.0)
    # factorized runs only: excite the emitter on top of the photons
    emitter_excited: bool = False


class ContinuumConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_modes: int = Field(default=2001, ge=2)
    omega_window: float | None = Field(default=None, gt=0.0)
    structured: bool = True
    mode_counts: list[int] = Field(default_factory=lambda: [2001, 4001, 8001])


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    channels: bool = True
    observables: bool = True
    dump: bool = False


class ScenarioConfig(BaseModel):
    """Everything needed to reproduce a run; echoed verbatim in the report."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    solver: SolverName
    model: SystemModel = SystemModel.JCM
    params: ModelParams
    grid: GridConfig
    initial: InitialConfig = InitialConfig()
    feedback: bool = True
    variant: RhsVariant = RhsVariant.DERIVED
    printed_g: float | None = None
    benchmark: BenchmarkKind = BenchmarkKind.HIERARCHY_VS_DDE
    continuum: ContinuumConfig = ContinuumConfig()
    outputs: OutputConfig = OutputConfig()

    @model_validator(mode="before")
    @classmethod
    def default_initial_kind(cls, data: Any) -> Any:
        """Factorized runs start from a photon-filled cavity unless told otherwise."""
        if not isinstance(data, dict) or data.get("solver") != SolverName.FACTORIZED:
            return data
        initial = data.get("initial", {})
        if not isinstance(initial, dict) or "kind" in initial:
            return data
        return {**data, "initial": {**initial, "kind": InitialKind.CAVITY_PHOTONS}}

    def time_grid(self) -> TimeGrid:
        return self.grid.build(self.params.tau)

    def with_axis(self, axis: SweepAxis, value: float) -> "ScenarioConfig":
        """Copy with one sweep axis set; tau keeps the steps per τ.

        An N0 value always means photons in the cavity, so it also switches
        the initial kind.
        """
        match axis:
            case SweepAxis.M:
                params = self.params.with_updates(coupling_M=value)
            case SweepAxis.GAMMA:
                params = self.params.with_updates(gamma=value)
            case SweepAxis.TAU:
                params = self.params.with_updates(tau=value)
            case SweepAxis.PHASE:
                params = self.params.with_updates(phase=value)
            case SweepAxis.N0:
                initial = self.initial.model_copy(
                    update={"kind": InitialKind.CAVITY_PHOTONS, "photons": value}
                )
                return self.model_copy(update={"initial": initial})
            case _:
                raise ValueError(f"unknown sweep axis {axis!r}")
        return self.model_copy(update={"params": params})


def scenario_schema() -> dict[str, Any]:
    """JSON schema of a fully expanded scenario document."""
    return ScenarioConfig.model_json_schema()


def _merge(base: dict[str, Any], top: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in top.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_document(path: Path) -> dict[str, Any]:
    """Parse a scenario file; syntax errors report line and column."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}", field=str(path)) from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"line {exc.lineno} column {exc.colno}: {exc.msg}", field=str(path)
        ) from exc
    if not isinstance(document, dict):
        raise ConfigError("scenario must be a JSON object", field=str(path))
    return document


def expand(
    document: dict[str, Any], overrides: dict[str, Any] | None = None
) -> dict[str, Any]:
    """Preset first, then the document's own fields, then ``overrides``."""
    top = _merge(document, overrides or {})
    preset = top.pop("preset", None)
    if preset is None:
        return top
    try:
        base = PRESETS[Preset(preset)]
    except ValueError as exc:
        raise ConfigError(f"unknown preset {preset!r}", field="preset") from exc
    return _merge(base, top)


def check_schema(document: dict[str, Any]) -> None:
    validator = Draft202012Validator(scenario_schema())
    errors = sorted(
        validator.iter_errors(document), key=lambda e: [str(p) for p in e.path]
    )
    if errors:
        raise ScenarioInvalid(
            [(".".join(map(str, e.path)) or "<root>", e.message) for e in errors]
        )


def _violations(violations: list[Violation]) -> ScenarioInvalid:
    return ScenarioInvalid(
        [
            (f"{'grid' if v.field == 'dt' else 'params'}.{v.field}", v.message)
            for v in violations
        ]
    )


def parse(document: dict[str, Any]) -> ScenarioConfig:
    """Schema check, model parse and parameter/grid validation."""
    check_schema(document)
    try:
        config = ScenarioConfig.model_validate(document)
    except ValidationError as exc:
        raise ScenarioInvalid(
            [
                (".".join(str(p) for p in error["loc"]) or "<root>", error["msg"])
                for error in exc.errors()
            ]
        ) from exc
    if config.params.tau <= 0:
        raise ScenarioInvalid(
            [("params.tau", f"tau must be positive, got {config.params.tau}")]
        )
    match validate(config.params, config.time_grid()):
        case Failure(violations):
            raise _violations(violations)
        case Success(_):
            pass
    logger.debug("scenario %s parsed", config.name)
    return config


def load_scenario(
    path: Path | None,
    preset: Preset | None = None,
    overrides: dict[str, Any] | None = None,
) -> ScenarioConfig:
    """File (optional) plus preset plus CLI overrides, fully validated."""
    document = read_document(path) if path is not None else {}
    if preset is not None:
        document = {**document, "preset": preset.value}
    return parse(expand(document, overrides))

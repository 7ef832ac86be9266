"""One independent run per value of a swept parameter."""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError

from feedback_core.errors import ConfigError, FeedbackError

from .enums import SweepAxis
from .runner import run_scenario
from .scenario import ScenarioConfig, parse
from .writers import write_table_csv

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "index",
    "axis",
    "value",
    "status",
    "final_photon_number",
    "max_deviation",
    "error",
]


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    axis: SweepAxis
    value: float
    status: str
    final_photon_number: float | None = None
    max_deviation: float | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_row(self) -> list:
        return [
            self.index,
            self.axis.value,
            self.value,
            self.status,
            "" if self.final_photon_number is None else self.final_photon_number,
            "" if self.max_deviation is None else self.max_deviation,
            self.error,
        ]


def run_directory(root: Path, index: int, axis: SweepAxis, value: float) -> Path:
    return root / f"{index:03d}_{axis.value}={value:g}"


def _run_one(
    index: int, axis: SweepAxis, value: float, document: dict[str, Any], root: Path
) -> SweepRow:
    """Worker entry point; errors stay inside the row."""
    try:
        config = parse(document)
        report = run_scenario(config, run_directory(root, index, axis, value))
    except (FeedbackError, ValidationError) as exc:
        logger.warning("sweep run %d (%s=%g) failed: %s", index, axis, value, exc)
        return SweepRow(
            index=index, axis=axis, value=value, status="failed", error=str(exc)
        )
    return SweepRow(
        index=index,
        axis=axis,
        value=value,
        status="ok",
        final_photon_number=report.metrics.get("final_photon_number"),
        max_deviation=report.metrics.get("max_deviation"),
    )


def sweep(
    base: ScenarioConfig,
    axis: SweepAxis,
    values: list[float],
    root: Path,
    jobs: int = 1,
) -> list[SweepRow]:
    """Run ``base`` once per value and write ``summary.csv`` in value order."""
    if not values:
        raise ConfigError("sweep needs at least one value", field="values")
    root.mkdir(parents=True, exist_ok=True)
    documents = [
        base.with_axis(axis, value).model_dump(mode="json") for value in values
    ]
    tasks = [
        (index, axis, value, document, root)
        for index, (value, document) in enumerate(zip(values, documents, strict=True))
    ]
    if jobs == 1:
        rows = [_run_one(*task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, *zip(*tasks, strict=True)))
    write_table_csv(
        root / "summary.csv", SUMMARY_COLUMNS, [row.as_row() for row in rows]
    )
    failed = sum(not row.ok for row in rows)
    logger.info("sweep over %s: %d runs, %d failed", axis.value, len(rows), failed)
    return rows

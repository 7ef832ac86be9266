"""Trajectory files: CSV tables, binary correlator dumps, digests.

Numbers are written with ``repr`` so identical runs give identical bytes.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from feedback_core.hierarchy import CorrelatorBlock

OBSERVABLE_COLUMNS = ("t", "photon_number", "emitter_population")
CHANNEL_COLUMNS = ("t", "re", "im")


def _number(x: float) -> str:
    return repr(float(x))


def write_channel_csv(path: Path, times: np.ndarray, values: np.ndarray) -> Path:
    """One complex channel as ``t,re,im`` rows."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CHANNEL_COLUMNS)
        for t, z in zip(times, values, strict=True):
            writer.writerow((_number(t), _number(z.real), _number(z.imag)))
    return path


def write_observables_csv(
    path: Path,
    times: np.ndarray,
    photon_number: np.ndarray,
    emitter_population: np.ndarray,
) -> Path:
    """Wide table ``t,photon_number,emitter_population``; NaN marks no data."""
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(OBSERVABLE_COLUMNS)
        for row in zip(times, photon_number, emitter_population, strict=True):
            writer.writerow(tuple(_number(x) for x in row))
    return path


def write_table_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_number(x) if isinstance(x, float) else x for x in row]
            )
    return path


def write_block_dump(directory: Path, block: CorrelatorBlock) -> tuple[Path, Path]:
    """Block ``i`` as little-endian float64 (re, im) pairs plus a manifest.

    Layout is row-major ``[channel][step]`` with channels ordered as in
    :meth:`CorrelatorBlock.channel_names`.
    """
    stem = f"block_{block.interval_index:03d}"
    data_path = directory / f"{stem}.bin"
    manifest_path = directory / f"{stem}.json"
    rows = block.values.reshape(-1, block.n_samples)
    np.ascontiguousarray(rows, dtype="<c16").tofile(data_path)
    manifest = {
        "interval": block.interval_index,
        "channels": block.channel_names(),
        "start_index": block.start_index,
        "dt": block.dt,
        "steps": block.n_samples,
        "dtype": "<f8",
        "layout": "row-major [channel][step], (re, im) pairs",
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return data_path, manifest_path


def read_block_dump(data_path: Path) -> tuple[dict, np.ndarray]:
    """Manifest and ``(channels, steps)`` complex array of a dump."""
    manifest = json.loads(data_path.with_suffix(".json").read_text(encoding="utf-8"))
    data = np.fromfile(data_path, dtype="<c16")
    return manifest, data.reshape(len(manifest["channels"]), manifest["steps"])


def sha256_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def digests(paths: list[Path], root: Path) -> dict[str, str]:
    """SHA-256 per file, keyed by the path relative to ``root``."""
    return {
        path.relative_to(root).as_posix(): sha256_digest(path)
        for path in sorted(paths)
    }

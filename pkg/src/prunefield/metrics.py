"""Fidelity and efficiency measurement, and experiment report files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint
from .errors import ShapeError
from .model import MlpModel
from .tensor import Array

# Fixed column order of report files.
REPORT_COLUMNS = ("label", "strategy", "params", "size_bytes", "psnr", "mse", "sec_per_iter", "remaining_edge_pct")


def mse(reference: Array, candidate: Array) -> float:
    """Mean squared error between two images of identical shape.

    The mean runs over every pixel and channel, so for RGB inputs this is
    the per-channel squared error averaged over height * width * 3 values.
    """
    reference = np.asarray(reference, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    if reference.shape != candidate.shape:
        raise ShapeError(f"image shapes differ: {reference.shape} vs {candidate.shape}")
    diff = reference - candidate
    return float(np.mean(diff * diff))


def psnr_from_mse(mse_value: float, max_value: float = 1.0) -> float:
    """10*log10(max_value^2 / mse); ``math.inf`` is the exact-match sentinel.

    The sentinel is returned explicitly, never produced by dividing by
    zero, and ``math.isinf`` distinguishes it from every numeric value.
    """
    if max_value <= 0:
        raise ValueError(f"max_value must be positive, got {max_value}")
    if mse_value < 0:
        raise ValueError(f"mse must be nonnegative, got {mse_value}")
    if mse_value == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse_value)


def psnr(reference: Array, candidate: Array, max_value: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; higher means closer images."""
    return psnr_from_mse(mse(reference, candidate), max_value)


def param_count(model: MlpModel) -> int:
    """Exact total of weight and bias entries across all layers."""
    return sum(l.weights.size + l.biases.size for l in model.layers)


def model_size_bytes(model: MlpModel) -> int:
    """Serialized checkpoint size: header plus 4 bytes per parameter."""
    return checkpoint.header_size(model) + 4 * param_count(model)


@dataclass
class ExperimentReport:
    """One row of the strategy-comparison tables.

    ``psnr`` may be ``math.inf`` (exact reconstruction) or ``None``
    (unavailable, e.g. a failed stage); ``sec_per_iter`` and
    ``remaining_edge_pct`` are ``None`` when not measured.
    """

    label: str
    strategy: str
    params: int
    size_bytes: int
    psnr: float | None
    mse: float | None
    sec_per_iter: float | None = None
    remaining_edge_pct: float | None = None


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)  # shortest round-trip formatting; inf prints as "inf"
    return str(value)


def _json_entry(r: ExperimentReport) -> dict:
    return {
        "label": r.label,
        "strategy": r.strategy,
        "params": r.params,
        "size_bytes": r.size_bytes,
        "psnr": None if r.psnr is None or math.isinf(r.psnr) else r.psnr,
        "psnr_infinite": r.psnr is not None and math.isinf(r.psnr),
        "mse": r.mse,
        "sec_per_iter": r.sec_per_iter,
        "remaining_edge_pct": r.remaining_edge_pct,
    }


def emit_report(reports: list[ExperimentReport], format: str, path) -> None:
    """Write reports as CSV or JSON with a fixed column order.

    Infinite PSNR serializes as the literal ``inf`` in CSV and as a null
    with the ``psnr_infinite`` flag set in JSON.
    """
    if not reports:
        raise ValueError("no reports to emit")
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            for r in reports:
                writer.writerow([_csv_cell(getattr(r, col)) for col in REPORT_COLUMNS])
    elif format == "json":
        payload = {"reports": [_json_entry(r) for r in reports]}
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path, format: str) -> list[ExperimentReport]:
    """Parse a report file back into ExperimentReport values."""
    path = Path(path)
    reports = []
    if format == "csv":
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                reports.append(
                    ExperimentReport(
                        label=row["label"],
                        strategy=row["strategy"],
                        params=int(row["params"]),
                        size_bytes=int(row["size_bytes"]),
                        psnr=float(row["psnr"]) if row["psnr"] else None,
                        mse=float(row["mse"]) if row["mse"] else None,
                        sec_per_iter=float(row["sec_per_iter"]) if row["sec_per_iter"] else None,
                        remaining_edge_pct=float(row["remaining_edge_pct"]) if row["remaining_edge_pct"] else None,
                    )
                )
    elif format == "json":
        for entry in json.loads(path.read_text())["reports"]:
            reports.append(
                ExperimentReport(
                    label=entry["label"],
                    strategy=entry["strategy"],
                    params=entry["params"],
                    size_bytes=entry["size_bytes"],
                    psnr=math.inf if entry["psnr_infinite"] else entry["psnr"],
                    mse=entry["mse"],
                    sec_per_iter=entry["sec_per_iter"],
                    remaining_edge_pct=entry["remaining_edge_pct"],
                )
            )
    else:
        raise ValueError(f"unknown report format {format!r}")
    return reports

"""Dataset CSV, parameter JSON and run-manifest files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .errors import DataError
from .estimation import Dataset, FitResult, MeasurementRecord
from .wideband import BandSpec

DATASET_HEADER = ("distance_m", "f_start_hz", "f_stop_hz", "path_loss_db")
PARAM_KEYS = (
    "alpha", "beta", "k_factor_db", "sw_amplitude_db", "sw_phase_rad",
    "sw_calibration_db", "sw_period_m", "rmse_db",
)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_table_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write_text(path, _rows_to_csv(header, rows))


def write_dataset_csv(path, datasets: Dataset | Sequence[Dataset]) -> None:
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    rows = (
        (r.distance, r.band.f_start, r.band.f_stop, r.path_loss_db)
        for ds in datasets for r in ds.records
    )
    write_table_csv(path, DATASET_HEADER, rows)


def read_dataset_csv(path, label: str | None = None) -> list[Dataset]:
    """Read a dataset CSV; records are grouped into one Dataset per band.

    Groups keep their order of first appearance and are sorted by distance.
    Raises ``DataError`` naming the offending line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != DATASET_HEADER:
        raise DataError(f"{path}:1: expected header {','.join(DATASET_HEADER)}")

    groups: dict[tuple[float, float], list[MeasurementRecord]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(DATASET_HEADER):
            raise DataError(f"{path}:{lineno}: expected {len(DATASET_HEADER)} fields, got {len(row)}")
        try:
            d, f0, f1, pl = (float(c) for c in row)
            band = BandSpec(f0, f1)
            rec = MeasurementRecord(d, band, pl)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        groups.setdefault((f0, f1), []).append(rec)
    if not groups:
        raise DataError(f"{path}: no records")

    base = label if label is not None else path.stem
    out = []
    for (f0, f1), recs in groups.items():
        recs.sort(key=lambda r: r.distance)
        band = recs[0].band
        name = base if len(groups) == 1 else f"{base}[{f0:g}-{f1:g}]"
        out.append(Dataset(tuple(recs), band.center, name))
    return out


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def fit_to_params(fit: FitResult, k_factor_db: float | None = None) -> dict:
    """Flat parameter document; an LOS-only fit is a standing wave with A = 0."""
    los, sw = fit.los, fit.sw
    return {
        "alpha": _num(los.alpha) if los else None,
        "beta": _num(los.beta) if los else None,
        "k_factor_db": _num(k_factor_db),
        "sw_amplitude_db": sw.amplitude_db if sw else 0.0,
        "sw_phase_rad": sw.phase_rad if sw else 0.0,
        "sw_calibration_db": sw.calibration_db if sw else fit.calibration_db,
        "sw_period_m": sw.period_m if sw else None,
        "rmse_db": fit.rmse_db,
    }


def write_params_json(path, params: dict) -> None:
    missing = [k for k in PARAM_KEYS if k not in params]
    if missing:
        raise ValueError(f"parameter document lacks {missing}")
    atomic_write_text(path, json.dumps({k: params[k] for k in PARAM_KEYS}, indent=2) + "\n")


def read_params_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    missing = [k for k in PARAM_KEYS if k not in doc]
    if missing:
        raise DataError(f"{path}: missing keys {missing}")
    return doc


def manifest_path(output) -> Path:
    return Path(str(output) + ".manifest.json")


def write_manifest(output, command: str, parameters: dict, seed: int | None,
                   inputs: Sequence[str] = (), outputs: Sequence[str] = ()) -> Path:
    doc = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path = manifest_path(output)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    return path


def read_manifest(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    for key in ("command", "parameters"):
        if key not in doc:
            raise DataError(f"{path}: manifest lacks {key!r}")
    return doc

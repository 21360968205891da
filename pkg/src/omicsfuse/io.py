"""CSV and JSON readers/writers for every file the batch front-end touches.

Matrix CSV: header row "sample_id" followed by feature IDs, one row per
sample, empty cell = missing value, comma separated, UTF-8. Survival
CSV: sample_id,time,event with event 0/1. Labels CSV: sample_id,label.
Numbers are serialized with 12 significant digits, which round-trips
exactly through float parsing.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .preprocess import OmicsMatrix
from .survival import SurvivalRecord


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x:.12g}"


def write_matrix_csv(path, matrix: OmicsMatrix) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", *matrix.feature_ids])
        masked = matrix.values.copy()
        masked[matrix.missing_mask] = np.nan
        for sid, row in zip(matrix.sample_ids, masked):
            writer.writerow([sid, *(_fmt(float(v)) for v in row)])


def read_matrix_csv(path, kind: str = "other") -> OmicsMatrix:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "sample_id" or len(header) < 2:
            raise ValueError(f"{path}: expected header 'sample_id,<feature ids...>'")
        feature_ids = header[1:]
        sample_ids = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            sample_ids.append(row[0])
            rows.append([np.nan if cell == "" else float(cell) for cell in row[1:]])
    if not rows:
        raise ValueError(f"{path}: no sample rows")
    return OmicsMatrix(
        values=np.asarray(rows, dtype=np.float64),
        sample_ids=sample_ids,
        feature_ids=feature_ids,
        kind=kind,
    )


def write_survival_csv(path, records: list[SurvivalRecord]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "time", "event"])
        for rec in records:
            writer.writerow([rec.sample_id, _fmt(rec.time), rec.event])


def read_survival_csv(path) -> list[SurvivalRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "time", "event"]:
            raise ValueError(f"{path}: expected header 'sample_id,time,event'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 cells, got {len(row)}")
            event = row[2].strip()
            if event not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: event must be 0 or 1, got {event!r}")
            records.append(SurvivalRecord(row[0], float(row[1]), int(event)))
    if not records:
        raise ValueError(f"{path}: no records")
    return records


def write_labels_csv(path, sample_ids, labels) -> None:
    if len(sample_ids) != len(labels):
        raise ValueError(
            f"{len(sample_ids)} sample ids vs {len(labels)} labels"
        )
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "label"])
        for sid, lab in zip(sample_ids, labels):
            writer.writerow([sid, lab])


def read_labels_csv(path) -> tuple[list[str], list[str]]:
    path = Path(path)
    sample_ids, labels = [], []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "label"]:
            raise ValueError(f"{path}: expected header 'sample_id,label'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 cells, got {len(row)}")
            sample_ids.append(row[0])
            labels.append(row[1])
    if not sample_ids:
        raise ValueError(f"{path}: no label rows")
    return sample_ids, labels


def write_table_csv(path, header: list[str], rows) -> None:
    """Flat numeric/text table; floats get 12 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row]
            )


def read_table_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header plus rows of the cell text written by write_table_csv."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty table") from None
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {len(rows) + 2} has {len(row)} cells,"
                    f" expected {len(header)}"
                )
            rows.append(row)
    return header, rows


def _round_for_json(obj):
    # bool before int: Python bool subclasses int
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        return float(f"{x:.12g}")
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_for_json(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_for_json(v) for v in obj]
    return obj


def write_json(path, obj) -> None:
    """Deterministic JSON: sorted keys, 12-significant-digit floats,
    NaN serialized as null, no timestamps."""
    path = Path(path)
    payload = json.dumps(_round_for_json(obj), sort_keys=True, indent=2,
                         allow_nan=False)
    path.write_text(payload + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))

"""Versioned text file formats for embedding sets, pair lists, image tensors,
and run reports.

All formats are newline-delimited with a JSON header line. Floats are written
as shortest round-trippable decimals (Python repr via json), so read(write(x))
reproduces x bit-exactly. Parsers reject NaN/Inf with a located error.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .embedding import EmbeddingRecord, EmbeddingSet, Role
from .errors import FormatError

EMB_FORMAT_VERSION = 1
IMG_FORMAT_VERSION = 1

PAIR_LABELS = ("match", "mismatch")


def _reject_constant(token: str):
    raise ValueError(f"non-finite value {token!r}")


def _load_json_line(line: str, path: str, lineno: int) -> dict:
    try:
        obj = json.loads(line, parse_constant=_reject_constant)
    except ValueError as exc:
        raise FormatError(f"malformed line: {exc}", path=path, line=lineno) from exc
    if not isinstance(obj, dict):
        raise FormatError("expected a JSON object", path=path, line=lineno)
    return obj


# ---------------------------------------------------------------------------
# Embedding set files


def write_embedding_set(es: EmbeddingSet, path) -> None:
    header = {
        "fmt": "emb",
        "v": EMB_FORMAT_VERSION,
        "p": es.dimension if es.dimension is not None else 0,
        "n": len(es),
        "role": es.role.value,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in es.records:
            row = {
                "id": rec.id,
                "label": rec.identity_label,
                "vec": [float(x) for x in rec.vector],
            }
            fh.write(json.dumps(row) + "\n")


def read_embedding_set(path) -> EmbeddingSet:
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty file", path=path, line=1)
    header = _load_json_line(lines[0], path, 1)
    if header.get("fmt") != "emb":
        raise FormatError(f"not an embedding set file: fmt={header.get('fmt')!r}",
                          path=path, line=1)
    if header.get("v") != EMB_FORMAT_VERSION:
        raise FormatError(f"unsupported version {header.get('v')!r}", path=path, line=1)
    try:
        p = int(header["p"])
        n = int(header["n"])
        role = Role(header["role"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}", path=path, line=1) from exc

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = _load_json_line(line, path, lineno)
        try:
            vec = np.asarray(row["vec"], dtype=np.float64)
            rec = EmbeddingRecord(id=str(row["id"]),
                                  identity_label=str(row["label"]), vector=vec)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad record: {exc}", path=path, line=lineno) from exc
        if vec.ndim != 1 or vec.shape[0] != p:
            raise FormatError(
                f"record {row.get('id')!r} has {vec.size} components, header declares p={p}",
                path=path, line=lineno)
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"record {row.get('id')!r} has non-finite components",
                              path=path, line=lineno)
        records.append(rec)
    if len(records) != n:
        raise FormatError(f"header declares n={n} records, found {len(records)}",
                          path=path)
    return EmbeddingSet(role=role, records=records)


# ---------------------------------------------------------------------------
# Pair list files


def write_pair_list(pairs: list[tuple[str, str, str]], path) -> None:
    for i, (_, _, label) in enumerate(pairs):
        if label not in PAIR_LABELS:
            raise FormatError(f"pair {i} has label {label!r}, expected one of {PAIR_LABELS}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id_a", "id_b", "label"])
        writer.writerows(pairs)


def read_pair_list(path) -> list[tuple[str, str, str]]:
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != ["id_a", "id_b", "label"]:
        raise FormatError("missing or bad header, expected id_a,id_b,label",
                          path=path, line=1)
    pairs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"expected 3 columns, got {len(row)}", path=path, line=lineno)
        if row[2] not in PAIR_LABELS:
            raise FormatError(f"bad label {row[2]!r}", path=path, line=lineno)
        pairs.append((row[0], row[1], row[2]))
    return pairs


# ---------------------------------------------------------------------------
# Image tensor files


def write_image_tensor(values: np.ndarray, path, lo: float = -1.0, hi: float = 1.0) -> None:
    """values: (3, m, m) array written channel-major then row-major."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 3 or values.shape[0] != 3 or values.shape[1] != values.shape[2]:
        raise FormatError(f"expected shape (3, m, m), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise FormatError("image has non-finite values")
    if values.min() < lo or values.max() > hi:
        raise FormatError(f"image values outside declared range [{lo}, {hi}]")
    header = {"fmt": "img", "v": IMG_FORMAT_VERSION, "c": 3,
              "m": int(values.shape[1]), "lo": lo, "hi": hi}
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for x in values.ravel(order="C"):
            fh.write(json.dumps(float(x)) + "\n")


def read_image_tensor(path) -> np.ndarray:
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty file", path=path, line=1)
    header = _load_json_line(lines[0], path, 1)
    if header.get("fmt") != "img":
        raise FormatError(f"not an image tensor file: fmt={header.get('fmt')!r}",
                          path=path, line=1)
    if header.get("v") != IMG_FORMAT_VERSION:
        raise FormatError(f"unsupported version {header.get('v')!r}", path=path, line=1)
    try:
        c, m = int(header["c"]), int(header["m"])
        lo, hi = float(header["lo"]), float(header["hi"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}", path=path, line=1) from exc
    if c != 3:
        raise FormatError(f"expected 3 channels, got {c}", path=path, line=1)
    expected = c * m * m
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != expected:
        raise FormatError(f"expected {expected} values, found {len(body)}", path=path)
    flat = np.empty(expected, dtype=np.float64)
    for i, line in enumerate(body):
        lineno = i + 2
        try:
            x = float(line)
        except ValueError as exc:
            raise FormatError(f"bad value {line!r}", path=path, line=lineno) from exc
        if not math.isfinite(x):
            raise FormatError(f"non-finite value {line!r}", path=path, line=lineno)
        if x < lo or x > hi:
            raise FormatError(f"value {x} outside declared range [{lo}, {hi}]",
                              path=path, line=lineno)
        flat[i] = x
    return flat.reshape((c, m, m))


# ---------------------------------------------------------------------------
# Run reports


@dataclass
class MetricRow:
    phase: str       # "phase1" | "phase2" | "eval"
    role: str        # target set role
    coverage: float  # percent
    matched: int
    total: int
    detail: str = ""  # free-form provenance (repetition, sweep value, ...)


@dataclass
class RunReport:
    seed: int
    config: dict
    metrics: list[MetricRow] = field(default_factory=list)
    histories: dict[str, list[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "metrics": [asdict(m) for m in self.metrics],
            "histories": self.histories,
        }


def write_report(report: RunReport, path, format: str = "json") -> None:
    """Write a report with stable field ordering; deterministic bytes per input."""
    if format == "json":
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    elif format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["phase", "role", "coverage", "matched", "total", "detail"])
            for m in report.metrics:
                writer.writerow([m.phase, m.role, repr(m.coverage), m.matched,
                                 m.total, m.detail])
    else:
        raise FormatError(f"unknown report format {format!r}")


def read_report(path) -> RunReport:
    path = str(path)
    with open(path) as fh:
        try:
            obj = json.load(fh, parse_constant=_reject_constant)
        except ValueError as exc:
            raise FormatError(f"malformed report: {exc}", path=path) from exc
    try:
        return RunReport(
            seed=int(obj["seed"]),
            config=obj["config"],
            metrics=[MetricRow(**m) for m in obj["metrics"]],
            histories={k: list(v) for k, v in obj["histories"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad report structure: {exc}", path=path) from exc

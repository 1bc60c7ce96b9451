"""On-disk formats: embedding files, score tables, checkpoints, reports.

The binary embedding format is little-endian throughout: a 24-byte
header (magic ``TFRA``, version, dim, count, flags) followed by fixed
width records in ascending sample-id order.  Text variants are plain
CSV with floats at 17 significant digits, enough to round-trip float64
exactly.  Label tables use 9 significant digits by contract.
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .calibration import CalibrationParams
from .errors import (
    BadMagicError,
    ConfigError,
    DuplicateSampleError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .head import RegressionHead
from .labeling import CALIBRATED_COLUMNS, RecognizabilityLabels
from .metrics import ErcCurve, EvalReport, RocCurve, TarResult
from .records import (
    ROLE_CODES,
    ROLE_FROM_CODE,
    EmbeddingRecord,
    Role,
    check_records,
    sorted_by_sample,
)
from .training import EpochStats, TrainHistory

EMBEDDINGS_MAGIC = b"TFRA"
EMBEDDINGS_VERSION = 1
FLAG_TEMPLATE_IDS = 1
FLAG_ROLES = 2
_HEADER = struct.Struct("<4sIIQI")

HEAD_MAGIC = b"TFRH"
HEAD_VERSION = 1

FLOAT_EXACT = "%.17g"
FLOAT_LABELS = "%.9g"


def _flags_for(records: Sequence[EmbeddingRecord]) -> int:
    with_template = sum(1 for r in records if r.template_id is not None)
    with_role = sum(1 for r in records if r.role is not None)
    if with_template not in (0, len(records)):
        raise ConfigError("either all records or none may carry template ids")
    if with_role not in (0, len(records)):
        raise ConfigError("either all records or none may carry roles")
    flags = 0
    if with_template:
        flags |= FLAG_TEMPLATE_IDS
    if with_role:
        flags |= FLAG_ROLES
    return flags


def _record_dtype(dim: int, flags: int) -> np.dtype:
    fields = [("subject", "<u8"), ("sample", "<u8")]
    if flags & FLAG_TEMPLATE_IDS:
        fields.append(("template", "<u8"))
    if flags & FLAG_ROLES:
        fields.append(("role", "u1"))
    fields.append(("vector", "<f8", (dim,)))
    return np.dtype(fields)


def write_embeddings(records: Sequence[EmbeddingRecord], path) -> None:
    """Write the binary embedding format (sorted by ascending sample id)."""
    dim = check_records(records)
    ordered = sorted_by_sample(records)
    flags = _flags_for(ordered)
    dtype = _record_dtype(dim, flags)
    arr = np.empty(len(ordered), dtype=dtype)
    arr["subject"] = [r.subject_id for r in ordered]
    arr["sample"] = [r.sample_id for r in ordered]
    if flags & FLAG_TEMPLATE_IDS:
        arr["template"] = [r.template_id for r in ordered]
    if flags & FLAG_ROLES:
        arr["role"] = [ROLE_CODES[r.role] for r in ordered]
    arr["vector"] = np.stack([r.vector for r in ordered])
    header = _HEADER.pack(EMBEDDINGS_MAGIC, EMBEDDINGS_VERSION, dim, len(ordered), flags)
    Path(path).write_bytes(header + arr.tobytes())


def read_embeddings(path) -> list[EmbeddingRecord]:
    """Read the binary embedding format, validating every header field."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: file shorter than the header")
    magic, version, dim, count, flags = _HEADER.unpack(data[: _HEADER.size])
    if magic != EMBEDDINGS_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != EMBEDDINGS_VERSION:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    if dim == 0 or count == 0:
        raise FormatError(f"{path}: empty dimension or record count")
    dtype = _record_dtype(dim, flags)
    expected = count * dtype.itemsize
    payload = data[_HEADER.size :]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload)} bytes, header announces {expected}"
        )
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes")
    arr = np.frombuffer(payload, dtype=dtype, count=count)

    samples = arr["sample"].astype(np.int64)
    diffs = np.diff(samples)
    if np.any(diffs == 0):
        raise DuplicateSampleError(f"{path}: duplicate sample ids")
    if np.any(diffs < 0):
        raise FormatError(f"{path}: records not in ascending sample-id order")

    has_template = bool(flags & FLAG_TEMPLATE_IDS)
    has_role = bool(flags & FLAG_ROLES)
    records = []
    for i in range(count):
        role = None
        if has_role:
            code = int(arr["role"][i])
            if code not in ROLE_FROM_CODE:
                raise FormatError(f"{path}: unknown role code {code}")
            role = ROLE_FROM_CODE[code]
        records.append(
            EmbeddingRecord(
                subject_id=int(arr["subject"][i]),
                sample_id=int(samples[i]),
                vector=np.array(arr["vector"][i], dtype=np.float64),
                template_id=int(arr["template"][i]) if has_template else None,
                role=role,
            )
        )
    return records


def write_embeddings_text(records: Sequence[EmbeddingRecord], path) -> None:
    """CSV variant: subject_id, sample_id, template_id, role, v0..v{d-1}."""
    dim = check_records(records)
    ordered = sorted_by_sample(records)
    _flags_for(ordered)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["subject_id", "sample_id", "template_id", "role"]
            + [f"v{i}" for i in range(dim)]
        )
        for r in ordered:
            writer.writerow(
                [
                    r.subject_id,
                    r.sample_id,
                    "" if r.template_id is None else r.template_id,
                    "" if r.role is None else r.role.value,
                ]
                + [FLOAT_EXACT % v for v in r.vector]
            )


def read_embeddings_text(path) -> list[EmbeddingRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header[:4] != ["subject_id", "sample_id", "template_id", "role"]:
            raise FormatError(f"{path}: unexpected header {header[:4]}")
        dim = len(header) - 4
        if dim <= 0:
            raise FormatError(f"{path}: no vector columns")
        records = []
        last_sample = None
        for line, row in enumerate(reader, start=2):
            if len(row) != 4 + dim:
                raise FormatError(f"{path}:{line}: expected {4 + dim} fields, got {len(row)}")
            sample_id = int(row[1])
            if last_sample is not None:
                if sample_id == last_sample:
                    raise DuplicateSampleError(f"{path}:{line}: duplicate sample id")
                if sample_id < last_sample:
                    raise FormatError(f"{path}:{line}: records not in ascending order")
            last_sample = sample_id
            records.append(
                EmbeddingRecord(
                    subject_id=int(row[0]),
                    sample_id=sample_id,
                    vector=np.array([float(v) for v in row[4:]], dtype=np.float64),
                    template_id=int(row[2]) if row[2] else None,
                    role=Role(row[3]) if row[3] else None,
                )
            )
    if not records:
        raise FormatError(f"{path}: no records")
    return records


LABEL_BASE_COLUMNS = (
    "sample_id",
    "subject_id",
    "ccs",
    "nnccs",
    "ccas",
    "cr",
    "nearest_impostor",
)


def write_labels(labels: RecognizabilityLabels, path) -> None:
    """Label table at 9 significant digits, calibrated columns when present."""
    columns = list(LABEL_BASE_COLUMNS)
    if labels.has_calibrated:
        columns += list(CALIBRATED_COLUMNS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for i in range(len(labels)):
            row = [
                int(labels.sample_ids[i]),
                int(labels.subject_ids[i]),
                FLOAT_LABELS % labels.ccs[i],
                FLOAT_LABELS % labels.nnccs[i],
                FLOAT_LABELS % labels.ccas[i],
                FLOAT_LABELS % labels.cr[i],
                int(labels.nearest_impostor[i]),
            ]
            if labels.has_calibrated:
                row += [
                    FLOAT_LABELS % labels.calibrated_ccs[i],
                    FLOAT_LABELS % labels.calibrated_nnccs[i],
                    FLOAT_LABELS % labels.calibrated_ccas[i],
                ]
            writer.writerow(row)


def read_labels(path) -> RecognizabilityLabels:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        base = list(LABEL_BASE_COLUMNS)
        calibrated = header == base + list(CALIBRATED_COLUMNS)
        if header != base and not calibrated:
            raise FormatError(f"{path}: unexpected label columns {header}")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{path}: no label rows")
    sample_ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    if np.any(np.diff(sample_ids) <= 0):
        raise FormatError(f"{path}: label rows not in ascending sample-id order")

    def col(idx):
        return np.array([float(r[idx]) for r in rows])

    return RecognizabilityLabels(
        sample_ids=sample_ids,
        subject_ids=np.array([int(r[1]) for r in rows], dtype=np.int64),
        ccs=col(2),
        nnccs=col(3),
        ccas=col(4),
        cr=col(5),
        nearest_impostor=np.array([int(r[6]) for r in rows], dtype=np.int64),
        calibrated_ccs=col(7) if calibrated else None,
        calibrated_nnccs=col(8) if calibrated else None,
        calibrated_ccas=col(9) if calibrated else None,
    )


@dataclass(frozen=True, eq=False)
class PredictionTable:
    """Predicted scores keyed by sample id; columns like ``pred_ccs``."""

    sample_ids: np.ndarray
    columns: dict[str, np.ndarray]

    def score_map(self) -> dict[int, dict[str, float]]:
        """Mapping sample id -> score kind -> value (``pred_`` stripped)."""
        out: dict[int, dict[str, float]] = {}
        for i, sid in enumerate(self.sample_ids):
            out[int(sid)] = {
                name.removeprefix("pred_"): float(values[i])
                for name, values in self.columns.items()
            }
        return out


PREDICTION_COLUMNS = {
    "joint": ("pred_ccs", "pred_ccas"),
    "ccs_only": ("pred_ccs",),
    "ccas_only": ("pred_ccas",),
    "cr_only": ("pred_cr",),
}


def prediction_table(
    sample_ids: Sequence[int], scores: np.ndarray, label_mode: str = "joint"
) -> PredictionTable:
    names = PREDICTION_COLUMNS.get(label_mode)
    if names is None:
        raise ConfigError(f"unknown label_mode {label_mode!r}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores.reshape(-1, 1)
    if scores.shape[1] != len(names):
        raise ConfigError(
            f"{label_mode} predictions need {len(names)} columns, got {scores.shape[1]}"
        )
    ids = np.asarray(sample_ids, dtype=np.int64)
    order = np.argsort(ids, kind="stable")
    return PredictionTable(
        sample_ids=ids[order],
        columns={name: scores[order, i].copy() for i, name in enumerate(names)},
    )


def write_predictions(table: PredictionTable, path) -> None:
    names = list(table.columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id"] + names)
        for i, sid in enumerate(table.sample_ids):
            writer.writerow(
                [int(sid)] + [FLOAT_EXACT % table.columns[n][i] for n in names]
            )


def read_predictions(path) -> PredictionTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "sample_id":
            raise FormatError(f"{path}: first column must be sample_id")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{path}: no prediction rows")
    sample_ids = np.array([int(r[0]) for r in rows], dtype=np.int64)
    columns = {
        name: np.array([float(r[i + 1]) for r in rows])
        for i, name in enumerate(header[1:])
    }
    return PredictionTable(sample_ids=sample_ids, columns=columns)


def save_head(head: RegressionHead, path) -> None:
    """Versioned binary checkpoint: magic, dims, then per-layer W and b."""
    buf = _io.BytesIO()
    buf.write(HEAD_MAGIC)
    buf.write(struct.pack("<I", HEAD_VERSION))
    buf.write(struct.pack("<I", len(head.layer_dims)))
    buf.write(struct.pack(f"<{len(head.layer_dims)}I", *head.layer_dims))
    for w, b in zip(head.weights, head.biases):
        buf.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_head(path) -> RegressionHead:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise TruncatedPayloadError(f"{path}: file shorter than the header")
    if data[:4] != HEAD_MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack("<I", data[4:8])
    if version != HEAD_VERSION:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    (n_dims,) = struct.unpack("<I", data[8:12])
    if n_dims < 2:
        raise FormatError(f"{path}: head needs at least two layer dims")
    offset = 12 + 4 * n_dims
    if len(data) < offset:
        raise TruncatedPayloadError(f"{path}: truncated dims table")
    dims = struct.unpack(f"<{n_dims}I", data[12:offset])
    expected = sum(8 * (i * o + o) for i, o in zip(dims[:-1], dims[1:]))
    payload = data[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"{path}: truncated parameter payload")
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes")
    weights = []
    biases = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w_bytes = 8 * fan_in * fan_out
        weights.append(
            np.frombuffer(payload, dtype="<f8", count=fan_in * fan_out, offset=pos)
            .reshape(fan_in, fan_out)
            .astype(np.float64)
        )
        pos += w_bytes
        biases.append(
            np.frombuffer(payload, dtype="<f8", count=fan_out, offset=pos).astype(
                np.float64
            )
        )
        pos += 8 * fan_out
    return RegressionHead(layer_dims=tuple(int(d) for d in dims), weights=weights, biases=biases)


def write_history(history: TrainHistory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "validation_spearman", "best"])
        for stats in history.epochs:
            writer.writerow(
                [
                    stats.epoch,
                    FLOAT_EXACT % stats.train_loss,
                    FLOAT_EXACT % stats.validation_spearman,
                    1 if stats.epoch == history.best_epoch else 0,
                ]
            )


def read_history(path) -> TrainHistory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["epoch", "train_loss", "validation_spearman", "best"]:
            raise FormatError(f"{path}: unexpected history columns {header}")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{path}: no history rows")
    stats = tuple(
        EpochStats(
            epoch=int(r[0]), train_loss=float(r[1]), validation_spearman=float(r[2])
        )
        for r in rows
    )
    best = [int(r[0]) for r in rows if r[3] == "1"]
    if len(best) != 1:
        raise FormatError(f"{path}: exactly one row must be marked best")
    return TrainHistory(epochs=stats, best_epoch=best[0])


def write_truth(quality: Mapping[int, float], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "true_quality"])
        for sid in sorted(quality):
            writer.writerow([int(sid), FLOAT_EXACT % quality[sid]])


def read_truth(path) -> dict[int, float]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "true_quality"]:
            raise FormatError(f"{path}: unexpected truth columns {header}")
        return {int(r[0]): float(r[1]) for r in reader}


def write_template_sidecar(templates, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["template_id", "subject_id", "retained_count", "discarded_count", "fallback_used"]
        )
        for t in sorted(templates, key=lambda t: t.template_id):
            writer.writerow(
                [
                    t.template_id,
                    t.subject_id,
                    t.retained_count,
                    t.discarded_count,
                    1 if t.fallback_used else 0,
                ]
            )


def write_calibration(params: CalibrationParams, path) -> None:
    write_json(
        {"offset": params.offset, "scale": params.scale, "brier": params.brier}, path
    )


def read_calibration(path) -> CalibrationParams:
    doc = read_json(path)
    try:
        return CalibrationParams(
            offset=float(doc["offset"]), scale=float(doc["scale"]), brier=float(doc["brier"])
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing calibration field {exc}") from None


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _decimate(values: np.ndarray, max_points: int) -> np.ndarray:
    if values.shape[0] <= max_points:
        return values
    idx = np.linspace(0, values.shape[0] - 1, max_points).round().astype(int)
    return values[np.unique(idx)]


def roc_to_doc(roc: RocCurve, max_points: int = 101) -> dict:
    idx = np.arange(len(roc))
    idx = _decimate(idx, max_points)
    return {
        "thresholds": roc.thresholds[idx].tolist(),
        "fmr": roc.fmr[idx].tolist(),
        "tar": roc.tar[idx].tolist(),
    }


def tar_to_doc(result: TarResult) -> dict:
    return {
        "target_fmr": result.target_fmr,
        "tar": result.tar,
        "threshold": result.threshold,
        "achieved_fmr": result.achieved_fmr,
        "resolution_warning": result.resolution_warning,
    }


def erc_to_doc(curve: ErcCurve) -> dict:
    return {
        "target_fmr": curve.target_fmr,
        "fixed_threshold": curve.fixed_threshold,
        "auc": curve.auc,
        "truncated": curve.truncated,
        "points": [[float(r), float(f)] for r, f in curve.points],
    }


def report_to_doc(report: EvalReport, kind: str, max_roc_points: int = 101) -> dict:
    doc: dict = {"kind": kind, "config": dict(report.config)}
    if report.tar_results:
        doc["tar_at_fmr"] = [tar_to_doc(t) for t in report.tar_results]
    if report.roc is not None:
        doc["roc"] = roc_to_doc(report.roc, max_roc_points)
    if report.erc_curves:
        doc["erc"] = [erc_to_doc(c) for c in report.erc_curves]
    if report.spearman:
        doc["spearman"] = dict(report.spearman)
    if report.conditions is not None:
        doc["conditions"] = {
            label: {
                "mean_gt_ccs": s.mean_gt_ccs,
                "mean_pred_ccs": s.mean_pred_ccs,
                "sc_ccs": s.sc_ccs,
                "mean_gt_ccas": s.mean_gt_ccas,
                "mean_pred_ccas": s.mean_pred_ccas,
                "sc_ccas": s.sc_ccas,
            }
            for label, s in report.conditions.items()
        }
    return doc


def render_report_text(docs: Sequence[tuple[str, dict]]) -> str:
    """Plain-text rendering of (name, document) evaluation results."""
    lines: list[str] = []
    for name, doc in docs:
        lines.append(f"== {name} ({doc.get('kind', 'unknown')}) ==")
        for row in doc.get("tar_at_fmr", []):
            lines.append(
                "tar@fmr target={target_fmr:.3g} tar={tar:.6f} threshold={threshold:.9g}"
                " achieved={achieved_fmr:.3g} warning={resolution_warning}".format(**row)
            )
        for curve in doc.get("erc", []):
            lines.append(
                "erc target_fmr={target_fmr:.3g} threshold={fixed_threshold:.9g}"
                " auc={auc:.6f} truncated={truncated}".format(**curve)
            )
            for r, f in curve.get("points", []):
                lines.append(f"  discard={r:.4f} fnmr={f:.6f}")
        for key, value in sorted(doc.get("spearman", {}).items()):
            rendered = "undefined" if value is None else f"{value:.6f}"
            lines.append(f"spearman {key}={rendered}")
        for label, row in sorted(doc.get("conditions", {}).items()):
            lines.append(
                f"condition {label}: gt_ccs={row['mean_gt_ccs']:.6f}"
                f" pred_ccs={row['mean_pred_ccs']:.6f} sc_ccs={row['sc_ccs']}"
                f" gt_ccas={row['mean_gt_ccas']:.6f}"
                f" pred_ccas={row['mean_pred_ccas']:.6f} sc_ccas={row['sc_ccas']}"
            )
        lines.append("")
    return "\n".join(lines)

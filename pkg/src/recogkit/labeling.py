"""Recognizability labels derived from embeddings and class centers.

A sample's recognizability is measured against the center of its own
identity (CCS), against the most confusable other identity (NNCCS), and
by their difference (CCAS).  CCAS > 0 means the embedding sits strictly
closer, in cosine terms, to its own class center than to any impostor
center.  The certainty ratio CR = CCS / (NNCCS + 1 + eps) is kept as a
baseline confidence measure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, MissingCenterError, NoImpostorError
from .records import EmbeddingRecord, Role, check_records, sorted_by_sample
from .validation import as_vector, check_same_dim

CR_EPSILON = 1e-9

CENTER_MODES = ("gallery_only", "full_set")

LABEL_COLUMNS = ("ccs", "nnccs", "ccas", "cr")
CALIBRATED_COLUMNS = ("calibrated_ccs", "calibrated_nnccs", "calibrated_ccas")


@dataclass(frozen=True, eq=False)
class ClassCenterSet:
    """Per-subject mean embeddings with contribution counts.

    Centers are stored as plain arithmetic means; cosine normalization
    happens at comparison time.
    """

    mode: str
    vectors: Mapping[int, np.ndarray]
    counts: Mapping[int, int]

    def __post_init__(self):
        if self.mode not in CENTER_MODES:
            raise ConfigError(f"unknown center mode {self.mode!r}")

    def __contains__(self, subject_id: int) -> bool:
        return subject_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def subjects(self) -> tuple[int, ...]:
        return tuple(sorted(self.vectors))

    def center(self, subject_id: int) -> np.ndarray:
        try:
            return self.vectors[subject_id]
        except KeyError:
            raise MissingCenterError(f"no class center for subject {subject_id}") from None

    def count(self, subject_id: int) -> int:
        self.center(subject_id)
        return self.counts[subject_id]

    def as_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (subject ids ascending, centers stacked in that order)."""
        subjects = np.array(self.subjects, dtype=np.int64)
        matrix = np.stack([self.vectors[int(s)] for s in subjects])
        return subjects, matrix


def compute_class_centers(
    records: Sequence[EmbeddingRecord], mode: str = "gallery_only"
) -> ClassCenterSet:
    """Average embeddings per subject.

    In ``gallery_only`` mode, only gallery-role records contribute and
    every subject referenced by a probe must have at least one gallery
    record.  In ``full_set`` mode every record contributes.
    """
    if mode not in CENTER_MODES:
        raise ConfigError(f"unknown center mode {mode!r}")
    check_records(records)

    if mode == "gallery_only":
        for rec in records:
            if rec.role is None:
                raise ConfigError(
                    f"gallery_only centers need roles; sample {rec.sample_id} has none"
                )
        contributing = [r for r in records if r.role is Role.GALLERY]
    else:
        contributing = list(records)

    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for rec in contributing:
        if rec.subject_id in sums:
            sums[rec.subject_id] = sums[rec.subject_id] + rec.vector
            counts[rec.subject_id] += 1
        else:
            sums[rec.subject_id] = rec.vector.copy()
            counts[rec.subject_id] = 1

    if mode == "gallery_only":
        needed = sorted({r.subject_id for r in records if r.role is Role.PROBE})
        for subject in needed:
            if subject not in sums:
                raise MissingCenterError(
                    f"subject {subject} has probe records but no gallery records"
                )
    if not sums:
        raise MissingCenterError("no contributing records for any subject")

    vectors = {s: sums[s] / counts[s] for s in sums}
    return ClassCenterSet(mode=mode, vectors=vectors, counts=dict(counts))


def ccs(z, center) -> float:
    """Cosine similarity between an embedding and its class center."""
    zv = as_vector(z, "embedding")
    cv = as_vector(center, "center")
    check_same_dim(zv.shape[0], cv.shape[0], "center")
    return float(np.dot(zv, cv) / (np.linalg.norm(zv) * np.linalg.norm(cv)))


def nnccs(z, centers: ClassCenterSet, own: int) -> tuple[float, int]:
    """Maximum cosine similarity to any other subject's center.

    Returns the similarity and the arg-max subject.  Exact ties resolve
    to the smallest subject id.
    """
    zv = as_vector(z, "embedding")
    centers.center(own)
    if len(centers) < 2:
        raise NoImpostorError("need at least two subjects to find an impostor center")
    best = -np.inf
    best_subject = None
    for subject in centers.subjects:
        if subject == own:
            continue
        value = ccs(zv, centers.vectors[subject])
        if value > best:
            best = value
            best_subject = subject
    return best, int(best_subject)


def certainty_ratio(ccs_value: float, nnccs_value: float) -> float:
    """Baseline confidence ratio CCS / (NNCCS + 1 + eps)."""
    if not nnccs_value > -1.0:
        raise ValueError(f"nnccs must exceed -1, got {nnccs_value!r}")
    return float(ccs_value) / (float(nnccs_value) + 1.0 + CR_EPSILON)


@dataclass(frozen=True, eq=False)
class RecognizabilityLabels:
    """Per-sample recognizability labels, ordered by ascending sample id."""

    sample_ids: np.ndarray
    subject_ids: np.ndarray
    ccs: np.ndarray
    nnccs: np.ndarray
    ccas: np.ndarray
    cr: np.ndarray
    nearest_impostor: np.ndarray
    calibrated_ccs: np.ndarray | None = None
    calibrated_nnccs: np.ndarray | None = None
    calibrated_ccas: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.sample_ids.shape[0])

    @property
    def has_calibrated(self) -> bool:
        return self.calibrated_ccs is not None

    def column(self, name: str) -> np.ndarray:
        value = getattr(self, name, None)
        if value is None:
            raise ConfigError(f"labels have no column {name!r}")
        return value

    def index_of(self, sample_id: int) -> int:
        idx = int(np.searchsorted(self.sample_ids, sample_id))
        if idx >= len(self) or self.sample_ids[idx] != sample_id:
            raise KeyError(f"no labels for sample {sample_id}")
        return idx

    def indices_for(self, sample_ids) -> np.ndarray:
        """Label row indices aligned to the given sample ids."""
        wanted = np.asarray(sample_ids, dtype=np.int64)
        idx = np.searchsorted(self.sample_ids, wanted)
        bad = (idx >= len(self)) | (self.sample_ids[np.minimum(idx, len(self) - 1)] != wanted)
        if np.any(bad):
            missing = wanted[bad][0]
            raise KeyError(f"no labels for sample {missing}")
        return idx

    def with_calibrated(
        self, calibrated_ccs: np.ndarray, calibrated_nnccs: np.ndarray
    ) -> "RecognizabilityLabels":
        return replace(
            self,
            calibrated_ccs=calibrated_ccs,
            calibrated_nnccs=calibrated_nnccs,
            calibrated_ccas=calibrated_ccs - calibrated_nnccs,
        )


def label_dataset(
    records: Sequence[EmbeddingRecord], centers: ClassCenterSet
) -> RecognizabilityLabels:
    """Compute CCS/NNCCS/CCAS/CR and the nearest impostor for every record.

    Deterministic given its inputs; output rows are ordered by sample id.
    """
    dim = check_records(records)
    ordered = sorted_by_sample(records)
    if len(centers) < 2:
        raise NoImpostorError("need at least two class centers to label a dataset")

    center_subjects, center_matrix = centers.as_matrix()
    check_same_dim(dim, center_matrix.shape[1], "class centers")

    own_idx = np.searchsorted(center_subjects, [r.subject_id for r in ordered])
    own_idx = np.minimum(own_idx, len(center_subjects) - 1)
    for rec, idx in zip(ordered, own_idx):
        if center_subjects[idx] != rec.subject_id:
            raise MissingCenterError(
                f"no class center for subject {rec.subject_id} (sample {rec.sample_id})"
            )

    z = np.stack([r.vector for r in ordered])
    z_unit = z / np.linalg.norm(z, axis=1, keepdims=True)
    c_unit = center_matrix / np.linalg.norm(center_matrix, axis=1, keepdims=True)
    cosines = z_unit @ c_unit.T

    n = len(ordered)
    rows = np.arange(n)
    ccs_values = cosines[rows, own_idx]
    masked = cosines.copy()
    masked[rows, own_idx] = -np.inf
    nearest_idx = np.argmax(masked, axis=1)
    nnccs_values = masked[rows, nearest_idx]
    nearest = center_subjects[nearest_idx]

    ccas_values = ccs_values - nnccs_values
    cr_values = ccs_values / (nnccs_values + 1.0 + CR_EPSILON)

    return RecognizabilityLabels(
        sample_ids=np.array([r.sample_id for r in ordered], dtype=np.int64),
        subject_ids=np.array([r.subject_id for r in ordered], dtype=np.int64),
        ccs=ccs_values,
        nnccs=nnccs_values,
        ccas=ccas_values,
        cr=cr_values,
        nearest_impostor=nearest.astype(np.int64),
    )

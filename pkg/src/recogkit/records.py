"""Embedding records and dataset-level consistency checks."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, DuplicateSampleError, RecogkitError
from .validation import as_vector


class Role(str, enum.Enum):
    """Side of the enrollment/query split a record belongs to."""

    GALLERY = "gallery"
    PROBE = "probe"
    DERIVED_TEMPLATE = "derived_template"


ROLE_CODES = {Role.GALLERY: 0, Role.PROBE: 1, Role.DERIVED_TEMPLATE: 2}
ROLE_FROM_CODE = {code: role for role, code in ROLE_CODES.items()}


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One sample: identity and template keys plus its embedding vector.

    The vector is coerced to float64 and must be finite with nonzero norm.
    """

    subject_id: int
    sample_id: int
    vector: np.ndarray
    template_id: int | None = None
    role: Role | None = None

    def __post_init__(self):
        object.__setattr__(self, "subject_id", int(self.subject_id))
        object.__setattr__(self, "sample_id", int(self.sample_id))
        if self.template_id is not None:
            object.__setattr__(self, "template_id", int(self.template_id))
        if self.role is not None and not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(
            self, "vector", as_vector(self.vector, f"vector of sample {self.sample_id}")
        )

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def check_records(records: Sequence[EmbeddingRecord]) -> int:
    """Validate a dataset and return its embedding dimension.

    Enforces: non-empty, one shared dimension, unique sample ids.
    """
    if not records:
        raise RecogkitError("dataset contains no records")
    dim = records[0].dim
    seen: set[int] = set()
    for rec in records:
        if rec.dim != dim:
            raise DimensionMismatchError(
                f"sample {rec.sample_id} has dimension {rec.dim}, expected {dim}"
            )
        if rec.sample_id in seen:
            raise DuplicateSampleError(f"duplicate sample_id {rec.sample_id}")
        seen.add(rec.sample_id)
    return dim


def sorted_by_sample(records: Iterable[EmbeddingRecord]) -> list[EmbeddingRecord]:
    return sorted(records, key=lambda r: r.sample_id)


def stack_vectors(records: Sequence[EmbeddingRecord]) -> np.ndarray:
    """Stack record vectors into an (n, d) float64 matrix in input order."""
    return np.stack([r.vector for r in records])


def subject_ids(records: Sequence[EmbeddingRecord]) -> np.ndarray:
    return np.array([r.subject_id for r in records], dtype=np.int64)


def sample_ids(records: Sequence[EmbeddingRecord]) -> np.ndarray:
    return np.array([r.sample_id for r in records], dtype=np.int64)

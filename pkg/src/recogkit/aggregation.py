"""Template construction from per-sample embeddings and scores.

A policy optionally filters a template's samples by one score kind
(strict cutoff) and then pools the survivors, either uniformly or
weighted by another score kind.  A template emptied by filtering falls
back to the uniform mean over all of its original samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptyTemplateError, MissingScoreError
from .labeling import RecognizabilityLabels
from .records import EmbeddingRecord, Role
from .validation import check_positive

SCORE_KINDS = ("ccs", "ccas", "cr", "calibrated_ccas")

#: policy name -> (filter score kind or None, weight score kind or None)
POLICY_TABLE = {
    "average": (None, None),
    "ccs_weight": (None, "ccs"),
    "ccas_filter": ("ccas", None),
    "ccas_filter_plus_ccs_weight": ("ccas", "ccs"),
    "ccas_weight": (None, "ccas"),
    "cr_weight": (None, "cr"),
    "cr_filter_0_5": ("cr", None),
    "cr_filter_plus_weight": ("cr", "cr"),
    "calibrated_ccas_filter": ("calibrated_ccas", None),
    "calibrated_ccas_weight": (None, "calibrated_ccas"),
    "calibrated_ccas_filter_plus_weight": ("calibrated_ccas", "calibrated_ccas"),
}

POLICY_NAMES = tuple(POLICY_TABLE)

#: default strict cutoff per filtering score kind
DEFAULT_CUTOFFS = {"ccas": 0.0, "calibrated_ccas": 0.0, "cr": 0.5, "ccs": 0.0}

DEFAULT_WEIGHT_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class ScoredSample:
    """A sample's embedding plus whichever scores a policy may consume."""

    sample_id: int
    subject_id: int
    template_id: int
    embedding: np.ndarray
    ccs_score: float | None = None
    ccas_score: float | None = None
    cr_score: float | None = None
    calibrated_ccas_score: float | None = None

    def score(self, kind: str) -> float:
        if kind not in SCORE_KINDS:
            raise ConfigError(f"unknown score kind {kind!r}")
        value = getattr(self, f"{kind}_score")
        if value is None:
            raise MissingScoreError(f"sample {self.sample_id} has no {kind} score")
        if not np.isfinite(value):
            raise MissingScoreError(f"sample {self.sample_id} has non-finite {kind} score")
        return float(value)


@dataclass(frozen=True)
class AggregationPolicy:
    """Named filter/weight combination with its cutoff and weight floor."""

    name: str
    cutoff: float | None = None
    weight_floor: float = DEFAULT_WEIGHT_FLOOR

    def __post_init__(self):
        if self.name not in POLICY_TABLE:
            raise ConfigError(
                f"unknown policy {self.name!r}; choose one of {', '.join(POLICY_NAMES)}"
            )
        check_positive(self.weight_floor, "weight_floor")
        if self.cutoff is not None and not np.isfinite(self.cutoff):
            raise ConfigError("cutoff must be finite")

    @property
    def filter_kind(self) -> str | None:
        return POLICY_TABLE[self.name][0]

    @property
    def weight_kind(self) -> str | None:
        return POLICY_TABLE[self.name][1]

    @property
    def resolved_cutoff(self) -> float | None:
        if self.filter_kind is None:
            return None
        if self.cutoff is not None:
            return float(self.cutoff)
        return DEFAULT_CUTOFFS[self.filter_kind]


@dataclass(frozen=True, eq=False)
class TemplateVector:
    """Aggregated representation of one template."""

    template_id: int
    subject_id: int
    vector: np.ndarray
    retained_count: int
    discarded_count: int
    fallback_used: bool = False

    @property
    def size(self) -> int:
        return self.retained_count + self.discarded_count


def filter_by_score(
    samples: Sequence[ScoredSample], score_kind: str, cutoff: float
) -> tuple[list[ScoredSample], list[ScoredSample]]:
    """Partition samples into (strictly above cutoff, rest), keeping order."""
    retained: list[ScoredSample] = []
    discarded: list[ScoredSample] = []
    for sample in samples:
        if sample.score(score_kind) > cutoff:
            retained.append(sample)
        else:
            discarded.append(sample)
    return retained, discarded


def weighted_aggregate(
    samples: Sequence[ScoredSample],
    weights: Sequence[float],
    weight_floor: float = DEFAULT_WEIGHT_FLOOR,
) -> np.ndarray:
    """Weighted mean of sample embeddings, sum(w z) / sum(w).

    Weights are floored at ``weight_floor`` and then divided by their
    maximum, so an all-equal weighting reduces to the exact uniform mean
    and any positive rescaling of the weights leaves the result
    unchanged up to rounding.
    """
    if len(samples) == 0:
        raise EmptyTemplateError("cannot aggregate an empty sample set")
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != len(samples):
        raise ConfigError("weights must be a 1-d sequence matching the samples")
    if not np.all(np.isfinite(w)):
        raise ConfigError("weights must be finite")
    check_positive(weight_floor, "weight_floor")
    w = np.maximum(w, weight_floor)
    w = w / w.max()
    matrix = np.stack([s.embedding for s in samples])
    return (w[:, None] * matrix).sum(axis=0) / w.sum()


def _template_groups(samples: Sequence[ScoredSample]) -> dict[int, list[ScoredSample]]:
    groups: dict[int, list[ScoredSample]] = {}
    for sample in samples:
        groups.setdefault(sample.template_id, []).append(sample)
    for template_id, members in groups.items():
        members.sort(key=lambda s: s.sample_id)
        subjects = {s.subject_id for s in members}
        if len(subjects) != 1:
            raise ConfigError(
                f"template {template_id} mixes subjects {sorted(subjects)}"
            )
    return groups


def aggregate_templates(
    samples: Sequence[ScoredSample], policy: AggregationPolicy
) -> list[TemplateVector]:
    """Apply a policy to every template and return one vector per template.

    Samples are grouped by template id and pooled in ascending sample id
    order, so the result does not depend on the input ordering.  If the
    policy's filter removes every sample of a template, the template
    falls back to the uniform mean over all of its samples and the
    output flags ``fallback_used``.
    """
    if not samples:
        raise EmptyTemplateError("no samples to aggregate")
    groups = _template_groups(samples)

    results: list[TemplateVector] = []
    for template_id in sorted(groups):
        members = groups[template_id]
        if policy.filter_kind is not None:
            retained, discarded = filter_by_score(
                members, policy.filter_kind, policy.resolved_cutoff
            )
        else:
            retained, discarded = list(members), []

        fallback = not retained
        pool = members if fallback else retained
        if policy.weight_kind is None or fallback:
            weights = np.ones(len(pool))
        else:
            weights = np.array([s.score(policy.weight_kind) for s in pool])
        vector = weighted_aggregate(pool, weights, policy.weight_floor)
        results.append(
            TemplateVector(
                template_id=template_id,
                subject_id=pool[0].subject_id,
                vector=vector,
                retained_count=len(retained),
                discarded_count=len(discarded),
                fallback_used=fallback,
            )
        )
    return results


def scored_from_labels(
    records: Sequence[EmbeddingRecord], labels: RecognizabilityLabels
) -> list[ScoredSample]:
    """Attach ground-truth label scores to records for aggregation."""
    idx = labels.indices_for([r.sample_id for r in records])
    calibrated = labels.calibrated_ccas
    out: list[ScoredSample] = []
    for rec, i in zip(records, idx):
        if rec.template_id is None:
            raise ConfigError(f"sample {rec.sample_id} has no template id")
        out.append(
            ScoredSample(
                sample_id=rec.sample_id,
                subject_id=rec.subject_id,
                template_id=rec.template_id,
                embedding=rec.vector,
                ccs_score=float(labels.ccs[i]),
                ccas_score=float(labels.ccas[i]),
                cr_score=float(labels.cr[i]),
                calibrated_ccas_score=float(calibrated[i]) if calibrated is not None else None,
            )
        )
    return out


def scored_from_predictions(
    records: Sequence[EmbeddingRecord], scores: Mapping[int, Mapping[str, float]]
) -> list[ScoredSample]:
    """Attach predicted scores (mapping sample id -> kind -> value)."""
    out: list[ScoredSample] = []
    for rec in records:
        if rec.template_id is None:
            raise ConfigError(f"sample {rec.sample_id} has no template id")
        if rec.sample_id not in scores:
            raise MissingScoreError(f"no predicted scores for sample {rec.sample_id}")
        row = scores[rec.sample_id]
        out.append(
            ScoredSample(
                sample_id=rec.sample_id,
                subject_id=rec.subject_id,
                template_id=rec.template_id,
                embedding=rec.vector,
                ccs_score=row.get("ccs"),
                ccas_score=row.get("ccas"),
                cr_score=row.get("cr"),
                calibrated_ccas_score=row.get("calibrated_ccas"),
            )
        )
    return out


def templates_as_records(templates: Sequence[TemplateVector]) -> list[EmbeddingRecord]:
    """Re-expose template vectors as derived-template records for storage."""
    return [
        EmbeddingRecord(
            subject_id=t.subject_id,
            sample_id=t.template_id,
            vector=t.vector,
            template_id=t.template_id,
            role=Role.DERIVED_TEMPLATE,
        )
        for t in templates
    ]

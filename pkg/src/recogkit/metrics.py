"""Verification and rank-agreement metrics.

Covers genuine/impostor score enumeration, ROC and TAR at a fixed
false-match rate, error-versus-reject curves, tie-aware Spearman
correlation and per-condition summary reports.  Thresholds accept
scores greater than or equal to themselves and are taken from the
empirical score distribution without interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    MissingCenterError,
    MissingScoreError,
    NoImpostorError,
    PairingError,
    UndefinedCorrelationError,
)
from .labeling import ClassCenterSet
from .validation import check_unit_interval


@dataclass(frozen=True, eq=False)
class ScorePair:
    """One genuine or impostor comparison score.

    ``probe_id`` tracks the probe-side item (sample or template id) and
    ``quality`` optionally carries that item's quality score for
    reject-curve analysis.
    """

    score: float
    genuine: bool
    probe_id: int | None = None
    quality: float | None = None


@dataclass(frozen=True)
class TarResult:
    """TAR at a fixed target FMR together with the operating threshold."""

    tar: float
    threshold: float
    target_fmr: float
    achieved_fmr: float
    resolution_warning: bool = False


@dataclass(frozen=True, eq=False)
class RocCurve:
    """TAR/FMR swept over every distinct score threshold (ascending)."""

    thresholds: np.ndarray
    fmr: np.ndarray
    tar: np.ndarray

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])


@dataclass(frozen=True, eq=False)
class ErcCurve:
    """FNMR at a fixed threshold as lowest-quality genuine pairs are dropped."""

    target_fmr: float
    fixed_threshold: float
    discard_fractions: np.ndarray
    fnmr: np.ndarray
    auc: float
    truncated: bool = False

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.discard_fractions.tolist(), self.fnmr.tolist()))


@dataclass(frozen=True)
class ConditionSummary:
    """Ground-truth/predicted means and their rank agreement for one condition."""

    mean_gt_ccs: float
    mean_pred_ccs: float
    sc_ccs: float | None
    mean_gt_ccas: float
    mean_pred_ccas: float
    sc_ccas: float | None

    @property
    def undefined(self) -> bool:
        return self.sc_ccs is None or self.sc_ccas is None


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Container for one evaluation run's metric outputs."""

    config: dict = field(default_factory=dict)
    roc: RocCurve | None = None
    tar_results: tuple[TarResult, ...] = ()
    erc_curves: tuple[ErcCurve, ...] = ()
    spearman: dict = field(default_factory=dict)
    conditions: dict | None = None


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def _item_key(item) -> int | None:
    for attr in ("template_id", "sample_id"):
        value = getattr(item, attr, None)
        if value is not None:
            return int(value)
    return None


def verification_scores(gallery: Sequence, probe: Sequence) -> list[ScorePair]:
    """All cross-side comparison scores between two item lists.

    Items need ``subject_id`` and ``vector`` attributes (embedding
    records and template vectors both qualify).  Pairs of matching
    subjects are genuine, all others impostor.  Every subject must
    appear on both sides.
    """
    if not gallery or not probe:
        raise PairingError("both sides of the pairing must be non-empty")
    gallery_subjects = {item.subject_id for item in gallery}
    probe_subjects = {item.subject_id for item in probe}
    subjects = gallery_subjects | probe_subjects
    if len(subjects) < 2:
        raise NoImpostorError("verification needs at least two subjects")
    for subject in sorted(subjects):
        if subject not in gallery_subjects:
            raise PairingError(f"subject {subject} has no gallery-side item")
        if subject not in probe_subjects:
            raise PairingError(f"subject {subject} has no probe-side item")

    g_sorted = sorted(enumerate(gallery), key=lambda t: (t[1].subject_id, t[0]))
    p_sorted = sorted(enumerate(probe), key=lambda t: (t[1].subject_id, t[0]))
    pairs: list[ScorePair] = []
    for _, g in g_sorted:
        for p_pos, p in p_sorted:
            key = _item_key(p)
            pairs.append(
                ScorePair(
                    score=_cosine(g.vector, p.vector),
                    genuine=g.subject_id == p.subject_id,
                    probe_id=key if key is not None else p_pos,
                )
            )
    return pairs


def image_center_scores(
    records: Sequence,
    centers: ClassCenterSet,
    *,
    max_impostors: int | None = None,
    seed: int = 0,
) -> list[ScorePair]:
    """Image-level pairing: each record against its own class center
    (genuine) and against every other center (impostor).

    ``max_impostors`` subsamples the impostor centers per record with a
    seeded draw to bound the pool size.
    """
    if len(centers) < 2:
        raise NoImpostorError("image-level pairing needs at least two class centers")
    center_subjects, center_matrix = centers.as_matrix()
    unit_centers = center_matrix / np.linalg.norm(center_matrix, axis=1, keepdims=True)
    rng = np.random.Generator(np.random.PCG64(seed))

    ordered = sorted(records, key=lambda r: r.sample_id)
    pairs: list[ScorePair] = []
    for rec in ordered:
        own_pos = int(np.searchsorted(center_subjects, rec.subject_id))
        if own_pos >= len(center_subjects) or center_subjects[own_pos] != rec.subject_id:
            raise MissingCenterError(
                f"no class center for subject {rec.subject_id} (sample {rec.sample_id})"
            )
        unit = rec.vector / np.linalg.norm(rec.vector)
        cosines = unit_centers @ unit
        impostor_pos = np.delete(np.arange(len(center_subjects)), own_pos)
        if max_impostors is not None and max_impostors < impostor_pos.shape[0]:
            chosen = rng.choice(impostor_pos.shape[0], size=max_impostors, replace=False)
            impostor_pos = impostor_pos[np.sort(chosen)]
        pairs.append(
            ScorePair(score=float(cosines[own_pos]), genuine=True, probe_id=rec.sample_id)
        )
        for pos in impostor_pos:
            pairs.append(
                ScorePair(score=float(cosines[pos]), genuine=False, probe_id=rec.sample_id)
            )
    return pairs


def attach_quality(
    pairs: Sequence[ScorePair], quality_by_probe: Mapping[int, float]
) -> list[ScorePair]:
    """Copy pairs, attaching quality scores to the genuine ones by probe id."""
    out: list[ScorePair] = []
    for p in pairs:
        if p.genuine:
            if p.probe_id not in quality_by_probe:
                raise MissingScoreError(f"no quality score for probe {p.probe_id}")
            out.append(replace(p, quality=float(quality_by_probe[p.probe_id])))
        else:
            out.append(p)
    return out


def _split_scores(pairs: Sequence[ScorePair]) -> tuple[np.ndarray, np.ndarray]:
    genuine = np.array([p.score for p in pairs if p.genuine], dtype=np.float64)
    impostor = np.array([p.score for p in pairs if not p.genuine], dtype=np.float64)
    return genuine, impostor


def tar_at_fmr(pairs: Sequence[ScorePair], fmr_target: float) -> TarResult:
    """True accept rate at the smallest threshold whose empirical FMR
    does not exceed the target.

    When no observed impostor score qualifies (target finer than the
    impostor pool can resolve, or blocked by ties at the maximum), the
    threshold is placed just above the highest impostor score and the
    result carries a resolution warning.
    """
    check_unit_interval(fmr_target, "fmr_target")
    genuine, impostor = _split_scores(pairs)
    if impostor.shape[0] == 0:
        raise ConfigError("tar_at_fmr needs at least one impostor pair")
    if genuine.shape[0] == 0:
        raise ConfigError("tar_at_fmr needs at least one genuine pair")

    m = impostor.shape[0]
    imp_sorted = np.sort(impostor)
    candidates = np.unique(imp_sorted)
    # impostors >= t for each candidate t
    counts = m - np.searchsorted(imp_sorted, candidates, side="left")
    allowed = counts <= fmr_target * m
    if np.any(allowed):
        threshold = float(candidates[np.argmax(allowed)])
        warning = False
    else:
        threshold = float(np.nextafter(imp_sorted[-1], np.inf))
        warning = True
    achieved = float(np.count_nonzero(impostor >= threshold)) / m
    tar = float(np.count_nonzero(genuine >= threshold)) / genuine.shape[0]
    return TarResult(
        tar=tar,
        threshold=threshold,
        target_fmr=fmr_target,
        achieved_fmr=achieved,
        resolution_warning=warning,
    )


def roc_curve(pairs: Sequence[ScorePair]) -> RocCurve:
    """Empirical ROC over every distinct observed score."""
    genuine, impostor = _split_scores(pairs)
    if genuine.shape[0] == 0 or impostor.shape[0] == 0:
        raise ConfigError("roc_curve needs both genuine and impostor pairs")
    thresholds = np.unique(np.concatenate([genuine, impostor]))
    g_sorted = np.sort(genuine)
    i_sorted = np.sort(impostor)
    tar = (
        g_sorted.shape[0] - np.searchsorted(g_sorted, thresholds, side="left")
    ) / g_sorted.shape[0]
    fmr = (
        i_sorted.shape[0] - np.searchsorted(i_sorted, thresholds, side="left")
    ) / i_sorted.shape[0]
    return RocCurve(thresholds=thresholds, fmr=fmr, tar=tar)


def default_erc_grid(points: int = 101) -> np.ndarray:
    """Uniform discard fractions from 0 to 1 inclusive."""
    if points < 2:
        raise ConfigError("ERC grid needs at least two points")
    return np.linspace(0.0, 1.0, points)


def erc(
    pairs: Sequence[ScorePair],
    target_fmr: float,
    grid: Sequence[float] | None = None,
) -> ErcCurve:
    """Error-versus-reject curve at a threshold fixed on the full set.

    Genuine pairs must carry quality scores.  For each discard fraction
    r, the floor(r * G) genuine pairs of lowest quality (ties broken by
    probe id) are dropped and the FNMR of the remainder is measured at
    the fixed threshold.  The curve is truncated, and flagged as such,
    at the last fraction that leaves any genuine pair.
    """
    grid_arr = default_erc_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid_arr.ndim != 1 or grid_arr.shape[0] < 1:
        raise ConfigError("ERC grid must be a non-empty 1-d sequence")
    if grid_arr[0] != 0.0 or np.any(np.diff(grid_arr) <= 0):
        raise ConfigError("ERC grid must increase strictly from 0")
    if grid_arr[-1] > 1.0:
        raise ConfigError("ERC discard fractions cannot exceed 1")

    fixed = tar_at_fmr(pairs, target_fmr)
    genuine = [p for p in pairs if p.genuine]
    for p in genuine:
        if p.quality is None:
            raise MissingScoreError(
                f"genuine pair for probe {p.probe_id} has no quality score"
            )
    order = sorted(
        range(len(genuine)),
        key=lambda i: (genuine[i].quality, genuine[i].probe_id if genuine[i].probe_id is not None else i),
    )
    scores = np.array([genuine[i].score for i in order], dtype=np.float64)
    g = scores.shape[0]

    fractions: list[float] = []
    fnmr: list[float] = []
    truncated = False
    for r in grid_arr:
        n_discard = int(np.floor(r * g + 1e-9))
        if n_discard >= g:
            truncated = True
            break
        remaining = scores[n_discard:]
        fractions.append(float(r))
        fnmr.append(float(np.count_nonzero(remaining < fixed.threshold)) / remaining.shape[0])

    fr = np.array(fractions)
    fn = np.array(fnmr)
    auc = float(np.trapezoid(fn, fr)) if fr.shape[0] > 1 else 0.0
    return ErcCurve(
        target_fmr=target_fmr,
        fixed_threshold=fixed.threshold,
        discard_fractions=fr,
        fnmr=fn,
        auc=auc,
        truncated=truncated,
    )


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1 with ties assigned their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Tie-aware Spearman rank correlation (Pearson over average ranks)."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ConfigError("spearman needs two equal-length 1-d sequences")
    if x.shape[0] < 2:
        raise ConfigError("spearman needs at least two observations")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise UndefinedCorrelationError("correlation of a constant sequence is undefined")
    rx = average_ranks(x)
    ry = average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))


def condition_report(
    groups: Mapping[str, tuple[np.ndarray, np.ndarray]]
) -> dict[str, ConditionSummary]:
    """Per-condition label/prediction means and rank agreement.

    Each group maps to ``(gt, pred)`` arrays of shape (n, 2) holding CCS
    in column 0 and CCAS in column 1.  Conditions whose inputs are too
    small or constant get ``None`` correlations instead of failing the
    whole report.
    """
    report: dict[str, ConditionSummary] = {}
    for label in sorted(groups):
        gt, pred = groups[label]
        gt = np.asarray(gt, dtype=np.float64)
        pred = np.asarray(pred, dtype=np.float64)
        if gt.shape != pred.shape or gt.ndim != 2 or gt.shape[1] != 2:
            raise ConfigError(f"condition {label!r} needs matching (n, 2) gt/pred arrays")

        def _sc(column: int) -> float | None:
            if gt.shape[0] < 2:
                return None
            try:
                return spearman(gt[:, column], pred[:, column])
            except UndefinedCorrelationError:
                return None

        report[label] = ConditionSummary(
            mean_gt_ccs=float(gt[:, 0].mean()),
            mean_pred_ccs=float(pred[:, 0].mean()),
            sc_ccs=_sc(0),
            mean_gt_ccas=float(gt[:, 1].mean()),
            mean_pred_ccas=float(pred[:, 1].mean()),
            sc_ccas=_sc(1),
        )
    return report

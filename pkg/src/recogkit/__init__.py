"""recogkit: embedding-space recognizability scoring and evaluation.

Derives per-sample recognizability labels (CCS, NNCCS, CCAS, CR) from
stored embeddings and class centers, trains a small regression head to
predict them, filters and weights template aggregation with the scores,
calibrates saturated score distributions, and measures everything with
verification (TAR@FMR, ROC), error-versus-reject and rank-correlation
metrics.
"""

__version__ = "0.1.0"

from .aggregation import (
    AggregationPolicy,
    POLICY_NAMES,
    ScoredSample,
    TemplateVector,
    aggregate_templates,
    filter_by_score,
    scored_from_labels,
    scored_from_predictions,
    templates_as_records,
    weighted_aggregate,
)
from .calibration import (
    CalibrationParams,
    SigmoidCalibrator,
    apply_calibration,
    fit_sigmoid_calibration,
)
from .errors import RecogkitError
from .head import (
    AdamWState,
    RegressionHead,
    adamw_step,
    backward,
    forward,
    init_adamw_state,
    init_head,
    mse_loss,
)
from .labeling import (
    CR_EPSILON,
    ClassCenterSet,
    RecognizabilityLabels,
    ccs,
    certainty_ratio,
    compute_class_centers,
    label_dataset,
    nnccs,
)
from .metrics import (
    ConditionSummary,
    ErcCurve,
    EvalReport,
    RocCurve,
    ScorePair,
    TarResult,
    condition_report,
    erc,
    image_center_scores,
    roc_curve,
    spearman,
    tar_at_fmr,
    verification_scores,
)
from .records import EmbeddingRecord, Role
from .synth import SynthConfig, SynthDataset, generate, saturation_preset, saturation_stats
from .training import (
    RecognizabilityRegressor,
    TrainConfig,
    TrainHistory,
    predict,
    train,
)

__all__ = [
    "AdamWState",
    "AggregationPolicy",
    "CalibrationParams",
    "ClassCenterSet",
    "ConditionSummary",
    "CR_EPSILON",
    "EmbeddingRecord",
    "ErcCurve",
    "EvalReport",
    "POLICY_NAMES",
    "RecogkitError",
    "RecognizabilityLabels",
    "RecognizabilityRegressor",
    "RegressionHead",
    "RocCurve",
    "Role",
    "ScorePair",
    "ScoredSample",
    "SigmoidCalibrator",
    "SynthConfig",
    "SynthDataset",
    "TarResult",
    "TemplateVector",
    "TrainConfig",
    "TrainHistory",
    "adamw_step",
    "aggregate_templates",
    "apply_calibration",
    "backward",
    "ccs",
    "certainty_ratio",
    "compute_class_centers",
    "condition_report",
    "erc",
    "filter_by_score",
    "fit_sigmoid_calibration",
    "forward",
    "generate",
    "image_center_scores",
    "init_adamw_state",
    "init_head",
    "label_dataset",
    "mse_loss",
    "nnccs",
    "predict",
    "roc_curve",
    "saturation_preset",
    "saturation_stats",
    "scored_from_labels",
    "scored_from_predictions",
    "spearman",
    "tar_at_fmr",
    "templates_as_records",
    "train",
    "verification_scores",
    "weighted_aggregate",
]

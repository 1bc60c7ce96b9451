"""Training loop for the recognizability regression head.

Targets come from precomputed label tables; the encoder itself never
appears here.  The train/validation split is subject-disjoint and
derived from a stable hash of the subject id, so identical inputs give
identical splits on every run.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from sklearn.base import BaseEstimator, RegressorMixin

from .errors import (
    ConfigError,
    DegenerateTargetError,
    DivergenceError,
)
from .head import (
    RegressionHead,
    adamw_step,
    backward,
    forward,
    init_adamw_state,
    init_head,
    mse_loss,
)
from .labeling import RecognizabilityLabels
from .metrics import spearman
from .records import EmbeddingRecord, check_records, sample_ids, stack_vectors, subject_ids
from .validation import check_positive, check_unit_interval

LABEL_MODES = ("joint", "ccs_only", "ccas_only", "cr_only")

#: label columns regressed per mode; the first one is the primary label
#: used for validation rank correlation and checkpoint selection.
TARGET_COLUMNS = {
    "joint": ("ccs", "ccas"),
    "ccs_only": ("ccs",),
    "ccas_only": ("ccas",),
    "cr_only": ("cr",),
}


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for head training.

    The 1e-3 learning-rate default targets head-only training on frozen
    embeddings; epochs, batch size and weight decay keep their standard
    defaults of 50 / 64 / 1e-4.
    """

    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    label_mode: str = "joint"
    validation_fraction: float = 0.2
    hidden_dims: tuple[int, ...] = (256, 64)

    def __post_init__(self):
        check_positive(self.epochs, "epochs")
        check_positive(self.batch_size, "batch_size")
        check_positive(self.learning_rate, "learning_rate")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        for name in ("adam_beta1", "adam_beta2"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {value}")
        check_positive(self.adam_epsilon, "adam_epsilon")
        if self.label_mode not in LABEL_MODES:
            raise ConfigError(f"unknown label_mode {self.label_mode!r}")
        check_unit_interval(self.validation_fraction, "validation_fraction")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if any(int(h) <= 0 for h in self.hidden_dims):
            raise ConfigError(f"hidden_dims must be positive, got {self.hidden_dims}")
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))

    @property
    def outputs(self) -> int:
        return len(TARGET_COLUMNS[self.label_mode])

    @property
    def primary_column(self) -> str:
        return TARGET_COLUMNS[self.label_mode][0]


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    validation_spearman: float


@dataclass(frozen=True)
class TrainHistory:
    """Per-epoch statistics; best_epoch maximizes validation Spearman
    (earliest epoch on ties)."""

    epochs: tuple[EpochStats, ...]
    best_epoch: int

    def __len__(self) -> int:
        return len(self.epochs)


def subject_hash(subject_id: int) -> int:
    """Stable 64-bit hash of a subject id (blake2b of its LE bytes)."""
    digest = hashlib.blake2b(
        int(subject_id).to_bytes(8, "little", signed=False), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def subject_split(
    subjects: np.ndarray, validation_fraction: float
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic subject-disjoint train/validation masks.

    Subjects are ordered by hash; the leading fraction becomes the
    validation side.  At least one subject lands on each side.
    """
    check_unit_interval(validation_fraction, "validation_fraction")
    unique = np.unique(subjects)
    if unique.shape[0] < 2:
        raise ConfigError("subject-disjoint split needs at least two subjects")
    hashed = sorted(unique.tolist(), key=lambda s: (subject_hash(int(s)), int(s)))
    n_val = int(np.floor(validation_fraction * len(hashed)))
    n_val = min(max(n_val, 1), len(hashed) - 1)
    val_subjects = set(hashed[:n_val])
    val_mask = np.array([int(s) in val_subjects for s in subjects], dtype=bool)
    return ~val_mask, val_mask


def _fit_arrays(
    x: np.ndarray,
    targets: np.ndarray,
    groups: np.ndarray,
    config: TrainConfig,
) -> tuple[RegressionHead, TrainHistory]:
    dim = x.shape[1]
    train_mask, val_mask = subject_split(groups, config.validation_fraction)
    x_train, y_train = x[train_mask], targets[train_mask]
    x_val, y_val = x[val_mask], targets[val_mask]

    if x_train.shape[0] < config.batch_size:
        raise ConfigError(
            f"training split has {x_train.shape[0]} samples, "
            f"fewer than batch_size {config.batch_size}"
        )
    if np.ptp(y_val[:, 0]) == 0.0 or np.ptp(y_train[:, 0]) == 0.0:
        raise DegenerateTargetError(
            "primary label is constant; validation rank correlation is undefined"
        )

    head = init_head(dim, config.hidden_dims, outputs=config.outputs, seed=config.seed)
    state = init_adamw_state(head)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    stats: list[EpochStats] = []
    best_epoch = 0
    best_spearman = -np.inf
    best_params: RegressionHead | None = None
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(x_train.shape[0])
        for start in range(0, order.shape[0], config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            grads = backward(head, x_train[batch_idx], y_train[batch_idx])
            adamw_step(head, state, grads, config)

        train_pred = forward(head, x_train)
        if not np.all(np.isfinite(train_pred)):
            raise DivergenceError(epoch)
        train_loss = mse_loss(train_pred, y_train)
        if not np.isfinite(train_loss):
            raise DivergenceError(epoch)
        val_pred = forward(head, x_val)
        val_spearman = spearman(val_pred[:, 0], y_val[:, 0])
        stats.append(
            EpochStats(epoch=epoch, train_loss=train_loss, validation_spearman=val_spearman)
        )
        if val_spearman > best_spearman:
            best_spearman = val_spearman
            best_epoch = epoch
            best_params = head.copy()

    history = TrainHistory(epochs=tuple(stats), best_epoch=best_epoch)
    return best_params, history


def train(
    records: Sequence[EmbeddingRecord],
    labels: RecognizabilityLabels,
    config: TrainConfig | None = None,
) -> tuple[RegressionHead, TrainHistory]:
    """Train a head on record embeddings against their labels.

    Returns the parameters from the epoch with the highest validation
    Spearman correlation, together with the full epoch history.
    """
    config = config or TrainConfig()
    check_records(records)
    x = stack_vectors(records)
    idx = labels.indices_for(sample_ids(records))
    targets = np.stack(
        [labels.column(name)[idx] for name in TARGET_COLUMNS[config.label_mode]], axis=1
    )
    groups = subject_ids(records)
    return _fit_arrays(x, targets, groups, config)


def predict(head: RegressionHead, records: Sequence[EmbeddingRecord]) -> np.ndarray:
    """Per-sample predicted scores, one row per record in input order."""
    check_records(records)
    return forward(head, stack_vectors(records))


class RecognizabilityRegressor(BaseEstimator, RegressorMixin):
    """Scikit-learn estimator facade over the head training loop.

    ``fit(X, y, groups=...)`` expects embeddings ``X`` of shape (n, d)
    and targets ``y`` of shape (n,) or (n, outputs); ``groups`` carries
    subject ids for the disjoint validation split (row indices are used
    when omitted, which makes the split sample- rather than
    subject-disjoint).
    """

    def __init__(
        self,
        hidden_dims: tuple[int, ...] = (256, 64),
        epochs: int = 50,
        batch_size: int = 64,
        learning_rate: float = 1e-3,
        weight_decay: float = 1e-4,
        adam_beta1: float = 0.9,
        adam_beta2: float = 0.999,
        adam_epsilon: float = 1e-8,
        validation_fraction: float = 0.2,
        seed: int = 0,
    ):
        self.hidden_dims = hidden_dims
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _config(self, outputs: int) -> TrainConfig:
        label_mode = "joint" if outputs == 2 else "ccs_only"
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_epsilon=self.adam_epsilon,
            seed=self.seed,
            label_mode=label_mode,
            validation_fraction=self.validation_fraction,
            hidden_dims=tuple(self.hidden_dims),
        )

    def fit(self, X, y, groups=None):
        x = np.asarray(X, dtype=np.float64)
        targets = np.asarray(y, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets.reshape(-1, 1)
        if targets.shape[1] not in (1, 2):
            raise ConfigError(f"targets must have 1 or 2 columns, got {targets.shape[1]}")
        if x.shape[0] != targets.shape[0]:
            raise ConfigError("X and y must have matching first dimensions")
        if groups is None:
            groups = np.arange(x.shape[0], dtype=np.int64)
        groups = np.asarray(groups, dtype=np.int64)
        config = self._config(targets.shape[1])
        self.head_, self.history_ = _fit_arrays(x, targets, groups, config)
        self.n_features_in_ = x.shape[1]
        self.n_outputs_ = targets.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "head_"):
            raise ConfigError("RecognizabilityRegressor is not fitted")
        out = forward(self.head_, np.asarray(X, dtype=np.float64))
        return out[:, 0] if self.n_outputs_ == 1 else out

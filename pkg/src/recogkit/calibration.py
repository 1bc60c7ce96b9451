"""Logistic rescaling for saturated similarity distributions.

When an encoder collapses both own-center and impostor-center cosines
into a narrow band near one, a single monotone logistic fitted to push
own-center values toward one and impostor values toward zero spreads
the scores back across (0, 1).  The fit minimizes the Brier score of
that two-class assignment; being strictly increasing, it preserves the
sign of every CCAS value and all rank orderings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import CalibrationDegenerateError, ConfigError
from .labeling import RecognizabilityLabels

SCALE_FLOOR = 1e-6


def logistic(x, offset: float, scale: float):
    """Numerically stable 1 / (1 + exp(-(x - offset) / scale))."""
    z = (np.asarray(x, dtype=np.float64) - offset) / scale
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class CalibrationParams:
    """Fitted logistic midpoint/steepness and the Brier score achieved
    on the fitting pool."""

    offset: float
    scale: float
    brier: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError(f"calibration scale must be positive, got {self.scale!r}")

    def transform(self, x):
        return logistic(x, self.offset, self.scale)


def brier_score(values: np.ndarray, targets: np.ndarray, offset: float, scale: float) -> float:
    s = logistic(values, offset, scale)
    return float(np.mean((s - targets) ** 2))


def _brier_and_gradient(values, targets, offset, log_scale):
    scale = np.exp(log_scale)
    s = logistic(values, offset, scale)
    residual = s - targets
    ds = s * (1.0 - s)
    # d s / d offset = -ds / scale;  d s / d log_scale = -(x - offset) / scale * ds
    d_offset = float(np.mean(2.0 * residual * (-ds / scale)))
    d_log_scale = float(np.mean(2.0 * residual * (-(values - offset) / scale * ds)))
    return float(np.mean(residual**2)), d_offset, d_log_scale


def _fit_logistic(
    values: np.ndarray,
    targets: np.ndarray,
    *,
    scale_floor: float = SCALE_FLOOR,
    max_iter: int = 200,
) -> tuple[float, float, float]:
    """Deterministic coordinate/gradient descent on (offset, log scale).

    Starts at the pooled mean and pooled standard deviation (floored).
    Each round takes one backtracking gradient step and then refines each
    coordinate with its own backtracking line search, which follows the
    narrow offset/scale ravine that a joint step alone stalls in.  The
    scale is clamped at the floor throughout.
    """
    values = np.asarray(values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if values.shape != targets.shape or values.ndim != 1:
        raise ConfigError("calibration values and targets must be equal-length 1-d arrays")
    if values.shape[0] < 2:
        raise CalibrationDegenerateError("calibration needs at least two pooled values")
    if np.ptp(values) == 0.0:
        raise CalibrationDegenerateError("calibration pool is constant")

    log_floor = float(np.log(scale_floor))
    offset = float(np.mean(values))
    log_scale = float(np.log(max(float(np.std(values)), scale_floor)))
    best = brier_score(values, targets, offset, float(np.exp(log_scale)))

    def objective(off, ls):
        return brier_score(values, targets, off, float(np.exp(max(ls, log_floor))))

    def line_search(direction_off, direction_ls, step):
        """Backtrack along a direction; returns the accepted step or 0."""
        nonlocal offset, log_scale, best
        while step > 1e-14:
            trial_off = offset + step * direction_off
            trial_ls = max(log_scale + step * direction_ls, log_floor)
            trial = objective(trial_off, trial_ls)
            if trial < best - 1e-16:
                offset, log_scale, best = trial_off, trial_ls, trial
                return step
            step *= 0.5
        return 0.0

    scale_hint = max(float(np.std(values)), scale_floor)
    for _ in range(max_iter):
        moved = 0.0
        _, g_off, g_ls = _brier_and_gradient(values, targets, offset, log_scale)
        gnorm = np.hypot(g_off, g_ls)
        if gnorm > 1e-13:
            moved += line_search(-g_off / gnorm, -g_ls / gnorm, max(scale_hint, 1.0))
        # coordinate refinements: offset sweeps at the current scale's
        # granularity, scale sweeps multiplicatively
        current_scale = float(np.exp(log_scale))
        for sign in (1.0, -1.0):
            moved += line_search(sign, 0.0, 4.0 * current_scale)
        for sign in (1.0, -1.0):
            moved += line_search(0.0, sign, 2.0)
        if moved == 0.0:
            break

    scale = float(np.exp(max(log_scale, log_floor)))
    return offset, scale, brier_score(values, targets, offset, scale)


def fit_sigmoid_calibration(labels: RecognizabilityLabels) -> CalibrationParams:
    """Fit one shared logistic that sends CCS toward 1 and NNCCS toward 0.

    The CCS and NNCCS values of every labeled sample are pooled into a
    single two-class set and the logistic minimizing its Brier score is
    found by deterministic descent.
    """
    if len(labels) < 2:
        raise CalibrationDegenerateError("need at least two labeled samples")
    values = np.concatenate([labels.ccs, labels.nnccs])
    targets = np.concatenate([np.ones(len(labels)), np.zeros(len(labels))])
    offset, scale, brier = _fit_logistic(values, targets)
    return CalibrationParams(offset=offset, scale=scale, brier=brier)


def apply_calibration(
    params: CalibrationParams, labels: RecognizabilityLabels
) -> RecognizabilityLabels:
    """Attach calibrated CCS/NNCCS/CCAS columns to a label set."""
    calibrated_ccs = params.transform(labels.ccs)
    calibrated_nnccs = params.transform(labels.nnccs)
    return labels.with_calibrated(calibrated_ccs, calibrated_nnccs)


class SigmoidCalibrator(BaseEstimator, TransformerMixin):
    """Scikit-learn style wrapper around the Brier-minimizing logistic.

    ``fit`` takes raw scores ``X`` and binary targets ``y`` (1 for values
    to push toward one, 0 for values to push toward zero); ``transform``
    applies the fitted logistic elementwise.
    """

    def __init__(self, scale_floor: float = SCALE_FLOOR, max_iter: int = 500):
        self.scale_floor = scale_floor
        self.max_iter = max_iter

    def fit(self, X, y):
        values = np.asarray(X, dtype=np.float64).reshape(-1)
        targets = np.asarray(y, dtype=np.float64).reshape(-1)
        offset, scale, brier = _fit_logistic(
            values, targets, scale_floor=self.scale_floor, max_iter=self.max_iter
        )
        self.offset_ = offset
        self.scale_ = scale
        self.brier_ = brier
        return self

    def transform(self, X):
        if not hasattr(self, "offset_"):
            raise ConfigError("SigmoidCalibrator is not fitted")
        x = np.asarray(X, dtype=np.float64)
        return logistic(x, self.offset_, self.scale_)

    @property
    def params_(self) -> CalibrationParams:
        return CalibrationParams(offset=self.offset_, scale=self.scale_, brier=self.brier_)

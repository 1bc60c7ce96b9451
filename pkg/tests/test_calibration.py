import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from recogkit import (
    SigmoidCalibrator,
    apply_calibration,
    compute_class_centers,
    fit_sigmoid_calibration,
    label_dataset,
)
from recogkit.calibration import CalibrationParams, brier_score, logistic
from recogkit.errors import CalibrationDegenerateError
from recogkit.synth import generate, saturation_preset


def test_logistic_midpoint():
    params = CalibrationParams(offset=0.3, scale=0.1, brier=0.0)
    assert params.transform(0.3) == pytest.approx(0.5)


def test_logistic_is_stable_at_extremes():
    assert logistic(1e6, 0.0, 1.0) == pytest.approx(1.0)
    assert logistic(-1e6, 0.0, 1.0) == pytest.approx(0.0)


def test_separable_pools_drive_brier_to_zero():
    # perfectly separated pools: the scale shrinks until the Brier score
    # is numerically zero
    from recogkit.calibration import _fit_logistic

    values = np.array([0.9] * 20 + [0.1] * 20)
    targets = np.array([1.0] * 20 + [0.0] * 20)
    offset, scale, brier = _fit_logistic(values, targets)
    assert brier < 1e-12
    assert scale < np.std(values) / 10
    assert scale >= 1e-6
    assert 0.1 < offset < 0.9


def test_degenerate_pool_rejected():
    from recogkit.calibration import _fit_logistic

    values = np.full(10, 0.5)
    targets = np.array([1.0] * 5 + [0.0] * 5)
    with pytest.raises(CalibrationDegenerateError):
        _fit_logistic(values, targets)


def test_brier_field_reproducible(small_dataset):
    _, _, labels = small_dataset
    params = fit_sigmoid_calibration(labels)
    values = np.concatenate([labels.ccs, labels.nnccs])
    targets = np.concatenate([np.ones(len(labels)), np.zeros(len(labels))])
    recomputed = brier_score(values, targets, params.offset, params.scale)
    assert recomputed == pytest.approx(params.brier, abs=1e-9)


def test_apply_calibration_midpoint_and_difference(small_dataset):
    _, _, labels = small_dataset
    params = fit_sigmoid_calibration(labels)
    calibrated = apply_calibration(params, labels)
    assert np.allclose(
        calibrated.calibrated_ccas,
        calibrated.calibrated_ccs - calibrated.calibrated_nnccs,
    )
    assert params.transform(params.offset) == pytest.approx(0.5)
    # equal inputs map to a zero difference
    same = params.transform(labels.ccs) - params.transform(labels.ccs)
    assert np.all(same == 0.0)


def test_calibrated_ccas_keeps_raw_sign(small_dataset):
    _, _, labels = small_dataset
    params = fit_sigmoid_calibration(labels)
    calibrated = apply_calibration(params, labels)
    assert np.all(np.sign(calibrated.calibrated_ccas) == np.sign(labels.ccas))


def test_calibrated_scores_leave_rank_agreement_unchanged(small_dataset):
    # strictly increasing remapping cannot move any Spearman coefficient
    from recogkit import spearman

    dataset, _, labels = small_dataset
    params = fit_sigmoid_calibration(labels)
    calibrated = apply_calibration(params, labels)
    quality = np.array([dataset.true_quality[int(s)] for s in labels.sample_ids])
    raw = spearman(labels.ccs, quality)
    remapped = spearman(calibrated.calibrated_ccs, quality)
    assert remapped == pytest.approx(raw, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_monotone_transform_random_params(seed):
    rng = np.random.default_rng(seed)
    offset = float(rng.normal())
    scale = float(rng.uniform(0.01, 2.0))
    params = CalibrationParams(offset=offset, scale=scale, brier=0.0)
    xs = np.sort(rng.normal(size=20))
    ys = params.transform(xs)
    assert np.all(np.diff(ys) >= 0.0)
    assert np.all((ys >= 0) & (ys <= 1))


def test_saturated_preset_regime():
    dataset = generate(saturation_preset(seed=0))
    centers = compute_class_centers(dataset.records, "gallery_only")
    labels = label_dataset(dataset.records, centers)
    pool = np.concatenate([labels.ccs, labels.nnccs])
    assert 0.95 <= pool.mean() <= 0.99
    assert pool.var() < 1e-3

    params = fit_sigmoid_calibration(labels)
    calibrated = apply_calibration(params, labels)
    cal_pool = np.concatenate(
        [calibrated.calibrated_ccs, calibrated.calibrated_nnccs]
    )
    assert cal_pool.mean() == pytest.approx(0.5, abs=0.05)
    assert cal_pool.var() >= 0.05
    assert params.brier <= 0.25


class TestSigmoidCalibrator:
    def test_matches_functional_fit(self, small_dataset):
        _, _, labels = small_dataset
        params = fit_sigmoid_calibration(labels)
        values = np.concatenate([labels.ccs, labels.nnccs])
        targets = np.concatenate([np.ones(len(labels)), np.zeros(len(labels))])
        est = SigmoidCalibrator().fit(values, targets)
        assert est.offset_ == pytest.approx(params.offset)
        assert est.scale_ == pytest.approx(params.scale)
        assert est.brier_ == pytest.approx(params.brier)
        assert np.allclose(est.transform(labels.ccs), params.transform(labels.ccs))

    def test_sklearn_params_roundtrip(self):
        est = SigmoidCalibrator(scale_floor=1e-5, max_iter=100)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

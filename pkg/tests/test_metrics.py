import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recogkit import (
    ScorePair,
    condition_report,
    erc,
    image_center_scores,
    roc_curve,
    spearman,
    tar_at_fmr,
    verification_scores,
)
from recogkit.errors import (
    ConfigError,
    MissingScoreError,
    NoImpostorError,
    PairingError,
    UndefinedCorrelationError,
)
from recogkit.metrics import attach_quality, default_erc_grid
from recogkit.records import Role

from conftest import make_records
from _oracles import erc_by_refilter, spearman_naive, tar_by_threshold_sweep


def pairs_from(genuine, impostor, quality=None):
    out = [
        ScorePair(score=s, genuine=True, probe_id=i,
                  quality=None if quality is None else quality[i])
        for i, s in enumerate(genuine)
    ]
    out += [ScorePair(score=s, genuine=False, probe_id=None) for s in impostor]
    return out


class TestVerificationScores:
    def test_two_subjects_pair_counts(self):
        gallery = make_records([[1.0, 0.0], [0.0, 1.0]], [0, 1])
        probe = make_records([[1.0, 0.1], [0.1, 1.0]], [0, 1])
        pairs = verification_scores(gallery, probe)
        assert sum(p.genuine for p in pairs) == 2
        assert sum(not p.genuine for p in pairs) == 2

    def test_identical_vectors_score_one(self):
        gallery = make_records([[1.0, 2.0], [2.0, -1.0]], [0, 1])
        pairs = verification_scores(gallery, gallery)
        for p in pairs:
            if p.genuine:
                assert p.score == pytest.approx(1.0)

    def test_pair_counts_match_closed_form(self):
        rng = np.random.default_rng(0)
        gallery, probe = [], []
        subj_gallery = {s: int(rng.integers(1, 4)) for s in range(10)}
        subj_probe = {s: int(rng.integers(1, 4)) for s in range(10)}
        gi = 0
        for s, n in subj_gallery.items():
            for _ in range(n):
                gallery.append(
                    make_records([rng.normal(size=4)], [s])[0].__class__(
                        subject_id=s, sample_id=gi, vector=rng.normal(size=4)
                    )
                )
                gi += 1
        for s, n in subj_probe.items():
            for _ in range(n):
                probe.append(
                    make_records([rng.normal(size=4)], [s])[0].__class__(
                        subject_id=s, sample_id=gi, vector=rng.normal(size=4)
                    )
                )
                gi += 1
        pairs = verification_scores(gallery, probe)
        expected_genuine = sum(subj_gallery[s] * subj_probe[s] for s in subj_gallery)
        total = sum(subj_gallery.values()) * sum(subj_probe.values())
        assert sum(p.genuine for p in pairs) == expected_genuine
        assert len(pairs) == total

    def test_missing_side_raises(self):
        gallery = make_records([[1.0, 0.0], [0.0, 1.0]], [0, 1])
        probe = make_records([[1.0, 0.0]], [0])
        with pytest.raises(PairingError, match="subject 1"):
            verification_scores(gallery, probe)

    def test_single_subject_rejected(self):
        gallery = make_records([[1.0, 0.0]], [0])
        with pytest.raises(NoImpostorError):
            verification_scores(gallery, gallery)


class TestImageCenterScores:
    def test_counts_and_subsampling(self, small_dataset):
        dataset, centers, _ = small_dataset
        probes = [r for r in dataset.records if r.role is Role.PROBE][:10]
        pairs = image_center_scores(probes, centers)
        assert sum(p.genuine for p in pairs) == 10
        assert sum(not p.genuine for p in pairs) == 10 * (len(centers) - 1)
        subsampled = image_center_scores(probes, centers, max_impostors=5, seed=1)
        assert sum(not p.genuine for p in subsampled) == 50
        again = image_center_scores(probes, centers, max_impostors=5, seed=1)
        assert [p.score for p in again] == [p.score for p in subsampled]


class TestTarAtFmr:
    def test_worked_example(self):
        pairs = pairs_from([0.35, 0.5], [0.1, 0.2, 0.3, 0.4])
        result = tar_at_fmr(pairs, 0.25)
        assert result.threshold == pytest.approx(0.4)
        assert result.tar == pytest.approx(0.5)
        assert not result.resolution_warning

    def test_separable_scores_reach_tar_one(self):
        pairs = pairs_from([0.8, 0.9, 0.95], [0.1, 0.2, 0.3, 0.4])
        result = tar_at_fmr(pairs, 0.25)
        assert result.tar == 1.0

    def test_identical_multisets_tar_equals_achieved_fmr(self):
        scores = [0.1, 0.3, 0.5, 0.7, 0.9]
        pairs = pairs_from(scores, scores)
        result = tar_at_fmr(pairs, 0.4)
        assert result.tar == pytest.approx(result.achieved_fmr)

    def test_matches_brute_force_sweep(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            genuine = rng.uniform(-1, 1, size=int(rng.integers(5, 40)))
            impostor = rng.uniform(-1, 1, size=int(rng.integers(5, 40)))
            target = float(rng.uniform(0.02, 0.5))
            got = tar_at_fmr(pairs_from(genuine, impostor), target)
            want_tar, want_threshold = tar_by_threshold_sweep(genuine, impostor, target)
            assert got.tar == pytest.approx(want_tar, abs=1e-12)
            assert got.threshold == pytest.approx(want_threshold, abs=1e-12)

    def test_resolution_warning_when_target_unreachable(self):
        pairs = pairs_from([0.9], [0.1, 0.2, 0.3])
        result = tar_at_fmr(pairs, 0.01)
        assert result.resolution_warning
        assert result.threshold > 0.3
        assert result.achieved_fmr == 0.0

    def test_monotone_in_target(self):
        rng = np.random.default_rng(3)
        pairs = pairs_from(rng.uniform(0, 1, 50), rng.uniform(0, 1, 200))
        tars = [tar_at_fmr(pairs, f).tar for f in (0.01, 0.05, 0.2, 0.5)]
        assert all(a <= b for a, b in zip(tars, tars[1:]))


class TestRocCurve:
    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(4)
        pairs = pairs_from(rng.uniform(0, 1, 40), rng.uniform(0, 1, 60))
        roc = roc_curve(pairs)
        assert np.all(np.diff(roc.fmr) <= 0)
        assert np.all(np.diff(roc.tar) <= 0)
        assert np.all((roc.fmr >= 0) & (roc.fmr <= 1))

    def test_permutation_invariant(self):
        rng = np.random.default_rng(5)
        pairs = pairs_from(rng.uniform(0, 1, 10), rng.uniform(0, 1, 20))
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        a, b = roc_curve(pairs), roc_curve(shuffled)
        assert np.array_equal(a.thresholds, b.thresholds)
        assert np.array_equal(a.tar, b.tar)


class TestErc:
    def _quality_pairs(self, seed=0, n_genuine=40, n_impostor=120):
        rng = np.random.default_rng(seed)
        genuine = rng.uniform(0.2, 1.0, n_genuine)
        quality = rng.uniform(0, 1, n_genuine)
        impostor = rng.uniform(-0.5, 0.6, n_impostor)
        return pairs_from(genuine, impostor, quality=dict(enumerate(quality)))

    def test_zero_discard_point_is_baseline_fnmr(self):
        pairs = self._quality_pairs()
        curve = erc(pairs, 0.1)
        threshold = tar_at_fmr(pairs, 0.1).threshold
        genuine = [p.score for p in pairs if p.genuine]
        baseline = sum(1 for s in genuine if s < threshold) / len(genuine)
        assert curve.discard_fractions[0] == 0.0
        assert curve.fnmr[0] == pytest.approx(baseline)

    def test_quality_equal_to_score_is_non_increasing(self):
        rng = np.random.default_rng(6)
        genuine = rng.uniform(0, 1, 60)
        pairs = pairs_from(genuine, rng.uniform(0, 0.8, 100),
                           quality=dict(enumerate(genuine)))
        curve = erc(pairs, 0.05)
        assert np.all(np.diff(curve.fnmr) <= 1e-12)

    def test_matches_naive_refilter(self):
        pairs = self._quality_pairs(seed=7)
        grid = default_erc_grid(21)
        curve = erc(pairs, 0.1, grid)
        genuine_tuples = [
            (p.score, p.quality, p.probe_id) for p in pairs if p.genuine
        ]
        want_r, want_fnmr = erc_by_refilter(
            genuine_tuples, curve.fixed_threshold, grid.tolist()
        )
        assert np.allclose(curve.discard_fractions, want_r, atol=1e-12)
        assert np.allclose(curve.fnmr, want_fnmr, atol=1e-12)

    def test_auc_is_trapezoid_of_points(self):
        pairs = self._quality_pairs(seed=8)
        curve = erc(pairs, 0.1)
        assert curve.auc == pytest.approx(
            np.trapezoid(curve.fnmr, curve.discard_fractions), abs=1e-12
        )

    def test_final_point_truncated(self):
        pairs = self._quality_pairs(seed=9, n_genuine=10)
        curve = erc(pairs, 0.2)
        assert curve.truncated
        assert curve.discard_fractions[-1] < 1.0

    def test_missing_quality_rejected(self):
        pairs = pairs_from([0.5], [0.1, 0.2])
        with pytest.raises(MissingScoreError):
            erc(pairs, 0.5)

    def test_grid_must_start_at_zero(self):
        pairs = self._quality_pairs()
        with pytest.raises(ConfigError):
            erc(pairs, 0.1, [0.1, 0.5])

    def test_attach_quality(self):
        pairs = pairs_from([0.5, 0.6], [0.1])
        with_quality = attach_quality(pairs, {0: 0.9, 1: 0.4})
        assert with_quality[0].quality == 0.9
        assert with_quality[2].quality is None
        with pytest.raises(MissingScoreError):
            attach_quality(pairs, {0: 0.9})


class TestSpearman:
    def test_identical_lists(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)

    def test_reversed_lists(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_ties_match_naive_oracle(self):
        a = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 4.0]
        b = [2.0, 1.0, 1.0, 5.0, 5.0, 4.0, 6.0]
        assert spearman(a, b) == pytest.approx(spearman_naive(a, b), abs=1e-12)

    @given(st.integers(0, 2**31 - 1), st.integers(3, 40))
    @settings(max_examples=60, deadline=None)
    def test_random_instances_match_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 6, size=n).astype(float)
        b = rng.normal(size=n)
        if np.ptp(a) == 0.0:
            a[0] += 1.0
        assert spearman(a, b) == pytest.approx(spearman_naive(a, b), abs=1e-12)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(10)
        a = rng.normal(size=30)
        b = rng.normal(size=30)
        base = spearman(a, b)
        assert spearman(np.exp(a), b) == pytest.approx(base, abs=1e-12)
        assert spearman(3 * a + 7, b) == pytest.approx(base, abs=1e-12)

    def test_constant_input_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            spearman([1.0, 2.0], [1.0, 2.0, 3.0])


class TestConditionReport:
    def test_perfect_prediction(self):
        gt = np.column_stack([np.linspace(0, 1, 10), np.linspace(-1, 1, 10)])
        report = condition_report({"clean": (gt, gt.copy())})
        row = report["clean"]
        assert row.sc_ccs == pytest.approx(1.0)
        assert row.sc_ccas == pytest.approx(1.0)
        assert row.mean_gt_ccs == pytest.approx(row.mean_pred_ccs)

    def test_identical_groups_produce_identical_rows(self):
        rng = np.random.default_rng(11)
        gt = rng.normal(size=(8, 2))
        pred = rng.normal(size=(8, 2))
        report = condition_report({"a": (gt, pred), "b": (gt, pred)})
        assert report["a"] == report["b"]

    def test_degenerate_group_marked_undefined(self):
        gt = np.ones((5, 2))
        pred = np.random.default_rng(0).normal(size=(5, 2))
        good_gt = np.column_stack([np.arange(5.0), np.arange(5.0)])
        report = condition_report(
            {"flat": (gt, pred), "ok": (good_gt, good_gt)}
        )
        assert report["flat"].undefined
        assert not report["ok"].undefined

    def test_noise_ramp_orders_means(self, small_dataset):
        dataset, _, labels = small_dataset
        order = np.argsort(
            [dataset.true_quality[int(s)] for s in labels.sample_ids]
        )
        n = len(order)
        groups = {}
        thirds = np.array_split(order, 3)
        for i, chunk in enumerate(thirds):
            gt = np.column_stack([labels.ccs[chunk], labels.ccas[chunk]])
            groups[f"q{i}"] = (gt, gt.copy())
        report = condition_report(groups)
        means = [report[f"q{i}"].mean_gt_ccs for i in range(3)]
        assert means[0] < means[1] < means[2]

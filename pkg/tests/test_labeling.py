import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recogkit import (
    ccs,
    certainty_ratio,
    compute_class_centers,
    label_dataset,
    nnccs,
)
from recogkit.errors import (
    ConfigError,
    DegenerateVectorError,
    MissingCenterError,
    NoImpostorError,
)
from recogkit.labeling import CR_EPSILON, ClassCenterSet
from recogkit.records import Role
from recogkit.synth import SynthConfig, generate

from conftest import make_records
from _oracles import centers_by_double_loop, nnccs_by_scan


class TestComputeClassCenters:
    def test_singleton_gallery(self):
        records = make_records([[3.0, 4.0]], [1], roles=[Role.GALLERY])
        centers = compute_class_centers(records, "gallery_only")
        assert np.array_equal(centers.center(1), [3.0, 4.0])
        assert centers.count(1) == 1

    def test_arithmetic_mean(self):
        records = make_records(
            [[1.0, 0.0], [0.0, 1.0]], [5, 5], roles=[Role.GALLERY, Role.GALLERY]
        )
        centers = compute_class_centers(records, "gallery_only")
        assert np.allclose(centers.center(5), [0.5, 0.5])
        assert centers.count(5) == 2

    def test_full_set_matches_double_loop(self):
        rng = np.random.default_rng(11)
        vectors, subjects = [], []
        for s in range(10):
            for _ in range(5):
                vectors.append(rng.normal(size=6))
                subjects.append(s)
        records = make_records(vectors, subjects)
        centers = compute_class_centers(records, "full_set")
        expected = centers_by_double_loop(records)
        for subject, vec in expected.items():
            assert np.abs(centers.center(subject) - vec).max() < 1e-12
            assert centers.count(subject) == 5

    def test_probe_without_gallery_raises(self):
        records = make_records(
            [[1.0, 0.0], [0.0, 1.0]], [1, 2], roles=[Role.GALLERY, Role.PROBE]
        )
        with pytest.raises(MissingCenterError, match="subject 2"):
            compute_class_centers(records, "gallery_only")

    def test_mixed_dimensions_rejected(self):
        from recogkit.errors import DimensionMismatchError
        from recogkit.records import EmbeddingRecord

        records = [
            EmbeddingRecord(subject_id=1, sample_id=0, vector=[1.0, 0.0], role=Role.GALLERY),
            EmbeddingRecord(subject_id=2, sample_id=1, vector=[1.0, 0.0, 0.0], role=Role.GALLERY),
        ]
        with pytest.raises(DimensionMismatchError):
            compute_class_centers(records, "gallery_only")

    def test_unknown_mode(self):
        records = make_records([[1.0, 0.0]], [1])
        with pytest.raises(ConfigError):
            compute_class_centers(records, "sideways")


class TestCcs:
    def test_self_similarity(self):
        assert ccs([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert ccs([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_45_degrees(self):
        assert ccs([1.0, 1.0], [1.0, 0.0]) == pytest.approx(np.sqrt(0.5))

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateVectorError):
            ccs([0.0, 0.0], [1.0, 0.0])

    @given(st.floats(min_value=1e-6, max_value=1e6), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_invariant_under_positive_rescaling(self, scale, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=8)
        c = rng.normal(size=8)
        assert ccs(scale * z, c) == pytest.approx(ccs(z, c), abs=1e-12)


def _center_set(vectors_by_subject):
    return ClassCenterSet(
        mode="full_set",
        vectors={s: np.asarray(v, dtype=float) for s, v in vectors_by_subject.items()},
        counts={s: 1 for s in vectors_by_subject},
    )


class TestNnccs:
    def test_single_impostor(self):
        centers = _center_set({0: [1.0, 0.0], 1: [0.0, 1.0]})
        value, subject = nnccs([1.0, 0.0], centers, own=0)
        assert value == pytest.approx(0.0)
        assert subject == 1

    def test_negative_impostor_ignored(self):
        centers = _center_set({0: [0.0, 1.0], 1: [1.0, 0.1], 2: [-1.0, 0.0]})
        value, subject = nnccs([1.0, 0.0], centers, own=0)
        assert subject == 1
        assert value == pytest.approx(ccs([1.0, 0.0], [1.0, 0.1]))

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(3)
        centers = {s: rng.normal(size=12) for s in range(50)}
        cs = _center_set(centers)
        for trial in range(50):
            z = rng.normal(size=12)
            own = int(rng.integers(50))
            got_value, got_subject = nnccs(z, cs, own)
            want_value, want_subject = nnccs_by_scan(z, centers, own)
            assert got_value == pytest.approx(want_value, abs=1e-12)
            assert got_subject == want_subject

    def test_tie_breaks_to_smallest_subject(self):
        centers = _center_set({0: [0.0, 1.0], 7: [2.0, 0.0], 3: [1.0, 0.0]})
        value, subject = nnccs([1.0, 0.0], centers, own=0)
        assert value == pytest.approx(1.0)
        assert subject == 3

    def test_no_impostor(self):
        centers = _center_set({0: [1.0, 0.0]})
        with pytest.raises(NoImpostorError):
            nnccs([1.0, 0.0], centers, own=0)


class TestCertaintyRatio:
    def test_paper_pair_high(self):
        assert certainty_ratio(0.9, 0.8) == pytest.approx(0.5, abs=1e-8)

    def test_paper_pair_low(self):
        assert certainty_ratio(0.3, 0.2) == pytest.approx(0.25, abs=1e-8)

    @given(st.floats(min_value=-0.999, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_zero_numerator(self, nn):
        assert certainty_ratio(0.0, nn) == 0.0

    def test_epsilon_value(self):
        assert CR_EPSILON == 1e-9
        assert certainty_ratio(1.0, 0.0) == pytest.approx(1.0 / (1.0 + 1e-9), abs=0)

    def test_denominator_precondition(self):
        with pytest.raises(ValueError):
            certainty_ratio(0.5, -1.0)


class TestLabelDataset:
    def test_perfectly_separated_sample(self):
        records = make_records(
            [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [0, 0, 1, 2],
        )
        centers = compute_class_centers(records, "full_set")
        labels = label_dataset(records, centers)
        i = labels.index_of(0)
        assert labels.ccs[i] == pytest.approx(1.0)
        assert labels.nnccs[i] == pytest.approx(0.0)
        assert labels.ccas[i] == pytest.approx(1.0)

    def test_equal_separation_unequal_cr(self, small_dataset):
        # two samples with identical CCAS may still differ sharply in CR
        assert certainty_ratio(0.9, 0.8) / certainty_ratio(0.3, 0.2) == pytest.approx(
            2.0, abs=1e-8
        )

    def test_columns_are_consistent(self, small_dataset):
        _, _, labels = small_dataset
        assert np.abs(labels.ccas - (labels.ccs - labels.nnccs)).max() == 0.0
        expected_cr = labels.ccs / (labels.nnccs + 1.0 + CR_EPSILON)
        assert np.abs(labels.cr - expected_cr).max() == 0.0
        assert np.all(np.diff(labels.sample_ids) > 0)

    def test_nnccs_dominates_every_impostor(self, small_dataset):
        dataset, centers, labels = small_dataset
        by_sample = {r.sample_id: r for r in dataset.records}
        for i, sid in enumerate(labels.sample_ids[:50]):
            rec = by_sample[int(sid)]
            for subject in centers.subjects:
                if subject == rec.subject_id:
                    continue
                assert labels.nnccs[i] >= ccs(rec.vector, centers.center(subject)) - 1e-12

    def test_matches_scalar_ops(self, small_dataset):
        dataset, centers, labels = small_dataset
        for rec in dataset.records[:20]:
            i = labels.index_of(rec.sample_id)
            assert labels.ccs[i] == pytest.approx(
                ccs(rec.vector, centers.center(rec.subject_id)), abs=1e-12
            )
            value, subject = nnccs(rec.vector, centers, rec.subject_id)
            assert labels.nnccs[i] == pytest.approx(value, abs=1e-12)
            assert labels.nearest_impostor[i] == subject

    def test_missing_center_names_sample(self):
        records = make_records([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [0, 1, 2])
        centers = compute_class_centers(records[:2], "full_set")
        with pytest.raises(MissingCenterError, match="sample 2"):
            label_dataset(records, centers)

    def test_single_class_rejected(self):
        records = make_records([[1.0, 0.0], [0.9, 0.1]], [0, 0])
        centers = compute_class_centers(records, "full_set")
        with pytest.raises(NoImpostorError):
            label_dataset(records, centers)


class TestDecisionBoundary:
    def test_ccas_sign_equals_nearest_center_rule(self):
        config = SynthConfig(
            num_classes=25,
            dim=12,
            gallery_per_class=10,
            probe_per_class=10,
            signal_dim=4,
            noise_min=0.05,
            noise_max=0.8,
            seed=5,
        )
        dataset = generate(config)
        centers = compute_class_centers(dataset.records, "full_set")
        labels = label_dataset(dataset.records, centers)
        vectors = {s: centers.center(s) for s in centers.subjects}
        by_sample = {r.sample_id: r for r in dataset.records}
        for i, sid in enumerate(labels.sample_ids):
            rec = by_sample[int(sid)]
            own_cos = ccs(rec.vector, vectors[rec.subject_id])
            best_impostor, _ = nnccs_by_scan(rec.vector, vectors, rec.subject_id)
            assert (labels.ccas[i] > 0) == (own_cos > best_impostor)

import numpy as np
import pytest

from recogkit import compute_class_centers, label_dataset, spearman
from recogkit.errors import ConfigError, NoImpostorError
from recogkit.records import Role
from recogkit.synth import SynthConfig, generate, saturation_preset, saturation_stats


class TestSynthConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            SynthConfig(num_classes=1)
        with pytest.raises(ConfigError):
            SynthConfig(dim=1)
        with pytest.raises(ConfigError):
            SynthConfig(noise_min=0.5, noise_max=0.1)
        with pytest.raises(ConfigError):
            SynthConfig(quality_law="bimodal")
        with pytest.raises(ConfigError):
            SynthConfig(template_size_min=3, template_size_max=2)
        with pytest.raises(ConfigError):
            SynthConfig(signal_dim=1)

    def test_signal_dim_default(self):
        assert SynthConfig(dim=64).resolved_signal_dim == 8
        assert SynthConfig(dim=8).resolved_signal_dim == 2
        assert SynthConfig(dim=64, signal_dim=16).resolved_signal_dim == 16


class TestGenerate:
    def test_shapes_roles_and_ids(self):
        config = SynthConfig(num_classes=4, dim=8, gallery_per_class=3,
                             probe_per_class=5, template_size_min=2,
                             template_size_max=3, seed=1)
        dataset = generate(config)
        assert len(dataset.records) == 4 * 8
        sample_ids = [r.sample_id for r in dataset.records]
        assert len(set(sample_ids)) == len(sample_ids)
        for rec in dataset.records:
            assert rec.vector.shape == (8,)
            assert np.linalg.norm(rec.vector) == pytest.approx(1.0)
            assert rec.template_id is not None
        roles = [r.role for r in dataset.records if r.subject_id == 0]
        assert roles[:3] == [Role.GALLERY] * 3
        assert roles[3:] == [Role.PROBE] * 5
        assert set(dataset.true_quality) == set(sample_ids)
        assert set(dataset.true_class_directions) == {0, 1, 2, 3}

    def test_same_seed_identical_serialization(self, tmp_path):
        from recogkit.io import write_embeddings

        config = SynthConfig(num_classes=5, dim=8, gallery_per_class=2,
                             probe_per_class=2, seed=11)
        a, b = generate(config), generate(config)
        pa, pb = tmp_path / "a.tfra", tmp_path / "b.tfra"
        write_embeddings(a.records, pa)
        write_embeddings(b.records, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seeds_differ(self):
        a = generate(SynthConfig(num_classes=3, dim=8, gallery_per_class=2,
                                 probe_per_class=2, seed=0))
        b = generate(SynthConfig(num_classes=3, dim=8, gallery_per_class=2,
                                 probe_per_class=2, seed=1))
        assert not np.allclose(a.records[0].vector, b.records[0].vector)

    def test_noise_free_samples_sit_on_class_direction(self):
        config = SynthConfig(num_classes=4, dim=8, gallery_per_class=3,
                             probe_per_class=3, noise_min=0.0, noise_max=0.0,
                             seed=3)
        dataset = generate(config)
        centers = compute_class_centers(dataset.records, "full_set")
        labels = label_dataset(dataset.records, centers)
        assert np.all(labels.ccs > 1.0 - 1e-12)

    def test_two_regime_group_means(self):
        config = SynthConfig(num_classes=10, dim=32, gallery_per_class=10,
                             probe_per_class=10, quality_law="two_regime",
                             clean_fraction=0.5, clean_noise=0.05,
                             degraded_noise=0.8, seed=4)
        dataset = generate(config)
        centers = compute_class_centers(dataset.records, "full_set")
        labels = label_dataset(dataset.records, centers)
        quality = np.array([dataset.true_quality[int(s)] for s in labels.sample_ids])
        clean_mask = quality >= 0.5
        assert labels.ccs[clean_mask].mean() > labels.ccs[~clean_mask].mean()
        # degraded regime crosses the decision boundary more often
        clean_bad = np.mean(labels.ccas[clean_mask] <= 0)
        degraded_bad = np.mean(labels.ccas[~clean_mask] <= 0)
        assert degraded_bad > clean_bad

    def test_quality_tracks_ccs_on_default_config(self):
        config = SynthConfig(gallery_per_class=25, probe_per_class=25, seed=6)
        dataset = generate(config)
        centers = compute_class_centers(dataset.records, "gallery_only")
        labels = label_dataset(dataset.records, centers)
        quality = np.array([dataset.true_quality[int(s)] for s in labels.sample_ids])
        assert spearman(quality, labels.ccs) > 0.7


class TestSaturationStats:
    def test_preset_regime(self):
        dataset = generate(saturation_preset(seed=0))
        mean, variance = saturation_stats(dataset.records, mode="gallery_only")
        assert 0.95 <= mean <= 0.99
        assert variance < 1e-3

    def test_noise_free_orthogonal_classes(self):
        # hand-built orthogonal identities: ccs pool exactly 1, nnccs pool 0
        from conftest import make_records

        vectors, subjects = [], []
        for s in range(3):
            direction = np.zeros(8)
            direction[s] = 1.0
            vectors += [direction, direction.copy()]
            subjects += [s, s]
        records = make_records(vectors, subjects)
        mean, variance = saturation_stats(records)
        labels = label_dataset(records, compute_class_centers(records, "full_set"))
        assert np.all(labels.ccs == 1.0)
        assert np.abs(labels.nnccs).max() < 1e-12
        assert mean == pytest.approx(0.5)

    def test_noise_free_generated_samples_align_with_direction(self):
        config = SynthConfig(num_classes=3, dim=32, signal_dim=16,
                             gallery_per_class=4, probe_per_class=4,
                             noise_min=0.0, noise_max=0.0, seed=8)
        dataset = generate(config)
        labels = label_dataset(
            dataset.records, compute_class_centers(dataset.records, "full_set")
        )
        assert np.all(labels.ccs > 1.0 - 1e-12)
        assert np.abs(labels.nnccs).max() < 0.75

    def test_single_class_error_propagates(self):
        records = generate(
            SynthConfig(num_classes=2, dim=8, gallery_per_class=2,
                        probe_per_class=2, seed=9)
        ).records
        only_one = [r for r in records if r.subject_id == 0]
        with pytest.raises(NoImpostorError):
            saturation_stats(only_one)

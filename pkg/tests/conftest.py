import numpy as np
import pytest

from recogkit import EmbeddingRecord, compute_class_centers, generate, label_dataset
from recogkit.synth import SynthConfig


def make_records(vectors, subjects, roles=None, templates=None):
    records = []
    for i, (v, s) in enumerate(zip(vectors, subjects)):
        records.append(
            EmbeddingRecord(
                subject_id=s,
                sample_id=i,
                vector=np.asarray(v, dtype=float),
                template_id=None if templates is None else templates[i],
                role=None if roles is None else roles[i],
            )
        )
    return records


@pytest.fixture(scope="session")
def small_dataset():
    """20 classes x 16 samples, labeled with gallery centers."""
    config = SynthConfig(
        num_classes=20,
        dim=16,
        gallery_per_class=8,
        probe_per_class=8,
        signal_dim=4,
        noise_min=0.05,
        noise_max=0.5,
        template_size_min=4,
        template_size_max=4,
        seed=7,
    )
    dataset = generate(config)
    centers = compute_class_centers(dataset.records, "gallery_only")
    labels = label_dataset(dataset.records, centers)
    return dataset, centers, labels

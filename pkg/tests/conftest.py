import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sprod.data import EmbeddingSet, normalize


def make_set(features, labels, class_count=None, group_ids=None, normalized=False):
    features = np.asarray(features, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int32)
    if class_count is None:
        class_count = int(labels.max()) + 1
    return EmbeddingSet(
        features=features,
        labels=labels,
        class_count=class_count,
        group_ids=None if group_ids is None else np.asarray(group_ids, dtype=np.int32),
        normalized=normalized,
    )


def make_normalized(features, labels, **kw):
    return normalize(make_set(features, labels, **kw))


def random_problem(rng, n_classes=None, dim=None, n=None):
    """A random normalized fitting problem with every class nonempty."""
    n_classes = n_classes or int(rng.integers(2, 5))
    dim = dim or int(rng.integers(2, 8))
    n = n or int(rng.integers(n_classes * 2, 40))
    labels = np.concatenate(
        [np.arange(n_classes), rng.integers(0, n_classes, size=n - n_classes)]
    ).astype(np.int32)
    feats = rng.standard_normal((n, dim)).astype(np.float32)
    return make_normalized(feats, labels, class_count=n_classes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest

from consplit.datasets import DatasetView


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def view_from(labels, groups=None, features=None, role="train"):
    """Tiny DatasetView helper; features default to a 1-column zero matrix."""
    labels = np.asarray(labels, dtype=float)
    n = len(labels)
    if features is None:
        features = np.zeros((n, 1))
    if groups is None:
        groups = np.zeros((n, 0), dtype=bool)
    return DatasetView(np.asarray(features, dtype=float), labels,
                       np.asarray(groups, dtype=bool), role)

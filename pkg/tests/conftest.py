import numpy as np
import pytest

from localtune.dataset import VectorDataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(X, y, n_classes=None):
    return VectorDataset(np.asarray(X, dtype=float), np.asarray(y, dtype=int),
                         n_classes=n_classes)


def separable_2d(n_per_class=20, gap=6.0, seed=0, n_classes=2):
    """Well-separated 2-D class clouds, one per class."""
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c in range(n_classes):
        center = np.array([gap * c, gap * (c % 2)])
        X.append(center + 0.3 * rng.normal(size=(n_per_class, 2)))
        y.append(np.full(n_per_class, c + 1))
    return make_dataset(np.vstack(X), np.concatenate(y), n_classes=n_classes)


def xor_dataset(n_per_corner=15, jitter=0.08, seed=0):
    """The classic rbf-separable XOR layout: corners (0,0),(1,1) vs (0,1),(1,0)."""
    rng = np.random.default_rng(seed)
    corners = [((0, 0), 1), ((1, 1), 1), ((0, 1), 2), ((1, 0), 2)]
    X, y = [], []
    for (cx, cy), label in corners:
        X.append(np.array([cx, cy]) + jitter * rng.normal(size=(n_per_corner, 2)))
        y.append(np.full(n_per_corner, label))
    return make_dataset(np.vstack(X), np.concatenate(y), n_classes=2)

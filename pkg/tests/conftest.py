import numpy as np
import pytest

from pulab.nn import Activation, Dense, NetworkSpec
from pulab.seeding import make_rng


@pytest.fixture
def rng():
    return make_rng(1234, "tests")


def tiny_classifier(in_dim=2, width=8, sn=False):
    return NetworkSpec(
        (
            Dense(in_dim, width, spectral_norm=sn),
            Activation("leaky_relu", 0.2),
            Dense(width, width, spectral_norm=sn),
            Activation("leaky_relu", 0.2),
            Dense(width, 1),
            Activation("sigmoid"),
        )
    )


def separable_blobs(n_per_class, rng, distance=10.0, dim=2):
    """Two unit-variance Gaussian classes centered `distance` apart."""
    pos = rng.standard_normal((n_per_class, dim))
    neg = rng.standard_normal((n_per_class, dim))
    neg[:, 0] += distance
    features = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), np.zeros(n_per_class, dtype=np.int64)])
    return features, labels

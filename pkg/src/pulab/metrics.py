"""Evaluation: accuracy, Frechet distance between sample sets, rolling stats.

The Frechet distance here operates on raw feature vectors (moment matching
of Gaussian fits), which keeps the generator-health monitoring role of an
embedding-based score without a pretrained network. We label it "FD".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import POSITIVE
from .errors import InvalidSpecError

COV_REG = 1e-6
COV_REG_TRIGGER = 1e-10


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    cov: np.ndarray  # symmetric (d, d)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of correct predictions; positive is predicted iff the
    score (probability of the negative class) is strictly below the
    threshold, so an exact tie goes to negative."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.size == 0:
        raise InvalidSpecError("accuracy of an empty batch is undefined")
    if scores.shape != labels.shape:
        raise InvalidSpecError(f"scores {scores.shape} vs labels {labels.shape}")
    predicted_positive = scores < threshold
    return float(np.mean(predicted_positive == (labels == POSITIVE)))


def fit_gaussian(x: np.ndarray) -> GaussianFit:
    """Sample mean and unbiased covariance (symmetrized)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidSpecError("fit_gaussian needs a (n>=2, d) matrix")
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return GaussianFit(mean=mean, cov=(cov + cov.T) / 2.0)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    eigval, eigvec = np.linalg.eigh(mat)
    eigval = np.clip(eigval, 0.0, None)
    return (eigvec * np.sqrt(eigval)) @ eigvec.T


def _regularized(cov: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh(cov)
    if eigs.min() < COV_REG_TRIGGER:
        return cov + COV_REG * np.eye(cov.shape[0])
    return cov


def frechet_distance(a: GaussianFit, b: GaussianFit) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The cross term is evaluated through the symmetric product
    S_a^(1/2) S_b S_a^(1/2), whose eigenvalues are clamped at zero; near-
    singular covariances get a small ridge first. Round-off below zero is
    clamped so the result is always nonnegative.
    """
    if a.mean.shape != b.mean.shape:
        raise InvalidSpecError(f"dimension mismatch {a.mean.shape} vs {b.mean.shape}")
    cov_a = _regularized(a.cov)
    cov_b = _regularized(b.cov)
    sqrt_a = _psd_sqrt(cov_a)
    inner = sqrt_a @ cov_b @ sqrt_a
    inner = (inner + inner.T) / 2.0
    cross_eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    diff = a.mean - b.mean
    fd = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.sqrt(cross_eigs).sum())
    return max(fd, 0.0)


def rolling_summary(history: Sequence, last_n: int) -> tuple[float, float]:
    """Mean and population std of test accuracy over the final records."""
    if last_n < 1:
        raise InvalidSpecError("last_n must be >= 1")
    if len(history) < last_n:
        raise InvalidSpecError(f"history has {len(history)} records, need {last_n}")
    accs = np.array([rec.test_accuracy for rec in history[-last_n:]], dtype=np.float64)
    return float(accs.mean()), float(accs.std(ddof=0))

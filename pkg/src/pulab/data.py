"""Dataset construction: labeled pools and positive/unlabeled splits.

Pools carry binary labels (1 = positive, 0 = negative). A PU split keeps a
labeled positive set, an unlabeled mixture whose ground-truth labels are
hidden behind an audited accessor, and a class-balanced labeled test set.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataFormatError, InvalidSpecError

POSITIVE = 1
NEGATIVE = 0

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class LabeledPool:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int, 1 = positive, 0 = negative

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise InvalidSpecError(
                f"pool features {self.features.shape} and labels {self.labels.shape} do not align"
            )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class PUDataset:
    """A PU split. Ground-truth labels of x_u are for evaluation only.

    Training code must never call `hidden_labels()`; every access bumps
    `hidden_label_reads` so tests can audit information flow. The
    `*_source_index` arrays record each row's index in the originating
    pool (used to verify disjointness).
    """

    x_p: np.ndarray
    x_u: np.ndarray
    alpha: float
    test: LabeledPool
    _hidden_u_labels: np.ndarray
    x_p_source_index: Optional[np.ndarray] = None
    x_u_source_index: Optional[np.ndarray] = None
    test_source_index: Optional[np.ndarray] = None
    hidden_label_reads: int = field(default=0, compare=False)

    def hidden_labels(self) -> np.ndarray:
        """Ground-truth labels of x_u (1 = positive). Evaluation use only."""
        self.hidden_label_reads += 1
        return self._hidden_u_labels

    @property
    def dim(self) -> int:
        return self.x_p.shape[1]


def make_two_moons(n: int, noise: float, rng: np.random.Generator) -> LabeledPool:
    """Two interleaved half-circles; the positive class is the upper moon.

    n//2 points per class (odd n is rounded down per class). The positive
    moon is the upper half of the unit circle at the origin; the negative
    moon is the lower half of the unit circle centered at (1, 0.5).
    Gaussian noise of the given standard deviation is added per coordinate.
    """
    if n < 2:
        raise InvalidSpecError("make_two_moons needs n >= 2")
    if noise < 0:
        raise InvalidSpecError("noise must be >= 0")
    m = n // 2
    t = np.linspace(0.0, np.pi, m)
    pos = np.column_stack([np.cos(t), np.sin(t)])
    neg = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    features = np.vstack([pos, neg])
    features = features + rng.normal(0.0, noise, size=features.shape)
    labels = np.concatenate([np.full(m, POSITIVE), np.full(m, NEGATIVE)])
    return LabeledPool(features, labels)


def make_gaussian_mixture(
    means: Sequence,
    covs: Sequence,
    counts: Sequence[int],
    rng: np.random.Generator,
    positive_components: Sequence[int] = (0,),
) -> LabeledPool:
    """Sample one Gaussian per component; components in
    `positive_components` are labeled positive, the rest negative."""
    if not (len(means) == len(covs) == len(counts)):
        raise InvalidSpecError("means, covs, counts must have equal length")
    blocks, labels = [], []
    for i, (mean, cov, count) in enumerate(zip(means, covs, counts)):
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise InvalidSpecError(f"component {i}: covariance shape {cov.shape} mismatch")
        eigs = np.linalg.eigvalsh((cov + cov.T) / 2.0)
        if eigs.min() < -1e-10:
            raise InvalidSpecError(f"component {i}: covariance is not PSD (min eig {eigs.min():.3e})")
        blocks.append(rng.multivariate_normal(mean, cov, size=count, check_valid="ignore"))
        label = POSITIVE if i in positive_components else NEGATIVE
        labels.append(np.full(count, label))
    return LabeledPool(np.vstack(blocks), np.concatenate(labels))


def _read_be_u32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise DataFormatError(f"{path}: truncated header at offset {offset}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(
    images_path,
    labels_path,
    positive_labels: Sequence[int] = (0, 2, 4, 6, 8),
    downscale: Optional[int] = None,
) -> LabeledPool:
    """Load an IDX image/label file pair into a flattened pool.

    Pixels are scaled to [0, 1]. With `downscale=s`, each image is reduced
    to s x s by block averaging (s must divide both image dimensions). Raw
    labels contained in `positive_labels` map to the positive class.
    """
    with open(images_path, "rb") as f:
        img_buf = f.read()
    magic = _read_be_u32(img_buf, 0, str(images_path))
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(
            f"{images_path}: bad magic 0x{magic:08x} at offset 0 (expected 0x{IDX_IMAGES_MAGIC:08x})"
        )
    n = _read_be_u32(img_buf, 4, str(images_path))
    rows = _read_be_u32(img_buf, 8, str(images_path))
    cols = _read_be_u32(img_buf, 12, str(images_path))
    expected = 16 + n * rows * cols
    if len(img_buf) < expected:
        raise DataFormatError(
            f"{images_path}: truncated at offset {len(img_buf)} (expected {expected} bytes)"
        )
    images = np.frombuffer(img_buf, dtype=np.uint8, count=n * rows * cols, offset=16)
    images = images.reshape(n, rows, cols)

    with open(labels_path, "rb") as f:
        lab_buf = f.read()
    magic = _read_be_u32(lab_buf, 0, str(labels_path))
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(
            f"{labels_path}: bad magic 0x{magic:08x} at offset 0 (expected 0x{IDX_LABELS_MAGIC:08x})"
        )
    n_lab = _read_be_u32(lab_buf, 4, str(labels_path))
    if n_lab != n:
        raise DataFormatError(
            f"{labels_path}: {n_lab} labels but {images_path} has {n} images"
        )
    if len(lab_buf) < 8 + n_lab:
        raise DataFormatError(
            f"{labels_path}: truncated at offset {len(lab_buf)} (expected {8 + n_lab} bytes)"
        )
    raw_labels = np.frombuffer(lab_buf, dtype=np.uint8, count=n_lab, offset=8)

    feats = images.astype(np.float64) / 255.0
    if downscale is not None:
        s = int(downscale)
        if s < 1 or rows % s != 0 or cols % s != 0:
            raise InvalidSpecError(f"downscale {s} must divide image dims {rows}x{cols}")
        feats = feats.reshape(n, s, rows // s, s, cols // s).mean(axis=(2, 4))
        feats = feats.reshape(n, s * s)
    else:
        feats = feats.reshape(n, rows * cols)
    labels = np.where(np.isin(raw_labels, np.asarray(positive_labels)), POSITIVE, NEGATIVE)
    return LabeledPool(feats, labels)


def make_pu_split(
    pool: LabeledPool,
    alpha: float,
    n_p: int,
    n_u: int,
    n_test: int,
    rng: np.random.Generator,
) -> PUDataset:
    """Draw disjoint x_p / x_u / test sets from a labeled pool.

    x_p is a uniform draw from the pool's positives (selected completely at
    random). x_u mixes round(alpha * n_u) positives (banker's rounding)
    with negatives and is shuffled. The test set is class-balanced, so
    n_test must be even.
    """
    if not (0.0 <= alpha <= 1.0):
        raise InvalidSpecError(f"alpha must be in [0,1], got {alpha}")
    if n_test < 2 or n_test % 2 != 0:
        raise InvalidSpecError(f"n_test must be even and >= 2 for a balanced test set, got {n_test}")
    n_u_pos = int(round(alpha * n_u))
    n_u_neg = n_u - n_u_pos
    pos_idx = np.flatnonzero(pool.labels == POSITIVE)
    neg_idx = np.flatnonzero(pool.labels == NEGATIVE)
    need_pos = n_p + n_u_pos + n_test // 2
    need_neg = n_u_neg + n_test // 2
    if len(pos_idx) < need_pos or len(neg_idx) < need_neg:
        raise InvalidSpecError(
            f"pool too small: need {need_pos} positives (have {len(pos_idx)}) "
            f"and {need_neg} negatives (have {len(neg_idx)})"
        )

    pos_order = rng.permutation(pos_idx)
    neg_order = rng.permutation(neg_idx)
    p_src = pos_order[:n_p]
    u_pos_src = pos_order[n_p : n_p + n_u_pos]
    t_pos_src = pos_order[n_p + n_u_pos : n_p + n_u_pos + n_test // 2]
    u_neg_src = neg_order[:n_u_neg]
    t_neg_src = neg_order[n_u_neg : n_u_neg + n_test // 2]

    u_src = np.concatenate([u_pos_src, u_neg_src])
    u_hidden = np.concatenate([np.full(n_u_pos, POSITIVE), np.full(n_u_neg, NEGATIVE)])
    shuffle = rng.permutation(n_u)
    u_src = u_src[shuffle]
    u_hidden = u_hidden[shuffle]

    t_src = np.concatenate([t_pos_src, t_neg_src])
    t_labels = np.concatenate([np.full(n_test // 2, POSITIVE), np.full(n_test // 2, NEGATIVE)])

    return PUDataset(
        x_p=pool.features[p_src].copy(),
        x_u=pool.features[u_src].copy(),
        alpha=alpha,
        test=LabeledPool(pool.features[t_src].copy(), t_labels),
        _hidden_u_labels=u_hidden,
        x_p_source_index=p_src,
        x_u_source_index=u_src,
        test_source_index=t_src,
    )

"""Core numeric types shared by every stage: datasets, distances, seeding.

All coordinates are float64 and all randomness flows from a single
:class:`SeedSpec`, so repeated runs are bit-reproducible.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

__all__ = ["Dataset", "SeedSpec", "derive_seed", "squared_euclidean"]


def derive_seed(master_seed: int, tag: str, index: int = 0) -> int:
    """Derive a 64-bit child seed from (master_seed, tag, index).

    Deterministic across processes and platforms (keyed blake2b, little
    endian), so independent components can draw from non-overlapping
    streams without a global RNG.
    """
    payload = (
        struct.pack("<Q", master_seed & 0xFFFFFFFFFFFFFFFF)
        + tag.encode("utf-8")
        + struct.pack("<q", index)
    )
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


class SeedSpec:
    """Root of the seed-derivation tree.

    Child seeds come from ``derive_seed(master_seed, tag, index)``; identical
    (master_seed, tag, index) triples always yield identical children.
    """

    def __init__(self, master_seed: int = 0):
        if master_seed < 0:
            raise ValueError("master_seed must be a nonnegative integer")
        self.master_seed = int(master_seed)

    def child(self, tag: str, index: int = 0) -> int:
        return derive_seed(self.master_seed, tag, index)

    def rng(self, tag: str, index: int = 0) -> np.random.Generator:
        """A fresh Generator seeded from the (tag, index) child stream."""
        return np.random.default_rng(self.child(tag, index))

    def __repr__(self):
        return f"SeedSpec({self.master_seed})"

    def __eq__(self, other):
        return isinstance(other, SeedSpec) and other.master_seed == self.master_seed


def squared_euclidean(a, b) -> float:
    """Squared Euclidean distance between two points.

    Raises ValueError on dimension mismatch. Symmetric, and exactly zero
    for binary-equal inputs.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.dot(diff, diff))


class Dataset:
    """Immutable n x d point matrix with optional ground-truth labels.

    Points are stored row-major in one contiguous float64 block and the
    buffers are marked read-only, so the dataset is safe to share across
    workers after construction.
    """

    def __init__(self, points, labels=None):
        X = np.array(points, dtype=np.float64, order="C", copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError(f"points must form a 2-d matrix, got ndim={X.ndim}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("points contain NaN or Inf")
        X.setflags(write=False)
        self.X = X

        if labels is not None:
            y = np.asarray(labels)
            if y.ndim != 1 or y.shape[0] != X.shape[0]:
                raise ValueError(
                    f"labels must be a length-{X.shape[0]} vector, got shape {y.shape}"
                )
            y = y.astype(np.int64, copy=True)
            y.setflags(write=False)
            self.labels = y
        else:
            self.labels = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def point(self, i: int) -> np.ndarray:
        return self.X[i]

    def __len__(self):
        return self.X.shape[0]

    def __repr__(self):
        lab = "with labels" if self.labels is not None else "unlabeled"
        return f"Dataset(n={self.n}, d={self.dim}, {lab})"

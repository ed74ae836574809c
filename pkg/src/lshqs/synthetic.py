"""Synthetic Gaussian-mixture datasets for tests and scaling benchmarks."""

from __future__ import annotations

import numpy as np

from .data import Dataset, derive_seed

__all__ = ["gaussian_mixture", "random_mixture"]


def gaussian_mixture(n: int, centers, sigma=1.0, weights=None, seed: int = 0) -> Dataset:
    """n points from an isotropic Gaussian mixture; labels = component ids.

    `centers` is a (k, d) array; `sigma` a scalar or per-component vector;
    `weights` default to uniform.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    k = centers.shape[0]
    sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (k,))
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w / w.sum()
    rng = np.random.default_rng(derive_seed(seed, "mixture"))
    comp = rng.choice(k, size=n, p=w)
    points = centers[comp] + rng.normal(size=(n, centers.shape[1])) * sig[comp, None]
    return Dataset(points, labels=comp)


def random_mixture(n: int, d: int, components: int, seed: int = 0,
                   spread: float = 8.0) -> Dataset:
    """Mixture with randomly placed centers, for benchmark workloads."""
    rng = np.random.default_rng(derive_seed(seed, "mixture-centers"))
    centers = rng.uniform(-spread, spread, size=(components, d))
    return gaussian_mixture(n, centers, sigma=1.0, seed=derive_seed(seed, "mixture-points"))

"""Scikit-learn style front end for the Quick Shift pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array

from .data import Dataset, SeedSpec
from .quickshift import (
    QuickShiftConfig,
    exact_quickshift,
    extract_labels,
    extract_modes,
    lsh_quickshift,
)

__all__ = ["LSHQuickShift"]


class LSHQuickShift(ClusterMixin, BaseEstimator):
    """Density-based clustering by Quick Shift over hashed density estimates.

    Each sample links to the highest-density sample the hash index can see
    within ``c * bandwidth``; connected trees are the clusters and tree
    roots are the estimated density modes. Density comes either from a
    hashing-based approximate estimator (subquadratic) or from the exact
    kernel sum.

    Parameters
    ----------
    bandwidth : float, default=1.0
        Gaussian kernel bandwidth; also the neighbor radius, so parent
        edges are at most ``c * bandwidth`` long.

    c : float, default=1.5
        Approximation factor of the neighbor search (> 1).

    epsilon : float, default=0.1
        Relative accuracy target of the approximate density estimator.

    density_estimator : {"hbe", "exact"}, default="hbe"
        "hbe" samples hash buckets for a (1 +- epsilon) estimate; "exact"
        computes the full kernel sum for every sample.

    exact_graph : bool, default=False
        Use the quadratic exact-ball baseline for the whole pipeline
        instead of the hash index (exact density implied).

    lsh_tables, lsh_concat, lsh_width : int, int, float, optional
        Override the hash index layout (number of tables, hashes
        concatenated per key, bucket width). Defaults are sized from the
        dataset.

    random_state : int, default=0
        Master seed; runs with equal seeds are bit-identical.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Cluster label of each sample, in 0..n_clusters_-1;
        ``cluster_centers_[labels_[i]]`` is the mode of sample i's cluster
        and ``mode_indices_[labels_[i]]`` its root sample index.

    parents_ : ndarray of shape (n_samples,)
        Quick Shift parent pointer per sample (-1 for roots).

    densities_ : ndarray of shape (n_samples,)
        Estimated density at each sample.

    mode_indices_ : ndarray of shape (n_clusters,)
        Sample indices of the tree roots, ascending.

    cluster_centers_ : ndarray of shape (n_clusters, n_features)
        Coordinates of the roots.

    n_clusters_ : int
        Number of trees in the forest.
    """

    def __init__(self, bandwidth=1.0, c=1.5, epsilon=0.1,
                 density_estimator="hbe", exact_graph=False,
                 lsh_tables=None, lsh_concat=None, lsh_width=None,
                 random_state=0):
        self.bandwidth = bandwidth
        self.c = c
        self.epsilon = epsilon
        self.density_estimator = density_estimator
        self.exact_graph = exact_graph
        self.lsh_tables = lsh_tables
        self.lsh_concat = lsh_concat
        self.lsh_width = lsh_width
        self.random_state = random_state

    def fit(self, X, y=None):
        """Cluster X.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored

        Returns
        -------
        self
        """
        X = check_array(X, dtype=np.float64)
        data = Dataset(X)
        if self.exact_graph:
            forest = exact_quickshift(data, h=self.bandwidth,
                                      tau=self.c * self.bandwidth)
        else:
            cfg = QuickShiftConfig(
                bandwidth=self.bandwidth, c=self.c, epsilon=self.epsilon,
                estimator=self.density_estimator,
                seed=SeedSpec(int(self.random_state or 0)),
                lsh_tables=self.lsh_tables, lsh_concat=self.lsh_concat,
                lsh_width=self.lsh_width)
            forest = lsh_quickshift(data, cfg)
        labels = extract_labels(forest)
        modes = extract_modes(forest, data)

        self.n_features_in_ = data.dim
        self.forest_ = forest
        # root point ids -> consecutive labels indexing cluster_centers_
        self.labels_ = np.searchsorted(modes.ids, labels.label)
        self.parents_ = forest.parent
        self.densities_ = forest.densities.values
        self.mode_indices_ = modes.ids
        self.cluster_centers_ = modes.coords
        self.n_clusters_ = labels.num_clusters
        return self

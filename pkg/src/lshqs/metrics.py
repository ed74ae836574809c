"""Clustering evaluation: chance-adjusted partition agreement and Hausdorff.

ARI and AMI treat labels as opaque integers (root ids are fine) and are
invariant to relabeling either argument. AMI uses natural-log entropies,
the exact hypergeometric expected-MI, and the arithmetic-mean normalizer,
matching the convention of the common reference implementations so scores
are comparable across tools.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ContingencyTable",
    "contingency_table",
    "adjusted_rand_index",
    "adjusted_mutual_info",
    "hausdorff_distance",
]


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts between two labelings of the same points."""

    counts: np.ndarray  # (r, c) int64
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    n: int


def contingency_table(a, b) -> ContingencyTable:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"label vectors must match: {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise ValueError("need at least 2 points")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    r, c = ai.max() + 1, bi.max() + 1
    counts = np.zeros((r, c), dtype=np.int64)
    np.add.at(counts, (ai, bi), 1)
    return ContingencyTable(
        counts=counts,
        row_marginals=counts.sum(axis=1),
        col_marginals=counts.sum(axis=0),
        n=int(a.shape[0]),
    )


def _identical_partitions(table: ContingencyTable) -> bool:
    """Same partition up to label names: one nonzero block per row and column."""
    return (
        table.counts.shape[0] == table.counts.shape[1]
        and np.count_nonzero(table.counts) == table.counts.shape[0]
        and np.all((table.counts > 0).sum(axis=0) == 1)
        and np.all((table.counts > 0).sum(axis=1) == 1)
    )


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def adjusted_rand_index(a, b) -> float:
    """(Index - E[Index]) / (MaxIndex - E[Index]) over the contingency table.

    1.0 on identical partitions; ~0 in expectation against random ones.
    When the adjustment degenerates (both partitions all singletons or both
    one cluster) returns 1.0 for identical partitions and 0.0 otherwise.
    """
    t = contingency_table(a, b)
    index = _comb2(t.counts).sum()
    sum_a = _comb2(t.row_marginals).sum()
    sum_b = _comb2(t.col_marginals).sum()
    total = _comb2(t.n)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0 if _identical_partitions(t) else 0.0
    return float((index - expected) / (max_index - expected))


def _entropy(marginals: np.ndarray, n: int) -> float:
    p = marginals[marginals > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_info(t: ContingencyTable) -> float:
    nz = t.counts > 0
    nij = t.counts[nz].astype(np.float64)
    outer = np.outer(t.row_marginals, t.col_marginals)[nz].astype(np.float64)
    return float((nij / t.n * np.log(t.n * nij / outer)).sum())


def _expected_mutual_info(t: ContingencyTable) -> float:
    """Exact E[MI] under the permutation model (hypergeometric cell counts).

    Iterates over unique marginal value pairs only, so partitions with many
    same-sized clusters (e.g. all singletons) stay cheap.
    """
    n = t.n
    ua, ca = np.unique(t.row_marginals, return_counts=True)
    ub, cb = np.unique(t.col_marginals, return_counts=True)
    log_fact_n = gammaln(n + 1)
    emi = 0.0
    for av, na in zip(ua.astype(np.int64), ca):
        for bv, nb in zip(ub.astype(np.int64), cb):
            lo = max(1, av + bv - n)
            hi = min(av, bv)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            term = (nij / n) * np.log(n * nij / (float(av) * float(bv)))
            log_p = (
                gammaln(av + 1) + gammaln(bv + 1)
                + gammaln(n - av + 1) + gammaln(n - bv + 1)
                - log_fact_n
                - gammaln(nij + 1)
                - gammaln(av - nij + 1)
                - gammaln(bv - nij + 1)
                - gammaln(n - av - bv + nij + 1)
            )
            emi += float(na) * float(nb) * float((term * np.exp(log_p)).sum())
    return emi


def adjusted_mutual_info(a, b) -> float:
    """(MI - E[MI]) / (mean(H(a), H(b)) - E[MI]), natural logs.

    1.0 on identical partitions (including the single-cluster and
    all-singleton degenerate cases); 0.0 when the normalizer degenerates on
    non-identical partitions.
    """
    t = contingency_table(a, b)
    mi = _mutual_info(t)
    emi = _expected_mutual_info(t)
    denom = 0.5 * (_entropy(t.row_marginals, t.n) + _entropy(t.col_marginals, t.n)) - emi
    if abs(denom) < 1e-15:
        return 1.0 if _identical_partitions(t) else 0.0
    return float((mi - emi) / denom)


def hausdorff_distance(A, B) -> float:
    """max over both directions of the farthest nearest-neighbor distance."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.size == 0 or B.size == 0:
        raise ValueError("point sets must be nonempty")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))

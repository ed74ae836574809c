"""Shared oracles and invariant checks, kept independent of library internals."""

import numpy as np

from lshqs import Dataset


def assert_forest_invariants(forest, data: Dataset):
    """Exhaustive post-hoc scan: no self loops, acyclic, density rule, edge length."""
    parent = forest.parent
    dens = forest.densities.values
    n = len(parent)
    assert parent.shape == (n,)
    assert not np.any(parent == np.arange(n)), "self loop"

    for i in range(n):
        seen = 0
        j = i
        while parent[j] >= 0:
            j = parent[j]
            seen += 1
            assert seen <= n, f"cycle reached from {i}"

    edges = np.flatnonzero(parent >= 0)
    for i in edges:
        j = parent[i]
        assert dens[j] > dens[i] or (dens[j] == dens[i] and j < i), (
            f"edge {i}->{j} does not climb the density order")
        gap = np.sqrt(((data.X[i] - data.X[j]) ** 2).sum())
        assert gap <= forest.edge_cutoff + 1e-12, (
            f"edge {i}->{j} length {gap} exceeds {forest.edge_cutoff}")


def ball_argmax_candidates(data: Dataset, dens: np.ndarray, tau: float) -> np.ndarray:
    """Brute-force candidate per point: densest tau-ball member (ties: lowest id).

    Independent of the library's neighbor machinery; used as the exact
    neighbor-step hook.
    """
    X = data.X
    n = len(X)
    out = np.full(n, -1, dtype=np.int64)
    tau2 = tau * tau
    for i in range(n):
        d2 = ((X - X[i]) ** 2).sum(axis=1)
        members = np.flatnonzero(d2 <= tau2)
        members = members[members != i]
        if members.size:
            best = members[np.lexsort((members, -dens[members]))[0]]
            out[i] = best
    return out


def naive_root_of(parent: np.ndarray, i: int) -> int:
    j = i
    while parent[j] >= 0:
        j = parent[j]
    return j


def pair_counting_ari(a, b) -> float:
    """ARI from explicit agree/disagree pair counts over all point pairs."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    ss = sd = ds = dd = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_a = a[i] == a[j]
            same_b = b[i] == b[j]
            if same_a and same_b:
                ss += 1
            elif same_a:
                sd += 1
            elif same_b:
                ds += 1
            else:
                dd += 1
    total = ss + sd + ds + dd
    expected = (ss + sd) * (ss + ds) / total
    max_index = 0.5 * ((ss + sd) + (ss + ds))
    if max_index == expected:
        return 1.0 if np.array_equal(
            np.unique(a, return_inverse=True)[1],
            np.unique(b, return_inverse=True)[1]) else 0.0
    return (ss - expected) / (max_index - expected)


def direct_summation_ami(a, b) -> float:
    """AMI with the expected-MI sum evaluated term by term in exact fractions."""
    from fractions import Fraction
    from math import comb, log

    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    counts = np.zeros((ai.max() + 1, bi.max() + 1), dtype=int)
    np.add.at(counts, (ai, bi), 1)
    arow = counts.sum(axis=1)
    bcol = counts.sum(axis=0)

    mi = 0.0
    for r in range(counts.shape[0]):
        for c in range(counts.shape[1]):
            nij = counts[r, c]
            if nij:
                mi += (nij / n) * log(n * nij / (arow[r] * bcol[c]))
    emi = 0.0
    for av in arow:
        for bv in bcol:
            for nij in range(max(1, av + bv - n), min(av, bv) + 1):
                prob = Fraction(comb(bv, nij) * comb(n - bv, av - nij), comb(n, av))
                emi += (nij / n) * log(n * nij / (av * bv)) * float(prob)
    h_a = -sum(x / n * log(x / n) for x in arow)
    h_b = -sum(x / n * log(x / n) for x in bcol)
    denom = 0.5 * (h_a + h_b) - emi
    if abs(denom) < 1e-15:
        identical = np.array_equal(
            np.unique(ai, return_inverse=True)[1],
            np.unique(bi, return_inverse=True)[1])
        return 1.0 if identical else 0.0
    return (mi - emi) / denom


def set_partitions(items):
    """All set partitions of `items` (Bell-number many), as label vectors."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        k = (max(sub) + 1) if sub else 0
        for block in range(k):
            yield [block] + sub
        yield [k] + sub

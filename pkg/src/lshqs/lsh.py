"""Euclidean locality-sensitive hash index.

Classic p-stable hashing: each of L tables keys points by K concatenated
projections floor((a.x + b) / w) with Gaussian a and uniform offset b.
The index answers radius-bounded approximate near-neighbor queries and, once
per-point densities are registered, a "highest-density neighbor" query that
only consults a cached per-bucket argmax, keeping the per-point cost
independent of bucket size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import Dataset, derive_seed

__all__ = [
    "LshParams",
    "LshIndex",
    "collision_probability",
    "default_lsh_params",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Practical ceiling on the table count derived from the success-probability
# sizing rule; the closed-form L explodes for concat depths ~log2(n).
MAX_TABLES = 64

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


def collision_probability(dist, w: float):
    """Collision probability of one p-stable hash for points at `dist`.

    p(s) = 1 - 2*Phi(-w/s) - (2s / (sqrt(2*pi)*w)) * (1 - exp(-w^2/(2s^2)))

    equals the integral over the bucket of the chance that both points land
    in it; p(0) = 1 and p is strictly decreasing in s. Distances below 1e-12
    are treated as zero to avoid the singular limit. Accepts scalars or
    arrays; negative distances raise.
    """
    if w <= 0:
        raise ValueError(f"bucket width must be positive, got {w}")
    s = np.atleast_1d(np.asarray(dist, dtype=np.float64))
    if np.any(s < 0):
        raise ValueError("distance must be nonnegative")
    out = np.ones_like(s)
    far = s > 1e-12
    sf = s[far]
    out[far] = (
        1.0
        - 2.0 * ndtr(-w / sf)
        - (2.0 * sf / (_SQRT_2PI * w)) * (1.0 - np.exp(-(w * w) / (2.0 * sf * sf)))
    )
    if np.ndim(dist) == 0:
        return float(out[0])
    return out


@dataclass(frozen=True)
class LshParams:
    """Index geometry: query radius, approximation factor, table layout.

    radius  -- target neighbor radius r > 0; candidates are accepted up to c*r
    c       -- approximation factor > 1
    tables  -- number of hash tables L
    concat  -- hashes concatenated per table key K
    width   -- bucket width w of each p-stable hash
    seed    -- 64-bit child seed controlling all projections
    """

    radius: float
    c: float = 1.5
    tables: int = 8
    concat: int = 4
    width: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.c <= 1:
            raise ValueError("approximation factor c must be > 1")
        if self.tables < 1 or self.concat < 1:
            raise ValueError("need at least one table and one hash per key")
        w = self.radius if self.width is None else self.width
        if w <= 0:
            raise ValueError("bucket width must be > 0")
        object.__setattr__(self, "width", float(w))


_MISS_TARGET = 0.05


def _tables_for(p_key: float) -> float:
    """Tables needed so a radius-distant point is caught with prob >= 0.95."""
    if p_key >= 1.0:
        return 1.0
    if p_key <= 0.0:
        return math.inf
    return math.log(_MISS_TARGET) / math.log1p(-p_key)


def default_lsh_params(
    n: int,
    radius: float,
    c: float = 1.5,
    tables: int | None = None,
    concat: int | None = None,
    width: float | None = None,
    seed: int = 0,
) -> LshParams:
    """Size an index so points at distance `radius` are found w.p. >= 0.95.

    w = radius; K is the deepest concatenation whose success-sized table
    count (1 - p1^K)^L <= 0.05 still fits the MAX_TABLES budget, and L is
    that count. Deeper K (purer buckets) always trades against more tables;
    this keeps the success probability invariant under the budget.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = radius if width is None else width
    p1 = collision_probability(radius, w)
    if concat is None:
        concat = 1
        while concat < 64 and _tables_for(p1 ** (concat + 1)) <= MAX_TABLES:
            concat += 1
    if tables is None:
        tables = int(min(MAX_TABLES, max(4, math.ceil(_tables_for(p1**concat)))))
    return LshParams(radius=radius, c=c, tables=tables, concat=concat, width=w, seed=seed)


def _mix_keys(floors: np.ndarray) -> np.ndarray:
    """Fold (n, L, K) integer hash values into (n, L) 64-bit bucket keys.

    FNV-1a over the K values per table. Cross-tuple key collisions are
    tolerated: they only add candidates, and every query distance-filters.
    """
    out = np.full(floors.shape[:2], _FNV_OFFSET, dtype=np.uint64)
    for k in range(floors.shape[2]):
        out = (out ^ floors[:, :, k].astype(np.uint64)) * _FNV_PRIME
    return out


class _Table:
    """One hash table: point ids grouped by bucket key.

    order  -- point ids sorted by (key, id); each bucket is a contiguous run
    starts -- bucket boundaries into order (len = #buckets + 1)
    keys   -- sorted unique bucket keys
    """

    __slots__ = ("order", "starts", "keys", "argmax_id", "argmax_density")

    def __init__(self, column: np.ndarray):
        n = column.shape[0]
        order = np.argsort(column, kind="stable")
        sk = column[order]
        bounds = np.flatnonzero(sk[1:] != sk[:-1]) + 1
        self.order = order.astype(np.int64)
        self.starts = np.concatenate(([0], bounds, [n])).astype(np.int64)
        self.keys = sk[self.starts[:-1]]
        self.argmax_id = None
        self.argmax_density = None

    def lookup(self, key: np.uint64):
        """Bucket slot for `key`, or -1 if the bucket is empty."""
        pos = int(np.searchsorted(self.keys, key))
        if pos < len(self.keys) and self.keys[pos] == key:
            return pos
        return -1

    def members(self, slot: int) -> np.ndarray:
        return self.order[self.starts[slot] : self.starts[slot + 1]]


class LshIndex:
    """L-table p-stable index over a dataset, built at construction.

    Read-only after build except for `register_densities`, which runs once
    to populate the per-bucket density-argmax caches. Identical
    (data, params) pairs produce byte-identical bucket structure.
    """

    def __init__(self, data: Dataset, params: LshParams):
        self.data = data
        self.params = params
        n, d = data.n, data.dim
        L, K = params.tables, params.concat

        rng = np.random.default_rng(derive_seed(params.seed, "lsh-projections"))
        self._proj = rng.normal(size=(L * K, d))
        self._offsets = rng.uniform(0.0, params.width, size=L * K)

        keys = self._hash(data.X)  # (n, L)
        self._tables = [_Table(keys[:, t]) for t in range(L)]
        # bucket slot of each point in each table, for O(1) point lookups
        self._slots = np.empty((n, L), dtype=np.int64)
        for t, tab in enumerate(self._tables):
            self._slots[:, t] = np.searchsorted(tab.keys, keys[:, t])
        self._densities = None
        self._rank_of = None
        self._id_by_rank = None

    # -- hashing ------------------------------------------------------------

    def _hash(self, X: np.ndarray) -> np.ndarray:
        """Bucket keys for each row of X in each table: (len(X), L) uint64."""
        L, K = self.params.tables, self.params.concat
        proj = X @ self._proj.T + self._offsets
        floors = np.floor(proj / self.params.width).astype(np.int64)
        return _mix_keys(floors.reshape(len(X), L, K))

    # -- queries ------------------------------------------------------------

    @property
    def cutoff(self) -> float:
        """Acceptance radius c*r applied to every candidate."""
        return self.params.c * self.params.radius

    def query_ann(self, q, k: int) -> np.ndarray:
        """Up to k point ids within c*r of q, by increasing distance then id.

        Candidates come from q's bucket in every table and are exactly
        distance-filtered, so each returned id is sound; recall depends on
        the table layout.
        """
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.data.dim,):
            raise ValueError(f"query must have dimension {self.data.dim}")
        if k < 1:
            raise ValueError("k must be >= 1")
        keys = self._hash(q.reshape(1, -1))[0]
        found = []
        for t, tab in enumerate(self._tables):
            slot = tab.lookup(keys[t])
            if slot >= 0:
                found.append(tab.members(slot))
        if not found:
            return np.empty(0, dtype=np.int64)
        cand = np.unique(np.concatenate(found))
        diff = self.data.X[cand] - q
        d2 = np.einsum("ij,ij->i", diff, diff)
        keep = d2 <= self.cutoff**2
        cand, d2 = cand[keep], d2[keep]
        order = np.lexsort((cand, d2))
        return cand[order[:k]]

    # -- density argmax cache -----------------------------------------------

    def register_densities(self, densities) -> None:
        """Cache, per bucket, the member with maximal density (ties: lowest id).

        Must run once after build and before argmax queries. Internally
        points are ranked by (density desc, id asc); a bucket's argmax is its
        minimal rank, which makes the per-table reduction a single reduceat.
        """
        dens = np.asarray(densities, dtype=np.float64)
        if dens.shape != (self.data.n,):
            raise ValueError(f"densities must have length {self.data.n}")
        if not np.all(np.isfinite(dens)):
            raise ValueError("densities must be finite")
        id_by_rank = np.lexsort((np.arange(self.data.n), -dens))
        rank_of = np.empty(self.data.n, dtype=np.int64)
        rank_of[id_by_rank] = np.arange(self.data.n)
        for tab in self._tables:
            ranks = rank_of[tab.order]
            best = np.minimum.reduceat(ranks, tab.starts[:-1])
            tab.argmax_id = id_by_rank[best]
            tab.argmax_density = dens[tab.argmax_id]
        self._densities = dens
        self._rank_of = rank_of
        self._id_by_rank = id_by_rank

    def argmax_density_neighbor(self, i: int):
        """Highest-density cached candidate within c*r of point i, or None.

        Candidates are the bucket-argmax entries of the L buckets containing
        point i (self excluded, exact distance filter at c*r); ties break to
        the lowest id. Requires `register_densities`.
        """
        neighbors = self.argmax_density_neighbors(np.array([i], dtype=np.int64))
        return int(neighbors[0]) if neighbors[0] >= 0 else None

    def argmax_density_neighbors(self, ids=None) -> np.ndarray:
        """Vectorized `argmax_density_neighbor` for many points (-1 = none)."""
        if self._rank_of is None:
            raise RuntimeError("register_densities must be called first")
        if ids is None:
            ids = np.arange(self.data.n, dtype=np.int64)
        else:
            ids = np.asarray(ids, dtype=np.int64)
        X = self.data.X
        sentinel = self.data.n  # ranks are < n
        best_rank = np.full(len(ids), sentinel, dtype=np.int64)
        cut2 = self.cutoff**2
        for t, tab in enumerate(self._tables):
            cand = tab.argmax_id[self._slots[ids, t]]
            diff = X[cand] - X[ids]
            d2 = np.einsum("ij,ij->i", diff, diff)
            ok = (cand != ids) & (d2 <= cut2)
            rank = np.where(ok, self._rank_of[cand], sentinel)
            best_rank = np.minimum(best_rank, rank)
        out = np.full(len(ids), -1, dtype=np.int64)
        hit = best_rank < sentinel
        out[hit] = self._id_by_rank[best_rank[hit]]
        return out

    # -- introspection (tests, reports) --------------------------------------

    @property
    def n_tables(self) -> int:
        return self.params.tables

    def table_buckets(self, t: int):
        """(key, member ids) pairs of table t, keys ascending."""
        tab = self._tables[t]
        return [
            (int(tab.keys[s]), tab.members(s).copy())
            for s in range(len(tab.keys))
        ]

    def bucket_argmax(self, t: int, slot: int):
        """(point id, density) cached for bucket `slot` of table t."""
        tab = self._tables[t]
        if tab.argmax_id is None:
            raise RuntimeError("register_densities must be called first")
        return int(tab.argmax_id[slot]), float(tab.argmax_density[slot])


def build_index(data: Dataset, params: LshParams) -> LshIndex:
    """Hash all points of `data` into all tables; deterministic given seed."""
    return LshIndex(data, params)

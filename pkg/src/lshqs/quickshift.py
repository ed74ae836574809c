"""Quick Shift forest construction.

Each point gets a directed edge to the highest-density point among its
nearby candidates, provided that density is strictly higher than its own
(exactly equal densities fall back to lowest-id-wins so duplicate points
form one tree instead of n roots). Trees of the resulting forest are the
clusters; roots are the estimated modes.

Two constructions share the edge rule: `lsh_quickshift` draws candidates
from the hash index's per-bucket argmax caches, `exact_quickshift` scans
the exact tau-ball of every point and is the quadratic baseline the fast
path is tested against.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SeedSpec
from .kde import DensityEstimate, KernelSpec, estimate_all, _exact_kde_rows
from .lsh import LshIndex, default_lsh_params

__all__ = [
    "QuickShiftConfig",
    "QuickShiftForest",
    "ClusterLabels",
    "ModeSet",
    "lsh_quickshift",
    "exact_quickshift",
    "extract_labels",
    "extract_modes",
    "check_separation",
]


@dataclass(frozen=True)
class QuickShiftConfig:
    """Pipeline parameters.

    bandwidth -- kernel bandwidth h (> 0); also the index radius, so the
                 parent-edge length bound is c * h
    c         -- neighbor approximation factor (> 1)
    epsilon   -- hbe estimator accuracy target in (0, 1)
    estimator -- "hbe" or "exact" density estimates
    seed      -- master seed; every random component derives from it
    lsh_tables / lsh_concat / lsh_width -- optional index layout overrides
    """

    bandwidth: float
    c: float = 1.5
    epsilon: float = 0.1
    estimator: str = "hbe"
    seed: SeedSpec = field(default_factory=SeedSpec)
    lsh_tables: int | None = None
    lsh_concat: int | None = None
    lsh_width: float | None = None

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if not self.c > 1:
            raise ValueError("approximation factor c must be > 1")
        if self.estimator not in ("exact", "hbe"):
            raise ValueError(f"unknown estimator mode {self.estimator!r}")


class QuickShiftForest:
    """Directed forest over point ids.

    parent[i] is the id point i climbs to, or -1 for roots. Parent pointers
    strictly increase (density, then lowest-id-on-ties) and edges never
    exceed `edge_cutoff`, which makes the forest acyclic by construction.
    """

    def __init__(self, parent: np.ndarray, densities: DensityEstimate,
                 edge_cutoff: float, config=None, stage_ms=None):
        self.parent = parent
        self.densities = densities
        self.edge_cutoff = edge_cutoff
        self.config = config
        self.stage_ms = dict(stage_ms or {})

    @property
    def n(self) -> int:
        return len(self.parent)

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent < 0)

    def __repr__(self):
        return f"QuickShiftForest(n={self.n}, roots={len(self.roots())})"


@dataclass(frozen=True)
class ClusterLabels:
    """label[i] = id of the root reached from i; roots label themselves."""

    label: np.ndarray
    num_clusters: int


@dataclass(frozen=True)
class ModeSet:
    """Root ids and their coordinates."""

    ids: np.ndarray
    coords: np.ndarray


def _density_order(dens: np.ndarray):
    """Total order by (density desc, id asc) as rank arrays.

    rank_of[i] is i's position; id_by_rank is the inverse. Every edge rule
    reduces to comparing ranks: j may be i's parent iff rank_of[j] < rank_of[i].
    """
    id_by_rank = np.lexsort((np.arange(len(dens)), -dens))
    rank_of = np.empty(len(dens), dtype=np.int64)
    rank_of[id_by_rank] = np.arange(len(dens))
    return rank_of, id_by_rank


def _edges_from_candidates(candidates: np.ndarray, rank_of: np.ndarray) -> np.ndarray:
    """Keep candidate edges that strictly climb the density order."""
    n = len(rank_of)
    ids = np.arange(n)
    parent = np.where(
        (candidates >= 0) & (rank_of[np.where(candidates >= 0, candidates, 0)] < rank_of[ids]),
        candidates,
        -1,
    )
    return parent.astype(np.int64)


def lsh_quickshift(data: Dataset, cfg: QuickShiftConfig,
                   neighbor_fn=None) -> QuickShiftForest:
    """Build the forest with hashed neighbor candidates and estimated density.

    Stages: build the index at radius h, estimate all densities, register
    them into the per-bucket caches, then link each point to the best cached
    candidate within c*h. `neighbor_fn(data, density_values, cutoff)`, when
    given, replaces the index candidate step (test hook for oracle
    equivalence); it must return one candidate id per point, -1 for none.
    """
    n = data.n
    cutoff = cfg.c * cfg.bandwidth

    t0 = time.perf_counter()
    params = default_lsh_params(
        n, radius=cfg.bandwidth, c=cfg.c,
        tables=cfg.lsh_tables, concat=cfg.lsh_concat, width=cfg.lsh_width,
        seed=cfg.seed.child("lsh"))
    index = LshIndex(data, params)
    t1 = time.perf_counter()

    dens = estimate_all(data, KernelSpec(sigma=cfg.bandwidth),
                        mode=cfg.estimator, epsilon=cfg.epsilon, seed=cfg.seed)
    t2 = time.perf_counter()

    rank_of, _ = _density_order(dens.values)
    if neighbor_fn is None:
        index.register_densities(dens.values)
        candidates = index.argmax_density_neighbors()
    else:
        candidates = np.asarray(neighbor_fn(data, dens.values, cutoff), dtype=np.int64)
    parent = _edges_from_candidates(candidates, rank_of)
    t3 = time.perf_counter()

    stage_ms = {
        "build_ms": (t1 - t0) * 1e3,
        "kde_ms": (t2 - t1) * 1e3,
        "graph_ms": (t3 - t2) * 1e3,
    }
    forest = QuickShiftForest(parent, dens, cutoff, config=cfg, stage_ms=stage_ms)
    forest.lsh_params = params
    return forest


def exact_quickshift(data: Dataset, h: float, tau: float) -> QuickShiftForest:
    """Quadratic baseline: exact KDE, exact tau-ball argmax parent step."""
    if h <= 0 or tau <= 0:
        raise ValueError("bandwidth and tau must be > 0")
    n = data.n
    X = data.X

    t0 = time.perf_counter()
    values = _exact_kde_rows(data, KernelSpec(sigma=h))
    t1 = time.perf_counter()

    rank_of, id_by_rank = _density_order(values)
    tau2 = tau * tau
    sentinel = n
    parent = np.full(n, -1, dtype=np.int64)
    chunk = max(1, (1 << 23) // max(1, n * data.dim))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        diff = X[lo:hi, None, :] - X[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        in_ball = d2 <= tau2
        in_ball[np.arange(lo, hi) - lo, np.arange(lo, hi)] = False
        ranks = np.where(in_ball, rank_of[None, :], sentinel)
        best = ranks.min(axis=1)
        rows = best < rank_of[lo:hi]
        parent[lo:hi][rows] = id_by_rank[best[rows]]
    t2 = time.perf_counter()

    dens = DensityEstimate(values=values, estimator_tag="exact", epsilon=0.0, seed=0)
    stage_ms = {"build_ms": 0.0, "kde_ms": (t1 - t0) * 1e3, "graph_ms": (t2 - t1) * 1e3}
    return QuickShiftForest(parent, dens, tau, config=None, stage_ms=stage_ms)


def extract_labels(forest: QuickShiftForest) -> ClusterLabels:
    """Root id for every point by memoized parent-chain traversal."""
    parent = forest.parent
    n = len(parent)
    label = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if label[i] >= 0:
            continue
        path = []
        j = i
        while parent[j] >= 0 and label[j] < 0:
            path.append(j)
            j = parent[j]
            if len(path) > n:
                raise RuntimeError("cycle detected in parent pointers")
        root = j if parent[j] < 0 else label[j]
        label[j] = root
        for p in path:
            label[p] = root
    return ClusterLabels(label=label, num_clusters=int(len(np.unique(label))))


def extract_modes(forest: QuickShiftForest, data: Dataset) -> ModeSet:
    """The forest's roots and their coordinates."""
    ids = forest.roots()
    return ModeSet(ids=ids, coords=data.X[ids].copy())


def check_separation(labels: ClusterLabels, region_a, region_b) -> bool:
    """True iff no point of region_a shares a root with any point of region_b."""
    a = np.asarray(region_a, dtype=np.int64)
    b = np.asarray(region_b, dtype=np.int64)
    if np.intersect1d(a, b).size:
        raise ValueError("regions must be disjoint")
    return not np.intersect1d(labels.label[a], labels.label[b]).size

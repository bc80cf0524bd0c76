"""Topological alignment substrate.

Spreads match likelihood over the prior's support by alternating
neighbourhood averaging with a restart on the prior (the classic
similarity-propagation scheme), then extracts a one-to-one matching by
maximum-weight bipartite rounding. A structural affinity hook lets the
caller reward pairs whose coordinates already sit close under the current
rigid transform, and a few relinearization rounds polish the matching
against the combined objective.

The aligner never matches outside the prior's support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._kernels import sampled_triple_product
from .core import (
    Matching,
    ObjectiveWeights,
    PriorMatrix,
    RigidAlignError,
    RigidGraph,
    RigidTransform,
    edge_overlap,
)

__all__ = [
    "AlignerConfig",
    "SimilarityScores",
    "similarity_propagate",
    "round_matching",
    "align",
    "matching_objective",
]

_HUNGARIAN_CELL_LIMIT = 50_000_000


@dataclass(frozen=True)
class AlignerConfig:
    """Knobs of the propagation-and-rounding substrate.

    damping mixes the topology term against the prior restart; rounding is
    "hungarian", "greedy", or "auto" (hungarian up to hungarian_max_n nodes,
    greedy beyond). refine_rounds relinearizes the overlap term around the
    current matching and re-rounds, keeping improvements only.
    scale_structural rescales the injected structural affinities to the
    magnitude of the propagated scores so coordinate units don't swamp them.
    """

    damping: float = 0.85
    max_sweeps: int = 100
    tol: float = 1e-8
    rounding: str = "auto"
    hungarian_max_n: int = 5000
    refine_rounds: int = 0
    scale_structural: bool = True

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rounding not in ("hungarian", "greedy", "auto"):
            raise ValueError("rounding must be 'hungarian', 'greedy', or 'auto'")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")


@dataclass(frozen=True)
class SimilarityScores:
    """Scores over a fixed sparse support, entries in (i, j) order."""

    shape: tuple[int, int]
    indptr: np.ndarray  # CSR row pointers over the support, length n_a + 1
    cols: np.ndarray
    vals: np.ndarray

    @property
    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr))

    @property
    def nnz(self) -> int:
        return int(self.cols.shape[0])

    def with_vals(self, vals) -> "SimilarityScores":
        vals = np.asarray(vals, dtype=np.float64)
        if vals.shape != self.vals.shape:
            raise ValueError("replacement values must align with the support")
        return SimilarityScores(self.shape, self.indptr, self.cols, vals)


def _sym_normalized(adj):
    """D^{-1/2} A D^{-1/2} as int64/float64 CSR arrays; isolated rows stay zero."""
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    scaled = adj.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :]).tocsr()
    scaled.sort_indices()
    return (scaled.indptr.astype(np.int64), scaled.indices.astype(np.int64),
            scaled.data.astype(np.float64))


def _support_arrays(l: PriorMatrix):
    m = l.matrix
    return (m.indptr.astype(np.int64), m.indices.astype(np.int64),
            m.data.astype(np.float64))


def similarity_propagate(a: RigidGraph, b: RigidGraph, l: PriorMatrix,
                         cfg: AlignerConfig) -> SimilarityScores:
    """Propagate match likelihood over the prior support.

    Iterates s <- damping * normalize(A_n s B_n) + (1 - damping) * l_hat,
    where A_n, B_n are the degree-normalized adjacencies, l_hat is the prior
    normalized to unit sum, and the product is restricted to the support of
    the prior. Stops when the L1 change drops below cfg.tol or after
    cfg.max_sweeps sweeps.
    """
    if l.shape != (a.n, b.n):
        raise ValueError(f"prior shape {l.shape} does not match graphs ({a.n}, {b.n})")
    if l.nnz == 0:
        raise RigidAlignError("prior has no candidate pairs")

    a_indptr, a_indices, a_data = _sym_normalized(a.adjacency())
    b_indptr, b_indices, b_data = _sym_normalized(b.adjacency())
    l_indptr, l_cols, l_vals = _support_arrays(l)

    total = l_vals.sum()
    l_hat = l_vals / total if total > 0 else np.full(l_vals.shape, 1.0 / l_vals.size)

    s = l_hat.copy()
    for _ in range(cfg.max_sweeps):
        t = sampled_triple_product(a_indptr, a_indices, a_data,
                                   b_indptr, b_indices, b_data,
                                   l_indptr, l_cols, s, a.n, b.n)
        mass = t.sum()
        if mass > 0:
            t = t / mass
        s_new = cfg.damping * t + (1.0 - cfg.damping) * l_hat
        delta = np.abs(s_new - s).sum()
        s = s_new
        if delta < cfg.tol:
            break
    return SimilarityScores((a.n, b.n), l_indptr, l_cols, s)


def _round_hungarian(s: SimilarityScores) -> Matching:
    n_a, n_b = s.shape
    if n_a * n_b > _HUNGARIAN_CELL_LIMIT:
        raise RigidAlignError(
            f"dense hungarian rounding on a {n_a} x {n_b} instance would need "
            "too much memory; use greedy rounding")
    w = np.zeros((n_a, n_b))
    w[s.rows, s.cols] = s.vals
    rows, cols = linear_sum_assignment(w, maximize=True)
    picked = w[rows, cols] > 0
    return Matching(np.column_stack([rows[picked], cols[picked]]),
                    w[rows[picked], cols[picked]])


def _round_greedy(s: SimilarityScores) -> Matching:
    rows = s.rows
    order = np.lexsort((s.cols, rows, -s.vals))
    used_a = np.zeros(s.shape[0], dtype=bool)
    used_b = np.zeros(s.shape[1], dtype=bool)
    pairs, weights = [], []
    for p in order:
        v = s.vals[p]
        if v <= 0:
            break
        i, j = rows[p], s.cols[p]
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        pairs.append((i, j))
        weights.append(v)
    return Matching(np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                    np.asarray(weights))


def round_matching(s: SimilarityScores, rounding: str = "hungarian") -> Matching:
    """Extract a one-to-one matching from sparse scores.

    "hungarian" computes a maximum-weight bipartite matching; "greedy"
    repeatedly takes the largest remaining score (ties broken by (i, j)
    lexicographic order). Pairs with nonpositive score are never matched.
    """
    if s.nnz == 0:
        raise RigidAlignError("no scores to round")
    if rounding == "hungarian":
        return _round_hungarian(s)
    if rounding == "greedy":
        return _round_greedy(s)
    raise ValueError(f"unknown rounding rule {rounding!r}")


def _resolve_rounding(cfg: AlignerConfig, n: int) -> str:
    if cfg.rounding == "auto":
        return "hungarian" if n <= cfg.hungarian_max_n else "greedy"
    return cfg.rounding


def _support_keys(s: SimilarityScores) -> np.ndarray:
    return s.rows * np.int64(s.shape[1]) + s.cols


def _lookup(keys: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Positions of query keys inside the sorted support keys, -1 if absent."""
    pos = np.searchsorted(keys, query)
    pos = np.minimum(pos, keys.size - 1)
    hit = keys[pos] == query
    return np.where(hit, pos, -1)


def _overlap_marginals(a: RigidGraph, b: RigidGraph, s: SimilarityScores,
                       m: Matching) -> np.ndarray:
    """Per-support-pair count of A-edges that become B-edges if the pair is added."""
    bk = b.edge_keys()
    if bk.size == 0:
        return np.zeros(s.nnz)
    map_ab = m.to_map(a.n)
    adj = a.adjacency()
    indptr = adj.indptr
    indices = adj.indices
    rows = s.rows
    counts = (indptr[rows + 1] - indptr[rows]).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(s.nnz)
    entry_of_slot = np.repeat(np.arange(s.nnz), counts)
    starts = indptr[rows].astype(np.int64)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    neigh = indices[np.repeat(starts, counts) + offs]
    mapped = map_ab[neigh]
    valid = mapped >= 0
    keys = mapped[valid] * np.int64(b.n) + s.cols[entry_of_slot[valid]]
    pos = np.searchsorted(bk, keys)
    pos = np.minimum(pos, bk.size - 1)
    hits = bk[pos] == keys
    marg = np.bincount(entry_of_slot[valid][hits], minlength=s.nnz)
    return marg.astype(np.float64)


def _structural_affinity(a: RigidGraph, b: RigidGraph, s: SimilarityScores,
                         transform: RigidTransform) -> np.ndarray:
    moved = transform.apply(b.coords)
    return np.einsum("ij,ij->i", a.coords[s.rows], moved[s.cols])


def _matched_sum(s: SimilarityScores, vals: np.ndarray, m: Matching) -> float:
    if m.size == 0:
        return 0.0
    keys = _support_keys(s)
    pos = _lookup(keys, m.pairs[:, 0] * np.int64(s.shape[1]) + m.pairs[:, 1])
    return float(vals[pos[pos >= 0]].sum())


def matching_objective(a: RigidGraph, b: RigidGraph, l: PriorMatrix,
                       w: ObjectiveWeights, m: Matching) -> float:
    """alpha * (prior weight of matched pairs) + beta * edge overlap."""
    lm = l.matrix
    s = SimilarityScores(l.shape, lm.indptr.astype(np.int64),
                         lm.indices.astype(np.int64), lm.data.astype(np.float64))
    return w.alpha * _matched_sum(s, s.vals, m) + w.beta * edge_overlap(a, b, m)


def align(a: RigidGraph, b: RigidGraph, l: PriorMatrix, w: ObjectiveWeights,
          cfg: AlignerConfig, transform: RigidTransform | None = None) -> Matching:
    """Match nodes of `a` to nodes of `b` within the prior's support.

    Propagates similarity, optionally injects the structural affinity
    gamma * <c_a_i, transform(c_b_j)> when a transform is supplied, rounds to
    a matching, then applies cfg.refine_rounds improvement rounds that
    re-round the objective linearized at the current matching.
    """
    scores = similarity_propagate(a, b, l, cfg)
    rounding = _resolve_rounding(cfg, max(a.n, b.n))

    inject = None
    if transform is not None and w.gamma > 0:
        affinity = _structural_affinity(a, b, scores, transform)
        if cfg.scale_structural:
            denom = np.abs(affinity).max()
            ref = scores.vals.max()
            scale = (ref / denom) if denom > 0 and ref > 0 else 1.0
        else:
            scale = 1.0
        inject = w.gamma * scale * affinity

    base = scores.vals if inject is None else scores.vals + inject
    m = round_matching(scores.with_vals(base), rounding)

    if cfg.refine_rounds == 0:
        return m

    l_vals = _support_arrays(l)[2]

    def combined(mm: Matching) -> float:
        val = w.alpha * _matched_sum(scores, l_vals, mm) + w.beta * edge_overlap(a, b, mm)
        if inject is not None:
            val += _matched_sum(scores, inject, mm)
        return val

    best = m
    best_obj = combined(m)
    for _ in range(cfg.refine_rounds):
        lin = w.alpha * l_vals + 2.0 * w.beta * _overlap_marginals(a, b, scores, best)
        if inject is not None:
            lin = lin + inject
        cand = round_matching(scores.with_vals(lin), rounding)
        cand_obj = combined(cand)
        if cand_obj > best_obj + 1e-12:
            best, best_obj = cand, cand_obj
        else:
            break
    return best

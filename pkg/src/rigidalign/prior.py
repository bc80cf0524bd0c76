"""Candidate-match priors built from node coordinates.

Three proximity variants (binary threshold, Gaussian threshold, k-nearest
neighbours with Gaussian weights) plus a coordinate-frame-free bootstrap
based on correlating per-node distance-profile histograms.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .core import PriorMatrix, RigidGraph

__all__ = [
    "prior_epsilon_binary",
    "prior_epsilon_gaussian",
    "prior_knn",
    "bootstrap_prior",
]

# brute force below this size, kd-tree above; both return identical entries
_BRUTE_FORCE_MAX = 2000

_ROW_BLOCK = 512


def _sq_dists(c_a, c_b):
    diff = c_a[:, None, :] - c_b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _coords(c):
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] == 0:
        raise ValueError("coordinates must be a nonempty n x d matrix")
    return c


def _threshold_prior(c_a, c_b, epsilon, gaussian):
    c_a, c_b = _coords(c_a), _coords(c_b)
    if c_a.shape[1] != c_b.shape[1]:
        raise ValueError("coordinate dimensions differ")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rows, cols, vals = [], [], []
    for start in range(0, c_a.shape[0], _ROW_BLOCK):
        block = _sq_dists(c_a[start:start + _ROW_BLOCK], c_b)
        r, c = np.nonzero(block <= epsilon)
        rows.append(r + start)
        cols.append(c)
        vals.append(np.exp(-block[r, c]) if gaussian else np.ones(r.size))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    shape = (c_a.shape[0], c_b.shape[0])
    return PriorMatrix(sp.coo_matrix((vals, (rows, cols)), shape=shape))


def prior_epsilon_binary(c_a, c_b, epsilon: float) -> PriorMatrix:
    """Weight 1 for every pair within squared distance epsilon (inclusive)."""
    return _threshold_prior(c_a, c_b, epsilon, gaussian=False)


def prior_epsilon_gaussian(c_a, c_b, epsilon: float) -> PriorMatrix:
    """Weight exp(-squared distance) for pairs within squared distance epsilon."""
    return _threshold_prior(c_a, c_b, epsilon, gaussian=True)


def _knn_cutoffs_brute(c_a, c_b, k):
    d2 = _sq_dists(c_a, c_b)
    cut = np.partition(d2, k - 1, axis=1)[:, k - 1]
    return d2, cut


def prior_knn(c_a, c_b, k: int) -> PriorMatrix:
    """Gaussian-weighted entries for each A-node's k nearest B-nodes.

    The cutoff is the squared distance of the k-th nearest neighbour; ties
    at the cutoff are all retained, so rows can exceed k entries.
    """
    c_a, c_b = _coords(c_a), _coords(c_b)
    if c_a.shape[1] != c_b.shape[1]:
        raise ValueError("coordinate dimensions differ")
    n_a, n_b = c_a.shape[0], c_b.shape[0]
    if not 1 <= k <= n_b:
        raise ValueError(f"k must be in [1, {n_b}], got {k}")

    rows, cols, vals = [], [], []
    if max(n_a, n_b) <= _BRUTE_FORCE_MAX:
        for start in range(0, n_a, _ROW_BLOCK):
            d2 = _sq_dists(c_a[start:start + _ROW_BLOCK], c_b)
            cut = np.partition(d2, k - 1, axis=1)[:, k - 1]
            r, c = np.nonzero(d2 <= cut[:, None])
            rows.append(r + start)
            cols.append(c)
            vals.append(np.exp(-d2[r, c]))
    else:
        tree = cKDTree(c_b)
        dist, _ = tree.query(c_a, k=k)
        kth = dist[:, -1] if k > 1 else dist.ravel()
        # inflate slightly, then re-filter with the exact same arithmetic as
        # the brute-force path so both yield identical entry sets
        radius = kth * (1 + 1e-9) + 1e-12
        for i in range(n_a):
            cand = np.asarray(sorted(tree.query_ball_point(c_a[i], radius[i])), dtype=np.int64)
            diff = c_b[cand] - c_a[i]
            d2 = np.einsum("ij,ij->i", diff, diff)
            cut = np.partition(d2, k - 1)[k - 1] if d2.size >= k else d2.max()
            keep = d2 <= cut
            rows.append(np.full(keep.sum(), i, dtype=np.int64))
            cols.append(cand[keep])
            vals.append(np.exp(-d2[keep]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return PriorMatrix(sp.coo_matrix((vals, (rows, cols)), shape=(n_a, n_b)))


def distance_profiles(coords, bins: int) -> np.ndarray:
    """Per-node histogram of distances to every other node of the same graph.

    Bins are equal-width over [0, max pairwise distance]. Returns an
    n x bins float array of raw counts.
    """
    coords = _coords(coords)
    n = coords.shape[0]
    d = np.sqrt(np.maximum(_sq_dists(coords, coords), 0.0))
    diameter = float(d.max())
    profiles = np.zeros((n, bins), dtype=np.float64)
    if diameter == 0.0:
        return profiles  # all points coincide; caller handles the flat rows
    edges = np.linspace(0.0, diameter, bins + 1)
    for i in range(n):
        others = np.delete(d[i], i)
        profiles[i], _ = np.histogram(others, bins=edges)
    return profiles


def bootstrap_prior(a: RigidGraph, b: RigidGraph, bins: int = 32, k: int = 10) -> PriorMatrix:
    """Initial prior from distance-profile similarity.

    Distance profiles are invariant to rigid motions of either graph, so this
    needs no shared coordinate frame. Candidate pairs are scored by Pearson
    correlation of their profiles; the top-k candidates per A-node are kept
    (ties at the k-th score included) with weight max(correlation, 0).
    Nodes whose profile is flat get a uniform row instead.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    if not 1 <= k <= b.n:
        raise ValueError(f"k must be in [1, {b.n}], got {k}")

    pa = distance_profiles(a.coords, bins)
    pb = distance_profiles(b.coords, bins)

    pa_c = pa - pa.mean(axis=1, keepdims=True)
    pb_c = pb - pb.mean(axis=1, keepdims=True)
    sa = np.linalg.norm(pa_c, axis=1)
    sb = np.linalg.norm(pb_c, axis=1)
    flat_a = sa <= 0.0
    flat_b = sb <= 0.0
    saned = np.where(flat_a, 1.0, sa)
    sbned = np.where(flat_b, 1.0, sb)
    corr = (pa_c / saned[:, None]) @ (pb_c / sbned[:, None]).T
    corr[flat_a, :] = 0.0
    corr[:, flat_b] = 0.0

    uniform = 1.0 / b.n
    rows, cols, vals = [], [], []
    all_cols = np.arange(b.n, dtype=np.int64)
    for i in range(a.n):
        if flat_a[i]:
            rows.append(np.full(b.n, i, dtype=np.int64))
            cols.append(all_cols)
            vals.append(np.full(b.n, uniform))
            continue
        row = corr[i]
        cut = np.partition(row, b.n - k)[b.n - k]
        keep = np.nonzero(row >= cut)[0]
        rows.append(np.full(keep.size, i, dtype=np.int64))
        cols.append(keep)
        vals.append(np.maximum(row[keep], 0.0))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return PriorMatrix(sp.coo_matrix((vals, (rows, cols)), shape=(a.n, b.n)))

"""Synthetic spatial graph generation and perturbation.

Nodes are placed on an evenly spaced grid by independent coin tosses;
edges come from either preferential attachment or the G(n, p) model.
Perturbation rotates, translates, and jitters the coordinates, rewires a
controlled fraction of edges, and scrambles node labels, returning the
ground-truth correspondence alongside the perturbed graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Matching, RigidGraph

__all__ = [
    "PreferentialAttachment",
    "Gnp",
    "GenConfig",
    "PerturbConfig",
    "generate",
    "perturb",
    "rotation_matrix",
]


@dataclass(frozen=True)
class PreferentialAttachment:
    """Each arriving node attaches to m existing nodes picked by degree."""

    m: int = 4
    n0: int = 5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n0 < self.m:
            raise ValueError("seed size n0 must be at least m")


@dataclass(frozen=True)
class Gnp:
    """Every node pair is an edge independently with probability p."""

    p: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class GenConfig:
    grid_extent: int = 10
    dim: int = 3
    occupancy_p: float = 0.5
    model: PreferentialAttachment | Gnp = PreferentialAttachment()
    attach_order: str = "random"  # "random" | "axis_scan"
    seed: int = 0

    def __post_init__(self):
        if self.grid_extent < 1 or self.dim < 1:
            raise ValueError("grid_extent and dim must be positive")
        if not 0.0 < self.occupancy_p <= 1.0:
            raise ValueError("occupancy_p must lie in (0, 1]")
        if self.attach_order not in ("random", "axis_scan"):
            raise ValueError("attach_order must be 'random' or 'axis_scan'")


def _grid_points(extent: int, dim: int) -> np.ndarray:
    axes = [np.arange(extent, dtype=np.float64)] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts.reshape(-1, dim)


def _gnp_edges(n: int, p: float, rng) -> np.ndarray:
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    return np.column_stack([iu[mask], ju[mask]]).astype(np.int64)


def _pa_edges(n: int, m: int, n0: int, order: np.ndarray, rng) -> np.ndarray:
    edges = []
    repeated = []  # node index repeated once per incident edge
    seed_size = min(n0, n)
    for idx in range(1, seed_size):
        u, v = int(order[idx - 1]), int(order[idx])
        edges.append((u, v))
        repeated.extend((u, v))
    for idx in range(seed_size, n):
        u = int(order[idx])
        targets: list[int] = []
        want = min(m, idx)
        while len(targets) < want:
            if repeated:
                cand = repeated[int(rng.integers(len(repeated)))]
            else:
                cand = int(order[int(rng.integers(idx))])
            if cand not in targets:
                targets.append(cand)
        for v in targets:
            edges.append((u, v))
            repeated.extend((u, v))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def generate(cfg: GenConfig) -> RigidGraph:
    """Sample a spatial graph: grid placement, then model-driven wiring."""
    rng = np.random.default_rng(cfg.seed)
    pts = _grid_points(cfg.grid_extent, cfg.dim)
    occupied = rng.random(pts.shape[0]) < cfg.occupancy_p
    coords = pts[occupied]
    n = coords.shape[0]
    if n == 0:
        raise ValueError("no nodes were placed; raise occupancy_p or the grid size")

    if isinstance(cfg.model, Gnp):
        edges = _gnp_edges(n, cfg.model.p, rng)
    else:
        order = rng.permutation(n) if cfg.attach_order == "random" else np.arange(n)
        edges = _pa_edges(n, cfg.model.m, cfg.model.n0, order, rng)
    return RigidGraph(coords, edges)


def rotation_matrix(dim: int, theta_deg) -> np.ndarray:
    """Rotation for row vectors: one angle per axis in 3D, one in 2D.

    In 3D the angles (tx, ty, tz) compose as Rz @ Ry @ Rx acting on the
    right of row vectors. A scalar angle applies to every axis.
    """
    if dim == 2:
        t = float(np.atleast_1d(theta_deg)[0])
        r = np.radians(t)
        c, s = np.cos(r), np.sin(r)
        return np.array([[c, s], [-s, c]])
    if dim == 3:
        angles = np.asarray(theta_deg, dtype=np.float64)
        if angles.ndim == 0:
            angles = np.repeat(angles, 3)
        if angles.shape != (3,):
            raise ValueError("3D rotation needs one angle or three per-axis angles")
        tx, ty, tz = np.radians(angles)

        def _rx(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[1, 0, 0], [0, c, s], [0, -s, c]])

        def _ry(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]])

        def _rz(t):
            c, s = np.cos(t), np.sin(t)
            return np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])

        return _rz(tz) @ _ry(ty) @ _rx(tx)
    t = np.atleast_1d(np.asarray(theta_deg, dtype=np.float64))
    if np.any(t != 0.0):
        raise ValueError(f"rotation is only defined for 2D/3D, not dim={dim}")
    return np.eye(dim)


@dataclass(frozen=True)
class PerturbConfig:
    """Noise model for deriving the second graph of an alignment pair.

    theta_deg rotates about each axis (scalar: same angle everywhere).
    translation is "random", "none", or an explicit vector. Node jitter is
    uniform in [-s, s] per coordinate with s = node_noise_scale times the
    physical extent. Existing edges drop independently with p_delete; the
    number of added edges is Binomial(#absent pairs, p_add), sampled
    uniformly among pairs absent from the input graph.
    """

    theta_deg: float | tuple = 0.0
    translation: str | tuple = "random"
    node_noise_scale: float = 0.0
    p_delete: float = 0.0
    p_add: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("p_delete", "p_add"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.node_noise_scale < 0:
            raise ValueError("node_noise_scale must be nonnegative")
        if isinstance(self.translation, str) and self.translation not in ("random", "none"):
            raise ValueError("translation must be 'random', 'none', or a vector")


def _sample_absent_pairs(n: int, count: int, present_keys: np.ndarray, rng) -> np.ndarray:
    """Uniformly sample `count` distinct node pairs absent from present_keys."""
    chosen: dict[int, tuple[int, int]] = {}
    while len(chosen) < count:
        need = count - len(chosen)
        u = rng.integers(0, n, size=max(4 * need, 64))
        v = rng.integers(0, n, size=u.size)
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        ok = lo != hi
        lo, hi = lo[ok], hi[ok]
        keys = lo * n + hi
        if present_keys.size:
            pos = np.searchsorted(present_keys, keys)
            pos = np.minimum(pos, present_keys.size - 1)
            fresh = present_keys[pos] != keys
        else:
            fresh = np.ones(keys.size, dtype=bool)
        for key, a, b in zip(keys[fresh], lo[fresh], hi[fresh]):
            if len(chosen) == count:
                break
            chosen.setdefault(int(key), (int(a), int(b)))
    return np.asarray(sorted(chosen.values()), dtype=np.int64).reshape(-1, 2)


def perturb(g: RigidGraph, cfg: PerturbConfig) -> tuple[RigidGraph, Matching]:
    """Produce a noisy, relabeled copy of `g` plus the true correspondence.

    Returns (perturbed graph, truth) where truth pairs each node of `g`
    with its counterpart in the perturbed graph.
    """
    rng = np.random.default_rng(cfg.seed)
    n = g.n
    extent = g.extent()

    coords = g.coords @ rotation_matrix(g.dim, cfg.theta_deg)
    if isinstance(cfg.translation, str):
        if cfg.translation == "random":
            coords = coords + rng.uniform(-0.5, 0.5, g.dim) * max(extent, 1.0)
    else:
        vec = np.asarray(cfg.translation, dtype=np.float64)
        if vec.shape != (g.dim,):
            raise ValueError(f"translation vector must have length {g.dim}")
        coords = coords + vec
    if cfg.node_noise_scale > 0:
        s = cfg.node_noise_scale * extent
        coords = coords + rng.uniform(-s, s, size=coords.shape)

    edges = g.edges
    if cfg.p_delete > 0 and edges.shape[0]:
        edges = edges[rng.random(edges.shape[0]) >= cfg.p_delete]
    if cfg.p_add > 0 and n >= 2:
        total_pairs = n * (n - 1) // 2
        n_absent = total_pairs - g.num_edges
        count = int(rng.binomial(n_absent, cfg.p_add)) if n_absent > 0 else 0
        if count:
            present = np.sort(g.edges[:, 0] * n + g.edges[:, 1])
            added = _sample_absent_pairs(n, count, present, rng)
            edges = np.concatenate([edges, added], axis=0)

    perm = rng.permutation(n)
    new_coords = np.empty_like(coords)
    new_coords[perm] = coords
    new_edges = perm[edges] if edges.size else edges
    node_ids = None
    if g.node_ids is not None:
        ids = [None] * n
        for old, new in enumerate(perm):
            ids[new] = g.node_ids[old]
        node_ids = ids
    truth = Matching(np.column_stack([np.arange(n, dtype=np.int64), perm]))
    return RigidGraph(new_coords, new_edges, node_ids), truth

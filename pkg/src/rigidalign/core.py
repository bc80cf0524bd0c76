"""Core domain types: spatial graphs, matchings, rigid transforms, priors.

All types validate their invariants on construction and are immutable
afterwards (NumPy buffers are marked read-only), so instances can be shared
freely across threads and worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "RigidAlignError",
    "InvalidMatchingError",
    "DegenerateConfigurationError",
    "GraphFormatError",
    "RigidGraph",
    "Matching",
    "RigidTransform",
    "PriorMatrix",
    "ObjectiveWeights",
    "IterationRecord",
    "AlignmentReport",
    "edge_overlap",
    "overlap_fraction",
    "node_overlap",
]

ORTHOGONALITY_TOL = 1e-9


class RigidAlignError(Exception):
    """Base class for all library errors."""


class InvalidMatchingError(RigidAlignError):
    """Matching refers to node indices outside the graphs it is applied to."""


class DegenerateConfigurationError(RigidAlignError):
    """Point configuration does not determine a unique rigid transform."""


class GraphFormatError(RigidAlignError):
    """A graph/matching/transform file failed to parse or validate."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class RigidGraph:
    """Undirected graph whose nodes carry d-dimensional coordinates.

    Edges are stored canonically as (i, j) pairs with i < j, sorted
    lexicographically; the adjacency is implied symmetric. Coordinates are
    an n x d float array in shared length units.
    """

    def __init__(self, coords, edges, node_ids=None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[0] == 0 or coords.shape[1] == 0:
            raise ValueError(f"coords must be a nonempty n x d matrix, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords contain non-finite values")
        n = coords.shape[0]

        edges = np.asarray(edges, dtype=np.int64)
        if edges.size == 0:
            edges = np.empty((0, 2), dtype=np.int64)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ValueError("edges must be an m x 2 array of node index pairs")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range [0, n)")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            lo = edges.min(axis=1)
            hi = edges.max(axis=1)
            edges = np.column_stack([lo, hi])
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            if np.any((np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)):
                raise ValueError("duplicate edges are not allowed")
        if node_ids is not None:
            node_ids = tuple(str(s) for s in node_ids)
            if len(node_ids) != n:
                raise ValueError("node_ids length must equal the node count")

        self.coords = _readonly(coords)
        self.edges = _readonly(edges)
        self.node_ids = node_ids
        self._adjacency = None
        self._edge_keys = None

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form (cached)."""
        if self._adjacency is None:
            e = self.edges
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            data = np.ones(rows.shape[0], dtype=np.float64)
            adj = sp.coo_matrix((data, (rows, cols)), shape=(self.n, self.n)).tocsr()
            adj.sort_indices()
            self._adjacency = adj
        return self._adjacency

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys u*n+v for both directions of every edge (cached)."""
        if self._edge_keys is None:
            e = self.edges
            keys = np.concatenate([e[:, 0] * self.n + e[:, 1], e[:, 1] * self.n + e[:, 0]])
            self._edge_keys = _readonly(np.sort(keys))
        return self._edge_keys

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edges.ravel(), 1)
        return deg

    def extent(self) -> float:
        """Largest coordinate range over the axes (the physical size)."""
        if self.n == 1:
            return 0.0
        return float((self.coords.max(axis=0) - self.coords.min(axis=0)).max())

    def with_coords(self, coords) -> "RigidGraph":
        """Same topology with new coordinates (edge array is shared)."""
        g = RigidGraph.__new__(RigidGraph)
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != self.coords.shape:
            raise ValueError("replacement coords must keep the n x d shape")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords contain non-finite values")
        g.coords = _readonly(coords)
        g.edges = self.edges
        g.node_ids = self.node_ids
        g._adjacency = self._adjacency
        g._edge_keys = self._edge_keys
        return g

    def __repr__(self):
        return f"RigidGraph(n={self.n}, dim={self.dim}, edges={self.num_edges})"


class Matching:
    """One-to-one partial correspondence between the nodes of two graphs.

    Stored as pairs (i in A, j in B) sorted by i; no i and no j repeats.
    """

    def __init__(self, pairs, weights=None):
        pairs = np.asarray(pairs, dtype=np.int64)
        if pairs.size == 0:
            pairs = np.empty((0, 2), dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("pairs must be an m x 2 array")
        if pairs.size and pairs.min() < 0:
            raise ValueError("negative node index in matching")
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (pairs.shape[0],):
                raise ValueError("weights must align with pairs")
        order = np.argsort(pairs[:, 0], kind="stable")
        pairs = pairs[order]
        if weights is not None:
            weights = weights[order]
        if pairs.size:
            if np.unique(pairs[:, 0]).size != pairs.shape[0]:
                raise ValueError("matching repeats a left-side node")
            if np.unique(pairs[:, 1]).size != pairs.shape[0]:
                raise ValueError("matching repeats a right-side node")
        self.pairs = _readonly(pairs)
        self.weights = None if weights is None else _readonly(weights)

    @classmethod
    def identity(cls, n: int) -> "Matching":
        idx = np.arange(n, dtype=np.int64)
        return cls(np.column_stack([idx, idx]))

    @property
    def size(self) -> int:
        return self.pairs.shape[0]

    def left(self) -> np.ndarray:
        return self.pairs[:, 0]

    def right(self) -> np.ndarray:
        return self.pairs[:, 1]

    def to_map(self, n_left: int) -> np.ndarray:
        """Array of length n_left mapping i -> j, with -1 for unmatched."""
        if self.size and self.pairs[:, 0].max() >= n_left:
            raise InvalidMatchingError("matching index exceeds left graph size")
        m = np.full(n_left, -1, dtype=np.int64)
        m[self.pairs[:, 0]] = self.pairs[:, 1]
        return m

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(map(tuple, self.pairs))

    def __eq__(self, other):
        if not isinstance(other, Matching):
            return NotImplemented
        return self.pairs.shape == other.pairs.shape and bool(np.all(self.pairs == other.pairs))

    def __hash__(self):
        return hash(self.pairs.tobytes())

    def __repr__(self):
        return f"Matching(size={self.size})"


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion in row-vector convention: x -> x @ rotation + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        tr = np.asarray(self.translation, dtype=np.float64)
        if rot.ndim != 2 or rot.shape[0] != rot.shape[1]:
            raise ValueError("rotation must be square")
        d = rot.shape[0]
        if tr.shape != (d,):
            raise ValueError("translation must be a length-d vector")
        if not np.allclose(rot.T @ rot, np.eye(d), atol=ORTHOGONALITY_TOL):
            raise ValueError("rotation is not orthogonal within tolerance")
        if abs(np.linalg.det(rot) - 1.0) > ORTHOGONALITY_TOL:
            raise ValueError("rotation must be proper (det = +1)")
        object.__setattr__(self, "rotation", _readonly(rot))
        object.__setattr__(self, "translation", _readonly(tr))

    @classmethod
    def identity(cls, dim: int) -> "RigidTransform":
        return cls(np.eye(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.rotation.shape[0]

    def apply(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValueError(f"coords must be n x {self.dim}")
        return coords @ self.rotation + self.translation

    def compose(self, after: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying self first, then `after`."""
        if after.dim != self.dim:
            raise ValueError("dimension mismatch in composition")
        return RigidTransform(self.rotation @ after.rotation,
                              self.translation @ after.rotation + after.translation)

    def inverse(self) -> "RigidTransform":
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -self.translation @ rot_inv)

    def homogeneous(self) -> np.ndarray:
        """(d+1) x (d+1) block matrix [[R, 0], [t, 1]]."""
        d = self.dim
        h = np.zeros((d + 1, d + 1))
        h[:d, :d] = self.rotation
        h[d, :d] = self.translation
        h[d, d] = 1.0
        return h


class PriorMatrix:
    """Sparse nonnegative candidate-match weights between two node sets.

    A present entry (i, j), even with weight zero, declares the pair an
    admissible match; missing entries are forbidden. Entries are kept in
    CSR form with sorted indices, so iteration order is (i, j) lexicographic.
    """

    def __init__(self, matrix: sp.spmatrix):
        m = matrix.tocsr(copy=True)
        m.sort_indices()
        if m.data.size and (not np.all(np.isfinite(m.data)) or m.data.min() < 0):
            raise ValueError("prior weights must be finite and nonnegative")
        self.matrix = m

    @classmethod
    def from_entries(cls, rows, cols, weights, shape) -> "PriorMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        key = rows * shape[1] + cols
        if np.unique(key).size != key.size:
            raise ValueError("duplicate prior entries")
        return cls(sp.coo_matrix((weights, (rows, cols)), shape=shape))

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.indptr[-1]

    def support(self):
        """(rows, cols) of the entries in (i, j) lexicographic order."""
        coo = self.matrix.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64)

    def values(self) -> np.ndarray:
        return self.matrix.data.astype(np.float64, copy=True)

    def entries(self):
        rows, cols = self.support()
        return list(zip(rows.tolist(), cols.tolist(), self.matrix.data.tolist()))

    def __repr__(self):
        return f"PriorMatrix(shape={self.shape}, nnz={self.nnz})"


@dataclass(frozen=True)
class ObjectiveWeights:
    """Relative weights of the prior, overlap, and structural objective terms."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative")
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            raise ValueError("at least one objective weight must be positive")


@dataclass(frozen=True)
class IterationRecord:
    """Metrics of one alignment iteration."""

    iteration: int
    matched: int
    edge_overlap: int
    overlap_fraction: float
    node_overlap: float | None
    rigidity_residual: float
    objective_prior_term: float
    objective_overlap_term: float
    objective_structural_term: float


@dataclass(frozen=True)
class AlignmentReport:
    """Outcome of an alignment run.

    ``final_matching`` is the matching of the last executed iteration;
    ``best_matching`` maximizes edge overlap over all iterations (they differ
    only if overlap regressed). ``final_transform`` composes every applied
    per-iteration transform; ``best_transform`` stops at ``best_iteration``.
    """

    iterations: tuple[IterationRecord, ...]
    final_matching: Matching
    best_matching: Matching
    best_iteration: int
    final_transform: RigidTransform
    best_transform: RigidTransform
    converged: bool
    reason: str  # "threshold" or "max_iters"

    def __post_init__(self):
        if self.reason not in ("threshold", "max_iters"):
            raise ValueError("reason must be 'threshold' or 'max_iters'")


def _check_matching(a: RigidGraph, b: RigidGraph, m: Matching):
    if m.size == 0:
        return
    if m.pairs[:, 0].max() >= a.n or m.pairs[:, 1].max() >= b.n:
        raise InvalidMatchingError(
            f"matching indices exceed graph sizes (n_a={a.n}, n_b={b.n})")


def edge_overlap(a: RigidGraph, b: RigidGraph, m: Matching) -> int:
    """Number of ordered edge pairs conserved under the matching.

    Counts pairs (i, j) with an edge i-j in `a` and an edge m(i)-m(j) in `b`,
    in both orientations, so each conserved undirected edge contributes 2.
    Equals the inner product of A with X B X^T for the 0/1 matrices.
    """
    from ._kernels import count_mapped_edges

    _check_matching(a, b, m)
    if m.size == 0 or a.num_edges == 0 or b.num_edges == 0:
        return 0
    return int(count_mapped_edges(a.edges, m.to_map(a.n), b.edge_keys(), b.n))


def overlap_fraction(a: RigidGraph, b: RigidGraph, m: Matching) -> float:
    """Edge overlap normalized to [0, 1] by 2 * min(|E_a|, |E_b|)."""
    denom = 2 * min(a.num_edges, b.num_edges)
    if denom == 0:
        return 0.0
    return edge_overlap(a, b, m) / denom


def node_overlap(m: Matching, truth: Matching) -> float:
    """Fraction of the ground-truth pairs reproduced by the matching."""
    n = truth.size
    if n == 0:
        raise ValueError("ground-truth matching is empty")
    if truth.size and np.unique(truth.pairs[:, 0]).size != n:
        raise ValueError("ground truth must be a full one-to-one correspondence")
    truth_map = np.full(int(truth.pairs[:, 0].max()) + 1, -1, dtype=np.int64)
    truth_map[truth.pairs[:, 0]] = truth.pairs[:, 1]
    if m.size == 0:
        return 0.0
    if m.pairs[:, 0].max() >= truth_map.size:
        raise InvalidMatchingError("matching index outside the ground-truth domain")
    hits = np.count_nonzero(truth_map[m.pairs[:, 0]] == m.pairs[:, 1])
    return hits / n

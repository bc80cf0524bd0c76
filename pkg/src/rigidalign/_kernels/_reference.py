"""Pure NumPy/SciPy implementations of the hot kernels.

Used when the compiled extension is unavailable (or disabled via the
RIGIDALIGN_PURE_PYTHON environment variable). Semantics match
``_speedups`` exactly; floating-point sums may differ by rounding order.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def sampled_triple_product(a_indptr, a_indices, a_data,
                           b_indptr, b_indices, b_data,
                           l_indptr, l_indices, s_vals,
                           n_a, n_b):
    """Entries of (A @ S @ B) at the support positions of S.

    A is n_a x n_a CSR, B is n_b x n_b CSR (both symmetric), and S is a
    sparse n_a x n_b matrix stored on a fixed support (CSR structure
    l_indptr/l_indices with values s_vals). Returns the values of the
    product sampled on that same support, aligned with s_vals.
    """
    if l_indices.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    a = sp.csr_matrix((a_data, a_indices, a_indptr), shape=(n_a, n_a))
    b = sp.csr_matrix((b_data, b_indices, b_indptr), shape=(n_b, n_b))
    s = sp.csr_matrix((s_vals, l_indices, l_indptr), shape=(n_a, n_b))
    m = (a @ s) @ b
    m = m.tocsr()
    rows = np.repeat(np.arange(n_a), np.diff(l_indptr))
    sampled = np.asarray(m[rows, l_indices]).ravel()
    return np.ascontiguousarray(sampled, dtype=np.float64)


def count_mapped_edges(edges_a, map_ab, b_keys, n_b):
    """Ordered count of edges of A conserved under the node map.

    edges_a holds undirected pairs (u, v); map_ab maps A-node -> B-node with
    -1 for unmatched; b_keys is the sorted array of directed B edge keys
    i*n_b + j. Each conserved undirected edge counts twice.
    """
    if edges_a.shape[0] == 0 or b_keys.shape[0] == 0:
        return 0
    mu = map_ab[edges_a[:, 0]]
    mv = map_ab[edges_a[:, 1]]
    both = (mu >= 0) & (mv >= 0)
    if not np.any(both):
        return 0
    keys = mu[both] * np.int64(n_b) + mv[both]
    pos = np.searchsorted(b_keys, keys)
    pos = np.minimum(pos, b_keys.shape[0] - 1)
    hits = np.count_nonzero(b_keys[pos] == keys)
    return 2 * int(hits)

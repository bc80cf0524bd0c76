# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the similarity-propagation sweep and overlap counting."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sampled_triple_product(const cnp.int64_t[::1] a_indptr, const cnp.int64_t[::1] a_indices,
                           const cnp.float64_t[::1] a_data,
                           const cnp.int64_t[::1] b_indptr, const cnp.int64_t[::1] b_indices,
                           const cnp.float64_t[::1] b_data,
                           const cnp.int64_t[::1] l_indptr, const cnp.int64_t[::1] l_indices,
                           const cnp.float64_t[::1] s_vals,
                           Py_ssize_t n_a, Py_ssize_t n_b):
    """Entries of (A @ S @ B) sampled at the support positions of S.

    Same contract as the NumPy reference: A, B symmetric CSR; S lives on the
    fixed support given by l_indptr/l_indices with values s_vals.
    """
    out_arr = np.zeros(s_vals.shape[0], dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    scratch_arr = np.zeros(n_b, dtype=np.float64)
    cdef cnp.float64_t[::1] scratch = scratch_arr
    seen_arr = np.zeros(n_b, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    touched_arr = np.empty(n_b, dtype=np.int64)
    cdef cnp.int64_t[::1] touched = touched_arr

    cdef Py_ssize_t i, p, q, r, k, l, j, n_touched
    cdef cnp.float64_t a_ik, acc

    with nogil:
        for i in range(n_a):
            if l_indptr[i] == l_indptr[i + 1]:
                continue
            # scratch <- row i of (A @ S); track touched columns for cheap reset
            n_touched = 0
            for p in range(a_indptr[i], a_indptr[i + 1]):
                k = a_indices[p]
                a_ik = a_data[p]
                for q in range(l_indptr[k], l_indptr[k + 1]):
                    l = l_indices[q]
                    if seen[l] == 0:
                        seen[l] = 1
                        touched[n_touched] = l
                        n_touched += 1
                    scratch[l] += a_ik * s_vals[q]
            # out entries for row i: dot the scratch row with B columns
            for p in range(l_indptr[i], l_indptr[i + 1]):
                j = l_indices[p]
                acc = 0.0
                for r in range(b_indptr[j], b_indptr[j + 1]):
                    acc += scratch[b_indices[r]] * b_data[r]
                out[p] = acc
            for p in range(n_touched):
                scratch[touched[p]] = 0.0
                seen[touched[p]] = 0
    return out_arr


def count_mapped_edges(const cnp.int64_t[:, ::1] edges_a, const cnp.int64_t[::1] map_ab,
                       const cnp.int64_t[::1] b_keys, Py_ssize_t n_b):
    """Ordered count of A edges conserved under the node map (x2 per edge)."""
    cdef Py_ssize_t m = edges_a.shape[0]
    cdef Py_ssize_t nk = b_keys.shape[0]
    cdef Py_ssize_t e, lo, hi, mid
    cdef cnp.int64_t mu, mv, key
    cdef long count = 0
    if nk == 0:
        return 0
    with nogil:
        for e in range(m):
            mu = map_ab[edges_a[e, 0]]
            mv = map_ab[edges_a[e, 1]]
            if mu < 0 or mv < 0:
                continue
            key = mu * n_b + mv
            lo = 0
            hi = nk
            while lo < hi:
                mid = (lo + hi) >> 1
                if b_keys[mid] < key:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < nk and b_keys[lo] == key:
                count += 2
    return count

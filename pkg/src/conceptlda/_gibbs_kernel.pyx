# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled collapsed Gibbs sweep.

Arithmetic order matches ``_fallback.gibbs_sweep`` exactly so both backends
produce identical chains for the same uniforms.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def gibbs_sweep(const int[::1] words, const int[::1] docs, int[::1] z,
                long long[:, ::1] ndk, long long[:, ::1] nkw, long long[::1] nk,
                double alpha, double beta, const double[::1] uniforms):
    cdef Py_ssize_t n_tok = words.shape[0]
    cdef Py_ssize_t K = nk.shape[0]
    cdef double vbeta = nkw.shape[1] * beta
    cdef double[::1] cum = np.empty(K, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef int w, d, k
    cdef double total, u
    with nogil:
        for i in range(n_tok):
            w = words[i]
            d = docs[i]
            k = z[i]
            ndk[d, k] -= 1
            nkw[k, w] -= 1
            nk[k] -= 1
            total = 0.0
            for j in range(K):
                total += (nkw[j, w] + beta) / (nk[j] + vbeta) * (ndk[d, j] + alpha)
                cum[j] = total
            u = uniforms[i] * total
            k = 0
            while k < K - 1 and cum[k] <= u:
                k += 1
            z[i] = k
            ndk[d, k] += 1
            nkw[k, w] += 1
            nk[k] += 1

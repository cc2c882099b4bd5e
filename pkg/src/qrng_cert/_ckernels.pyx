# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay call-compatible with ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_parityll(unsigned long long) nogil


def toeplitz_direct(const uint64_t[::1] seed_words, const uint64_t[::1] xrev_words,
                    Py_ssize_t ell):
    """Row parities of a GF(2) Toeplitz matrix against a packed input.

    Row ``i`` is the seed window starting at bit ``i``; ``xrev_words`` holds the
    input bits in reversed order, zero padded to whole words.
    """
    cdef Py_ssize_t nw = xrev_words.shape[0]
    if seed_words.shape[0] < ((ell - 1) >> 6) + nw + 1:
        raise ValueError("seed_words too short for requested rows")
    out = np.zeros(ell, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    cdef Py_ssize_t i, k, w
    cdef unsigned int b
    cdef uint64_t acc, lo, hi
    with nogil:
        for i in range(ell):
            w = i >> 6
            b = i & 63
            acc = 0
            if b == 0:
                for k in range(nw):
                    acc ^= seed_words[w + k] & xrev_words[k]
            else:
                for k in range(nw):
                    lo = seed_words[w + k] >> b
                    hi = seed_words[w + k + 1] << (64 - b)
                    acc ^= (lo | hi) & xrev_words[k]
            o[i] = __builtin_parityll(acc)
    return out


def compositions(Py_ssize_t n, Py_ssize_t d):
    """All ``d``-part weak compositions of ``n`` in lexicographic order."""
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    from math import comb
    cdef Py_ssize_t total = comb(n + d - 1, d - 1)
    out = np.zeros((total, d), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef int64_t[::1] cur = np.zeros(d, dtype=np.int64)
    cdef Py_ssize_t row, j, rest, k
    cur[d - 1] = n
    with nogil:
        for row in range(total):
            for j in range(d):
                o[row, j] = cur[j]
            if row + 1 == total:
                break
            # rightmost slot k < d-1 with mass to its right
            k = d - 2
            rest = cur[d - 1]
            while rest == 0:
                k -= 1
                rest += cur[k + 1]
            for j in range(k + 1, d):
                cur[j] = 0
            cur[k] += 1
            cur[d - 1] = rest - 1
    return out

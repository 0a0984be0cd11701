# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-cell kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()


def cell_sums(x, offsets):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t ncell = off.shape[0] - 1, c, i
    out = np.zeros(ncell, dtype=np.float64)
    cdef double[:] o = out
    cdef double s
    for c in range(ncell):
        s = 0.0
        for i in range(off[c], off[c + 1]):
            s += xv[i]
        o[c] = s
    return out


def cell_moments(y, offsets):
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t ncell = off.shape[0] - 1, c, i, lo, hi
    counts = np.empty(ncell, dtype=np.int64)
    mean = np.empty(ncell, dtype=np.float64)
    m2 = np.empty(ncell, dtype=np.float64)
    m3 = np.empty(ncell, dtype=np.float64)
    jk = np.empty(ncell, dtype=np.float64)
    cdef cnp.int64_t[:] cv = counts
    cdef double[:] mv = mean, s2v = m2, s3v = m3, jv = jk
    cdef double s, mu, d, d2, a2, a3, m, dev, acc
    for c in range(ncell):
        lo = off[c]
        hi = off[c + 1]
        m = <double>(hi - lo)
        s = 0.0
        for i in range(lo, hi):
            s += yv[i]
        mu = s / m
        a2 = 0.0
        a3 = 0.0
        for i in range(lo, hi):
            d = yv[i] - mu
            d2 = d * d
            a2 += d2
            a3 += d2 * d
        cv[c] = hi - lo
        mv[c] = mu
        s2v[c] = a2
        s3v[c] = a3
        if hi - lo < 2:
            jv[c] = NAN
            continue
        acc = 0.0
        for i in range(lo, hi):
            d = yv[i] - mu
            dev = (m * d * d - a2) / (2.0 * (m - 1.0))
            acc += dev * dev
        jv[c] = acc
    return counts, mean, m2, m3, jk


def cell_weighted_ss(y, w, offsets):
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const cnp.int64_t[:] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t ncell = off.shape[0] - 1, c, i, lo, hi
    out = np.empty(ncell, dtype=np.float64)
    cdef double[:] o = out
    cdef double s, mu, d, acc
    for c in range(ncell):
        lo = off[c]
        hi = off[c + 1]
        s = 0.0
        for i in range(lo, hi):
            s += yv[i]
        mu = s / <double>(hi - lo)
        acc = 0.0
        for i in range(lo, hi):
            d = yv[i] - mu
            acc += wv[i] * d * d
        o[c] = acc
    return out


def gray_code_weights(p):
    cdef const double[:] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = pv.shape[0], r, bit
    cdef cnp.uint64_t total = (<cnp.uint64_t>1) << n, g = 0, flip
    codes = np.empty(total, dtype=np.uint64)
    weights = np.empty(total, dtype=np.float64)
    cdef cnp.uint64_t[:] cv = codes
    cdef double[:] wv = weights
    cdef double w = 1.0
    for bit in range(n):
        w *= 1.0 - pv[bit]
    cv[0] = 0
    wv[0] = w
    for r in range(1, <Py_ssize_t>total):
        # the bit flipped between consecutive Gray codes is the lowest set bit of r
        flip = (<cnp.uint64_t>r) & (~(<cnp.uint64_t>r) + 1)
        bit = 0
        while (flip >> bit) != 1:
            bit += 1
        if g & flip:
            w *= (1.0 - pv[bit]) / pv[bit]
        else:
            w *= pv[bit] / (1.0 - pv[bit])
        g ^= flip
        if (r & 255) == 0 or not (1e-250 <= w <= 1.0):
            # re-anchor to bound multiplicative drift, and whenever the running
            # product gets close to underflow (p near 0 or 1)
            w = 1.0
            for bit in range(n):
                if (g >> bit) & 1:
                    w *= pv[bit]
                else:
                    w *= 1.0 - pv[bit]
        cv[r] = g
        wv[r] = w
    return codes, weights

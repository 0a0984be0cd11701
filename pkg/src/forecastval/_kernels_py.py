"""Pure-NumPy implementations of the per-cell kernels.

Cells are given in CSR form: ``values`` ordered cell by cell and
``offsets`` of length ``ncells + 1`` delimiting each cell.
"""

import numpy as np


def _cell_index(offsets):
    counts = np.diff(offsets)
    return np.repeat(np.arange(len(counts)), counts), counts


def cell_sums(x, offsets):
    x = np.asarray(x, dtype=np.float64)
    idx, counts = _cell_index(offsets)
    return np.bincount(idx, weights=x, minlength=len(counts))


def cell_moments(y, offsets):
    """Per-cell count, mean, second and third central sums, jackknife sum.

    The jackknife sum is ``sum_i (hbar_i - vhat)^2`` where ``hbar_i`` is the
    mean of the kernel ``(y_i - y_k)^2 / 2`` over ``k != i``. It is NaN for
    cells of size one.
    """
    y = np.asarray(y, dtype=np.float64)
    idx, counts = _cell_index(offsets)
    ncell = len(counts)
    fc = counts.astype(np.float64)
    mean = np.bincount(idx, weights=y, minlength=ncell) / fc
    d = y - mean[idx]
    d2 = d * d
    m2 = np.bincount(idx, weights=d2, minlength=ncell)
    m3 = np.bincount(idx, weights=d2 * d, minlength=ncell)
    with np.errstate(divide="ignore", invalid="ignore"):
        # hbar_i - vhat = (m d_i^2 - m2) / (2 (m - 1))
        dev = (fc[idx] * d2 - m2[idx]) / (2.0 * (fc[idx] - 1.0))
        jk = np.bincount(idx, weights=dev * dev, minlength=ncell)
    jk[counts < 2] = np.nan
    return counts.astype(np.int64), mean, m2, m3, jk


def cell_weighted_ss(y, w, offsets):
    """Per-cell ``sum_i w_i (y_i - ybar_cell)^2``."""
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    idx, counts = _cell_index(offsets)
    ncell = len(counts)
    mean = np.bincount(idx, weights=y, minlength=ncell) / counts
    d = y - mean[idx]
    return np.bincount(idx, weights=w * d * d, minlength=ncell)


def gray_code_weights(p):
    """All ``2**n`` outcome vectors in Gray-code order with their probabilities.

    Returns ``(codes, weights)``; bit ``i`` of ``codes[r]`` is outcome ``i``.
    Requires ``0 < p_i < 1``.
    """
    p = np.asarray(p, dtype=np.float64)
    n = len(p)
    r = np.arange(2**n, dtype=np.uint64)
    codes = r ^ (r >> np.uint64(1))
    bits = (codes[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    weights = np.prod(np.where(bits == 1, p[None, :], 1.0 - p[None, :]), axis=1)
    return codes, weights

"""Bucket-model variance estimation and the adjusted Brier score.

Within a bucket all records share one conditional occurrence probability,
so the within-cell sample variance estimates ``p(1 - p)`` without bias.
Per-cell sums go through :mod:`forecastval.kernels`.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import (
    CellTooSmallError,
    EstimatorError,
    NegativeVarianceWarning,
    NoLinearEquivalentError,
    NonConstantTruePError,
)
from .losses import get_loss, slope
from .report import make_report

__all__ = [
    "BucketStats",
    "bucket_variance",
    "bucket_variance_binary",
    "third_moment_estimate",
    "jackknife_var_of_sample_variance",
    "unbiased_var_of_sample_variance",
    "bucket_stats",
    "weighted_bucket_variance",
    "sigma_hat_sq",
    "s_hat_sq",
    "sigma_sq_true",
    "s_sq_true",
    "adjusted_brier",
    "beta_hat_sq",
    "beta_sq_true",
    "ci_adjusted_brier",
]


@dataclass(frozen=True)
class BucketStats:
    t: int
    j: object
    n: int
    y_bar: float
    v_hat: Optional[float]
    m3_hat: Optional[float]
    jk: Optional[float]

    def to_dict(self):
        return {"t": self.t, "j": self.j, "n": self.n, "y_bar": self.y_bar,
                "v_hat": self.v_hat, "m3_hat": self.m3_hat, "jk": self.jk}


def _values(x, minimum):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < minimum:
        raise CellTooSmallError(None, int(x.size), minimum)
    return x


def bucket_variance(outcomes):
    """Unbiased sample variance ``sum (Y - Ybar)^2 / (m - 1)``."""
    y = _values(outcomes, 2)
    d = y - y.mean()
    return float(d @ d / (y.size - 1))


def bucket_variance_binary(outcomes):
    """The 0/1 form ``m Ybar (1 - Ybar) / (m - 1)``; equals :func:`bucket_variance`."""
    y = _values(outcomes, 2)
    m = y.size
    yb = y.mean()
    return float(m * yb * (1.0 - yb) / (m - 1))


def third_moment_estimate(outcomes, unbiased=False):
    """Estimate of ``p(1 - p)(1 - 2p)`` from one cell.

    The default uses the constant ``m^2 / (m - 1)^3``, the form entering
    :func:`beta_hat_sq`. Its expectation is ``m (m - 2) / (m - 1)^2`` times
    the third central moment. With ``unbiased=True`` the k-statistic
    constant ``m / ((m - 1)(m - 2))`` is used instead, which is exactly
    unbiased and needs ``m >= 3``.
    """
    y = _values(outcomes, 3 if unbiased else 2)
    m = y.size
    d = y - y.mean()
    s3 = float(np.sum(d**3))
    if unbiased:
        return m / ((m - 1) * (m - 2)) * s3
    return m * m / (m - 1) ** 3 * s3


def jackknife_var_of_sample_variance(values):
    """Jackknife estimate of ``Var(vhat)`` for the sample variance (needs ``m >= 3``).

    ``4 (m - 1) / (m (m - 2)^2) * sum_i (hbar_i - vhat)^2`` where ``hbar_i``
    averages the kernel ``(x_i - x_k)^2 / 2`` over ``k != i``. Like any
    jackknife variance it errs upward in small samples.
    """
    x = _values(values, 3)
    m = x.size
    _, _, _, _, jk = kernels.cell_moments(x, np.array([0, m], dtype=np.int64))
    return 4.0 * (m - 1) / (m * (m - 2) ** 2) * float(jk[0])


def unbiased_var_of_sample_variance(values):
    """Exactly unbiased estimate of ``Var(vhat)`` (needs ``m >= 4``).

    ``vhat^2`` minus the U-statistic estimate of ``sigma^4`` built from
    products of the kernel over disjoint index pairs.
    """
    x = _values(values, 4)
    m = x.size
    h = 0.5 * (x[:, None] - x[None, :]) ** 2
    big_h = h.sum()
    s1 = float(np.sum(h * h))
    r = h.sum(axis=1)
    sigma4 = (big_h**2 + 2.0 * s1 - 4.0 * float(r @ r)) / (m * (m - 1) * (m - 2) * (m - 3))
    vhat = big_h / (m * (m - 1))
    return float(vhat * vhat - sigma4)


def _require_sizes(partition, minimum):
    sizes = partition.sizes
    bad = np.nonzero(sizes < minimum)[0]
    if bad.size:
        c = int(bad[0])
        raise CellTooSmallError(partition.keys[c], int(sizes[c]), minimum)


def _check_cover(panel, partition):
    if partition.n != panel.n:
        raise EstimatorError(
            f"partition covers {partition.n} records but the panel has {panel.n}")


def _cell_vhat(panel, partition, minimum=2):
    _require_sizes(partition, minimum)
    y = partition.gather(panel.y)
    counts, mean, m2, m3, jk = kernels.cell_moments(y, partition.offsets)
    return counts, mean, m2 / (counts - 1.0), m3, jk


def bucket_stats(panel, partition):
    """Per-cell summaries for reports; estimates needing more records are None."""
    y = partition.gather(panel.y)
    counts, mean, m2, m3, jk = kernels.cell_moments(y, partition.offsets)
    out = []
    for c, (t, j) in enumerate(partition.keys):
        m = int(counts[c])
        vhat = m2[c] / (m - 1) if m >= 2 else None
        m3_hat = m * m / (m - 1) ** 3 * m3[c] if m >= 2 else None
        jk_var = 4.0 * (m - 1) / (m * (m - 2) ** 2) * jk[c] if m >= 3 else None
        out.append(BucketStats(t=t, j=j, n=m, y_bar=float(mean[c]),
                               v_hat=None if vhat is None else float(vhat),
                               m3_hat=None if m3_hat is None else float(m3_hat),
                               jk=None if jk_var is None else float(jk_var)))
    return out


def weighted_bucket_variance(panel, partition, weights, denom=None):
    """``denom^-1 sum_i w_i vhat_{cell(i)}`` with ``denom`` defaulting to ``n``."""
    _check_cover(panel, partition)
    counts, _, vhat, _, _ = _cell_vhat(panel, partition)
    w = kernels.cell_sums(partition.gather(weights), partition.offsets)
    denom = panel.n if denom is None else denom
    return math.fsum((w * vhat).tolist()) / denom


def _slopes(loss, x):
    loss = get_loss(loss)
    if not loss.has_linear_equivalent:
        raise NoLinearEquivalentError(f"{loss.kind} loss has no linear equivalent")
    return slope(loss, x)


def delta(panel, loss):
    """``delta_i = a(p_hat_i) - a(p_hat_alt_i)`` for the two forecasts."""
    return _slopes(loss, panel.field("p_hat")) - _slopes(loss, panel.field("p_hat_alt"))


def sigma_hat_sq(panel, partition, loss, field="p_hat"):
    """Bucket estimate of ``n^-1 sum a(p_hat_i)^2 p_i (1 - p_i)``."""
    a = _slopes(loss, panel.field(field))
    return weighted_bucket_variance(panel, partition, a * a)


def s_hat_sq(panel, partition, loss):
    """Bucket estimate of ``n^-1 sum delta_i^2 p_i (1 - p_i)``."""
    d = delta(panel, loss)
    return weighted_bucket_variance(panel, partition, d * d)


def sigma_sq_true(panel, loss, field="p_hat"):
    """Exact ``n^-1 sum a(p_hat_i)^2 p_i (1 - p_i)`` from ``p_true`` (simulation only)."""
    a = _slopes(loss, panel.field(field))
    p = panel.field("p_true")
    return math.fsum((a * a * p * (1.0 - p)).tolist()) / panel.n


def s_sq_true(panel, loss):
    """Exact ``n^-1 sum delta_i^2 p_i (1 - p_i)`` from ``p_true`` (simulation only)."""
    d = delta(panel, loss)
    p = panel.field("p_true")
    return math.fsum((d * d * p * (1.0 - p)).tolist()) / panel.n


def _brier(panel):
    y = panel.y
    q = panel.field("p_hat")
    return math.fsum(((y - q) ** 2).tolist()) / panel.n


def adjusted_brier(panel, partition):
    """Brier score minus the bucket correction ``n^-1 sum_cells n_jt vhat_t(j)``.

    Estimates ``n^-1 sum (p_i - p_hat_i)^2``; may be negative in small samples.
    """
    _check_cover(panel, partition)
    counts, _, vhat, _, _ = _cell_vhat(panel, partition)
    correction = math.fsum((counts * vhat).tolist()) / panel.n
    return _brier(panel) - correction


def _beta_cell_terms(panel, partition, unbiased):
    minimum = 4 if unbiased else 3
    counts, _, vhat, m3, jk = _cell_vhat(panel, partition, minimum)
    a = 1.0 - 2.0 * partition.gather(panel.field("p_hat"))
    sum_a = kernels.cell_sums(a, partition.offsets)
    sum_a2 = kernels.cell_sums(a * a, partition.offsets)
    m = counts.astype(np.float64)
    first = vhat * sum_a2
    if unbiased:
        y = partition.gather(panel.y)
        third = np.array([
            m[c] ** 2 * unbiased_var_of_sample_variance(
                y[partition.offsets[c]:partition.offsets[c + 1]])
            for c in range(len(partition.keys))
        ])
        second = -2.0 * m / ((m - 1.0) * (m - 2.0)) * sum_a * m3
    else:
        second = -2.0 * m * m / (m - 1.0) ** 3 * sum_a * m3
        third = 4.0 * m * (m - 1.0) / (m - 2.0) ** 2 * jk
    return first, second, third


def beta_hat_sq(panel, partition, clamp=True, unbiased=False):
    """Estimated variance of the sqrt(n)-scaled adjusted Brier score.

    Needs every cell to hold at least 3 records. The three cell terms
    estimate the forecast-weighted outcome variance, the covariance with
    the bucket-variance correction (via the third-moment estimate) and the
    variance of that correction (via the jackknife). ``unbiased=True``
    swaps the last two for their exactly unbiased counterparts and needs
    cells of size 4 or more.

    A negative total is returned as 0 with a
    :class:`NegativeVarianceWarning` unless ``clamp=False``. With 0/1
    outcomes the default form is never negative; the unbiased form can be.
    """
    _check_cover(panel, partition)
    first, second, third = _beta_cell_terms(panel, partition, unbiased)
    # fixed (t, j) order; fsum keeps the near-cancelling terms exact
    total = math.fsum(np.column_stack((first, second, third)).ravel().tolist()) / panel.n
    if clamp and total < 0.0:
        warnings.warn(f"beta_hat_sq = {total:.3g} < 0 clamped to 0",
                      NegativeVarianceWarning, stacklevel=2)
        return 0.0
    return total


def _cell_true_p(panel, partition, tol=1e-12):
    p = partition.gather(panel.field("p_true"))
    off = partition.offsets
    out = np.empty(len(partition.keys))
    for c in range(len(partition.keys)):
        cell = p[off[c]:off[c + 1]]
        if cell.max() - cell.min() > tol:
            t, j = partition.keys[c]
            raise NonConstantTruePError(f"p_true varies within cell (t={t}, j={j!r})")
        out[c] = cell[0]
    return out


def beta_sq_true(panel, partition):
    """Exact ``beta_n^2`` from the true bucket probabilities (simulation only)."""
    _check_cover(panel, partition)
    _require_sizes(partition, 2)
    p = _cell_true_p(panel, partition)
    v = p * (1.0 - p)
    a = 1.0 - 2.0 * partition.gather(panel.field("p_hat"))
    sum_a = kernels.cell_sums(a, partition.offsets)
    sum_a2 = kernels.cell_sums(a * a, partition.offsets)
    m = partition.sizes.astype(np.float64)
    terms = np.column_stack((
        v * sum_a2,
        -2.0 * v * (1.0 - 2.0 * p) * sum_a,
        m * v * (1.0 - 4.0 * v),
        2.0 * m * v * v / (m - 1.0),
    ))
    return math.fsum(terms.ravel().tolist()) / panel.n


def ci_adjusted_brier(panel, partition, alpha=0.05):
    """Adjusted Brier score with its studentized confidence interval."""
    estimate = adjusted_brier(panel, partition)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativeVarianceWarning)
        b2 = beta_hat_sq(panel, partition)
    clamped = any(issubclass(w.category, NegativeVarianceWarning) for w in caught)
    notes = "target: n^-1 sum (p_i - p_hat_i)^2"
    if clamped:
        notes += "; beta_hat_sq was negative and clamped to 0"
        warnings.warn("beta_hat_sq clamped to 0", NegativeVarianceWarning, stacklevel=2)
    return make_report(estimate, b2, panel.n, alpha, "bucket", notes,
                       beta_hat_sq_clamped=clamped)

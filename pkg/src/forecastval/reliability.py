"""Reliability diagrams over quasi-buckets, and quasi-bucket variances.

When records are grouped by forecast value their true probabilities need
not agree within a cell. The within-cell variance then over-estimates the
average Bernoulli variance, so intervals built from it stay valid but
conservative.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .buckets import _check_cover, _require_sizes, _slopes, delta
from .errors import EmptyBinWarning, SingletonCellWarning, ValidationError
from .panel import partition_by_bins, validate_bin_edges
from .report import normal_quantile

__all__ = [
    "ReliabilityBin",
    "reliability_diagram",
    "weighted_quasi_variance",
    "sigma_tilde_sq",
    "s_tilde_sq",
    "plot_csv",
    "ASSUMPTIONS",
]

ASSUMPTIONS = ("same bins in every period; per-bin record shares and average "
               "Bernoulli variances assumed to converge (not checked)")


@dataclass(frozen=True)
class ReliabilityBin:
    j: int
    lo: float
    hi: float
    n_j: int
    y_bar: Optional[float]
    v_hat: Optional[float]
    ci_lo: Optional[float]
    ci_hi: Optional[float]
    naive_ci_lo: Optional[float]
    naive_ci_hi: Optional[float]
    periods: dict = field(default_factory=dict)
    singleton_cells: int = 0

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def to_dict(self):
        return {
            "j": self.j, "lo": self.lo, "hi": self.hi, "mid": self.mid,
            "n_j": self.n_j, "y_bar": self.y_bar, "v_hat": self.v_hat,
            "ci": [self.ci_lo, self.ci_hi],
            "naive_ci": [self.naive_ci_lo, self.naive_ci_hi],
            "singleton_cells": self.singleton_cells,
            "periods": [
                {"t": t, "n": n, "y_bar": yb, "v_hat": vh}
                for t, (n, yb, vh) in sorted(self.periods.items())
            ],
        }


def reliability_diagram(panel, bin_edges, alpha=0.05, forecast_field="p_hat"):
    """Observed frequency per forecast bin with period-aware intervals.

    For bin ``j`` the interval is ``ybar(j) ± z sqrt(vhat(j) / n_j)``, with
    ``vhat(j)`` the size-weighted average of the per-period cell variances.
    The i.i.d. interval ``ybar(j) ± z sqrt(ybar(j)(1 - ybar(j)) / n_j)`` is
    reported alongside as ``naive``.

    Single-record cells count toward ``ybar(j)`` and ``n_j`` but carry no
    variance information, so ``vhat(j)`` averages only cells of size two
    or more; such bins are flagged with :class:`SingletonCellWarning`.

    The intervals are asymptotically valid when every period uses the same
    bins and each bin's share of records and average Bernoulli variance
    settle down as periods accumulate. Those conditions are assumed, not
    checked; see :data:`ASSUMPTIONS`.
    """
    if panel.mode != "binary":
        raise ValidationError("reliability diagrams need binary outcomes")
    edges = validate_bin_edges(bin_edges)
    part = partition_by_bins(panel, edges, forecast_field)
    y = part.gather(panel.y)
    counts, mean, m2, _, _ = kernels.cell_moments(y, part.offsets)
    z = normal_quantile(1.0 - alpha / 2.0)

    per_bin = {}
    for c, (t, j) in enumerate(part.keys):
        per_bin.setdefault(j, []).append(c)

    bins = []
    for j in range(len(edges) - 1):
        lo, hi = float(edges[j]), float(edges[j + 1])
        cells = per_bin.get(j, [])
        if not cells:
            warnings.warn(f"bin {j} [{lo}, {hi}] is empty", EmptyBinWarning, stacklevel=2)
            bins.append(ReliabilityBin(j, lo, hi, 0, None, None, None, None, None, None))
            continue
        n_j = int(sum(counts[c] for c in cells))
        y_bar = math.fsum(counts[c] * mean[c] for c in cells) / n_j
        periods = {}
        num, den, singles = [], 0, 0
        for c in cells:
            m = int(counts[c])
            t = part.keys[c][0]
            if m >= 2:
                vh = float(m2[c] / (m - 1))
                num.append(m * vh)
                den += m
            else:
                vh = None
                singles += 1
            periods[t] = (m, float(mean[c]), vh)
        if singles:
            warnings.warn(f"bin {j} has {singles} single-record cell(s)",
                          SingletonCellWarning, stacklevel=2)
        naive_half = z * math.sqrt(y_bar * (1.0 - y_bar) / n_j)
        if den:
            v_hat = math.fsum(num) / den
            half = z * math.sqrt(v_hat / n_j)
            ci = (y_bar - half, y_bar + half)
        else:
            v_hat, ci = None, (None, None)
        bins.append(ReliabilityBin(
            j, lo, hi, n_j, y_bar, v_hat, ci[0], ci[1],
            y_bar - naive_half, y_bar + naive_half, periods, singles,
        ))
    return bins


def plot_csv(bins):
    """Plot-ready CSV text; interval ends are clipped to [0, 1] here only."""

    def fmt(x, clip=False):
        if x is None:
            return ""
        if clip:
            x = min(max(x, 0.0), 1.0)
        return format(float(x), ".17g")

    lines = ["bin_mid,y_bar,ci_lo,ci_hi,naive_lo,naive_hi,n_j"]
    for b in bins:
        lines.append(",".join([
            fmt(b.mid), fmt(b.y_bar), fmt(b.ci_lo, True), fmt(b.ci_hi, True),
            fmt(b.naive_ci_lo, True), fmt(b.naive_ci_hi, True), str(b.n_j),
        ]))
    return "\n".join(lines) + "\n"


def weighted_quasi_variance(panel, partition, weights, denom=None):
    """``denom^-1 sum_i w_i (Y_i - ybar_cell)^2 n_cell / (n_cell - 1)``."""
    _check_cover(panel, partition)
    _require_sizes(partition, 2)
    y = partition.gather(panel.y)
    w = partition.gather(weights)
    ss = kernels.cell_weighted_ss(y, w, partition.offsets)
    m = partition.sizes.astype(np.float64)
    denom = panel.n if denom is None else denom
    return math.fsum((ss * m / (m - 1.0)).tolist()) / denom


def sigma_tilde_sq(panel, partition, loss, field="p_hat"):
    """Conservative quasi-bucket estimate of ``n^-1 sum a(p_hat_i)^2 p_i (1 - p_i)``."""
    a = _slopes(loss, panel.field(field))
    return weighted_quasi_variance(panel, partition, a * a)


def s_tilde_sq(panel, partition, loss):
    """Conservative quasi-bucket estimate of ``n^-1 sum delta_i^2 p_i (1 - p_i)``."""
    d = delta(panel, loss)
    return weighted_quasi_variance(panel, partition, d * d)

"""Average-loss estimation, forecast comparison, skill and Winkler scores.

Every interval estimator returns an :class:`~forecastval.report.EvalReport`.
The variance of the martingale sum needs ``p_i (1 - p_i)``, which one outcome
cannot estimate; the caller picks how it is replaced:

``conservative_quarter``
    the upper bound 1/4;
``bucket``
    the within-bucket sample variance (records in a cell share ``p``);
``quasi_bucket``
    the conservative weighted within-cell variance;
``supplied_true_p``
    the simulation ground truth in ``p_true``.
"""

import math

import numpy as np

from .buckets import weighted_bucket_variance
from .errors import (
    DegenerateWeightError,
    MissingBucketError,
    NoLinearEquivalentError,
    SkippedAllError,
    ValidationError,
    ZeroDenominatorError,
)
from .losses import get_loss, loss_pair, score
from .panel import partition_by_label
from .reliability import weighted_quasi_variance
from .report import canonical_variance, make_report

__all__ = [
    "average_score",
    "ci_average_loss",
    "compare_forecasts",
    "compare_general_predictands",
    "skill_score",
    "winkler_score",
]

FORECAST_FIELDS = ("p_hat", "p_hat_alt", "p_clim")


def _binary(panel):
    if panel.mode != "binary":
        raise ValidationError("this estimator needs a binary-mode panel")


def _mean(x):
    return math.fsum(np.asarray(x, dtype=np.float64).tolist()) / len(x)


def average_score(panel, loss, field="p_hat"):
    """Mean score ``n^-1 sum L(Y_i, forecast_i)``."""
    if field not in FORECAST_FIELDS:
        raise ValueError(f"field must be one of {FORECAST_FIELDS}")
    _binary(panel)
    return _mean(score(get_loss(loss), panel.y, panel.field(field)))


def _resolve_partition(panel, partition, method):
    if partition is not None:
        return partition
    if method == "bucket" and panel.bucket is not None:
        return partition_by_label(panel)
    raise MissingBucketError(f"variance method {method!r} needs a bucket partition")


def _variance(panel, weights, method, partition, denom=None):
    """``denom^-1 sum_i w_i * (estimate of p_i (1 - p_i))``."""
    n = panel.n if denom is None else denom
    if method == "conservative_quarter":
        return 0.25 * math.fsum(np.asarray(weights).tolist()) / n
    if method == "supplied_true_p":
        p = panel.field("p_true")
        return math.fsum((weights * p * (1.0 - p)).tolist()) / n
    partition = _resolve_partition(panel, partition, method)
    if method == "bucket":
        return weighted_bucket_variance(panel, partition, weights, denom=n)
    return weighted_quasi_variance(panel, partition, weights, denom=n)


def ci_average_loss(panel, loss, alpha=0.05, variance="conservative_quarter",
                    partition=None, field="p_hat"):
    """Confidence interval for the average conditional expected score.

    The estimate is the mean score. Its target is
    ``n^-1 sum {a(p_hat_i) p_i + b(p_hat_i)}``, the loss's linear
    equivalent averaged at the true probabilities; for a loss linear in
    ``p`` that is the average loss itself.
    """
    _binary(panel)
    loss = get_loss(loss)
    method = canonical_variance(variance)
    if not loss.has_linear_equivalent:
        raise NoLinearEquivalentError(f"{loss.kind} loss has no linear equivalent")
    q = panel.field(field)
    l1, l0 = loss_pair(loss, q)
    a = l1 - l0
    estimate = _mean(np.where(panel.y == 1.0, l1, l0))
    var = _variance(panel, a * a, method, partition)
    if loss.kind in ("squared_error", "custom"):
        notes = "target: n^-1 sum (p_hat_i^2 - 2 p_i p_hat_i + p_i)" if \
            loss.kind == "squared_error" else "target: n^-1 sum L(p_i, p_hat_i)"
    else:
        notes = "target: n^-1 sum of the linear-equivalent loss at the true p_i"
    return make_report(estimate, var, panel.n, alpha, method, notes, loss=loss.kind)


def compare_forecasts(panel, loss, alpha=0.05, variance="conservative_quarter",
                      partition=None, mode="linear_equivalent"):
    """Interval for the average loss difference of ``p_hat`` minus ``p_hat_alt``.

    ``mode="linear_equivalent"`` targets ``n^-1 sum {L(p_i, p_hat_i) -
    L(p_i, p_hat_alt_i)}`` and needs a loss with a linear equivalent.
    ``mode="general"`` accepts any loss and targets the difference of
    conditional expected scores, ``n^-1 sum {delta_i p_i + L(0, p_hat_i) -
    L(0, p_hat_alt_i)}``. The two coincide when a linear equivalent exists.
    """
    _binary(panel)
    loss = get_loss(loss)
    method = canonical_variance(variance)
    if mode not in ("linear_equivalent", "general"):
        raise ValueError("mode must be 'linear_equivalent' or 'general'")
    if mode == "linear_equivalent" and not loss.has_linear_equivalent:
        raise NoLinearEquivalentError(
            f"{loss.kind} loss has no linear equivalent; use mode='general' explicitly")
    l1a, l0a = loss_pair(loss, panel.field("p_hat"))
    l1b, l0b = loss_pair(loss, panel.field("p_hat_alt"))
    d = (l1a - l0a) - (l1b - l0b)
    y = panel.y
    diffs = np.where(y == 1.0, l1a - l1b, l0a - l0b)
    estimate = _mean(diffs)
    var = _variance(panel, d * d, method, partition)
    if mode == "linear_equivalent":
        notes = "target: n^-1 sum {L(p_i, p_hat_i) - L(p_i, p_hat_alt_i)}"
    else:
        notes = ("target: n^-1 sum {delta_i p_i + L(0, p_hat_i) - L(0, p_hat_alt_i)}")
    return make_report(estimate, var, panel.n, alpha, method, notes,
                       loss=loss.kind, mode=mode)


def compare_general_predictands(panel, loss="squared_error", alpha=0.05, partition=None):
    """Interval for the average squared-error difference with real outcomes.

    Forecasts ``p_hat`` and ``p_hat_alt`` hold predicted means. The variance
    needs buckets whose records share a conditional variance; the 1/4 bound
    has no analogue for unbounded outcomes.
    """
    loss = get_loss(loss)
    if loss.kind != "squared_error":
        raise NoLinearEquivalentError(
            "only squared error has a linear-in-y equivalent for general predictands")
    if partition is None:
        if panel.bucket is None:
            raise MissingBucketError("general predictands need a bucket partition")
        partition = partition_by_label(panel)
    y = panel.y
    f1 = panel.field("p_hat")
    f2 = panel.field("p_hat_alt")
    estimate = _mean((y - f1) ** 2 - (y - f2) ** 2)
    # slope in y of the linear equivalent -2 y yhat + yhat^2
    d = -2.0 * (f1 - f2)
    var = weighted_bucket_variance(panel, partition, d * d)
    return make_report(estimate, var, panel.n, alpha, "bucket",
                       "target: n^-1 sum E{L(Y_i, yhat_i) - L(Y_i, yhat_alt_i) | past}",
                       loss=loss.kind)


def skill_score(panel, loss, field="p_hat"):
    """Relative improvement of the mean score over climatology's mean score."""
    ref = average_score(panel, loss, "p_clim")
    if ref == 0.0:
        raise ZeroDenominatorError("climatology's average score is zero")
    return (ref - average_score(panel, loss, field)) / ref


def winkler_weights(loss, p, c):
    """``l(p, c)``: the score change on the outcome favoured by ``p`` over ``c``."""
    l1p, l0p = loss_pair(loss, p)
    l1c, l0c = loss_pair(loss, c)
    return np.where(np.asarray(p) >= np.asarray(c), l1p - l1c, l0p - l0c)


def winkler_score(panel, loss, alpha=0.05, variance="conservative_quarter",
                  partition=None, degenerate="error"):
    """Winkler's score of ``p_hat`` against climatology with a confidence interval.

    Each record's score difference is normalised by ``l(p_hat_i, p_clim_i)``,
    which vanishes when the forecast equals climatology. ``degenerate``
    decides what happens then: ``"error"`` raises
    :class:`DegenerateWeightError`; ``"skip"`` drops those records and
    reports how many in the notes.
    """
    _binary(panel)
    loss = get_loss(loss)
    method = canonical_variance(variance)
    if degenerate not in ("error", "skip"):
        raise ValueError("degenerate must be 'error' or 'skip'")
    if not loss.has_linear_equivalent:
        raise NoLinearEquivalentError(f"{loss.kind} loss has no linear equivalent")
    q = panel.field("p_hat")
    c = panel.field("p_clim")
    w = winkler_weights(loss, q, c)
    bad = w == 0.0
    if bad.any():
        keys = [(int(panel.t[i]), int(panel.k[i])) for i in np.nonzero(bad)[0]]
        if degenerate == "error":
            raise DegenerateWeightError(keys)
        if bad.all():
            raise SkippedAllError("every record has l(p_hat, p_clim) = 0")
    keep = ~bad
    n_kept = int(keep.sum())
    l1q, l0q = loss_pair(loss, q)
    l1c, l0c = loss_pair(loss, c)
    num = np.where(panel.y == 1.0, l1q - l1c, l0q - l0c)
    safe_w = np.where(keep, w, 1.0)
    terms = num / safe_w
    estimate = math.fsum(terms[keep].tolist()) / n_kept
    d = (l1q - l0q) - (l1c - l0c)
    weights = np.where(keep, (d / safe_w) ** 2, 0.0)
    var = _variance(panel, weights, method, partition, denom=n_kept)
    notes = "target: n^-1 sum {L(p_i, p_hat_i) - L(p_i, p_clim_i)} / l(p_hat_i, p_clim_i)"
    skipped = int(bad.sum())
    if skipped:
        notes += f"; skipped {skipped} record(s) with l(p_hat, p_clim) = 0"
    return make_report(estimate, var, n_kept, alpha, method, notes,
                       loss=loss.kind, skipped=skipped)

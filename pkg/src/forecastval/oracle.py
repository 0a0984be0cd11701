"""Exact expectations by enumerating every Bernoulli outcome vector.

Used to check unbiasedness and conservativeness claims without sampling
error. Enumeration is ``2**n`` in the number of non-degenerate records, so
it is capped (20 records by default).
"""

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import buckets, kernels
from .errors import TooLargeError

__all__ = [
    "EnumerationSpec",
    "enumerate_outcomes",
    "exact_expectation",
    "exact_variance",
    "exact_panel_moments",
    "run_check",
    "CHECKS",
]


def _n_vhat(y):
    return y.size * buckets.bucket_variance(y)


STATISTICS = {
    "mean": lambda y: float(np.mean(y)),
    "v_hat": buckets.bucket_variance,
    "n_v_hat": _n_vhat,
    "third_moment": buckets.third_moment_estimate,
    "third_moment_unbiased": lambda y: buckets.third_moment_estimate(y, unbiased=True),
    "jackknife": buckets.jackknife_var_of_sample_variance,
    "var_v_hat_unbiased": buckets.unbiased_var_of_sample_variance,
}


@dataclass(frozen=True)
class EnumerationSpec:
    """What to enumerate.

    ``cell_probs`` holds one probability vector per cell. ``statistic`` is
    either a name from ``STATISTICS`` (applied to the single cell, or to all
    records concatenated) or a callable taking the list of per-cell outcome
    arrays.
    """

    cell_probs: tuple
    statistic: Union[str, Callable]
    max_total_records: int = 20

    def __post_init__(self):
        probs = tuple(np.asarray(p, dtype=np.float64).ravel() for p in self.cell_probs)
        object.__setattr__(self, "cell_probs", probs)
        for p in probs:
            if np.any((p < 0.0) | (p > 1.0)):
                raise ValueError("cell probabilities must lie in [0, 1]")
        total = sum(p.size for p in probs)
        if total > self.max_total_records:
            raise TooLargeError(
                f"{total} records exceed the enumeration cap of {self.max_total_records}")

    @property
    def total(self):
        return sum(p.size for p in self.cell_probs)


def enumerate_outcomes(p, max_total_records=20):
    """Every outcome vector with its probability, in Gray-code order.

    Records with ``p`` exactly 0 or 1 are pinned rather than enumerated.
    Returns ``(outcomes, weights)`` with ``outcomes`` of shape ``(2**m, n)``.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size > max_total_records:
        raise TooLargeError(f"{p.size} records exceed the enumeration cap of {max_total_records}")
    free = np.nonzero((p > 0.0) & (p < 1.0))[0]
    codes, weights = kernels.gray_code_weights(p[free])
    out = np.empty((codes.size, p.size), dtype=np.float64)
    out[:] = (p == 1.0).astype(np.float64)[None, :]
    shifts = np.arange(free.size, dtype=np.uint64)
    out[:, free] = ((codes[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)
    return out, weights


def _statistic(spec):
    stat = spec.statistic
    if callable(stat):
        return stat
    try:
        fn = STATISTICS[stat]
    except KeyError:
        raise ValueError(f"unknown statistic {stat!r}; choose from {sorted(STATISTICS)}") from None
    return lambda cells: fn(np.concatenate(cells))


def _values(spec):
    probs = spec.cell_probs
    outcomes, weights = enumerate_outcomes(np.concatenate(probs), spec.max_total_records)
    bounds = np.cumsum([0] + [p.size for p in probs])
    fn = _statistic(spec)
    vals = np.array([
        fn([row[bounds[c]:bounds[c + 1]] for c in range(len(probs))]) for row in outcomes
    ])
    return vals, weights


def exact_expectation(spec):
    vals, weights = _values(spec)
    return math.fsum((vals * weights).tolist())


def exact_variance(spec):
    vals, weights = _values(spec)
    mean = math.fsum((vals * weights).tolist())
    return math.fsum((weights * (vals - mean) ** 2).tolist())


def exact_panel_moments(panel, fn, max_total_records=20):
    """``(E, Var)`` of ``fn(panel)`` with outcomes drawn from ``panel.p_true``.

    Forecasts, labels and everything else in the panel stay fixed; only the
    outcomes are enumerated.
    """
    outcomes, weights = enumerate_outcomes(panel.field("p_true"), max_total_records)
    vals = np.array([fn(panel.with_outcomes(row)) for row in outcomes])
    mean = math.fsum((vals * weights).tolist())
    var = math.fsum((weights * (vals - mean) ** 2).tolist())
    return mean, var


def _check_a2(p):
    value = exact_expectation(EnumerationSpec((p,), "v_hat"))
    equal = bool(np.ptp(p) == 0.0)
    target = float(np.mean(p * (1.0 - p)))
    return {"statistic": "E[v_hat]", "target": "p(1-p)", "value": value,
            "target_value": target, "equal_probs": equal,
            "holds": equal and abs(value - target) <= 1e-10}


def _check_a7(p):
    value = exact_expectation(EnumerationSpec((p,), "third_moment"))
    unbiased = exact_expectation(EnumerationSpec((p,), "third_moment_unbiased")) \
        if p.size >= 3 else None
    equal = bool(np.ptp(p) == 0.0)
    target = float(np.mean(p * (1.0 - p) * (1.0 - 2.0 * p)))
    return {"statistic": "E[third_moment_estimate]", "target": "p(1-p)(1-2p)",
            "value": value, "target_value": target, "equal_probs": equal,
            "unbiased_variant_value": unbiased,
            "holds": equal and abs(value - target) <= 1e-10}


def _check_a8(p):
    value = exact_expectation(EnumerationSpec((p,), "jackknife"))
    target = exact_variance(EnumerationSpec((p,), "v_hat"))
    unbiased = exact_expectation(EnumerationSpec((p,), "var_v_hat_unbiased")) \
        if p.size >= 4 else None
    return {"statistic": "E[jackknife]", "target": "Var(v_hat)", "value": value,
            "target_value": target, "unbiased_variant_value": unbiased,
            "holds": abs(value - target) <= 1e-10}


def _check_eq513(p):
    value = exact_expectation(EnumerationSpec((p,), "n_v_hat"))
    target = float(np.sum(p * (1.0 - p)))
    equal = bool(np.ptp(p) == 0.0)
    tight = abs(value - target) <= 1e-10
    return {"statistic": "E[n v_hat]", "target": "sum p_i(1-p_i)", "value": value,
            "target_value": target, "equal_probs": equal,
            "holds": value >= target - 1e-10 and (tight == equal)}


CHECKS = {"a2": _check_a2, "a7": _check_a7, "a8": _check_a8, "eq513": _check_eq513}


def run_check(name, p):
    """Run a named exact check on one cell with probabilities ``p``."""
    try:
        fn = CHECKS[name]
    except KeyError:
        raise ValueError(f"unknown check {name!r}; choose from {sorted(CHECKS)}") from None
    p = np.asarray(p, dtype=np.float64).ravel()
    out = {"check": name, "p": p.tolist()}
    out.update(fn(p))
    return out

"""Inferential report shared by every interval estimator."""

import math
from dataclasses import dataclass, field
from statistics import NormalDist

__all__ = ["EvalReport", "VARIANCE_METHODS", "normal_quantile", "make_report",
           "canonical_variance"]

VARIANCE_METHODS = ("conservative_quarter", "bucket", "quasi_bucket", "supplied_true_p")

_VARIANCE_ALIASES = {
    "quarter": "conservative_quarter",
    "conservative": "conservative_quarter",
    "conservative_quarter": "conservative_quarter",
    "bucket": "bucket",
    "quasi": "quasi_bucket",
    "quasi_bucket": "quasi_bucket",
    "true": "supplied_true_p",
    "supplied_true_p": "supplied_true_p",
}


def canonical_variance(name):
    try:
        return _VARIANCE_ALIASES[name]
    except KeyError:
        raise ValueError(
            f"unknown variance method {name!r}; choose from {sorted(_VARIANCE_ALIASES)}"
        ) from None


def normal_quantile(q):
    """Standard normal quantile ``z_q``."""
    return NormalDist().inv_cdf(q)


@dataclass(frozen=True)
class EvalReport:
    """Point estimate with a normal-theory confidence interval.

    ``std_error`` is on the per-mean scale, ``sigma_hat / sqrt(n)``, so the
    interval is ``estimate ± z_{1-alpha/2} * std_error``.
    """

    estimate: float
    std_error: float
    ci_lo: float
    ci_hi: float
    alpha: float
    n: int
    variance_method: str
    notes: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def half_width(self):
        return 0.5 * (self.ci_hi - self.ci_lo)

    def to_dict(self):
        out = {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "ci": [self.ci_lo, self.ci_hi],
            "alpha": self.alpha,
            "n": self.n,
            "variance_method": self.variance_method,
            "notes": self.notes,
        }
        out.update(self.extra)
        return out


def make_report(estimate, variance, n, alpha, method, notes="", **extra):
    """Build a report from an estimate and the variance of the sqrt(n)-scaled statistic."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if method not in VARIANCE_METHODS:
        raise ValueError(f"unknown variance method {method!r}")
    se = math.sqrt(max(variance, 0.0) / n)
    z = normal_quantile(1.0 - alpha / 2.0)
    return EvalReport(
        estimate=float(estimate), std_error=se,
        ci_lo=float(estimate - z * se), ci_hi=float(estimate + z * se),
        alpha=float(alpha), n=int(n), variance_method=method, notes=notes,
        extra=extra,
    )

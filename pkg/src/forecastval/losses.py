"""Binary-outcome loss functions and their linear equivalents.

All losses follow the "smaller is better" convention. A loss is described
by the two functions ``L(1, p_hat)`` and ``L(0, p_hat)``; everything the
inference routines need (slopes, intercepts, conditional expected scores)
derives from that pair.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.special import xlogy

from .errors import DomainError

__all__ = [
    "LOSS_NAMES",
    "LossSpec",
    "LinearCoeffs",
    "Propriety",
    "ProprietyResult",
    "get_loss",
    "eval_loss",
    "score",
    "linear_coeffs",
    "linear_equivalent_value",
    "check_propriety",
]

KINDS = ("squared_error", "kullback_leibler", "log_score", "absolute", "custom")
_LOG_KINDS = ("kullback_leibler", "log_score")

_ALIASES = {
    "brier": "squared_error",
    "squared_error": "squared_error",
    "squared": "squared_error",
    "kl": "kullback_leibler",
    "kullback_leibler": "kullback_leibler",
    "log": "log_score",
    "log_score": "log_score",
    "absolute": "absolute",
}

# names offered on the command line
LOSS_NAMES = ("brier", "squared_error", "kl", "log", "absolute")


@dataclass(frozen=True)
class LossSpec:
    """A binary-outcome loss.

    Parameters
    ----------
    kind : str
        One of ``squared_error``, ``kullback_leibler``, ``log_score``,
        ``absolute`` or ``custom``.
    loss_one, loss_zero : callable, optional
        For ``custom`` only: vectorised functions giving ``L(1, p_hat)`` and
        ``L(0, p_hat)``. A custom loss is taken to be linear in ``p``,
        ``L(p, p_hat) = p L(1, p_hat) + (1 - p) L(0, p_hat)``.
    clip_epsilon : float
        If positive, forecasts fed to a log-type loss are clamped into
        ``[eps, 1 - eps]``. Zero (the default) means forecasts of exactly
        0 or 1 raise :class:`DomainError`.
    """

    kind: str = "squared_error"
    loss_one: Optional[Callable] = None
    loss_zero: Optional[Callable] = None
    clip_epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not 0.0 <= self.clip_epsilon < 0.5:
            raise ValueError("clip_epsilon must lie in [0, 0.5)")
        if self.kind == "custom" and (self.loss_one is None or self.loss_zero is None):
            raise ValueError("custom losses need both loss_one and loss_zero")

    @property
    def has_linear_equivalent(self) -> bool:
        # |p - p_hat| has none; custom losses are linear in p by construction
        return self.kind != "absolute"

    @property
    def name(self) -> str:
        return self.kind


@dataclass(frozen=True)
class LinearCoeffs:
    """Slope ``a = L(1, p_hat) - L(0, p_hat)`` and intercept ``b = L(0, p_hat)``."""

    a: float
    b: float


def get_loss(name, clip_epsilon=0.0) -> LossSpec:
    """Look up a built-in loss by CLI name (``brier``, ``kl``, ``log``, ``absolute``)."""
    if isinstance(name, LossSpec):
        return name
    try:
        kind = _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown loss {name!r}; choose from {sorted(set(_ALIASES))}"
        ) from None
    return LossSpec(kind, clip_epsilon=clip_epsilon)


def _as_prob(x, what):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"{what} must lie in [0, 1]")
    return arr


def _prepare_forecast(loss, p_hat):
    q = _as_prob(p_hat, "p_hat")
    if loss.kind in _LOG_KINDS:
        eps = loss.clip_epsilon
        if eps > 0:
            q = np.clip(q, eps, 1.0 - eps)
        elif np.any((q == 0.0) | (q == 1.0)):
            raise DomainError(
                f"{loss.kind} is undefined at p_hat in {{0, 1}}; set clip_epsilon to clamp"
            )
    return q


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _one_zero(loss, q):
    """Return ``(L(1, q), L(0, q))`` for prepared forecasts ``q``."""
    kind = loss.kind
    if kind == "squared_error":
        return (1.0 - q) ** 2, q**2
    if kind in _LOG_KINDS:
        return -np.log(q), -np.log1p(-q)
    if kind == "absolute":
        return 1.0 - q, q + 0.0
    l1 = np.asarray(loss.loss_one(q), dtype=float)
    l0 = np.asarray(loss.loss_zero(q), dtype=float)
    return l1, l0


def loss_pair(loss, p_hat):
    """Vectorised ``(L(1, p_hat), L(0, p_hat))``."""
    q = _prepare_forecast(loss, p_hat)
    l1, l0 = _one_zero(loss, q)
    return _out(l1), _out(l0)


def eval_loss(loss, p, p_hat):
    """Loss ``L(p, p_hat)`` between a true probability and its forecast.

    Works elementwise on arrays. The Kullback-Leibler divergence uses the
    convention ``0 log 0 = 0``.
    """
    loss = get_loss(loss)
    p = _as_prob(p, "p")
    q = _prepare_forecast(loss, p_hat)
    kind = loss.kind
    if kind == "squared_error":
        val = (p - q) ** 2
    elif kind == "kullback_leibler":
        val = xlogy(p, p) - p * np.log(q) + xlogy(1.0 - p, 1.0 - p) - (1.0 - p) * np.log1p(-q)
        val = np.maximum(val, 0.0)
    elif kind == "log_score":
        val = -(p * np.log(q) + (1.0 - p) * np.log1p(-q))
    elif kind == "absolute":
        val = np.abs(p - q)
    else:
        l1, l0 = _one_zero(loss, q)
        val = p * l1 + (1.0 - p) * l0
    return _out(val)


def score(loss, y, p_hat):
    """Score ``L(y, p_hat)`` of a forecast against a realised 0/1 outcome."""
    y_arr = np.asarray(y, dtype=float)
    if np.any((y_arr != 0.0) & (y_arr != 1.0)):
        raise DomainError("outcomes must be 0 or 1")
    return eval_loss(loss, y_arr, p_hat)


def linear_coeffs(loss, p_hat):
    """Coefficients of the linear equivalent ``a(p_hat) p + b(p_hat)``.

    Returns a :class:`LinearCoeffs` for scalar input, or a pair of arrays
    ``(a, b)`` for array input.
    """
    loss = get_loss(loss)
    l1, l0 = loss_pair(loss, p_hat)
    if np.ndim(l1) == 0:
        return LinearCoeffs(a=float(l1 - l0), b=float(l0))
    return l1 - l0, l0


def slope(loss, p_hat):
    """Vectorised ``a(p_hat) = L(1, p_hat) - L(0, p_hat)``."""
    l1, l0 = loss_pair(get_loss(loss), p_hat)
    return l1 - l0


def linear_equivalent_value(loss, p, p_hat):
    """Conditional expected score ``a(p_hat) p + b(p_hat)``."""
    loss = get_loss(loss)
    p = _as_prob(p, "p")
    l1, l0 = loss_pair(loss, p_hat)
    return _out((l1 - l0) * p + l0)


class Propriety(str, Enum):
    STRICTLY_PROPER = "strictly_proper"
    PROPER = "proper"
    IMPROPER = "improper"


@dataclass(frozen=True)
class ProprietyResult:
    status: Propriety
    witness: Optional[tuple] = None
    gap: float = 0.0


def check_propriety(loss, grid_step=0.01, tol=1e-12) -> ProprietyResult:
    """Classify a scoring rule as strictly proper, proper or improper.

    The conditional expected score is evaluated on the grid
    ``{h, 2h, ...} ⊂ (0, 1)``. A rule is improper when some grid ``p`` has a
    forecast ``p_hat`` beating the honest forecast by more than ``tol``; the
    first such pair (largest gap) is returned as the witness.
    """
    loss = get_loss(loss)
    if not 0.0 < grid_step <= 0.1:
        raise ValueError("grid_step must lie in (0, 0.1]")
    count = int(np.floor((1.0 - 1e-12) / grid_step))
    grid = np.arange(1, count + 1) * grid_step
    a, b = linear_coeffs(loss, grid)
    # row: true p, column: forecast p_hat
    table = np.outer(grid, a) + b[None, :]
    honest = np.diag(table)
    best = table.min(axis=1)
    gaps = honest - best
    worst = int(np.argmax(gaps))
    if gaps[worst] > tol:
        col = int(np.argmin(table[worst]))
        return ProprietyResult(
            Propriety.IMPROPER, witness=(float(grid[worst]), float(grid[col])),
            gap=float(gaps[worst]),
        )
    off = table + np.where(np.eye(count, dtype=bool), np.inf, 0.0)
    margin = off.min(axis=1) - honest
    if np.all(margin > tol):
        return ProprietyResult(Propriety.STRICTLY_PROPER, gap=float(margin.min()))
    row = int(np.argmin(margin))
    return ProprietyResult(
        Propriety.PROPER, witness=(float(grid[row]), float(grid[int(np.argmin(off[row]))])),
        gap=float(margin[row]),
    )

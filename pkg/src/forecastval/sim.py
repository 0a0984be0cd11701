"""Monte Carlo scenarios for studentized Brier-score statistics.

Four two-period designs with 300 evaluation records each:

1. ten buckets of 15 with fixed probabilities, one forecast (adjusted Brier);
2. nine unequal buckets with Uniform(0, 1) bucket probabilities;
3. five buckets of 30 with probabilities 0.1, 0.3, ..., 0.9;
4. as 3, but each record's probability is uniform within its bucket's fifth.

The primary forecast is the previous period's bucket mean; scenarios 2-4
add the previous period's overall mean as a competitor. Random numbers come
from Philox streams keyed by ``(seed, run, period)`` so runs are independent
and reproducible in any order.
"""

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np
from scipy import stats as sps

from . import buckets
from .errors import EstimatorError, NegativeVarianceWarning
from .panel import Panel, partition_by_bins, partition_by_label
from .reliability import reliability_diagram

__all__ = [
    "SCENARIO_IDS",
    "DEFAULT_SEED",
    "DEFAULT_BIN_EDGES",
    "ScenarioSpec",
    "MonteCarloSummary",
    "rng_for",
    "gen_scenario",
    "run_scenario_once",
    "run_monte_carlo",
    "qq_data",
    "five_number",
    "gen_gaussian_buckets",
]

SCENARIO_IDS = (1, 2, 3, 4)
DEFAULT_SEED = 20090101
DEFAULT_BIN_EDGES = np.arange(6) / 5.0

_S1_PROBS = np.array([0.1, 0.25, 0.3, 0.35, 0.4, 0.5, 0.65, 0.7, 0.75, 0.8])
_SIZES = {
    1: (15,) * 10,
    2: (2, 2, 2, 5, 5, 24, 30, 35, 45),
    3: (30,) * 5,
    4: (30,) * 5,
}
# spawn-key slot reserved for the scenario-4 design draw; run indices stay below it
_DESIGN_KEY = 1 << 62


@dataclass(frozen=True)
class ScenarioSpec:
    """Scenario id, base seed and number of Monte Carlo runs."""

    id: int
    seed: int = DEFAULT_SEED
    runs: int = 1000

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise ValueError(f"scenario id must be one of {SCENARIO_IDS}, got {self.id}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a non-negative 64-bit integer")

    @property
    def sizes(self):
        return _SIZES[self.id]

    @property
    def labels(self):
        return np.repeat(np.arange(len(self.sizes)), self.sizes)


def rng_for(seed, *key):
    """Independent Philox generator for the stream ``(seed, *key)``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _design_probs(spec):
    """Scenario 4 record probabilities: one draw per seed, shared by all runs and periods."""
    lab = spec.labels
    p = (lab + rng_for(spec.seed, _DESIGN_KEY).random(lab.size)) / 5.0
    return {t: p for t in (0, 1, 2)}


def _true_probs(spec, rng, t, design):
    lab = spec.labels
    if spec.id == 1:
        return _S1_PROBS[lab]
    if spec.id == 2:
        return rng.random(len(spec.sizes))[lab]
    if spec.id == 3:
        return (-0.1 + (np.arange(5) + 1) / 5.0)[lab]
    return design[t]


def gen_scenario(spec, run_index, design=None):
    """Evaluation panel (periods 1 and 2) for one Monte Carlo run.

    The period-0 outcomes are drawn too but only feed the period-1
    forecasts. Bucket labels are ``"1"`` ... ``"J"``. In scenario 1 the
    period-0 probabilities repeat those of period 1.
    """
    if design is None and spec.id == 4:
        design = _design_probs(spec)
    lab = spec.labels
    sizes = np.asarray(spec.sizes, dtype=np.float64)
    names = np.array([str(j + 1) for j in range(len(spec.sizes))], dtype=object)
    prev = None
    cols = {"t": [], "y": [], "p_hat": [], "p_hat_alt": [], "p_true": [], "bucket": []}
    for t in (0, 1, 2):
        rng = rng_for(spec.seed, run_index, t)
        p = _true_probs(spec, rng, t, design)
        y = (rng.random(lab.size) < p).astype(np.float64)
        if t > 0:
            bucket_mean = np.bincount(lab, prev, len(sizes)) / sizes
            cols["t"].append(np.full(lab.size, t))
            cols["y"].append(y)
            cols["p_hat"].append(bucket_mean[lab])
            cols["p_hat_alt"].append(np.full(lab.size, prev.mean()))
            cols["p_true"].append(p)
            cols["bucket"].append(names[lab])
        prev = y
    return Panel(
        t=np.concatenate(cols["t"]),
        y=np.concatenate(cols["y"]),
        p_hat=np.concatenate(cols["p_hat"]),
        p_hat_alt=None if spec.id == 1 else np.concatenate(cols["p_hat_alt"]),
        p_true=np.concatenate(cols["p_true"]),
        bucket=list(np.concatenate(cols["bucket"])),
    )


def _bin_summaries(panel, edges):
    """Per-bin ``pbar, ybar, v, vhat`` and coverage indicator (None when empty)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        diagram = reliability_diagram(panel, edges)
    part = partition_by_bins(panel, edges)
    p = part.gather(panel.field("p_true"))
    cell_bin = [j for _, j in part.keys]
    out = []
    for b in diagram:
        if b.n_j == 0:
            out.append(None)
            continue
        idx = np.concatenate([
            np.arange(part.offsets[c], part.offsets[c + 1])
            for c in range(len(part.keys)) if cell_bin[c] == b.j
        ])
        pb = math.fsum(p[idx].tolist()) / idx.size
        v = math.fsum((p[idx] * (1.0 - p[idx])).tolist()) / idx.size
        covered = None if b.ci_lo is None else bool(b.ci_lo <= pb <= b.ci_hi)
        out.append({"p_bar": pb, "y_bar": b.y_bar, "v": v, "v_hat": b.v_hat,
                    "covered": covered})
    return out


def run_scenario_once(spec, run_index, design=None):
    """Statistics of one run.

    Returns a dict with the studentized statistic ``z``, the ratio of
    estimated to true standard deviation, whether the variance estimate was
    clamped and, for scenario 4, per-bin reliability summaries.
    """
    panel = gen_scenario(spec, run_index, design)
    part = partition_by_label(panel)
    n = panel.n
    p = panel.field("p_true")
    q = panel.p_hat
    clamped = False
    if spec.id == 1:
        est = buckets.adjusted_brier(panel, part)
        target = math.fsum(((p - q) ** 2).tolist()) / n
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NegativeVarianceWarning)
            var_hat = buckets.beta_hat_sq(panel, part)
        clamped = bool(caught)
        var_true = buckets.beta_sq_true(panel, part)
    else:
        y = panel.y
        r = panel.p_hat_alt
        est = math.fsum(((y - q) ** 2 - (y - r) ** 2).tolist()) / n
        target = math.fsum(((p - q) ** 2 - (p - r) ** 2).tolist()) / n
        var_hat = buckets.s_hat_sq(panel, part, "brier")
        var_true = buckets.s_sq_true(panel, "brier")
    with np.errstate(divide="ignore", invalid="ignore"):
        z = float(math.sqrt(n) * (est - target) / math.sqrt(var_hat)) if var_hat > 0 \
            else math.copysign(math.inf, est - target)
        ratio = math.sqrt(var_hat / var_true) if var_true > 0 else math.nan
    out = {"z": z, "ratio": ratio, "clamped": clamped}
    if spec.id == 4:
        out["bins"] = _bin_summaries(panel, DEFAULT_BIN_EDGES)
    return out


def five_number(x):
    """``min, q1, median, q3, max, mean`` with linearly interpolated quartiles."""
    x = np.asarray(x, dtype=np.float64)
    q = np.quantile(x, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"min": float(q[0]), "q1": float(q[1]), "median": float(q[2]),
            "q3": float(q[3]), "max": float(q[4]), "mean": float(np.mean(x))}


def _describe(x):
    d = five_number(x)
    d["sd"] = float(np.std(x, ddof=1)) if len(x) > 1 else math.nan
    d["runs"] = len(x)
    return d


def qq_data(statistics):
    """Pairs ``(Phi^-1((i - 0.5) / m), x_(i))`` for a normal Q-Q plot."""
    x = np.sort(np.asarray(statistics, dtype=np.float64))
    m = x.size
    if m < 2:
        raise ValueError("need at least two statistics")
    nd = NormalDist()
    return [(nd.inv_cdf((i + 0.5) / m), float(x[i])) for i in range(m)]


@dataclass
class MonteCarloSummary:
    """Aggregated Monte Carlo results for one scenario.

    ``ratio`` holds the five-number summary and mean of estimated over true
    standard deviation. ``statistics`` are the sorted studentized values.
    ``coverage`` and ``table3`` are filled for scenario 4 only; per-bin
    entries use the runs in which the bin is not empty.
    """

    scenario: int
    seed: int
    runs: int
    ratio_name: str
    ratio: dict
    statistics: np.ndarray
    ks_distance: float
    clamped: int
    coverage: Optional[list] = None
    coverage_runs: Optional[list] = None
    table3: Optional[dict] = None
    elapsed: float = field(default=0.0, compare=False)

    def table2_row(self):
        row = {"scenario": self.scenario, "statistic": self.ratio_name}
        row.update(self.ratio)
        return row

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "runs": self.runs,
            "ratio_name": self.ratio_name,
            "ratio": self.ratio,
            "ks_distance": self.ks_distance,
            "clamped": self.clamped,
            "coverage": self.coverage,
            "coverage_runs": self.coverage_runs,
            "table3": self.table3,
        }


def _run_chunk(args):
    spec, indices = args
    design = _design_probs(spec) if spec.id == 4 else None
    out = []
    for r in indices:
        try:
            out.append(run_scenario_once(spec, r, design))
        except EstimatorError as exc:
            exc.run_index = r
            exc.args = (f"run {r}: {exc}",)
            raise
    return out


def _default_workers():
    raw = os.environ.get("FORECASTVAL_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(n, 1)


def run_monte_carlo(spec, workers=None):
    """Run all ``spec.runs`` replications and aggregate them.

    ``workers`` processes split the runs into contiguous chunks; results
    are reassembled by run index, so the summary does not depend on it.
    The default comes from ``FORECASTVAL_THREADS`` (unset means serial,
    0 means one per CPU).
    """
    start = time.perf_counter()
    workers = _default_workers() if workers is None else max(int(workers), 1)
    runs = list(range(spec.runs))
    if workers == 1:
        results = _run_chunk((spec, runs))
    else:
        chunks = [(spec, c.tolist()) for c in np.array_split(runs, workers) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = [r for part in ex.map(_run_chunk, chunks) for r in part]

    z = np.array([r["z"] for r in results])
    ratios = np.array([r["ratio"] for r in results])
    ks = float(sps.kstest(z, "norm").statistic)
    summary = MonteCarloSummary(
        scenario=spec.id,
        seed=spec.seed,
        runs=spec.runs,
        ratio_name="beta_hat/beta" if spec.id == 1 else "s_hat/s",
        ratio=five_number(ratios),
        statistics=np.sort(z),
        ks_distance=ks,
        clamped=sum(r["clamped"] for r in results),
    )
    if spec.id == 4:
        n_bins = len(DEFAULT_BIN_EDGES) - 1
        coverage, coverage_runs = [], []
        table3 = {}
        for j in range(n_bins):
            entries = [r["bins"][j] for r in results if r["bins"][j] is not None]
            hits = [e["covered"] for e in entries if e["covered"] is not None]
            coverage.append(float(np.mean(hits)) if hits else None)
            coverage_runs.append(len(hits))
            for name in ("p_bar", "y_bar", "v", "v_hat"):
                vals = [e[name] for e in entries if e[name] is not None]
                table3[f"{name}({j + 1})"] = _describe(vals) if vals else None
        summary.coverage = coverage
        summary.coverage_runs = coverage_runs
        summary.table3 = table3
    summary.elapsed = time.perf_counter() - start
    return summary


def gen_gaussian_buckets(seed, run_index, sizes=(30, 30, 30, 30, 30), means=None,
                         sd=1.0, periods=2):
    """General-mode panel with Gaussian outcomes sharing a variance per bucket.

    Each period's bucket means are ``means`` (default ``0, 1, ..., J-1``);
    the first forecast is the previous period's bucket average and the
    second its overall average, as in the binary scenarios. ``p_true`` is
    left empty since the target involves the conditional means only;
    returns ``(panel, target)`` with ``target`` the true mean difference
    of conditional expected squared errors.
    """
    sizes = np.asarray(sizes)
    J = sizes.size
    lab = np.repeat(np.arange(J), sizes)
    mu = np.arange(J, dtype=np.float64) if means is None else np.asarray(means, float)
    cols = {"t": [], "y": [], "f1": [], "f2": [], "b": []}
    target = 0.0
    prev = None
    for t in range(periods + 1):
        rng = rng_for(seed, run_index, t)
        y = mu[lab] + sd * rng.standard_normal(lab.size)
        if t > 0:
            f1 = (np.bincount(lab, prev, J) / sizes)[lab]
            f2 = np.full(lab.size, prev.mean())
            target += float(np.sum((mu[lab] - f1) ** 2 - (mu[lab] - f2) ** 2))
            cols["t"].append(np.full(lab.size, t))
            cols["y"].append(y)
            cols["f1"].append(f1)
            cols["f2"].append(f2)
            cols["b"].append(lab)
        prev = y
    panel = Panel(
        t=np.concatenate(cols["t"]),
        y=np.concatenate(cols["y"]),
        p_hat=np.concatenate(cols["f1"]),
        p_hat_alt=np.concatenate(cols["f2"]),
        bucket=[str(j + 1) for j in np.concatenate(cols["b"])],
        mode="general",
    )
    return panel, target / panel.n

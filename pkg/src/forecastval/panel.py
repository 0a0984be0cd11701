"""Forecast-outcome panels and their (quasi-)bucket partitions.

A :class:`Panel` stores records column-wise, sorted by ``(t, k)``, where
``t`` is the period in which the outcome is observed and ``k`` indexes the
items forecast for that period. Optional columns hold a competing forecast,
a climatology forecast, a bucket label and (for simulations only) the true
occurrence probability.
"""

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DuplicateKeyError,
    EmptyHistoryError,
    InvalidBinsError,
    MissingFieldError,
    MissingLabelError,
    ParseError,
    ValidationError,
)

__all__ = [
    "ForecastRecord",
    "Panel",
    "BucketPartition",
    "load_csv",
    "write_csv",
    "partition_by_label",
    "partition_by_bins",
    "climatology_from_history",
]

COLUMNS = ("t", "k", "y", "p_hat", "p_hat_alt", "p_clim", "bucket", "p_true")
PROB_FIELDS = ("p_hat", "p_hat_alt", "p_clim", "p_true")
OPTIONAL_FLOAT = ("p_hat_alt", "p_clim", "p_true")


@dataclass(frozen=True)
class ForecastRecord:
    t: int
    k: int
    y: float
    p_hat: float
    p_hat_alt: Optional[float] = None
    p_clim: Optional[float] = None
    bucket: Optional[str] = None
    p_true: Optional[float] = None


def _readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class Panel:
    """Immutable, time-ordered collection of forecast records.

    Parameters
    ----------
    t, y, p_hat : array_like
        Period index, outcome and primary forecast per record.
    k : array_like, optional
        Item index within the period; assigned by input order when omitted.
    p_hat_alt, p_clim, p_true : array_like, optional
        Competing forecast, climatology and true probability. NaN marks a
        missing value.
    bucket : sequence of str or None, optional
        Bucket label per record; ``None`` marks an unlabeled record.
    mode : {"binary", "general"}
        In binary mode every outcome must be 0 or 1 and every forecast a
        probability; general mode accepts real outcomes and forecasts.
    """

    def __init__(self, t, y, p_hat, k=None, p_hat_alt=None, p_clim=None,
                 bucket=None, p_true=None, mode="binary"):
        if mode not in ("binary", "general"):
            raise ValueError("mode must be 'binary' or 'general'")
        t = np.asarray(t)
        n = t.shape[0]
        if t.ndim != 1:
            raise ValidationError("t must be one-dimensional")
        if n and not np.all(np.asarray(t) == np.floor(t)):
            raise ValidationError("period indices must be integers")
        t = t.astype(np.int64)
        if np.any(t < 0):
            raise ValidationError("period indices must be non-negative")
        if k is None:
            k = _auto_k(t)
        k = np.asarray(k)
        if n and not np.all(k == np.floor(k)):
            raise ValidationError("item indices must be integers")
        k = k.astype(np.int64)
        if np.any(k < 0):
            raise ValidationError("item indices must be non-negative")

        cols = {"y": y, "p_hat": p_hat, "p_hat_alt": p_hat_alt,
                "p_clim": p_clim, "p_true": p_true}
        arrays = {}
        for name, val in cols.items():
            if val is None:
                arrays[name] = None
                continue
            arr = np.asarray(val, dtype=np.float64)
            if arr.shape != (n,):
                raise ValidationError(f"{name} has shape {arr.shape}, expected ({n},)")
            arrays[name] = arr
        if np.any(np.isnan(arrays["y"])) or np.any(np.isnan(arrays["p_hat"])):
            raise ValidationError("y and p_hat may not be missing")
        labels = None
        if bucket is not None:
            labels = np.empty(n, dtype=object)
            labels[:] = [None if b is None or b == "" else str(b) for b in bucket]

        order = np.lexsort((k, t))
        if n and np.any(np.diff(order) < 0):
            t, k = t[order], k[order]
            arrays = {name: None if a is None else a[order] for name, a in arrays.items()}
            if labels is not None:
                labels = labels[order]
        dup = np.nonzero((np.diff(t) == 0) & (np.diff(k) == 0))[0]
        if dup.size:
            i = dup[0] + 1
            raise DuplicateKeyError(f"duplicate key (t={t[i]}, k={k[i]})")

        self.mode = mode
        self._check(t, k, arrays)
        self.t = _readonly(t)
        self.k = _readonly(k)
        self.y = _readonly(arrays["y"])
        self.p_hat = _readonly(arrays["p_hat"])
        self.p_hat_alt = None if arrays["p_hat_alt"] is None else _readonly(arrays["p_hat_alt"])
        self.p_clim = None if arrays["p_clim"] is None else _readonly(arrays["p_clim"])
        self.p_true = None if arrays["p_true"] is None else _readonly(arrays["p_true"])
        self.bucket = None if labels is None else _readonly(labels)

    def _check(self, t, k, arrays):
        binary = self.mode == "binary"
        y = arrays["y"]
        if binary:
            bad = np.nonzero((y != 0.0) & (y != 1.0))[0]
            if bad.size:
                i = bad[0]
                raise ValidationError(
                    f"non-binary outcome y={y[i]!r} at (t={t[i]}, k={k[i]})")
        if not np.all(np.isfinite(y)):
            raise ValidationError("outcomes must be finite")
        for name in PROB_FIELDS:
            arr = arrays[name]
            if arr is None:
                continue
            if not binary and name != "p_true":
                continue
            present = ~np.isnan(arr)
            bad = np.nonzero(present & ((arr < 0.0) | (arr > 1.0)))[0]
            if bad.size:
                i = bad[0]
                raise ValidationError(
                    f"{name}={arr[i]!r} outside [0, 1] at (t={t[i]}, k={k[i]})")

    @property
    def n(self):
        return int(self.t.shape[0])

    def __len__(self):
        return self.n

    @property
    def periods(self):
        """Distinct non-empty periods, ascending."""
        return np.unique(self.t)

    @property
    def T(self):
        return int(self.periods.shape[0])

    def has(self, name):
        arr = getattr(self, name)
        if arr is None:
            return False
        if name == "bucket":
            return all(b is not None for b in arr)
        return not np.any(np.isnan(arr))

    def field(self, name):
        """Return a column, raising :class:`MissingFieldError` if any value is absent."""
        if name not in COLUMNS:
            raise ValueError(f"unknown field {name!r}")
        if not self.has(name):
            raise MissingFieldError(f"field {name!r} is missing for some or all records")
        return getattr(self, name)

    def with_outcomes(self, y):
        """Copy of the panel with outcomes replaced, skipping re-sorting."""
        new = object.__new__(Panel)
        new.__dict__.update(self.__dict__)
        y = np.asarray(y, dtype=np.float64)
        if y.shape != self.y.shape:
            raise ValidationError("outcome vector has the wrong length")
        if self.mode == "binary" and np.any((y != 0.0) & (y != 1.0)):
            raise ValidationError("outcomes must be 0 or 1 in binary mode")
        new.y = _readonly(y)
        return new

    @property
    def records(self):
        out = []
        for i in range(self.n):
            out.append(ForecastRecord(
                t=int(self.t[i]), k=int(self.k[i]), y=float(self.y[i]),
                p_hat=float(self.p_hat[i]),
                p_hat_alt=_opt(self.p_hat_alt, i), p_clim=_opt(self.p_clim, i),
                bucket=None if self.bucket is None else self.bucket[i],
                p_true=_opt(self.p_true, i),
            ))
        return out

    @classmethod
    def from_records(cls, records, mode="binary"):
        records = list(records)

        def col(name):
            vals = [getattr(r, name) for r in records]
            if all(v is None for v in vals):
                return None
            return [np.nan if v is None else v for v in vals]

        labels = [r.bucket for r in records]
        return cls(
            t=[r.t for r in records], k=[r.k for r in records],
            y=[r.y for r in records], p_hat=[r.p_hat for r in records],
            p_hat_alt=col("p_hat_alt"), p_clim=col("p_clim"), p_true=col("p_true"),
            bucket=None if all(b is None for b in labels) else labels, mode=mode,
        )

    def __repr__(self):
        return f"Panel(n={self.n}, T={self.T}, mode={self.mode!r})"


def _opt(arr, i):
    if arr is None or np.isnan(arr[i]):
        return None
    return float(arr[i])


def _auto_k(t):
    k = np.zeros(t.shape[0], dtype=np.int64)
    seen = {}
    for i, ti in enumerate(t.tolist()):
        k[i] = seen.get(ti, 0)
        seen[ti] = k[i] + 1
    return k


@dataclass(frozen=True, eq=False)
class BucketPartition:
    """Assignment of records to ``(t, j)`` cells, stored in CSR form.

    ``order[offsets[c]:offsets[c + 1]]`` are the record indices of cell
    ``keys[c]``; cells are ordered by ``(t, j)`` and records within a cell by
    ``k``.
    """

    keys: tuple
    order: np.ndarray
    offsets: np.ndarray
    bin_edges: Optional[tuple] = None

    @property
    def sizes(self):
        return np.diff(self.offsets)

    @property
    def min_size(self):
        return int(self.sizes.min()) if len(self.keys) else 0

    @property
    def n(self):
        return int(self.offsets[-1])

    @property
    def cells(self):
        return {key: self.order[self.offsets[c]:self.offsets[c + 1]]
                for c, key in enumerate(self.keys)}

    def cell_sizes(self):
        return dict(zip(self.keys, self.sizes.tolist()))

    def gather(self, values):
        return np.asarray(values)[self.order]

    def record_cell(self):
        """Cell position of every record in the partition, in ``order`` order."""
        return np.repeat(np.arange(len(self.keys)), self.sizes)


def _build_partition(t, labels, index, bin_edges=None):
    """Group records by ``(t, label)``; ``index`` are the panel positions."""
    uniq, codes = np.unique(labels, return_inverse=True)
    order_local = np.lexsort((codes, t))
    t_sorted = t[order_local]
    c_sorted = codes[order_local]
    if t_sorted.size:
        brk = np.nonzero((np.diff(t_sorted) != 0) | (np.diff(c_sorted) != 0))[0] + 1
        starts = np.concatenate(([0], brk))
    else:
        starts = np.zeros(0, dtype=np.int64)
    offsets = np.concatenate((starts, [t_sorted.size])).astype(np.int64)
    keys = tuple((int(t_sorted[s]), _plain(uniq[c_sorted[s]])) for s in starts)
    return BucketPartition(keys=keys, order=_readonly(index[order_local]),
                           offsets=_readonly(offsets), bin_edges=bin_edges)


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def partition_by_label(panel):
    """Cells keyed by ``(t, bucket label)``."""
    if panel.bucket is None:
        raise MissingLabelError([(int(a), int(b)) for a, b in zip(panel.t, panel.k)])
    missing = [i for i, b in enumerate(panel.bucket) if b is None]
    if missing:
        raise MissingLabelError([(int(panel.t[i]), int(panel.k[i])) for i in missing])
    labels = np.array(panel.bucket.tolist(), dtype=str)
    return _build_partition(panel.t, labels, np.arange(panel.n))


def validate_bin_edges(bin_edges):
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2:
        raise InvalidBinsError("need at least two bin edges")
    if not np.all(np.diff(edges) > 0):
        raise InvalidBinsError("bin edges must be strictly increasing")
    if edges[0] != 0.0 or edges[-1] != 1.0:
        raise InvalidBinsError("bin edges must span [0, 1]")
    return edges


def assign_bins(values, edges):
    """Bin index per value; bins are ``[e_j, e_{j+1})`` except the last, which is closed."""
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def partition_by_bins(panel, bin_edges, forecast_field="p_hat"):
    """Quasi-bucket cells ``I_{j,t} = {k : forecast_{t,k} in B_j}``.

    Only the forecasts are read, never the outcomes, so the cells are known
    before the period's events are observed.
    """
    edges = validate_bin_edges(bin_edges)
    x = panel.field(forecast_field)
    bins = assign_bins(x, edges)
    return _build_partition(panel.t, bins, np.arange(panel.n),
                            bin_edges=tuple(edges.tolist()))


def climatology_from_history(history):
    """Relative frequency of the event over the outcome history ``Y_{-M}..Y_0``."""
    y = np.asarray(history, dtype=np.float64)
    if y.size == 0:
        raise EmptyHistoryError("climatology needs at least one past outcome")
    if np.any((y != 0.0) & (y != 1.0)):
        raise ValidationError("history outcomes must be 0 or 1")
    return float(y.mean())


def _fmt(x):
    return format(float(x), ".17g")


def load_csv(path, column_map=None, mode="binary"):
    """Read a panel from CSV.

    Parameters
    ----------
    path : str, path-like or file object
    column_map : dict, optional
        Maps canonical column names (``t``, ``k``, ``y``, ``p_hat``,
        ``p_hat_alt``, ``p_clim``, ``bucket``, ``p_true``) to CSV headers.
    mode : {"binary", "general"}

    Row numbers in error messages count the header as row 1.
    """
    column_map = dict(column_map or {})
    unknown = set(column_map) - set(COLUMNS)
    if unknown:
        raise ParseError(f"unknown column name(s) in map: {sorted(unknown)}")
    if hasattr(path, "read"):
        return _read(path, column_map, mode)
    with open(path, newline="", encoding="utf-8") as fh:
        return _read(fh, column_map, mode)


def _read(fh, column_map, mode):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", row=1) from None
    src = {name: column_map.get(name, name) for name in COLUMNS}
    pos = {name: header.index(h) for name, h in src.items() if h in header}
    for req in ("t", "y", "p_hat"):
        if req not in pos:
            raise ParseError(f"required column {src[req]!r} not in header", row=1)

    vals = {name: [] for name in pos}
    binary = mode == "binary"
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", row=rownum)
        for name, j in pos.items():
            cell = row[j].strip()
            if name == "bucket":
                vals[name].append(cell or None)
                continue
            if name in ("t", "k"):
                try:
                    v = int(cell)
                except ValueError:
                    raise ParseError(f"{name}={cell!r} is not an integer", row=rownum) from None
                if v < 0:
                    raise ValidationError(f"{name}={v} is negative", row=rownum)
                vals[name].append(v)
                continue
            if cell == "":
                if name in OPTIONAL_FLOAT:
                    vals[name].append(np.nan)
                    continue
                raise ParseError(f"{name} is empty", row=rownum)
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{name}={cell!r} is not a number", row=rownum) from None
            if not np.isfinite(v):
                raise ValidationError(f"{name}={cell!r} is not finite", row=rownum)
            if name == "y" and binary and v not in (0.0, 1.0):
                raise ValidationError(f"non-binary outcome y={cell}", row=rownum)
            if name in PROB_FIELDS and (binary or name == "p_true") and not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={cell} outside [0, 1]", row=rownum)
            vals[name].append(v)

    if "k" in vals:
        seen = {}
        for i, key in enumerate(zip(vals["t"], vals["k"])):
            if key in seen:
                raise DuplicateKeyError(
                    f"duplicate key (t={key[0]}, k={key[1]}) first seen at row {seen[key]}",
                    row=i + 2)
            seen[key] = i + 2
    return Panel(
        t=vals["t"], k=vals.get("k"), y=vals["y"], p_hat=vals["p_hat"],
        p_hat_alt=vals.get("p_hat_alt"), p_clim=vals.get("p_clim"),
        bucket=vals.get("bucket"), p_true=vals.get("p_true"), mode=mode,
    )


def write_csv(panel, path=None):
    """Write a panel as CSV with 17 significant digits; returns the text if ``path`` is None."""
    names = ["t", "k", "y", "p_hat"] + [
        n for n in ("p_hat_alt", "p_clim", "bucket", "p_true") if getattr(panel, n) is not None
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(panel.n):
        row = []
        for name in names:
            v = getattr(panel, name)[i]
            if name in ("t", "k"):
                row.append(str(int(v)))
            elif name == "bucket":
                row.append("" if v is None else v)
            elif np.isnan(v):
                row.append("")
            else:
                row.append(_fmt(v))
        w.writerow(row)
    text = buf.getvalue()
    if path is None:
        return text
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return None

"""Command-line interface.

Every subcommand writes one JSON document (or a plot-ready CSV) to stdout
or ``--out``. Exit status is 0 on success, 1 for invalid input or
arguments and 2 when the data do not meet an estimator's requirements.
"""

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from . import buckets as bk
from . import inference, oracle, reliability, sim
from .errors import EstimatorError, InputError
from .losses import LOSS_NAMES
from .panel import (
    load_csv,
    partition_by_bins,
    partition_by_label,
    validate_bin_edges,
    write_csv,
)

__all__ = ["main", "build_parser", "dumps_json"]

DEFAULT_BINS = "0,0.2,0.4,0.6,0.8,1"


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt_float(x):
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dumps_json(obj, indent=2, _level=0):
    """Deterministic JSON: insertion-ordered keys, floats at 17 significant digits.

    NaN and infinities become ``null``.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps_json(str(k))}: {dumps_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
        items = [pad + dumps_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _alpha(text):
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from None
    if not 0.0 < a < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _bins(text):
    try:
        edges = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid bin edges {text!r}") from None
    try:
        return validate_bin_edges(edges)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _probs(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid probability list {text!r}") from None


def _colmap(pairs):
    out = {}
    for pair in pairs or []:
        name, sep, header = pair.partition("=")
        if not sep or not name or not header:
            raise InputError(f"--col expects name=header, got {pair!r}")
        out[name.strip()] = header.strip()
    return out


def _add_input(p, with_loss=True):
    p.add_argument("input", help="CSV file with t,k,y,p_hat[,p_hat_alt][,p_clim][,bucket][,p_true]")
    p.add_argument("--col", action="append", metavar="NAME=HEADER",
                   help="map a field to a differently named CSV column (repeatable)")
    if with_loss:
        p.add_argument("--loss", default="brier", choices=LOSS_NAMES)
    p.add_argument("--alpha", type=_alpha, default=0.05)


def _add_variance(p):
    p.add_argument("--variance", default="quarter", choices=("quarter", "bucket", "quasi"),
                   help="p(1-p) estimate: 1/4 bound, bucket or quasi-bucket variance")
    p.add_argument("--bins", type=_bins, default=None, metavar="E0,E1,...",
                   help="group records into cells by forecast bins instead of bucket labels")


def _add_out(p):
    p.add_argument("--out", default=None, help="write output here instead of stdout")


def build_parser():
    parser = _Parser(prog="forecastval",
                     description="Inference for probability forecast scores.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="average score with a confidence interval")
    _add_input(p)
    _add_variance(p)
    _add_out(p)

    p = sub.add_parser("compare", help="difference of average scores of p_hat and p_hat_alt")
    _add_input(p)
    _add_variance(p)
    p.add_argument("--mode", default="linear_equivalent",
                   choices=("linear_equivalent", "general"),
                   help="target; 'general' allows losses without a linear equivalent")
    p.add_argument("--predictand", default="binary", choices=("binary", "general"),
                   help="'general' treats y as real-valued (squared error, bucket variance)")
    _add_out(p)

    p = sub.add_parser("winkler", help="Winkler score against climatology")
    _add_input(p)
    _add_variance(p)
    p.add_argument("--skip-degenerate", action="store_true",
                   help="drop records whose forecast equals climatology instead of failing")
    _add_out(p)

    p = sub.add_parser("skill", help="skill score relative to climatology")
    _add_input(p)
    _add_out(p)

    p = sub.add_parser("buckets", help="per-cell statistics and the adjusted Brier score")
    _add_input(p, with_loss=False)
    p.add_argument("--by", default="label", choices=("label", "bins"))
    p.add_argument("--bins", type=_bins, default=None, metavar="E0,E1,...")
    p.add_argument("--adjusted-brier", action="store_true",
                   help="add the adjusted Brier score and its interval")
    _add_out(p)

    p = sub.add_parser("reliability", help="reliability diagram data with intervals")
    _add_input(p, with_loss=False)
    p.add_argument("--bins", type=_bins, default=_bins(DEFAULT_BINS), metavar="E0,E1,...")
    p.add_argument("--naive", action="store_true",
                   help="include the independent-binomial intervals in the JSON")
    p.add_argument("--csv", default=None, metavar="PATH",
                   help="also write plot-ready CSV to PATH ('-' for stdout instead of JSON)")
    _add_out(p)

    p = sub.add_parser("simulate", help="Monte Carlo scenarios")
    p.add_argument("--scenario", type=int, required=True, choices=sim.SCENARIO_IDS)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=sim.DEFAULT_SEED)
    p.add_argument("--emit", default="table2",
                   choices=("qq", "coverage", "table2", "table3", "panel", "summary"))
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default from FORECASTVAL_THREADS, else 1)")
    _add_out(p)

    p = sub.add_parser("verify", help="exact enumeration checks on one cell")
    p.add_argument("--check", required=True, choices=sorted(oracle.CHECKS))
    p.add_argument("--p", type=_probs, required=True, metavar="P1,P2,...")
    _add_out(p)
    return parser


def _panel(args, mode="binary"):
    return load_csv(args.input, _colmap(args.col), mode=mode)


def _partition(panel, args):
    if getattr(args, "bins", None) is not None:
        return partition_by_bins(panel, args.bins)
    if panel.bucket is not None and args.variance != "quarter":
        return partition_by_label(panel)
    return None


def _cmd_score(args):
    panel = _panel(args)
    rep = inference.ci_average_loss(panel, args.loss, args.alpha, args.variance,
                                    _partition(panel, args))
    return rep.to_dict()


def _cmd_compare(args):
    if args.predictand == "general":
        panel = _panel(args, mode="general")
        part = partition_by_bins(panel, args.bins) if args.bins is not None else None
        return inference.compare_general_predictands(panel, args.loss, args.alpha, part).to_dict()
    panel = _panel(args)
    rep = inference.compare_forecasts(panel, args.loss, args.alpha, args.variance,
                                      _partition(panel, args), mode=args.mode)
    return rep.to_dict()


def _cmd_winkler(args):
    panel = _panel(args)
    rep = inference.winkler_score(panel, args.loss, args.alpha, args.variance,
                                  _partition(panel, args),
                                  degenerate="skip" if args.skip_degenerate else "error")
    return rep.to_dict()


def _cmd_skill(args):
    panel = _panel(args)
    return {
        "skill_score": inference.skill_score(panel, args.loss),
        "score": inference.average_score(panel, args.loss, "p_hat"),
        "climatology_score": inference.average_score(panel, args.loss, "p_clim"),
        "loss": args.loss,
        "n": panel.n,
    }


def _cmd_buckets(args):
    panel = _panel(args)
    if args.by == "bins":
        if args.bins is None:
            raise InputError("--by bins needs --bins")
        part = partition_by_bins(panel, args.bins)
    else:
        part = partition_by_label(panel)
    out = {"by": args.by, "n": panel.n,
           "cells": [s.to_dict() for s in bk.bucket_stats(panel, part)]}
    if args.adjusted_brier:
        out["adjusted_brier"] = bk.ci_adjusted_brier(panel, part, args.alpha).to_dict()
    return out


def _cmd_reliability(args):
    panel = _panel(args)
    bins = reliability.reliability_diagram(panel, args.bins, args.alpha)
    if args.csv is not None:
        text = reliability.plot_csv(bins)
        if args.csv == "-":
            return text
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    rows = []
    for b in bins:
        d = b.to_dict()
        if not args.naive:
            d.pop("naive_ci")
        rows.append(d)
    return {"alpha": args.alpha, "n": panel.n, "assumptions": reliability.ASSUMPTIONS,
            "bins": rows}


def _cmd_simulate(args):
    spec = sim.ScenarioSpec(args.scenario, seed=args.seed, runs=args.runs)
    if args.emit == "panel":
        return write_csv(sim.gen_scenario(spec, 0))
    summary = sim.run_monte_carlo(spec, workers=args.workers)
    if args.emit == "qq":
        lines = ["normal_quantile,statistic"]
        lines += [f"{_fmt_float(a)},{_fmt_float(b)}" for a, b in sim.qq_data(summary.statistics)]
        return "\n".join(lines) + "\n"
    if args.emit == "table2":
        row = summary.table2_row()
        row.update({"seed": spec.seed, "runs": spec.runs})
        return row
    if args.emit in ("coverage", "table3"):
        if spec.id != 4:
            raise InputError(f"--emit {args.emit} is only defined for scenario 4")
        if args.emit == "coverage":
            return {"scenario": 4, "seed": spec.seed, "runs": spec.runs,
                    "bins": DEFAULT_BINS, "coverage": summary.coverage,
                    "coverage_runs": summary.coverage_runs}
        return {"scenario": 4, "seed": spec.seed, "runs": spec.runs, "table3": summary.table3}
    out = summary.to_dict()
    out["ks_distance"] = summary.ks_distance
    return out


def _cmd_verify(args):
    return oracle.run_check(args.check, args.p)


_COMMANDS = {
    "score": _cmd_score,
    "compare": _cmd_compare,
    "winkler": _cmd_winkler,
    "skill": _cmd_skill,
    "buckets": _cmd_buckets,
    "reliability": _cmd_reliability,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}


def _emit(result, out):
    text = result if isinstance(result, str) else dumps_json(result) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    """Entry point; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    old = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        _emit(_COMMANDS[args.command](args), args.out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EstimatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        warnings.showwarning = old
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``t2select <subcommand> [flags]``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
Output goes to ``--output`` (``-`` for stdout); without it, to stdout, or to a
default file name inside $T2SELECT_OUTPUT_DIR when that variable is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import ncf, prop43, regions
from .altparams import AlternativeSpec, IntraclassSpec, SubsetMask, enumerate_subsets, load_spec
from .montecarlo import SimConfig, results_to_csv, simulate_powers
from .oracle import cells_to_csv, default_grid, oracle, region_fractions, region_scan_bivariate
from .specfun import DomainError, beta_lower_quantile, beta_upper_quantile, f_upper_quantile

__all__ = ["main", "run", "build_parser", "OUTPUT_ENV"]

OUTPUT_ENV = "T2SELECT_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    def __init__(self, flag, msg):
        super().__init__(f"{flag}: {msg}")
        self.flag = flag


# ---- argument types ----------------------------------------------------------

def _prob_open(s):
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly inside (0, 1), got {s}")
    return v


def _prob_closed(s):
    v = float(s)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {s}")
    return v


def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _nonneg(s):
    v = float(s)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {s}")
    return v


def _pos(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be finite and > 0, got {s}")
    return v


def _float_list(s):
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _fraction(s):
    try:
        v = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational such as 1/3, got {s!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


# ---- output helpers ------------------------------------------------------------

def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _json(obj):
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Fraction):
            return str(o)
        raise TypeError(type(o).__name__)

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return "nan" if math.isnan(o) else ("inf" if o > 0 else "-inf")
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, default=default) + "\n"


def _text(header, rows):
    cells = [[f"{x:.6g}" if isinstance(x, float) else str(x) for x in r] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _render(fmt, header, rows, obj=None):
    if fmt == "csv":
        return _csv(header, rows)
    if fmt == "json":
        return _json(obj if obj is not None else [dict(zip(header, r)) for r in rows])
    return _text(header, rows)


def _write(args, text, default_name):
    out = args.output
    if out is None:
        env = os.environ.get(OUTPUT_ENV)
        if env:
            out = str(Path(env) / f"{default_name}.{ 'txt' if args.format == 'text' else args.format}")
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    if not path.is_absolute() and os.environ.get(OUTPUT_ENV) and args.output is not None:
        path = Path(os.environ[OUTPUT_ENV]) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---- subcommands ----------------------------------------------------------------

def cmd_power(args):
    q = ncf.PowerQuery(args.lam, ncf.DfPair(args.m, args.n), args.alpha)
    value, tail = ncf.power(q, args.tol)
    lm = ncf.log_miss(args.lam, args.m, args.n, args.alpha)
    header = ["lambda", "m", "n", "alpha", "power", "log_miss", "k_max", "tail_bound"]
    return _render(args.format, header, [[args.lam, args.m, args.n, args.alpha, value, lm, tail.k_max, tail.tail_bound]])


def cmd_quantile(args):
    fn = {"lower": beta_lower_quantile, "upper": beta_upper_quantile, "f": f_upper_quantile}[args.kind]
    v = fn(args.m, args.n, args.alpha)
    return _render(args.format, ["kind", "m", "n", "alpha", "quantile"], [[args.kind, args.m, args.n, args.alpha, v]])


def _spec_from_args(args) -> AlternativeSpec:
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise UsageError("--config", f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError("--config", f"invalid JSON: {exc}") from None
    if args.gamma is not None:
        d["gamma"] = args.gamma
        d.pop("intraclass", None)
        d.pop("p", None)
    if args.corr is not None:
        try:
            d["corr"] = json.loads(args.corr)
        except json.JSONDecodeError:
            raise UsageError("--corr", "expected a JSON matrix such as [[1,0.3],[0.3,1]]") from None
    if args.N is not None:
        d["N"] = args.N
    if not d:
        raise UsageError("--config", "give a spec file or --gamma/--corr/--N")
    if "intraclass" in d:
        ic = d["intraclass"]
        p = ic.get("p", 0)
        rho = ic.get("rho", 0.0)
        if p >= 2 and not -1.0 / (p - 1) < rho < 1.0:
            raise UsageError("--config", f"intraclass rho={rho} outside the feasible range ({-1 / (p - 1):.6g}, 1)")
    try:
        return AlternativeSpec.from_dict(d)
    except DomainError as exc:
        raise UsageError(_blame(args, str(exc)), str(exc)) from None


def _blame(args, msg):
    """The inline flag a spec error points at, or --config when it came from the file."""
    for flag, given, words in (("--N", args.N, ("N must",)),
                               ("--gamma", args.gamma, ("gamma", "p=")),
                               ("--corr", args.corr, ("corr", "Cholesky", "pivot"))):
        if given is not None and any(w in msg for w in words):
            return flag
    return "--config" if args.config else "--gamma"


def cmd_oracle(args):
    spec = _spec_from_args(args)
    res = oracle(spec, args.alpha, args.tol)
    if args.format == "json":
        return _json({"alpha": args.alpha, "p": spec.p, "N": spec.N, **res.to_dict()})
    header = ["size", "subset", "power", "log_miss"]
    rows = [[s.size, s.subset.bits, s.power, s.log_miss] for s in res.per_size_best]
    body = _render(args.format, header, rows)
    if args.format == "text":
        body = f"best subset {res.best_subset} (bitmask {res.best_subset.bits}), power {res.best_power:.10g}\n" + body
    return body


def cmd_regions(args):
    fmt = args.format
    if args.mode == "multivariate":
        if args.p is None or args.case is None:
            raise UsageError("--p" if args.p is None else "--case", "required for multivariate regions")
        if args.p < 3:
            raise UsageError("--p", "must be >= 3")
        if args.case == 4 and args.p % 2:
            raise UsageError("--case", "case 4 needs an even --p")
        rep = (regions.local_multivariate_region(args.p, args.alpha, args.case, args.epsilon) if args.local
               else regions.asymp_multivariate_region(args.p, args.alpha, args.case))
        if fmt == "json":
            return _json(rep.to_dict())
        iv = rep.interval or (math.nan, math.nan)
        header = ["p", "alpha", "case", "rho_lo", "rho_hi", "condition_holds"] + list(rep.constants)
        return _render(fmt, header, [[args.p, args.alpha, args.case, iv[0], iv[1], rep.condition_holds,
                                      *rep.constants.values()]])
    if args.mode == "bivariate":
        if args.eta is None:
            raise UsageError("--eta", "required for bivariate intervals")
        if args.local:
            if args.alpha > 0.5:
                raise UsageError("--alpha", "local intervals need alpha <= 1/2")
            lo, hi, om = regions.local_bivariate_interval(args.alpha, args.eta)
            return _render(fmt, ["alpha", "eta", "Z", "rho_lo", "rho_hi", "one_minus_m"],
                           [[args.alpha, args.eta, regions.z_ratio_123(args.alpha), lo, hi, om]])
        if args.alpha > 2 / 3:
            raise UsageError("--alpha", "asymptotic intervals need alpha <= 2/3")
        lo, hi = regions.asymp_bivariate_interval(args.alpha, args.eta)
        return _render(fmt, ["alpha", "eta", "Q", "rho_lo", "rho_hi"],
                       [[args.alpha, args.eta, regions.q_ratio_123(args.alpha), lo, hi]])
    if args.mode == "exact":
        if args.eta is None:
            raise UsageError("--eta", "required for exact intervals")
        if args.N not in (3, 5):
            raise UsageError("--N", "exact intervals exist for N = 3 or 5")
        lo, hi = regions.exact_bivariate_interval(args.N, args.eta)
        return _render(fmt, ["N", "eta", "rho_lo", "rho_hi"], [[args.N, args.eta, lo, hi]])
    if args.mode == "scan":
        N = args.N or 3
        eta, rho = default_grid(args.grid)
        cells = region_scan_bivariate(N, args.alpha, eta, rho, args.gamma1_sq)
        if args.plot_data:
            return _boundary_from_cells(cells, fmt)
        if fmt == "json":
            return _json({"N": N, "alpha": args.alpha, "gamma1_sq": args.gamma1_sq,
                          "fractions": {str(k): v for k, v in region_fractions(cells).items()},
                          "cells": [c.__dict__ for c in cells]})
        if fmt == "csv":
            return cells_to_csv(cells)
        return _text(["size", "fraction"], [[k, v] for k, v in region_fractions(cells).items()])
    if args.mode == "boundary":
        if args.table not in (1, 3, 5):
            raise UsageError("--table", "boundaries exist for tables 1, 3 and 5")
        if args.table == 3 and args.alpha > 0.5:
            raise UsageError("--alpha", "local intervals need alpha <= 1/2")
        rows = regions.interval_polyline(args.table, args.alpha, args.grid)
        header = ["eta", "n3_rho_lo", "n3_rho_hi", "n5_rho_lo", "n5_rho_hi"] if args.table == 5 else ["eta", "rho_lo", "rho_hi"]
        return _render(fmt, header, rows)
    raise UsageError("mode", f"unknown mode {args.mode}")


def _boundary_from_cells(cells, fmt):
    """Per eta, the rho extent of the scanned size-1 cells (polyline data)."""
    by_eta = {}
    for c in cells:
        if c.oracle_size == 1:
            lo, hi = by_eta.get(c.eta, (math.inf, -math.inf))
            by_eta[c.eta] = (min(lo, c.rho), max(hi, c.rho))
    rows = [[e, lo, hi] for e, (lo, hi) in sorted(by_eta.items())]
    return _render(fmt, ["eta", "rho_lo", "rho_hi"], rows)


def cmd_table(args):
    return regions.emit_table(args.id, args.format)


def cmd_gfun(args):
    if not 1 <= args.q <= args.n - 1:
        raise UsageError("--q", f"must satisfy 1 <= q <= n - 1 = {args.n - 1}")
    g = ncf.g_alpha(args.lam, args.m, args.n, args.q, args.alpha, args.tol)
    return _render(args.format, ["lambda", "m", "n", "q", "alpha", "g"], [[args.lam, args.m, args.n, args.q, args.alpha, g]])


def cmd_alpha_star(args):
    rows = []
    for lam in args.lam:
        if not lam > 0:
            raise UsageError("--lambda", f"values must be positive, got {lam}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                a = ncf.alpha_star(args.l, lam, args.tol)
                rows.append([args.l, lam, a, "crossing"])
            except ncf.NoCrossingError:
                rows.append([args.l, lam, math.nan, "no crossing found (evidence against a crossing)"])
    return _render(args.format, ["l", "lambda", "alpha_star", "status"], rows)


def cmd_verify(args):
    if args.explore is not None:
        rep = prop43.explore_conjecture(args.explore, args.lambdas)
        return rep.to_csv() if args.format == "csv" else (_json({
            "l": rep.l, "label": rep.label, "consistent": rep.consistent,
            "scans": [{"lambda": s.lam, "signs": s.signs, "alpha_star": s.alpha_star,
                       "single_crossing": s.single_crossing, "slope_at_zero": s.slope_at_zero}
                      for s in rep.scans]}) if args.format == "json" else rep.to_text())
    checks = []
    for l, delta in ((1, Fraction(1)), (2, Fraction(1, 3))) if args.l is None else ((args.l, args.delta or Fraction(1, 2 * args.l - 1)),):
        checks += prop43.check_binomial_inequality(l, delta, args.k_max)
    if args.format == "csv":
        return prop43.checks_to_csv(checks)
    ls = sorted({c.l for c in checks})
    summary = {
        "checks": [{"l": c.l, "delta": c.delta, "k": c.k, "holds": c.holds, "strict": c.strict} for c in checks],
        "k1_threshold": {str(l): str(prop43.k1_threshold_exact(l)) for l in ls},
        "induction_step_l2": prop43.check_induction_step_l2(args.k_max),
        "all_hold": all(c.holds for c in checks),
    }
    if args.format == "json":
        return _json(summary)
    lines = []
    for l in ls:
        cl = [c for c in checks if c.l == l]
        eq = [c.k for c in cl if c.holds and not c.strict]
        bad = [c.k for c in cl if not c.holds]
        lines.append(f"l={l} delta={cl[0].delta:.6g}: equality at k={eq}, "
                     f"{'holds for all k' if not bad else f'fails at k={bad[:10]}'} up to k={args.k_max}; "
                     f"k=1 threshold delta*={prop43.k1_threshold_exact(l)}")
    lines.append(f"cubic / ratio induction step (l=2) up to k={args.k_max}: {summary['induction_step_l2']}")
    return "\n".join(lines) + "\n"


def _parse_subsets(spec_arg, p):
    if spec_arg == "all":
        return list(enumerate_subsets(p))
    if spec_arg == "default":
        return [SubsetMask.full(p)] + [SubsetMask(1 << j, p) for j in range(p)]
    try:
        return [SubsetMask(int(b), p) for b in spec_arg.split(",")]
    except (ValueError, DomainError) as exc:
        raise UsageError("--subsets", str(exc)) from None


def cmd_mc(args):
    spec = _spec_from_args(args)
    cfg = SimConfig(spec, args.reps, args.seed, args.alpha, ks_samples=args.ks_samples, workers=args.workers)
    res = simulate_powers(cfg, _parse_subsets(args.subsets, spec.p))
    if args.format == "csv":
        return results_to_csv(res)
    rows = [[r.subset.bits, r.lam, r.analytic_power, r.empirical_power, r.standard_error, r.ks_statistic] for r in res]
    return _render(args.format, ["subset", "lambda", "analytic_power", "empirical_power", "se", "ks_stat"], rows)


# ---- parser ----------------------------------------------------------------------

def _common(p, default_format="csv"):
    p.add_argument("--format", choices=("csv", "json", "text"), default=default_format)
    p.add_argument("--output", help="output file ('-' for stdout)")


def _spec_flags(p):
    p.add_argument("--config", help="JSON spec file")
    p.add_argument("--gamma", type=_float_list, help="comma-separated gamma (overrides config)")
    p.add_argument("--corr", help="correlation matrix as JSON (overrides config)")
    p.add_argument("--N", type=_pos_int, help="sample size (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="t2select", description="Power comparisons of subset T^2 tests.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("power", help="power of the size-alpha test at noncentrality lambda")
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--m", type=_pos_int, required=True)
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--alpha", type=_prob_closed, required=True)
    p.add_argument("--tol", type=_pos, default=ncf.DEFAULT_TOL)
    _common(p)
    p.set_defaults(fn=cmd_power, name="power")

    p = sub.add_parser("quantile", help="beta / f quantiles")
    p.add_argument("--m", type=_pos_int, required=True)
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--alpha", type=_prob_open, required=True)
    p.add_argument("--kind", choices=("lower", "upper", "f"), default="lower")
    _common(p)
    p.set_defaults(fn=cmd_quantile, name="quantile")

    p = sub.add_parser("oracle", help="best subset for a given alternative")
    _spec_flags(p)
    p.add_argument("--alpha", type=_prob_open, required=True)
    p.add_argument("--tol", type=_pos, default=ncf.DEFAULT_TOL)
    _common(p, "json")
    p.set_defaults(fn=cmd_oracle, name="oracle")

    p = sub.add_parser("regions", help="dominance intervals, region scans and boundary polylines")
    p.add_argument("mode", choices=("multivariate", "bivariate", "exact", "scan", "boundary"))
    p.add_argument("--alpha", type=_prob_open, default=0.05)
    p.add_argument("--p", type=_pos_int)
    p.add_argument("--case", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--local", action="store_true", help="small-noncentrality (local) version")
    p.add_argument("--epsilon", type=_prob_open, default=regions.DEFAULT_EPSILON)
    p.add_argument("--eta", type=float)
    p.add_argument("--N", type=_pos_int)
    p.add_argument("--gamma1-sq", dest="gamma1_sq", type=_pos, default=50.0)
    p.add_argument("--grid", type=_pos_int, default=201)
    p.add_argument("--table", type=int)
    p.add_argument("--plot-data", dest="plot_data", action="store_true",
                   help="emit region boundaries as (eta, rho_lo, rho_hi) polyline rows")
    _common(p)
    p.set_defaults(fn=cmd_regions, name="regions")

    p = sub.add_parser("table", help="regenerate a numeric table")
    p.add_argument("--id", type=int, choices=(1, 2, 3, 4, 5), required=True)
    _common(p)
    p.set_defaults(fn=cmd_table, name="table")

    p = sub.add_parser("gfun", help="extra noncentrality offsetting q added variables")
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--m", type=_pos_int, required=True)
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--q", type=_pos_int, required=True)
    p.add_argument("--alpha", type=_prob_open, required=True)
    p.add_argument("--tol", type=_pos, default=1e-10)
    _common(p)
    p.set_defaults(fn=cmd_gfun, name="gfun")

    p = sub.add_parser("alpha-star", help="crossing size of the univariate and bivariate power curves")
    p.add_argument("--l", type=_pos_int, required=True)
    p.add_argument("--lambda", dest="lam", type=_float_list, required=True, help="comma-separated lambdas")
    p.add_argument("--tol", type=_pos, default=1e-10)
    _common(p)
    p.set_defaults(fn=cmd_alpha_star, name="alpha_star")

    p = sub.add_parser("verify-prop43", help="exact binomial-inequality certificate and crossing exploration")
    p.add_argument("--k-max", dest="k_max", type=_pos_int, default=200)
    p.add_argument("--l", type=_pos_int)
    p.add_argument("--delta", type=_fraction)
    p.add_argument("--explore", type=_pos_int, metavar="L", help="scan the crossing structure for this l")
    p.add_argument("--lambdas", type=_float_list, default=[0.5, 1.0, 2.0, 5.0, 10.0])
    _common(p)
    p.set_defaults(fn=cmd_verify, name="verify_prop43")

    p = sub.add_parser("mc", help="Monte Carlo check of powers and T^2 distributions")
    _spec_flags(p)
    p.add_argument("--alpha", type=_prob_open, default=0.05)
    p.add_argument("--reps", type=_pos_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subsets", default="default", help="'default' (full + singletons), 'all', or bitmasks")
    p.add_argument("--ks-samples", dest="ks_samples", type=int, default=20_000)
    p.add_argument("--workers", type=_pos_int, default=1)
    _common(p)
    p.set_defaults(fn=cmd_mc, name="mc")
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify-prop43" and args.k_max < 2:
        print("t2select: error: --k-max: must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = args.fn(args)
        _write(args, text, args.name if args.command != "table" else f"table_{args.id}")
    except UsageError as exc:
        print(f"t2select: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"t2select: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"t2select: error: --output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"t2select: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

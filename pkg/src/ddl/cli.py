"""Command-line entry point.

Every subcommand validates its flags, runs a deterministic computation, and
writes CSV or JSON with a small metadata header (tool version, config echo,
timestamp and wall time).  Repeated runs with the same flags produce
identical files except for the generated-at line, which is isolated in the
metadata.  Exit codes: 0 success, 2 validation error, 3 resource refusal.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .multfunc import CatalogError, catalog_entries, parse_spec
from .sieve import (DEFAULT_SEGMENT_SIZE, ResourceLimitError, SieveError,
                    cache_dir_from_env, scan_segments, write_segment_cache)
from .empirical import (GridError, ThresholdGrid, equidist_tally,
                        estimate_normalized_cdf, estimate_weighted_cdf,
                        lattice_circle_cdf, partial_summation_check,
                        smoothed_indicator_mean)
from .analytic import (WitnessNotFound, char_function, continuity_diagnostic,
                       greedy_witness, halasz_series, mean_value_product,
                       mertens_kappa, wirsing_prediction)
from .inversion import InversionError, invert, sup_distance

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3


def _int_arg(s: str) -> int:
    """Integer flag accepting scientific notation like 1e7."""
    try:
        return int(s)
    except ValueError:
        v = float(s)
        if v != int(v):
            raise argparse.ArgumentTypeError(f"{s!r} is not an integer")
        return int(v)


def _fraction_arg(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{s!r} is not a fraction")


def _parse_t_spec(spec: str) -> np.ndarray:
    if spec.startswith("linspace:"):
        try:
            a, b, n = spec.split(":", 1)[1].split(",")
            return np.linspace(float(a), float(b), int(n))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad linspace spec {spec!r}") from None
    try:
        return np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad t list {spec!r}") from None


def _meta(args: argparse.Namespace, t0: float) -> dict:
    config = {k: (str(v) if isinstance(v, (Fraction, Path)) else v)
              for k, v in sorted(vars(args).items()) if k != "func"}
    return {
        "tool": "ddl",
        "version": __version__,
        "config": config,
        "generated": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_time_s": round(time.monotonic() - t0, 3),
        },
    }


def _emit_json(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _estimate_csv(est, meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# ddl v{meta['version']} {est.mode}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    buf.write(f"# normalizer: {est.normalizer:.12g}\n")
    gen = meta["generated"]
    buf.write(f"# generated: {gen['timestamp']} wall={gen['wall_time_s']}s\n")
    buf.write("u_num,u_den,raw_re,raw_im,value_re,value_im\n")
    vals = est.values
    for k, u in enumerate(est.grid):
        r = est.raw[k]
        v = vals[k]
        buf.write(f"{u.numerator},{u.denominator},{r.real:.12g},{r.imag:.12g},"
                  f"{v.real:.12g},{v.imag:.12g}\n")
    return buf.getvalue()


def _emit_estimate(est, args, t0):
    meta = _meta(args, t0)
    fmt = getattr(args, "format", "csv")
    out = getattr(args, "out", None)
    if fmt == "json":
        rows = [{"u_num": u.numerator, "u_den": u.denominator,
                 "raw_re": est.raw[k].real, "raw_im": est.raw[k].imag,
                 "value_re": est.values[k].real, "value_im": est.values[k].imag}
                for k, u in enumerate(est.grid)]
        _emit_json({"meta": meta, "mode": est.mode, "normalizer": est.normalizer,
                    "rows": rows}, out)
    else:
        text = _estimate_csv(est, meta)
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
    if getattr(args, "gnuplot", False) and out:
        gp = Path(out).with_suffix(Path(out).suffix + ".gp")
        gp.write_text(
            "set datafile separator ','\n"
            f"set title 'ddl {est.mode} {est.f_id}'\n"
            "set xlabel 'u'\nset ylabel 'value'\n"
            f"plot '{out}' using ($1/$2):5 with lines title 'value'\n")


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_catalog(args, t0):
    payload = {"meta": _meta(args, t0), "entries": catalog_entries()}
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_sieve_cache(args, t0):
    cache_dir = args.dir or cache_dir_from_env()
    if not cache_dir:
        raise SieveError("no cache directory: pass --dir or set DDL_CACHE_DIR")
    written = []
    for chunk in scan_segments(args.x, segment_size=args.segment_size, cache_dir=None):
        written.append(str(write_segment_cache(cache_dir, chunk.lo, chunk.hi, chunk.sigma)))
    _emit_json({"meta": _meta(args, t0), "written": written}, args.out)
    return EXIT_OK


def _common_kwargs(args):
    return {"segment_size": args.segment_size, "workers": args.workers}


def _cmd_estimate(args, t0):
    f = parse_spec(args.f)
    grid = ThresholdGrid.parse(args.grid)
    fn = estimate_weighted_cdf if args.mode == "df" else estimate_normalized_cdf
    est = fn(f, args.x, grid, **_common_kwargs(args))
    _emit_estimate(est, args, t0)
    return EXIT_OK


def _cmd_lattice(args, t0):
    grid = ThresholdGrid.parse(args.grid)
    est = lattice_circle_cdf(args.R, grid, **_common_kwargs(args))
    _emit_estimate(est, args, t0)
    return EXIT_OK


def _cmd_equidist(args, t0):
    tally = equidist_tally(args.mode, args.q, args.u, args.x, **_common_kwargs(args))
    payload = {
        "meta": _meta(args, t0),
        "mode": tally.mode, "q": tally.q,
        "u": {"num": tally.u.numerator, "den": tally.u.denominator},
        "x": tally.x,
        "classes": [{"label": int(lab), "count": int(c), "density": float(c) / tally.x}
                    for lab, c in zip(tally.labels, tally.counts)],
        "qualifying_total": tally.qualifying_total,
        "class_sum": int(tally.counts.sum()),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_smoothed(args, t0):
    f = parse_spec(args.f)
    val = smoothed_indicator_mean(f, args.x, args.u, args.m, **_common_kwargs(args))
    _emit_json({"meta": _meta(args, t0),
                "value_re": val.real, "value_im": val.imag}, args.out)
    return EXIT_OK


def _cmd_psum_check(args, t0):
    f = parse_spec(args.f)
    lhs, rhs = partial_summation_check(f, args.x, args.u, **_common_kwargs(args))
    _emit_json({"meta": _meta(args, t0),
                "lhs_re": lhs.real, "lhs_im": lhs.imag,
                "rhs_re": rhs.real, "rhs_im": rhs.imag,
                "abs_difference": abs(lhs - rhs)}, args.out)
    return EXIT_OK


def _cmd_analytic(args, t0):
    f = parse_spec(args.f)
    sub = args.analytic_op
    if sub == "mean":
        res = mean_value_product(f, args.P)
        payload = {"value_re": res.value.real, "value_im": res.value.imag,
                   "P": res.P, "tail_bound": res.tail_bound}
    elif sub == "wirsing":
        payload = {"prediction": wirsing_prediction(f, args.x, args.P),
                   "x": args.x, "P": args.P}
    elif sub == "psi":
        ts = _parse_t_spec(args.t)
        prof = char_function(f, ts, args.P, args.J)
        payload = {"P": prof.P,
                   "points": [{"t": float(t), "re": v.real, "im": v.imag,
                               "tail_bound": float(b)}
                              for t, v, b in zip(prof.ts, prof.values, prof.tail_bounds)]}
    elif sub == "kappa":
        weighted, recip = mertens_kappa(f, args.x)
        payload = {"weighted_logsum_ratio": weighted, "reciprocal_sum": recip,
                   "claimed_kappa": f.kappa, "x": args.x}
    elif sub == "halasz":
        payload = {"series": halasz_series(f, args.beta, args.P),
                   "beta": args.beta, "P": args.P}
    elif sub == "jumps":
        payload = {"diagnostic": continuity_diagnostic(f, args.P), "P": args.P}
    elif sub == "witness":
        try:
            m = greedy_witness(f, args.v, args.u, args.p_cap)
            payload = {"found": True, "m": m}
        except WitnessNotFound as exc:
            payload = {"found": False, "reason": str(exc)}
    else:  # pragma: no cover
        raise CatalogError(f"unknown analytic op {sub!r}")
    payload["meta"] = _meta(args, t0)
    _emit_json(payload, args.out)
    return EXIT_OK


def _invert_points(spec: str) -> np.ndarray:
    if spec == "log-default":
        grid = ThresholdGrid.default()
        _, logs = grid.log_points()
        return logs
    return np.sort(_parse_t_spec(spec))


def _cmd_invert(args, t0):
    f = parse_spec(args.f)
    h = args.step
    ts = np.arange(0.0, args.T + h / 2, h)
    prof = char_function(f, ts, args.P)
    points = _invert_points(args.points)
    inv = invert(prof, points, T=args.T, step=args.step)
    payload = {
        "meta": _meta(args, t0),
        "T": inv.T, "step": inv.step, "eps": inv.eps, "P": args.P,
        "imag_residue": inv.imag_residue,
        "isotonic_changed": inv.isotonic_changed,
        "slack_exceeded": inv.slack_exceeded,
        "points": [{"x": float(p), "F": float(v), "raw": float(r)}
                   for p, v, r in zip(inv.points, inv.values, inv.raw)],
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_compare(args, t0):
    f = parse_spec(args.f)
    grid = ThresholdGrid.parse(args.grid)
    est = estimate_weighted_cdf(f, args.x, grid, **_common_kwargs(args))
    h = args.step
    ts = np.arange(0.0, args.T + h / 2, h)
    prof = char_function(f, ts, args.P)
    _, logs = grid.log_points()
    inv = invert(prof, logs, T=args.T, step=args.step)
    cmpres = sup_distance(est, inv)
    payload = {
        "meta": _meta(args, t0),
        "sup_distance": cmpres.sup_distance,
        "at_log_point": cmpres.at_point,
        "budgets": {
            "empirical_x": cmpres.empirical_x,
            "inverted_eps": cmpres.inverted_eps,
            "T": cmpres.T, "step": cmpres.step,
            "profile_P": args.P,
            "max_profile_tail": float(np.max(prof.tail_bounds)),
        },
    }
    _emit_json(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, out=True):
    p.add_argument("--segment-size", type=_int_arg, default=DEFAULT_SEGMENT_SIZE)
    p.add_argument("--workers", type=int, default=1)
    if out:
        p.add_argument("--out", default=None, help="output file (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddl", description=__doc__)
    ap.add_argument("--version", action="version", version=f"ddl {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list the multiplicative-function catalog")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("sieve-cache", help="precompute binary sigma caches")
    p.add_argument("--x", type=_int_arg, required=True)
    p.add_argument("--dir", default=None, help="cache directory (default: DDL_CACHE_DIR)")
    _add_common(p)
    p.set_defaults(func=_cmd_sieve_cache)

    p = sub.add_parser("estimate", help="weighted distribution of n/sigma(n)")
    p.add_argument("--f", required=True)
    p.add_argument("--x", type=_int_arg, required=True)
    p.add_argument("--mode", choices=("df", "dtilde"), default="df")
    p.add_argument("--grid", default="default")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--gnuplot", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("lattice", help="two-squares lattice-point distribution")
    p.add_argument("--R", type=_int_arg, required=True)
    p.add_argument("--grid", default="default")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--gnuplot", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_lattice)

    p = sub.add_parser("equidist", help="equidistribution tallies of qualifying n")
    p.add_argument("--mode", choices=("omega", "coprime"), required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--u", type=_fraction_arg, required=True)
    p.add_argument("--x", type=_int_arg, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_equidist)

    p = sub.add_parser("smoothed", help="tent-smoothed indicator mean")
    p.add_argument("--f", required=True)
    p.add_argument("--x", type=_int_arg, required=True)
    p.add_argument("--u", type=_fraction_arg, required=True)
    p.add_argument("--m", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_smoothed)

    p = sub.add_parser("psum-check", help="partial-summation identity check")
    p.add_argument("--f", required=True)
    p.add_argument("--x", type=_int_arg, required=True)
    p.add_argument("--u", type=_fraction_arg, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_psum_check)

    p = sub.add_parser("analytic", help="Euler products, prime sums, witnesses")
    asub = p.add_subparsers(dest="analytic_op", required=True)

    q = asub.add_parser("mean")
    q.add_argument("--f", required=True)
    q.add_argument("--P", type=_int_arg, required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("wirsing")
    q.add_argument("--f", required=True)
    q.add_argument("--x", type=_int_arg, required=True)
    q.add_argument("--P", type=_int_arg, default=None)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("psi")
    q.add_argument("--f", required=True)
    q.add_argument("--t", required=True, help="comma list or linspace:a,b,n")
    q.add_argument("--P", type=_int_arg, required=True)
    q.add_argument("--J", type=int, default=None)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("kappa")
    q.add_argument("--f", required=True)
    q.add_argument("--x", type=_int_arg, required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("halasz")
    q.add_argument("--f", required=True)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--P", type=_int_arg, required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("jumps")
    q.add_argument("--f", required=True)
    q.add_argument("--P", type=_int_arg, required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    q = asub.add_parser("witness")
    q.add_argument("--f", required=True)
    q.add_argument("--v", type=_fraction_arg, required=True)
    q.add_argument("--u", type=_fraction_arg, required=True)
    q.add_argument("--p-cap", dest="p_cap", type=_int_arg, default=100_000)
    q.add_argument("--out", default=None)
    q.set_defaults(func=_cmd_analytic)

    p = sub.add_parser("invert", help="invert the characteristic-function product")
    p.add_argument("--f", required=True)
    p.add_argument("--P", type=_int_arg, required=True)
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--points", default="log-default")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("compare", help="sieve CDF vs. inverted characteristic function")
    p.add_argument("--f", required=True)
    p.add_argument("--x", type=_int_arg, required=True)
    p.add_argument("--P", type=_int_arg, required=True)
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--grid", default="default")
    _add_common(p)
    p.set_defaults(func=_cmd_compare)

    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.monotonic()
    try:
        return args.func(args, t0)
    except ResourceLimitError as exc:
        print(f"ddl: resource refusal: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CatalogError, GridError, SieveError, InversionError, ValueError) as exc:
        print(f"ddl: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

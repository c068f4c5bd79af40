"""``qp``: command-line front end.

Every subcommand writes one CSV table (header line, LF endings) or one JSON
object with "config", "results" and "provenance" keys.  Reals are written
as shortest round-trip decimal strings and integers verbatim, so identical
inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from . import analytic, fitkit, hlprod, race, stats
from .constants import CONSTANTS
from .primestore import KStream, StoreError, build_store, read_header, verify_store
from .qsieve import DEFAULT_SEGMENT_SIZE, threads_from_env


class CliError(Exception):
    """A user-facing failure; printed without a traceback."""


_SCI = re.compile(r"^(\d+)(?:\.(\d+))?[eE]\+?(\d+)$")
_POW = re.compile(r"^(\d+)\^(\d+)$")


def parse_bound(text: str) -> int:
    """Parse "1000000", "1e12", "2.5e9" or "2^40" exactly as an integer."""
    t = text.strip().replace("_", "")
    if t.isdigit():
        return int(t)
    m = _SCI.match(t)
    if m:
        whole, frac, exp = m.group(1), m.group(2) or "", int(m.group(3))
        if len(frac) > exp:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
        return int(whole + frac) * 10 ** (exp - len(frac))
    m = _POW.match(t)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    raise argparse.ArgumentTypeError(f"cannot parse {text!r} as an integer bound")


def parse_checkpoints(text: str, upper: int, lower: int = 1000) -> list[int]:
    """"decades" (10^3, 10^4, ... up to ``upper``) or a comma-separated list of bounds."""
    if text == "decades":
        out, x = [], lower
        while x <= upper:
            out.append(x)
            x *= 10
        return out
    pts = sorted({parse_bound(p) for p in text.split(",") if p.strip()})
    if pts and pts[-1] > upper:
        raise CliError(f"checkpoint {pts[-1]} exceeds the available range {upper}")
    return pts


def parse_points(text: str) -> list[float]:
    """"geometric:start,ratio,count" or a comma-separated list of reals."""
    if text.startswith("geometric:"):
        try:
            start, ratio, count = text[len("geometric:") :].split(",")
            return race.geometric_points(float(start), float(ratio), int(count))
        except ValueError as exc:
            raise CliError(f"bad --points {text!r}: {exc}") from None
    return [float(p) for p in text.split(",") if p.strip()]


def _fmt(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    extra: Optional[dict] = None


def emit(table: Table, args: argparse.Namespace, config: dict, provenance: dict, out) -> None:
    if args.format == "json":
        results = [{c: _fmt(v) for c, v in zip(table.columns, row)} for row in table.rows]
        doc = {
            "config": {k: _fmt(v) for k, v in config.items()},
            "results": results,
            "provenance": provenance,
        }
        if table.extra:
            doc["summary"] = {k: _fmt(v) for k, v in table.extra.items()}
        out.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    if table.extra:
        for k, v in table.extra.items():
            buf.write(f"# {k}={_fmt(v)}\n")
    out.write(buf.getvalue())


def _load(args) -> KStream:
    path = Path(args.store)
    if not path.exists():
        raise CliError(f"store {str(path)!r} not found; create it first with `qp sieve --x-max N --out {path}`")
    try:
        return KStream.from_store(path)
    except StoreError as exc:
        raise CliError(f"cannot read store {str(path)!r}: {exc}") from None


def _store_provenance(args) -> dict:
    h = read_header(args.store)
    return {"store": str(args.store), "k_scan_limit": h.k_scan_limit, "records": h.count}


def _upper(args, stream: KStream) -> int:
    cap = stream.x_covered
    if getattr(args, "x_max", None) is not None:
        if args.x_max > cap:
            raise CliError(f"--x-max {args.x_max} exceeds the store range {cap}; extend it with `qp sieve`")
        cap = args.x_max
    return cap


# ------------------------------------------------------------------ commands


def cmd_sieve(args):
    threads = args.threads if args.threads is not None else threads_from_env()
    header = build_store(
        args.x_max, args.out, resume=args.resume, segment_size=args.segment_size, threads=threads
    )
    rows = [[args.x_max, header.k_scan_limit, header.count + 1]]
    config = {"x_max": args.x_max, "out": str(args.out), "threads": threads, "segment_size": args.segment_size}
    return Table(["x_max", "k_scan_limit", "pi_q"], rows), config, {"records": header.count}


def cmd_verify(args):
    _load(args)
    rep = verify_store(args.store, args.sample_rate, args.seed)
    rows = [[off, k, 4 * k * k + 1] for off, k in rep.failures]
    extra = {"records": rep.count, "sampled": rep.sampled, "failures": len(rep.failures)}
    args._exit = 0 if rep.ok else 1
    return Table(["byte_offset", "k", "q"], rows, extra), {"sample_rate": args.sample_rate, "seed": args.seed}, _store_provenance(args)


def cmd_table1(args):
    s = _load(args)
    pts = parse_checkpoints(args.checkpoints, _upper(args, s))
    rows = []
    for cp in stats.fold_stream(s, pts):
        eq2 = cp.hl_first_term
        eq4 = math.floor(cp.model + 0.5)
        rows.append([cp.x, cp.pi_q, eq2, cp.pi_q / eq2, eq4, cp.pi_q / cp.model, cp.delta_q])
    cols = ["x", "pi_q", "hl_sqrt_over_log", "ratio_hl", "integral_rounded", "ratio_integral", "delta_q"]
    return Table(cols, rows), {"checkpoints": args.checkpoints}, _store_provenance(args)


def cmd_errorterm(args):
    s = _load(args)
    upper = _upper(args, s)
    rule = fitkit.DecimationRule(args.dense_limit, args.ratio, True, args.floor)
    env = stats.envelope(s, rule, upper)
    ev = stats.event_deltas(s, upper)
    delta = ev.after[env.kept_mask]
    rows = [[int(x), float(d), float(w), float(d) / float(x) ** 0.25] for x, d, w in zip(env.x, delta, env.omega)]
    extra = {}
    if args.fit_window:
        lo, hi = (parse_bound(v) for v in args.fit_window.split(","))
        fit = fitkit.linear_fit(list(zip(env.x.astype(float), env.omega)), "loglog", (lo, hi))
        extra = {"fit_alpha": fit.alpha, "fit_beta": fit.beta, "fit_points": fit.n_points, "fit_window": args.fit_window}
    config = {"x_max": upper, "dense_limit": args.dense_limit, "ratio": args.ratio}
    return Table(["x", "delta_q", "omega", "delta_over_x_quarter"], rows, extra), config, _store_provenance(args)


def cmd_signs(args):
    s = _load(args)
    T = args.T if args.T is not None else _upper(args, s)
    s.require(T)
    log = stats.sign_changes(s, T)
    rows = [[i + 1, x] for i, x in enumerate(log.xs)]
    return Table(["nu", "x"], rows, {"nu_total": log.count}), {"T": T}, _store_provenance(args)


def cmd_brun(args):
    s = _load(args)
    pts = parse_checkpoints(args.checkpoints, _upper(args, s))
    qs = s.qs()
    usable = [x for x in pts if int(np.searchsorted(qs, np.uint64(x), side="right")) < qs.size]
    dropped = sorted(set(pts) - set(usable))
    if dropped:
        print(f"qp brun: no prime beyond {dropped} in the store; rows skipped", file=sys.stderr)
    rows = [[r.x, r.B, r.B_star, r.q_last] for r in stats.brun(s, usable)]
    return Table(["x", "B_q", "B_q_star", "q_last"], rows), {"checkpoints": args.checkpoints}, _store_provenance(args)


def cmd_pairs(args):
    s = _load(args)
    x = args.x if args.x is not None else _upper(args, s)
    counts = stats.pair_count(s, args.d_max, x)
    rows = []
    for d, c in counts.items():
        model = stats.model_pair_count(d, x)
        rows.append([d, c, hlprod.P(d).value, model, c / model if model else math.nan])
    return Table(["d", "pairs", "P_d", "model", "ratio"], rows), {"x": x, "d_max": args.d_max}, _store_provenance(args)


def cmd_gaps(args):
    s = _load(args)
    x = args.x if args.x is not None else _upper(args, s)
    h = stats.gap_histogram(s, x)
    pi = stats.count_upto(s, x)
    rows = []
    for d, c in sorted(h.counts.items()):
        try:
            m = stats.model_h(d, x, pi)
        except ValueError:
            m = math.nan
        rows.append([d, c, m])
    extra = {
        "pi_q": pi,
        "sum_h": h.total,
        "sum_d_h": h.weighted_total,
        "k_first": h.k_first or 0,
        "k_last": h.k_last or 0,
        "max_gap": h.max_gap,
        "records": ";".join(f"{k}:{d}" for k, d in h.record_log),
    }
    return Table(["d", "h", "model_h"], rows, extra), {"x": x}, _store_provenance(args)


def cmd_table3(args):
    s = _load(args)
    pts = parse_checkpoints(args.checkpoints, _upper(args, s), lower=10**6)
    rows = []
    for x in pts:
        pi = stats.count_upto(s, x)
        h = stats.gap_histogram(s, x)
        fit = stats.ab_params(h)
        cf = stats.ab_closed_form(x, pi)
        refined, limit = stats.model_K(x)
        rows.append([x, pi, fit.e_minus_A, cf.e_minus_A, fit.B, cf.B, h.max_gap, refined, limit])
    cols = ["x", "pi_q", "fit_e_minus_A", "formula_e_minus_A", "fit_B", "formula_B", "K", "K_refined", "K_limit"]
    return Table(cols, rows), {"checkpoints": args.checkpoints}, _store_provenance(args)


def cmd_meanp(args):
    pts = parse_checkpoints(args.checkpoints, args.n_max, lower=10) if args.checkpoints else []
    res = hlprod.mean_P(args.n_max, pts)
    rows = [[n, m, m - res.s] for n, m in res.series]
    prov = {"s": CONSTANTS.s.digits}
    return Table(["n", "mean_P", "minus_s"], rows), {"n_max": args.n_max}, prov


def cmd_race(args):
    s = _load(args)
    pts = parse_checkpoints(args.checkpoints, _upper(args, s))
    rows = []
    for r in race.race_table(s, pts):
        st = r.state
        rows.append([r.x, st.pi1, st.pi2, st.ratio, st.y, st.returns, st.w2, r.w2_fraction])
    walk = race.race_walk(s, pts[-1] if pts else None)
    extra = {"first_lead_change": walk.first_lead_change() or 0}
    cols = ["x", "pi1", "pi2", "ratio", "y", "returns", "w2", "w2_over_pi_q"]
    return Table(cols, rows, extra), {"checkpoints": args.checkpoints}, _store_provenance(args)


def cmd_densities(args):
    s = _load(args)
    pts = parse_checkpoints(args.checkpoints, _upper(args, s))
    rows = [[d.x, d.delta1, d.delta2, d.delta0] for d in race.densities(s, pts)]
    config = {"checkpoints": args.checkpoints, "convention": race.DENSITY_CONVENTION}
    return Table(["x", "delta1", "delta2", "delta0"], rows), config, _store_provenance(args)


def cmd_fx(args):
    s = _load(args)
    rows = []
    for x in parse_points(args.points):
        v = race.chebyshev_F(s, x, args.rel_tol)
        rows.append([x, v.F, v.terms_used, v.exhausted, v.tail_significant])
    config = {"points": args.points, "rel_tol": args.rel_tol}
    return Table(["x", "F", "terms_used", "exhausted", "tail_significant"], rows), config, _store_provenance(args)


def cmd_constants(args):
    rows = [[c.name, c.digits, c.provenance] for c in CONSTANTS]
    if args.check:
        for name in ("C_q", "C1", "F", "s", "C2"):
            chk = analytic.verify_constant(name, args.check)
            rows.append([f"{name}@{args.check}", repr(chk.partial), f"truncated product, deviation {chk.deviation!r}"])
    return Table(["name", "value", "provenance"], rows), {"check": args.check or 0}, {}


def cmd_fit(args):
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        pts = [(float(r[args.x_col]), float(r[args.y_col])) for r in reader]
    window = tuple(float(parse_bound(v)) for v in args.window.split(",")) if args.window else None
    fit = fitkit.linear_fit(pts, args.transform, window)
    rows = [[fit.transform, fit.alpha, fit.beta, fit.n_points, fit.residual_rms, fit.window[0], fit.window[1]]]
    cols = ["transform", "alpha", "beta", "n_points", "residual_rms", "window_lo", "window_hi"]
    config = {"input": str(args.input), "x_col": args.x_col, "y_col": args.y_col}
    return Table(cols, rows), config, {}


def cmd_integrals(args):
    a, b = args.a, args.b
    rows = [
        ["int_half", analytic.int_half(a, b)],
        ["int_log2", analytic.int_log2(a, b)],
        ["int_half_log2", analytic.int_half_log2(a, b)],
        ["int_half_tail_b", analytic.int_half_tail(b)],
    ]
    return Table(["integral", "value"], rows), {"a": a, "b": b}, {}


def cmd_pd(args):
    rows = []
    for d in args.d:
        v = hlprod.P(d)
        used = ";".join(f"{p}:{why}" for p, why in v.contributing_primes)
        rows.append([d, f"{v.exact.numerator}/{v.exact.denominator}", v.value, used])
    return Table(["d", "exact", "value", "primes"], rows), {"d": ",".join(map(str, args.d))}, {}


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qp", description="Statistics of primes of the form m^2 + 1.")
    p.add_argument("--version", action="version", version=f"qp {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_, store=True, fmt=True):
        sp = sub.add_parser(name, help=help_)
        if store:
            sp.add_argument("--store", default="qp.bin", help="k store written by `qp sieve` (default qp.bin)")
        if fmt:
            sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("-o", "--output", help="write here instead of stdout")
        sp.set_defaults(func=func)
        return sp

    sp = add("sieve", cmd_sieve, "enumerate q = 4k^2+1 <= x_max into a store", store=False)
    sp.add_argument("--x-max", type=parse_bound, required=True)
    sp.add_argument("--out", default="qp.bin")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (QP_THREADS if unset)")
    sp.add_argument("--segment-size", type=parse_bound, default=DEFAULT_SEGMENT_SIZE)
    sp.add_argument("--resume", action="store_true", help="append past the store's k_scan_limit")

    sp = add("verify", cmd_verify, "re-test a sample of stored records")
    sp.add_argument("--sample-rate", type=float, default=0.01)
    sp.add_argument("--seed", type=int, default=0)

    for name, func, help_ in (
        ("table1", cmd_table1, "prime counts against the conjectured main terms"),
        ("brun", cmd_brun, "partial reciprocal sums and their tail-corrected values"),
        ("table3", cmd_table3, "gap-distribution slope and intercept, fitted and closed form"),
        ("race", cmd_race, "residue race modulo 3"),
        ("densities", cmd_densities, "logarithmic densities of the race outcomes"),
    ):
        sp = add(name, func, help_)
        sp.add_argument("--checkpoints", default="decades", help='"decades" or a comma-separated list')
        sp.add_argument("--x-max", type=parse_bound, default=None)

    sp = add("errorterm", cmd_errorterm, "Delta_q and its envelope, decimated")
    sp.add_argument("--x-max", type=parse_bound, default=None)
    sp.add_argument("--dense-limit", type=float, default=1e6)
    sp.add_argument("--ratio", type=float, default=1.01)
    sp.add_argument("--floor", type=float, default=1e-3)
    sp.add_argument("--fit-window", default=None, help="lo,hi window for a log-log fit of the envelope")

    sp = add("signs", cmd_signs, "sign changes of Delta_q below T")
    sp.add_argument("--T", type=parse_bound, default=None)
    sp.add_argument("--x-max", type=parse_bound, default=None)

    sp = add("pairs", cmd_pairs, "k-pairs at distance d against the model")
    sp.add_argument("--x", type=parse_bound, default=None)
    sp.add_argument("--d-max", type=int, default=10)
    sp.add_argument("--x-max", type=parse_bound, default=None)

    sp = add("gaps", cmd_gaps, "histogram of gaps between consecutive k")
    sp.add_argument("--x", type=parse_bound, default=None)
    sp.add_argument("--x-max", type=parse_bound, default=None)

    sp = add("meanp", cmd_meanp, "running mean of P(d)", store=False)
    sp.add_argument("--n-max", type=parse_bound, default=150000)
    sp.add_argument("--checkpoints", default="decades")

    sp = add("fx", cmd_fx, "exponentially weighted race sum F(x)")
    sp.add_argument("--points", default="geometric:100,1.02,2021")
    sp.add_argument("--rel-tol", type=float, default=1e-8)

    sp = add("constants", cmd_constants, "registered constants", store=False)
    sp.add_argument("--check", type=parse_bound, default=None, help="also evaluate truncated products to this prime bound")

    sp = add("fit", cmd_fit, "least-squares line through two CSV columns", store=False)
    sp.add_argument("input")
    sp.add_argument("--x-col", default="x")
    sp.add_argument("--y-col", required=True)
    sp.add_argument("--transform", choices=fitkit.TRANSFORMS, default="loglog")
    sp.add_argument("--window", default=None)

    sp = add("integrals", cmd_integrals, "closed-form integrals over [a, b]", store=False)
    sp.add_argument("--a", type=float, default=2.0)
    sp.add_argument("--b", type=float, required=True)

    sp = add("pd", cmd_pd, "the product P(d)", store=False)
    sp.add_argument("d", type=parse_bound, nargs="+")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._exit = 0
    try:
        table, config, provenance = args.func(args)
    except CliError as exc:
        print(f"qp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError, StoreError) as exc:
        print(f"qp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    provenance = {"qprimes": __version__, "command": args.command, **provenance}
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            emit(table, args, config, provenance, fh)
    else:
        emit(table, args, config, provenance, sys.stdout)
    return args._exit


if __name__ == "__main__":
    sys.exit(main())

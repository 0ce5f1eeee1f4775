"""Command-line front end.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 invalid input,
3 solver failure.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import discrimination as disc
from . import estimation as est
from . import metrics
from . import oracle
from .channels import parse_channel, parse_family, random_channel
from .errors import InvalidInput, SolverFailure

CSV_COLUMNS = ("instance", "n", "bound", "method", "status", "witness-norm")
SEED_ENV = "CHANBOUNDS_SEED"
DUMP_ENV = "CHANBOUNDS_DUMP_SDP"


# ---------------------------------------------------------------------------
# rows and output
# ---------------------------------------------------------------------------

def _row(instance, n, value, tag, status, witness_norm=None, **extra):
    row = {"instance": instance, "n": n, "bound": value, "method": tag, "status": status,
           "witness-norm": witness_norm, "theorem_tag": tag}
    row.update(extra)
    return row


def _report_row(instance, n, rep, **extra):
    return _row(instance, n, rep.value, rep.theorem_tag, rep.solver_status, rep.witness_norm(),
                **extra)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "Infinite" if v > 0 else ("-Infinite" if v < 0 else None)
    if isinstance(v, disc.Trivial):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render(rows, fmt):
    if fmt == "json":
        return json.dumps([_jsonable(r) for r in rows], indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
        return buf.getvalue()
    cols = list(CSV_COLUMNS)
    text = [[c for c in cols]]
    for r in rows:
        line = []
        for c in cols:
            v = r.get(c)
            if isinstance(v, float):
                line.append("inf" if v == math.inf else f"{v:.10g}")
            else:
                line.append(_cell(v))
        text.append(line)
    widths = [max(len(t[i]) for t in text) for i in range(len(cols))]
    return "\n".join("  ".join(t[i].ljust(widths[i]) for i in range(len(cols))).rstrip()
                     for t in text) + "\n"


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _n_values(args):
    if args.n_range:
        try:
            lo, hi = (int(x) for x in args.n_range.split(":"))
        except ValueError:
            raise InvalidInput(f"--n-range expects lo:hi, got {args.n_range!r}") from None
        if lo < 1 or hi < lo:
            raise InvalidInput("--n-range needs 1 <= lo <= hi")
        return list(range(lo, hi + 1))
    if args.n < 1:
        raise InvalidInput("--n must be at least 1")
    return [args.n]


def _grid(text, fam):
    if text is None:
        return est.default_grid(fam)
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            count = int(count)
            if count < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), count)
        return np.array([float(x) for x in text.split(",") if x])
    except ValueError:
        raise InvalidInput(f"--grid expects lo:hi:count or a comma list, got {text!r}") from None


def _pair(args):
    a, b = parse_channel(args.a), parse_channel(args.b)
    return metrics.ChannelPair.from_channels(a, b), f"{args.a}|{args.b}"


def _prior(p):
    if not 0 < p < 1:
        raise InvalidInput(f"--p must lie in (0, 1), got {p}")
    return p


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fidelity(args):
    pair, name = _pair(args)
    rep = metrics.root_fidelity_channels(pair)
    return [_report_row(name, 1, rep, quantity="root_fidelity")]


def cmd_bures(args):
    pair, name = _pair(args)
    rows = [_report_row(name, 1, metrics.bures_sq_channels(pair), quantity="bures_sq")]
    for n in _n_values(args):
        rows.append(_report_row(name, n, metrics.parallel_bures_bound(pair, n), quantity="parallel"))
        rows.append(_report_row(name, n, metrics.adaptive_bures_bound(pair, n), quantity="adaptive"))
    return rows


def cmd_fisher(args):
    fam = parse_family(args.family)
    name = f"{args.family}@{args.theta!r}"
    rows = [_report_row(name, 1, metrics.sld_fisher_channel(fam, args.theta), quantity="sld_fisher")]
    for n in _n_values(args):
        rows.append(_report_row(name, n, metrics.parallel_fisher_bound(fam, args.theta, n),
                                quantity="parallel"))
        rows.append(_report_row(name, n, metrics.adaptive_fisher_bound(fam, args.theta, n),
                                quantity="adaptive"))
    sql = metrics.fisher_sql_denominator(fam, args.theta)
    rows.append(_report_row(name, None, sql, quantity="sql_denominator"))
    return rows


def cmd_disc_bound(args):
    pair, name = _pair(args)
    p = _prior(args.p)
    rows = []
    for n in _n_values(args):
        for mode, fn in (("parallel", metrics.parallel_bures_bound),
                         ("adaptive", metrics.adaptive_bures_bound)):
            rep = fn(pair, n)
            floor = disc.floor_from_bound(rep.value, p)
            rows.append(_row(name, n, floor, f"error_floor_{mode}", rep.solver_status,
                             rep.witness_norm(), quantity="error_floor", mode=mode,
                             bures_bound=rep.value, bures_tag=rep.theorem_tag))
    return rows


def _query_row(name, res, tag):
    lb = res.lower_bound
    value = math.inf if lb == disc.INFINITE else int(lb)
    status = "trivial" if isinstance(lb, disc.Trivial) else ("infinite" if value == math.inf else "ok")
    return _row(name, value, value, tag, status, quantity="query_lower", mode=res.mode,
                search=res.method, diagnostics=res.diagnostics)


def cmd_disc_query(args):
    pair, name = _pair(args)
    inst = disc.DiscriminationInstance(pair, _prior(args.p), args.eps)
    rows = []
    for mode in ("parallel", "adaptive"):
        res = disc.binary_search(inst, mode)
        rows.append(_query_row(name, res, f"query_lower_{mode}_binary_search"))
        if args.closed_form and not res.diagnostics.get("trivial") and res.lower_bound != disc.INFINITE:
            cf = disc.query_lower_closed_form(inst, mode)
            rows.append(_query_row(name, cf, f"query_lower_{mode}_{cf.method}"))
    n_max = disc.n_max_upper(inst)
    rows.append(_row(name, n_max, float(n_max), "n_max_fidelity", "ok",
                     quantity="query_upper", capped=inst.eps == 0 and n_max == disc.N_MAX_CAP))
    return rows


def _est_instance(args):
    fam = parse_family(args.family)
    inst = est.EstimationInstance(fam, args.delta, args.eps, _grid(args.grid, fam))
    return inst, f"{args.family}/delta={args.delta!r}"


def cmd_est_bound(args):
    inst, name = _est_instance(args)
    rows = []
    for n in _n_values(args):
        for mode in ("parallel", "adaptive"):
            r = est.minimax_error_floor_report(inst, n, mode, args.pairing)
            rows.append(_row(name, n, r.value, r.theorem_tag, "optimal", quantity="minimax_floor",
                             argmax=list(r.argmax)))
            f = est.fisher_minimax_floor_report(inst, n, mode)
            rows.append(_row(name, n, f.value, f.theorem_tag, "asymptotic", quantity="fisher_floor",
                             argmax=list(f.argmax)))
    return rows


def cmd_est_query(args):
    inst, name = _est_instance(args)
    rows = []
    for mode in ("parallel", "adaptive"):
        res = est.est_query_lower(inst, mode, args.pairing)
        rows.append(_query_row(name, res, f"estimation_query_lower_{mode}"))
    return rows


def cmd_classify(args):
    fam = parse_family(args.family)
    cls = est.classify_scaling(fam, _grid(args.grid, fam))
    return [_row(args.family, None, cls.sql_denominator, "scaling_classification", cls.kind,
                 quantity="sql_denominator", kind=cls.kind, heis_coefficient=cls.heis_coefficient,
                 heis_coefficient_adaptive=cls.heis_coefficient_adaptive,
                 per_theta=cls.details.get("per_theta"))]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _check(rows, name, value, reference, ok, tag):
    rows.append(_row(name, None, float(value), tag, "pass" if ok else "FAIL",
                     quantity="verify", reference=float(reference)))


def _verify_fidelity(rows, rng, seed):
    from .channels import builtin_channel
    ident = builtin_channel("identity")
    for th in (math.pi / 4, math.pi / 2):
        u = builtin_channel("unitary_rz", [th])
        rep = metrics.root_fidelity_channels(metrics.ChannelPair.from_channels(ident, u))
        orc = oracle.probe_root_fidelity(ident, u, 2000, seed)
        _check(rows, f"root_fidelity I|rz:{th:.4f}", rep.value, orc.value,
               abs(rep.value - orc.value) <= 1e-3 and rep.value <= orc.value + 1e-6,
               rep.theorem_tag)


def _verify_bures(rows, rng, seed):
    a, b = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
    pair = metrics.ChannelPair.from_channels(a, b)
    rf = metrics.root_fidelity_channels(pair).value
    bs = metrics.bures_sq_channels(pair)
    _check(rows, "bures_sq vs 2(1 - sqrt F)", bs.value, 2 * (1 - rf),
           abs(bs.value - 2 * (1 - rf)) <= 1e-6, bs.theorem_tag)
    par = metrics.parallel_bures_bound(pair, 3)
    ada = metrics.adaptive_bures_bound(pair, 3)
    _check(rows, "parallel <= adaptive (n=3)", par.value, ada.value,
           par.value <= ada.value + 1e-6, ada.theorem_tag)


def _verify_discrimination(rows, rng, seed):
    a, b = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
    pair = metrics.ChannelPair.from_channels(a, b)
    for n in (1, 2):
        floor = disc.error_prob_floor(pair, n, 0.5, "parallel")
        exact = oracle.exact_parallel_error(0.5, a, b, n)
        _check(rows, f"error floor <= exact p_e (n={n})", floor, exact,
               floor <= exact + 1e-6, "error_floor_parallel")
    inst = disc.DiscriminationInstance(pair, 0.5, 0.05)
    cache = {}

    def value_at(n):
        if n not in cache:
            cache[n] = metrics.parallel_bures_bound(pair, n).value
        return cache[n]
    res = disc.binary_search(inst, "parallel", value_at)
    scan = oracle.linear_scan(value_at, inst.target, disc.n_max_upper(inst))
    _check(rows, "binary search = linear scan", res.lower_bound, scan,
           res.lower_bound == scan, "query_lower_parallel_binary_search")


def _verify_fisher(rows, rng, seed):
    from .channels import builtin_family
    for name, th in (("dephasing", 0.25), ("amplitude_damping", 0.1), ("rz", 0.3)):
        fam = builtin_family(name)
        rep = metrics.sld_fisher_channel(fam, th)
        orc = oracle.probe_fisher_max(fam, th, 2000, seed)
        _check(rows, f"fisher {name}@{th}", rep.value, orc.value,
               orc.value <= rep.value + 1e-6 and abs(rep.value - orc.value) <= 1e-3 * rep.value,
               rep.theorem_tag)
        dev = oracle.finite_diff_kraus(fam, th)
        _check(rows, f"kraus derivative {name}@{th}", dev, 0.0, dev <= 1e-6, "finite_diff_kraus")


def _verify_quadratic(rows, rng, seed):
    bad = 0
    for _ in range(200):
        a = rng.uniform(1e-3, 1.0)
        b = rng.uniform(0, a)
        c = rng.uniform(0, 50.0)
        for mode in disc.MODES:
            if disc.quadratic_min_n(a, b, c, mode) != oracle.scan_min_n(a, b, c, mode):
                bad += 1
    _check(rows, "quadratic lemma vs scan (200 triples)", bad, 0, bad == 0, "quadratic_min_n")


SUITES = {"fidelity": _verify_fidelity, "bures": _verify_bures, "fisher": _verify_fisher,
          "discrimination": _verify_discrimination, "quadratic": _verify_quadratic}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    rng = np.random.default_rng(args.seed)
    rows = []
    for name in names:
        SUITES[name](rows, rng, args.seed)
    return rows


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--dump-sdp", metavar="DIR", help="write every SDP to DIR")

    pair = argparse.ArgumentParser(add_help=False)
    pair.add_argument("--a", required=True, help="first channel: name[:params] or JSON path")
    pair.add_argument("--b", required=True, help="second channel")

    ns = argparse.ArgumentParser(add_help=False)
    ns.add_argument("--n", type=int, default=1, help="number of channel uses")
    ns.add_argument("--n-range", help="lo:hi, inclusive")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", required=True,
                     help="rz, dephasing, amplitude_damping, constant:<channel>, or JSON path")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--delta", type=float, required=True, help="window half-width")
    grid.add_argument("--eps", type=float, default=0.05)
    grid.add_argument("--grid", help="theta grid lo:hi:count or comma list")
    grid.add_argument("--pairing", choices=est.PAIRINGS, default="economical")

    parser = argparse.ArgumentParser(prog="chanbounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fidelity", parents=[common, pair], help="root fidelity of two channels")
    sub.add_parser("bures", parents=[common, pair, ns], help="Bures distance and n-use bounds")
    p = sub.add_parser("fisher", parents=[common, fam, ns], help="channel SLD Fisher information")
    p.add_argument("--theta", type=float, required=True)
    p = sub.add_parser("disc-bound", parents=[common, pair, ns], help="error-probability floors")
    p.add_argument("--p", type=float, default=0.5)
    p = sub.add_parser("disc-query", parents=[common, pair], help="query-count lower bounds")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--closed-form", action="store_true", help="also report closed-form bounds")
    sub.add_parser("est-bound", parents=[common, fam, grid, ns], help="estimation error floors")
    sub.add_parser("est-query", parents=[common, fam, grid], help="estimation query bounds")
    p = sub.add_parser("classify", parents=[common, fam], help="SQL or Heisenberg scaling")
    p.add_argument("--grid", help="theta grid lo:hi:count or comma list")
    p = sub.add_parser("verify", parents=[common], help="check bounds against oracles")
    p.add_argument("--suite", choices=("all",) + tuple(SUITES), default="all")
    return parser


COMMANDS = {"fidelity": cmd_fidelity, "bures": cmd_bures, "fisher": cmd_fisher,
            "disc-bound": cmd_disc_bound, "disc-query": cmd_disc_query,
            "est-bound": cmd_est_bound, "est-query": cmd_est_query,
            "classify": cmd_classify, "verify": cmd_verify}


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if args.seed is None:
        try:
            args.seed = int(os.environ.get(SEED_ENV, "0"))
        except ValueError:
            err.write(f"error: ${SEED_ENV} must be an integer\n")
            return 2
    previous = os.environ.get(DUMP_ENV)
    if args.dump_sdp:
        os.environ[DUMP_ENV] = args.dump_sdp
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rows = COMMANDS[args.command](args)
    except SolverFailure as exc:
        err.write(f"solver failure: {exc}\n")
        return 3
    except (InvalidInput, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2
    finally:
        if args.dump_sdp:
            if previous is None:
                os.environ.pop(DUMP_ENV, None)
            else:
                os.environ[DUMP_ENV] = previous
    out.write(render(rows, args.format))
    if args.command == "verify" and any(r["status"] != "pass" for r in rows):
        return 1
    return 0


def main():
    sys.exit(run())

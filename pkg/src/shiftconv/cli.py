"""Command-line entry point: ``shiftconv <verb> ...``.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad arguments or config,
3 resource or data-integrity failure.
"""

import argparse
import json
import logging
import math
import sys

from . import coefficients as co
from . import convolution as cv
from . import delta_method as dm
from . import dual_sum as ds
from . import oscillatory as osc
from . import harness as hs
from .errors import ConfigError, DataIntegrityError, ResourceError, ShiftconvError


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="INI file; flags given here override it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    ap = argparse.ArgumentParser(prog="shiftconv", parents=[common],
                                 description="Shifted convolution sum experiments.")
    sub = ap.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a coefficient table")
    g.add_argument("--kind", choices=["divisor", "delta", "sym", "random"], required=True)
    g.add_argument("--k", type=int, default=3, help="symmetric power of delta")
    g.add_argument("--d", type=int, default=2, help="divisor order / random degree")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)

    d = sub.add_parser("check-delta", parents=[common], help="delta-expansion identity")
    d.add_argument("--Q", type=int, default=None)
    d.add_argument("--range", type=int, default=None, help="check |n| <= range (default 2Q)")
    d.add_argument("--out", default=None)

    s = sub.add_parser("check-stationary", parents=[common], help="stationary phase vs quadrature")
    s.add_argument("--phase", choices=sorted(hs.PHASE_FAMILIES), required=True)
    s.add_argument("--scales", default="1e2,1e3,1e4")
    s.add_argument("--out", default=None, help="CSV path (stdout if omitted)")

    u = sub.add_parser("check-dual", parents=[common], help="dual-sum identity")
    u.add_argument("--d", type=int, default=4)
    u.add_argument("--N", type=int, required=True)
    u.add_argument("--theta", type=float, default=0.6)
    u.add_argument("--table", default=None, help="table name (delta, sym3, ...) or .bin path")
    u.add_argument("--mode", choices=["closed_form", "quadrature"], default="closed_form")
    u.add_argument("--out", default=None)

    c = sub.add_parser("scan", parents=[common], help="exponent scan of B(N^theta, N)")
    c.add_argument("--t1", default="sym3")
    c.add_argument("--t2", default=None)
    c.add_argument("--theta", type=float, default=0.6)
    c.add_argument("--grid", default="2^14:2^20")
    c.add_argument("--out", default=None)

    r = sub.add_parser("report", parents=[common], help="fit a scan CSV")
    r.add_argument("csv")
    r.add_argument("--theta", type=float, default=None, help="read from H/N if omitted")
    r.add_argument("--d1", type=int, default=4)
    r.add_argument("--d2", type=int, default=4)
    r.add_argument("--out", default=None)
    r.add_argument("--svg", default=None)

    k = sub.add_parser("cache", parents=[common], help="inspect the table cache")
    k.add_argument("action", choices=["list", "verify", "purge"])
    k.add_argument("--label", default=None)
    k.add_argument("--dir", default="")

    n = sub.add_parser("run", parents=[common], help="run configured suites")
    n.add_argument("--suite", choices=list(hs.SUITES) + ["all"], default=None)
    n.add_argument("--out", default=None)
    return ap


def _emit(text, out):
    if out:
        hs.atomic_write(out, text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj):
    return json.dumps(hs._jsonable(obj), indent=2, sort_keys=True)


def _config(args):
    return hs.RunConfig.from_file(args.config) if args.config else hs.RunConfig.from_mapping({})


def cmd_gen(args):
    if args.kind == "divisor":
        t = co.gen_divisor(args.d, args.n)
    elif args.kind == "delta":
        t = co.gen_ramanujan(args.n)
    elif args.kind == "sym":
        t = co.gen_sym_power(co.gen_ramanujan(args.n), args.k)
    else:
        t = co.gen_random_model(args.n, args.seed, args.d)
    co.save_table(t, args.out)
    print(f"{t.label}: {t.length} values -> {args.out}")
    return hs.EXIT_OK


def cmd_check_delta(args):
    cfg = _config(args).parameters["delta"]
    Q = args.Q if args.Q is not None else cfg["Q"]
    rng = args.range if args.range is not None else (cfg["range"] or None)
    res = dm.delta_identity_check(Q, rng)
    res["schema_version"] = hs.SCHEMA_VERSION
    res["passed"] = res["max_abs_error"] < 1e-5
    _emit(_dump(res), args.out)
    return hs.EXIT_OK if res["passed"] else hs.EXIT_FAIL


def cmd_check_stationary(args):
    scales = [float(v) for v in args.scales.split(",")]
    rows = hs.stationary_rows(args.phase, scales)
    _emit(hs.rows_to_csv(rows, hs.STATIONARY_COLUMNS), args.out)
    slope = osc.fit_error_slope(scales, [r["rel_err0"] for r in rows]) if len(rows) > 1 else None
    if slope is not None:
        print(f"order-0 error slope {slope:.4f}", file=sys.stderr)
    return hs.EXIT_OK


def cmd_check_dual(args):
    H = int(round(args.N ** args.theta))
    p = ds.DualSumParams(args.N, H, args.d)
    name = args.table or {2: "delta", 3: "sym2", 4: "sym3"}.get(args.d)
    if name is None:
        raise ConfigError(f"no default table for d = {args.d}")
    t = hs.cached_table(name, max(2 * args.N + 2, p.dual_window[1] + 1), seed=args.seed)
    if t.degree != args.d:
        raise ConfigError(f"table {t.label} has degree {t.degree}, expected {args.d}")
    res = ds.dual_sum_check(t, p, args.mode)
    res["schema_version"] = hs.SCHEMA_VERSION
    _emit(_dump(res), args.out)
    return hs.EXIT_OK


def cmd_scan(args):
    grid = hs.parse_grid(args.grid)
    need = 2 * max(grid) + 2 * int(max(grid) ** args.theta) + 2
    t1 = hs.cached_table(args.t1, need, seed=args.seed)
    t2 = t1 if args.t2 in (None, args.t1) else hs.cached_table(args.t2, need, seed=args.seed)
    rows = cv.scan_rows(t1, t2, args.theta, grid)
    _emit(hs.rows_to_csv(rows, hs.SCAN_COLUMNS), args.out)
    return hs.EXIT_OK


def cmd_report(args):
    rows = hs.read_scan_csv(args.csv)
    if not rows:
        raise ConfigError(f"{args.csv} has no rows")
    theta = args.theta
    if theta is None:
        r = rows[-1]
        theta = math.log(r["H"]) / math.log(r["N"])
    rep = hs.scan_report(rows, theta, args.d1, args.d2)
    svg = args.svg
    if args.out and args.out.endswith(".svg"):
        svg = args.out
    else:
        _emit(_dump(rep), args.out)
    if svg:
        hs.atomic_write(svg, hs.svg_loglog(rows, rep["fit_smooth"]["slope"]))
    return hs.EXIT_OK


def cmd_cache(args):
    res = hs.cache_manager(args.action, args.dir, args.label)
    print(_dump(res))
    return hs.EXIT_OK


def cmd_run(args):
    cfg = _config(args)
    if args.suite:
        cfg.suite = args.suite
    if args.out:
        cfg.out = args.out
    cfg.threads = max(cfg.threads, args.threads)
    if args.seed:
        cfg.seed = args.seed
    report = hs.run_suite(cfg)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.measured!r} vs {c.threshold!r}"
              + (f" ({c.error})" if c.error else ""))
    print(f"report -> {cfg.out}")
    return report.exit_code


COMMANDS = {"gen": cmd_gen, "check-delta": cmd_check_delta, "check-stationary": cmd_check_stationary,
            "check-dual": cmd_check_dual, "scan": cmd_scan, "report": cmd_report,
            "cache": cmd_cache, "run": cmd_run}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return hs.EXIT_CONFIG
    except (ResourceError, DataIntegrityError, OSError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return hs.EXIT_RESOURCE
    except ShiftconvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return hs.EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

"""Configuration, suite orchestration, caching and reports.

Config files are INI: a ``[run]`` section (``suite``, ``threads``, ``seed``,
``out``, ``cache_dir``) plus one section per suite whose keys are listed in
:data:`SCHEMA`.  Unknown sections or keys are rejected.
"""

import configparser
import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import coefficients as co
from . import convolution as cv
from . import delta_method as dm
from . import dual_sum as ds
from . import oscillatory as osc
from .errors import ConfigError, DataIntegrityError, ShiftconvError
from .windows import window_V

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUITES = ("delta", "stationary", "dual", "scan", "coeffs")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def parse_grid(text):
    """``'2^14:2^20'`` gives the dyadic grid 2^14, 2^15, ..., 2^20; otherwise a
    comma list (``'1e3,1e4'``)."""
    text = str(text).strip()
    if ":" in text:
        lo, hi = (t.strip() for t in text.split(":", 1))

        def exponent(t):
            if not t.startswith("2^"):
                raise ConfigError(f"dyadic grid bounds must look like 2^k, got {t!r}")
            return int(t[2:])

        return [2**k for k in range(exponent(lo), exponent(hi) + 1)]
    return [int(float(v)) for v in text.split(",") if v.strip()]


# key -> (parser, default, validator or None)
SCHEMA = {
    "run": {
        "suite": (str, "all", lambda v: v in SUITES + ("all",)),
        "threads": (int, 1, lambda v: v >= 1),
        "seed": (int, 0, None),
        "out": (str, "report.json", None),
        "cache_dir": (str, "", None),
    },
    "delta": {
        "Q": (int, 50, lambda v: v >= 2),
        "range": (int, 0, lambda v: v >= 0),
    },
    "stationary": {
        "phases": (lambda t: [p.strip() for p in t.split(",")], ["log", "dualsum", "theorem2"],
                   lambda v: all(p in PHASE_FAMILIES for p in v)),
        "scales": (_floats, [1e2, 1e3, 1e4], lambda v: len(v) >= 2 and min(v) > 0),
        "max_slope": (float, -0.8, None),
    },
    "dual": {
        "d": (int, 4, lambda v: v in (2, 3, 4)),
        "N": (parse_grid, [1000, 10000, 100000], lambda v: len(v) >= 1 and min(v) >= 100),
        "theta": (float, 0.6, lambda v: 0.5 <= v < 1),
        "table": (str, "", None),
    },
    "scan": {
        "theta": (float, 0.6, lambda v: 0 < v < 1),
        "grid": (parse_grid, [2**k for k in range(14, 21)], lambda v: len(v) >= 4),
        "t1": (str, "sym3", None),
        "t2": (str, "sym3", None),
        "slack": (float, 0.2, lambda v: v >= 0),
    },
    "coeffs": {
        "N": (int, 20000, lambda v: 12 <= v <= 10**6),
    },
}


@dataclass
class RunConfig:
    suite: str = "all"
    parameters: dict = field(default_factory=dict)
    out: str = "report.json"
    threads: int = 1
    seed: int = 0
    cache_dir: str = ""

    @classmethod
    def from_mapping(cls, sections):
        """Validate ``{section: {key: raw value}}`` against :data:`SCHEMA`."""
        parsed = {}
        for name, values in sections.items():
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]")
            for key in values:
                if key not in SCHEMA[name]:
                    raise ConfigError(f"unknown key {key!r} in [{name}]")
        for name, keys in SCHEMA.items():
            given = sections.get(name, {})
            out = {}
            for key, (conv, default, ok) in keys.items():
                if key in given:
                    raw = given[key]
                    try:
                        value = conv(raw) if isinstance(raw, str) else raw
                    except (TypeError, ValueError) as exc:
                        raise ConfigError(f"[{name}] {key}: cannot parse {raw!r}") from exc
                else:
                    value = default
                if ok is not None and not ok(value):
                    raise ConfigError(f"[{name}] {key} = {value!r} out of range")
                out[key] = value
            parsed[name] = out
        run = parsed.pop("run")
        return cls(run["suite"], parsed, run["out"], run["threads"], run["seed"], run["cache_dir"])

    @classmethod
    def from_file(cls, path):
        # keys are case sensitive (Q, N)
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_mapping({s: dict(parser[s]) for s in parser.sections()})

    def suites(self):
        return list(SUITES) if self.suite == "all" else [self.suite]


@dataclass
class Check:
    name: str
    measured: object
    threshold: object
    passed: bool
    error: str = None


@dataclass
class RunReport:
    suite: str
    parameters: dict
    checks: list
    wall_time_s: float
    artifacts: dict
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self):
        return EXIT_OK if self.passed else EXIT_FAIL

    def to_json(self):
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# persistence ---------------------------------------------------------------

def atomic_write(path, data):
    """Write bytes or text to ``path`` via a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cache_dir(override=""):
    path = override or os.environ.get("SHIFTCONV_CACHE") or os.path.join(
        os.path.expanduser("~"), ".cache", "shiftconv")
    Path(path).mkdir(parents=True, exist_ok=True)
    return Path(path)


CACHE_SUFFIX = ".bin"


def cache_manager(action, directory="", label=None):
    """``list``, ``verify`` or ``purge`` the tables cached in ``directory``.

    ``verify`` raises :class:`DataIntegrityError` naming the first bad file;
    ``purge`` removes ``label`` (or everything when ``label`` is None).
    """
    root = cache_dir(directory)
    files = sorted(root.glob(f"*{CACHE_SUFFIX}"))
    if action == "list":
        out = []
        for f in files:
            with open(f, "rb") as fh:
                head = fh.read(5 + co._HEADER.size)
            entry = {"label": f.stem, "path": str(f), "bytes": f.stat().st_size}
            if head[:5] == co.MAGIC and len(head) == 5 + co._HEADER.size:
                kind, degree, n = co._HEADER.unpack_from(head, 5)
                entry.update(kind=co.KINDS[kind] if kind < len(co.KINDS) else "?",
                             degree=degree, length=n)
            out.append(entry)
        return out
    if action == "verify":
        status = []
        for f in files:
            try:
                co.load_table(f)
            except DataIntegrityError as exc:
                raise DataIntegrityError(f"{f}: {exc}") from exc
            status.append({"label": f.stem, "ok": True})
        return status
    if action == "purge":
        removed = []
        for f in files:
            if label is None or f.stem == label:
                f.unlink()
                removed.append(f.stem)
        return removed
    raise ConfigError(f"unknown cache action {action!r}")


def build_table(name, N, seed=0):
    """Generate a named table: ``delta``, ``sym<k>``, ``divisor<d>``,
    ``random``, ``ones``."""
    if name == "delta":
        return co.gen_ramanujan(N)
    if name.startswith("sym"):
        return co.gen_sym_power(co.gen_ramanujan(N), int(name[3:]))
    if name.startswith("divisor"):
        return co.gen_divisor(int(name[7:]), N)
    if name == "random":
        return co.gen_random_model(N, seed)
    if name == "ones":
        return co.ones_table(N)
    raise ConfigError(f"unknown table {name!r}")


def cached_table(name, N, directory="", seed=0):
    """Load ``name`` from the cache when long enough, else generate and store it."""
    if os.path.sep in name or name.endswith(CACHE_SUFFIX):
        t = co.load_table(name)
        if t.length < N:
            raise ConfigError(f"table {name} has length {t.length} < {N}")
        return t
    tag = f"{name}-s{seed}" if name == "random" else name
    path = cache_dir(directory) / f"{tag}{CACHE_SUFFIX}"
    if path.exists():
        t = co.load_table(path)
        if t.length >= N:
            return t
    t = build_table(name, N, seed)
    co.save_table(t, path)
    return co.load_table(path)


# stationary-phase families ---------------------------------------------------

def _quadratic(scale):
    c = 1.5
    f = osc.Phase(lambda x: scale * (x - c) ** 2, lambda x: 2 * scale * (x - c),
                  lambda x: 2 * scale + 0 * x, lambda x: 0 * x, lambda x: 0 * x, "quadratic")
    return f, c


def _log(scale):
    # N x z / Q + (tau / 2 pi) log z, stationary at z = 1.5
    return ds.z_phase(1.0, -scale / 1.5, 1.0, 2 * np.pi * scale), 1.5


def _dualsum(scale, d=4):
    # tau-phase with tau0 = 2 pi scale, pulled back to z = k tau with z0 = 1.5
    k = 1.5 / (2 * np.pi * scale)
    return osc.rescale_phase(ds.tau_phase(1.0, scale ** (d - 1), -1.0, d), k), 1.5


def _theorem2(scale, d1=5, d2=4):
    y0 = 1.5
    n, m = scale ** (d1 - 1) * y0, scale ** (d2 - 1) * y0
    return ds.y_phase(n, m, 1.0, d1, d2), y0


PHASE_FAMILIES = {"quadratic": _quadratic, "log": _log, "dualsum": _dualsum,
                  "theorem2": _theorem2}


def stationary_rows(family, scales, tol=1e-12):
    """Direct quadrature against order-0 and order-1 stationary phase."""
    w = window_V()
    make = PHASE_FAMILIES[family]
    rows = []
    for s in scales:
        f, _ = make(float(s))
        direct = osc.integrate_direct(w, f, tol=tol)
        (pt,) = osc.find_stationary(f, w.a, w.b)
        sp0 = osc.stationary_phase_main(w, f, pt, 0)
        sp1 = osc.stationary_phase_main(w, f, pt, 1)
        rows.append({"scale": float(s), "direct_re": direct.real, "direct_im": direct.imag,
                     "sp0_re": sp0.real, "sp0_im": sp0.imag, "sp1_re": sp1.real,
                     "sp1_im": sp1.imag, "rel_err0": abs(sp0 - direct) / abs(direct),
                     "rel_err1": abs(sp1 - direct) / abs(direct)})
    return rows


STATIONARY_COLUMNS = ["scale", "direct_re", "direct_im", "sp0_re", "sp0_im",
                      "sp1_re", "sp1_im", "rel_err0", "rel_err1"]
SCAN_COLUMNS = ["N", "H", "B_sharp", "B_smooth", "log_slope_partial"]


# suites ----------------------------------------------------------------------

def _suite_delta(p, cfg):
    Q = p["Q"]
    res = dm.delta_identity_check(Q, p["range"] or None)
    exp = dm.DeltaExpansion.make(Q)
    lit = max(abs(dm.evaluate_delta(exp, n, "literal") - (n == 0)) for n in range(-5, 6))
    return [Check("delta_identity", res["max_abs_error"], 1e-5, res["max_abs_error"] < 1e-5),
            Check("delta_literal_a_sum", lit, 1e-5, lit < 1e-5)], {}


def _suite_stationary(p, cfg):
    checks, artifacts = [], {}
    for fam in p["phases"]:
        rows = stationary_rows(fam, p["scales"])
        slope = osc.fit_error_slope([r["scale"] for r in rows], [r["rel_err0"] for r in rows])
        checks.append(Check(f"stationary_slope_{fam}", slope, p["max_slope"], slope <= p["max_slope"]))
        artifacts[f"stationary_{fam}.csv"] = rows_to_csv(rows, STATIONARY_COLUMNS)
    return checks, artifacts


def _suite_dual(p, cfg):
    d = p["d"]
    name = p["table"] or {2: "delta", 3: "sym2", 4: "sym3"}[d]
    Ns = sorted(p["N"])
    reports = []
    for N in Ns:
        H = int(round(N ** p["theta"]))
        params = ds.DualSumParams(N, H, d)
        need = max(2 * N + 2, params.dual_window[1] + 1)
        t = cached_table(name, need, cfg.cache_dir, cfg.seed)
        reports.append(ds.dual_sum_check(t, params))
    errs = [r["rel_err"] for r in reports]
    mono = all(b <= a for a, b in zip(errs, errs[1:]))
    rows = [{"N": r["N"], "H": r["H"], "rel_err": r["rel_err"],
             "rel_err_modulus": r["rel_err_modulus"]} for r in reports]
    checks = [Check("dual_rel_err_monotone", errs, "non-increasing", mono)]
    return checks, {"dual.json": json.dumps(_jsonable(reports), indent=2)} | (
        {"dual.csv": rows_to_csv(rows, ["N", "H", "rel_err", "rel_err_modulus"])})


def _suite_scan(p, cfg):
    grid = sorted(p["grid"])
    need = 2 * grid[-1] + 2 * int(grid[-1] ** p["theta"]) + 2
    t1 = cached_table(p["t1"], need, cfg.cache_dir, cfg.seed)
    t2 = t1 if p["t2"] == p["t1"] else cached_table(p["t2"], need, cfg.cache_dir, cfg.seed)
    fit = cv.exponent_scan(t1, t2, p["theta"], grid)
    bounds = fit.extra["bounds"]
    pred = bounds["thm1"] if bounds["thm1"] is not None else bounds["thm2"]
    limit = min(1.0, pred) + p["slack"]
    rows = fit.extra["rows"]
    return [Check("scan_slope_one_sided", fit.slope, limit, fit.slope <= limit)], {
        "scan.csv": rows_to_csv(rows, SCAN_COLUMNS)}


def _suite_coeffs(p, cfg):
    N = p["N"]
    checks = []
    tab = co.gen_ramanujan(N)
    exact = co.ramanujan_tau_exact(12)
    known = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920, 534612, -370944]
    checks.append(Check("tau_first_values", exact[:12], known, exact[:12] == known))
    worst = 0.0
    rng = np.random.default_rng(cfg.seed)
    for _ in range(200):
        m, n = rng.integers(2, int(math.isqrt(N)), size=2)
        if math.gcd(int(m), int(n)) == 1:
            a, b = tab.values[m] * tab.values[n], tab.values[m * n]
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    checks.append(Check("hecke_multiplicativity", float(worst), 1e-9, worst < 1e-9))
    div = co.gen_divisor(3, N)
    checks.append(Check("divisor_tau3_of_4", float(div.values[4]), 6.0, div.values[4] == 6.0))
    blob = co.encode_table(tab)
    back = co.decode_table(blob, tab.label)
    same = back.values.tobytes() == tab.values.tobytes()
    checks.append(Check("cache_round_trip", same, True, same))
    return checks, {}


RUNNERS = {"delta": _suite_delta, "stationary": _suite_stationary, "dual": _suite_dual,
           "scan": _suite_scan, "coeffs": _suite_coeffs}


def _run_one(name, cfg):
    try:
        return RUNNERS[name](cfg.parameters[name], cfg)
    except ShiftconvError as exc:
        log.warning("suite %s raised %s", name, exc)
        return [Check(f"{name}_error", None, None, False, f"{type(exc).__name__}: {exc}")], {}


def run_suite(cfg: RunConfig, write=True) -> RunReport:
    """Run the configured suites and (optionally) write report and artifacts.

    Suites run on a pool of ``cfg.threads`` workers and are merged in the
    fixed order of :data:`SUITES`.  Every file is staged in memory and
    renamed into place only after all suites finish.
    """
    start = time.perf_counter()
    names = cfg.suites()
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(lambda n: _run_one(n, cfg), names))
    checks, staged = [], {}
    for checklist, artifacts in results:
        checks.extend(checklist)
        staged.update(artifacts)
    out = Path(cfg.out)
    sums = {}
    for fname, text in staged.items():
        sums[str(out.parent / fname)] = f"{co.fnv1a64(text.encode()):016x}"
    params = {n: cfg.parameters[n] for n in names}
    report = RunReport(cfg.suite, params, checks, time.perf_counter() - start, sums)
    if write:
        for fname, text in staged.items():
            atomic_write(out.parent / fname, text)
        atomic_write(out, report.to_json())
    return report


# reports --------------------------------------------------------------------

def read_scan_csv(path):
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        rows = []
        for row in r:
            rows.append({"N": int(row["N"]), "H": int(row["H"]),
                         "B_sharp": float(row["B_sharp"]), "B_smooth": float(row["B_smooth"]),
                         "log_slope_partial": float(row["log_slope_partial"])})
    return rows


def scan_report(rows, theta, d1=4, d2=4):
    """Fit summary of a scan: both columns, theorem exponents, trivial slope."""
    smooth = cv.fit_rows(rows, theta, d1, d2, "B_smooth")
    sharp = cv.fit_rows(rows, theta, d1, d2, "B_sharp")
    return {"schema_version": SCHEMA_VERSION, "theta": theta,
            "fit_smooth": _jsonable(smooth.as_dict()), "fit_sharp": _jsonable(sharp.as_dict()),
            "bounds": smooth.extra["bounds"], "trivial_slope": 1.0}


def svg_loglog(rows, fit=None, width=480, height=320, column="B_smooth"):
    """A log-log polyline of ``|B|`` against N with axes, as SVG text."""
    pts = [(math.log10(r["N"]), math.log10(abs(r[column]))) for r in rows if r[column] != 0]
    if not pts:
        raise ValueError("nothing to plot")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    x0, x1 = min(xs), max(xs) + 1e-9
    y0, y1 = min(ys), max(ys) + 1e-9
    pad = 40

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    poly = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">log10 N</text>',
        f'<text x="12" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 12 {height / 2:.0f})">log10 |B|</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>',
    ]
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="steelblue"/>')
    if fit is not None:
        parts.append(f'<text x="{width - pad}" y="{pad - 10}" text-anchor="end" '
                     f'font-size="12">slope {fit:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

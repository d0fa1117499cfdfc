"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line (outside output capture) before asserting.
"""

import math
import time

import numpy as np
import pytest

from shiftconv import coefficients as co
from shiftconv import convolution as cv
from shiftconv import delta_method as dm
from shiftconv import dual_sum as ds
from shiftconv import harness as hs
from shiftconv import oscillatory as osc

TAU = 2 * math.pi
SCAN_GRID = [2**k for k in range(14, 21)]


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def delta_big():
    return co.gen_ramanujan(2 * SCAN_GRID[-1] + 2 * int(SCAN_GRID[-1] ** 0.6) + 2)


@pytest.fixture(scope="module")
def sym3_big(delta_big):
    return co.gen_sym_power(delta_big, 3)


def test_criterion_01_delta_identity(verdict):
    start = time.perf_counter()
    worst = max(dm.delta_identity_check(Q)["max_abs_error"] for Q in (20, 50, 100))
    elapsed = time.perf_counter() - start
    verdict(1, worst < 1e-5 and elapsed < 60,
            f"max |delta error| {worst:.2e} (< 1e-5), {elapsed:.1f} s (< 60 s)")


def test_criterion_02_g_weight(verdict):
    Q = 200
    exp = dm.DeltaExpansion.make(Q)
    xmax = Q**-0.1
    x = np.linspace(-xmax, xmax, 81)
    near = max(float(np.max(np.abs(dm.g_weight(exp, q, x) - 1.0)))
               for q in range(1, math.isqrt(Q) + 1))
    masses = {q: dm.g_mass(exp, q) for q in (2, 14, 50, 200)}
    bound = 10 * math.log(Q)
    ok = near < 0.1 and max(masses.values()) <= bound
    verdict(2, ok, f"max |g - 1| = {near:.3e} (< 0.1) for q <= 14; "
                   f"max mass {max(masses.values()):.3f} (<= {bound:.3f})")


def test_criterion_03_stationary_phase(verdict):
    start = time.perf_counter()
    scales = [1e2, 1e3, 1e4]
    slopes = {}
    for fam in ("log", "dualsum", "theorem2"):
        rows = hs.stationary_rows(fam, scales)
        slopes[fam] = osc.fit_error_slope(scales, [r["rel_err0"] for r in rows])
    elapsed = time.perf_counter() - start
    ok = all(s <= -0.8 for s in slopes.values()) and elapsed < 300
    text = ", ".join(f"{k} {v:.3f}" for k, v in slopes.items())
    verdict(3, ok, f"error slopes {text} (<= -0.8), {elapsed:.1f} s")


def test_criterion_04_stationary_points(verdict):
    rng = np.random.default_rng(404)
    worst_rel, worst_df = 0.0, 0.0
    for _ in range(20):
        N, Q = 10 ** rng.uniform(3, 6), rng.uniform(10, 2000)
        x = -rng.uniform(0.1, 5)
        tau = rng.uniform(1.1, 1.9) * -TAU * N * x / Q
        z0 = -tau * Q / (TAU * N * x)
        (pt,) = osc.find_stationary(ds.z_phase(N, x, Q, tau), 1.0, 2.0)
        worst_rel = max(worst_rel, abs(pt.x0 - z0) / z0)
    for _ in range(20):
        d = int(rng.integers(2, 6))
        n, Q, x = rng.uniform(1, 1e4), rng.uniform(10, 1000), -rng.uniform(0.1, 5)
        t0 = TAU * (Q * n / abs(x)) ** (1 / (d - 1))
        (pt,) = osc.find_stationary(ds.tau_phase(n, Q, x, d), 0.5 * t0, 2 * t0)
        worst_rel = max(worst_rel, abs(pt.x0 - t0) / t0)
    for _ in range(20):
        d2 = int(rng.integers(2, 6))
        d1 = d2 + int(rng.integers(1, 3))
        n, m, H = rng.uniform(1, 100), rng.uniform(1, 100), rng.uniform(1, 1e3)
        y0 = ds.theorem2_stationary_point(n, m, H, d1, d2)
        f = ds.y_phase(n, m, H, d1, d2)
        (pt,) = osc.find_stationary(f, 0.5 * y0, 2 * y0)
        worst_rel = max(worst_rel, abs(pt.x0 - y0) / y0)
        worst_df = max(worst_df, abs(float(f.df(np.array([y0]))[0])))
    verdict(4, worst_rel < 1e-9 and worst_df < 1e-10,
            f"max relative root error {worst_rel:.2e} (< 1e-9), max |f'(y0)| {worst_df:.2e} (< 1e-10)")


def test_criterion_05_dual_sum(verdict, sym3_big):
    errs = []
    for N in (10**3, 10**4, 10**5):
        p = ds.DualSumParams(N, int(round(N**0.6)), 4)
        need = max(2 * N + 2, p.dual_window[1] + 1)
        t = sym3_big if sym3_big.length >= need else co.gen_sym_power(co.gen_ramanujan(need), 3)
        errs.append(ds.dual_sum_check(t, p)["rel_err"])
    mono = all(b <= a for a, b in zip(errs, errs[1:]))
    target = "meets" if errs[-1] < 0.25 else "misses"
    verdict(5, mono, f"rel_err {', '.join(f'{e:.3f}' for e in errs)} non-increasing; "
                     f"final {errs[-1]:.3f} {target} the 0.25 target (reported only)")


def test_criterion_06_gamma_factor(verdict):
    at_half = abs(ds.gamma_factor(ds.GammaData(4), 0.5) - 1.0)
    unit = max(abs(abs(ds.gamma_factor(ds.GammaData(d), 0.5 + 1j * t)) - 1.0)
               for d in (1, 2, 3, 4) for t in (5.0, 10.0, 20.0))
    z2 = ds.zeta_em(2.0)
    fe = abs(ds.gamma_factor(ds.GammaData(1), 2.0) * ds.zeta_em(-1.0) - z2) / abs(z2)
    ok = at_half < 1e-12 and unit < 1e-8 and fe < 1e-6
    verdict(6, ok, f"|gamma(1/2) - 1| {at_half:.1e}, max ||gamma| - 1| {unit:.1e}, "
                   f"zeta relation at s = 2 rel {fe:.1e}")


def test_criterion_07_coefficients(verdict, tmp_path):
    N = 10_000
    delta = co.gen_ramanujan(N)
    tables = {"divisor3": co.gen_divisor(3, N), "delta": delta, "sym3": co.gen_sym_power(delta, 3)}
    failures = []
    for name, t in tables.items():
        for m in range(2, 100):
            for n in range(m + 1, N // m + 1):
                if math.gcd(m, n) != 1:
                    continue
                a, b = t[m] * t[n], t[m * n]
                ok = a == b if name == "divisor3" else abs(a - b) <= 1e-9 * max(abs(b), 1e-300)
                if not ok:
                    failures.append((name, m, n))
    for p in co.primes_upto(100):
        p = int(p)
        j = 1
        while p ** (j + 1) <= N:
            lhs, rhs = delta[p] * delta[p**j], delta[p ** (j + 1)] + delta[p ** (j - 1)]
            if abs(lhs - rhs) > 1e-9 * max(abs(rhs), 1.0):
                failures.append(("gl2", p, j))
            j += 1
    for d in (2, 3, 5):
        t = co.gen_divisor(d, N)
        for p in map(int, co.primes_upto(50)):
            for k in range(1, 14):
                if p**k <= N and t[p**k] != math.comb(k + d - 1, d - 1):
                    failures.append(("binom", p, k))
    path = tmp_path / "sym3.bin"
    co.save_table(tables["sym3"], path)
    same = co.load_table(path).values.tobytes() == tables["sym3"].values.tobytes()
    verdict(7, not failures and same,
            f"{len(failures)} multiplicativity/recursion/binomial failures; cache bit-identical {same}")


def test_criterion_08_fft_oracle(verdict):
    rng = np.random.default_rng(808)
    worst = 0.0
    for i in range(50):
        N, H = int(rng.integers(4, 3000)), int(rng.integers(1, 300))
        L = 2 * N + 2 * H + 2
        t1 = co.gen_sym_power(co.gen_ramanujan(L), int(rng.integers(1, 4))) if i % 2 else \
            co.gen_random_model(L, i)
        t2 = co.gen_random_model(L, 100 + i)
        spec = cv.ShiftedSumSpec(t1, t2, N, H, "smooth" if i % 3 else "sharp")
        a, b = cv.compute_B(spec, "naive"), cv.compute_B(spec, "fft")
        worst = max(worst, abs(a - b) / abs(a))
    verdict(8, worst < 1e-9, f"max FFT/naive relative difference {worst:.2e} over 50 draws (< 1e-9)")


def test_criterion_09_thresholds(verdict):
    worst = 0.0
    for d in range(4, 9):
        worst = max(worst, abs(cv.theorem_bounds(d, d, 1 - 2 / d)["thm1"] - 1))
    for d1 in range(4, 9):
        for d2 in range(4, 9):
            if d1 > d2:
                worst = max(worst, abs(cv.theorem_bounds(d1, d2, 1 - 4 / (d1 + d2))["thm2"] - 1))
            if d1 >= d2:
                worst = max(worst, abs(cv.theorem_bounds(d1, d2, (d2 - 1) / (d2 + 1))["fi"] - 1))
    verdict(9, worst <= 1e-12, f"max |exponent - 1| at thresholds {worst:.1e} (<= 1e-12)")


def test_criterion_10_exponent_scan(verdict, sym3_big):
    start = time.perf_counter()
    fit = cv.exponent_scan(sym3_big, sym3_big, 0.6, SCAN_GRID)
    ones = co.ones_table(sym3_big.length)
    control = cv.exponent_scan(ones, ones, 0.6, SCAN_GRID)
    elapsed = time.perf_counter() - start
    ok = fit.slope <= 0.8 and abs(control.slope - 1.0) <= 0.02 and elapsed < 600
    verdict(10, ok, f"sym3 slope {fit.slope:.3f} (<= 0.8), all-ones slope {control.slope:.4f} "
                    f"(1 +- 0.02), {elapsed:.1f} s")


def test_criterion_11_zero_frequency(verdict):
    # the nonzero frequencies sit at xi = H h / q; with H = 199 and q = 100
    # the first one is xi = 1.99, where the fixed window's transform is
    # still about a tenth of its mass
    N = 10**4
    H = math.floor(N**0.575)
    main = dm.zero_frequency_check(H, N, 100)
    short = dm.zero_frequency_check(50, N, 100)
    ok = main["ratio"] < 1e-8 and short["ratio"] > 1e-3
    verdict(11, ok, f"H = {H}: ratio {main['ratio']:.3e} (< 1e-8 required); "
                    f"H = 50 < sqrt N: ratio {short['ratio']:.3e} (> 1e-3)")

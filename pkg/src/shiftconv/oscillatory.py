"""Oscillatory integrals ``int w(x) e(f(x)) dx`` with ``e(t) = exp(2 pi i t)``.

Two routes are provided: brute-force adaptive Gauss-Kronrod quadrature
(:func:`integrate_direct`) and the stationary-phase expansion
(:func:`stationary_phase_main`).  The quadrature is the oracle against which
every asymptotic statement in the package is checked.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateStationaryPointError, DomainError, NumericError
from .windows import SmoothWindow

TWO_PI = 2.0 * np.pi

# Kronrod 15-point abscissae (non-negative half) and weights, with the
# embedded 7-point Gauss weights on the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
WG = np.zeros(15)
WG[1:7:2] = _WG[:3]
WG[7] = _WG[3]
WG[9:15:2] = _WG[2::-1]


class BoundaryWarning(UserWarning):
    """Stationary point too close to the edge of the support."""


def _gk_panels(fn, left, right):
    mid = (left + right) / 2.0
    half = (right - left) / 2.0
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = fn(x.ravel()).reshape(x.shape)
    k15 = half * (fx @ WK)
    g7 = half * (fx @ WG)
    mean = k15 / (2.0 * half)
    resasc = half * (np.abs(fx - mean[:, None]) @ WK)
    diff = np.abs(k15 - g7)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(resasc > 0,
                       resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5),
                       diff)
    eps_floor = 50.0 * np.finfo(float).eps * half * (np.abs(fx) @ WK)
    return k15, np.maximum(err, eps_floor)


def initial_mesh(a, b, max_width, df=None):
    """Breakpoints on [a, b] with panels no wider than ``max_width`` and,
    when ``df`` is given, no wider than ``1/(4 sup|df|)`` on the panel."""
    count = max(1, int(np.ceil((b - a) / max_width)))
    edges = np.linspace(a, b, count + 1)
    if df is None:
        return edges
    left, right = edges[:-1], edges[1:]
    mid, half = (left + right) / 2.0, (right - left) / 2.0
    x = mid[:, None] + half[:, None] * np.append(NODES, [-1.0, 1.0])[None, :]
    slope = np.max(np.abs(df(x.ravel()).reshape(x.shape)), axis=1)
    pieces = np.maximum(1, np.ceil(4.0 * slope * (right - left)).astype(int))
    out = [np.linspace(l, r, p + 1)[:-1] for l, r, p in zip(left, right, pieces)]
    return np.append(np.concatenate(out), b)


def adaptive_quad(fn, a, b, tol=1e-12, max_width=0.25, df=None,
                  max_panels=400_000, return_error=False):
    """Adaptive 15-point Gauss-Kronrod quadrature of a vectorised integrand.

    Panels are bisected until the summed error estimate is below ``tol``.
    Raises :class:`NumericError` when the panel budget runs out.
    """
    if not b > a:
        raise DomainError("need b > a")
    edges = initial_mesh(a, b, max_width, df)
    left, right = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    used = 0
    while True:
        vals, errs = _gk_panels(fn, left, right)
        used += len(left)
        total_err = done_err + errs.sum()
        if total_err <= tol:
            val = done_val + _fsum(vals)
            return (val, total_err) if return_error else val
        # panels meeting their share of the tolerance are retired
        share = tol * (right - left) / (b - a)
        ok = errs <= share
        done_val = done_val + _fsum(vals[ok])
        done_err += errs[ok].sum()
        if used + 2 * np.count_nonzero(~ok) > max_panels:
            best = done_val + _fsum(vals[~ok])
            raise NumericError(
                f"quadrature budget exhausted, error {total_err:.3e} > tol {tol:.1e}",
                estimate=best, error=total_err)
        l, r = left[~ok], right[~ok]
        m = (l + r) / 2.0
        left = np.concatenate([l, m])
        right = np.concatenate([m, r])
        order = np.argsort(left, kind="stable")
        left, right = left[order], right[order]


def _fsum(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real), math.fsum(v.imag))
    return math.fsum(v)


@dataclass(frozen=True)
class Phase:
    """A real phase ``f`` with closed-form derivatives (vectorised callables)."""

    f: Callable
    df: Callable
    d2f: Callable
    d3f: Optional[Callable] = None
    d4f: Optional[Callable] = None
    name: str = "phase"

    def shifted(self, c):
        """The phase ``f + c``."""
        f = self.f
        return Phase(lambda x: f(x) + c, self.df, self.d2f, self.d3f, self.d4f,
                     self.name)

    def negated(self):
        neg = lambda g: None if g is None else (lambda x: -g(x))
        return Phase(neg(self.f), neg(self.df), neg(self.d2f), neg(self.d3f),
                     neg(self.d4f), self.name)

    def check_derivatives(self, a, b, samples=32, rtol=1e-6, seed=0):
        """Compare closed-form derivatives with central differences of
        ``f`` and ``f'``; returns the worst relative discrepancy."""
        rng = np.random.default_rng(seed)
        width = b - a
        x = rng.uniform(a + 0.05 * width, b - 0.05 * width, samples)
        h = 1e-5 * max(width, 1e-300) * np.maximum(1.0, np.abs(x) / max(width, 1e-300))
        worst = 0.0
        pairs = [(self.f, self.df), (self.df, self.d2f)]
        if self.d3f is not None:
            pairs.append((self.d2f, self.d3f))
        for g, dg in pairs:
            fd = (g(x + h) - g(x - h)) / (2 * h)
            exact = dg(x)
            scale = np.maximum(np.abs(exact), np.max(np.abs(exact)) * 1e-3)
            worst = max(worst, float(np.max(np.abs(fd - exact) / scale)))
        if worst > rtol:
            raise DomainError(f"phase derivatives inconsistent: {worst:.2e} > {rtol:.0e}")
        return worst


@dataclass(frozen=True)
class StationaryPoint:
    x0: float
    d2f: float
    simple: bool = True


def integrate_direct(w: SmoothWindow, f: Phase, tol=1e-12, max_width=0.25,
                     return_error=False):
    """``int w(x) e(f(x)) dx`` over the support of ``w`` by adaptive quadrature.

    Panel widths are capped by ``max_width`` and by a quarter period of the
    local oscillation.
    """
    if tol < 1e-12:
        raise DomainError("tol must be >= 1e-12")
    fn = lambda x: w(x) * np.exp(TWO_PI * 1j * f.f(x))
    return adaptive_quad(fn, w.a, w.b, tol=tol, max_width=max_width,
                         df=f.df, return_error=return_error)


def find_stationary(f: Phase, a, b, grid=10_000):
    """All simple zeros of ``f'`` on ``[a, b]``: sign-change scan,
    bisection, then Newton polish."""
    x = np.linspace(a, b, grid + 1)
    d = f.df(x)
    scale = float(np.max(np.abs(d)))
    if scale == 0.0:
        raise DegenerateStationaryPointError("f' vanishes identically")
    sign = np.sign(d)
    roots = []
    idx = np.nonzero(sign[:-1] * sign[1:] <= 0)[0]
    for i in idx:
        if sign[i] == 0 and i > 0 and sign[i - 1] == 0:
            continue
        roots.append(_polish(f, x[i], x[i + 1], scale))
    out = []
    seen = []
    for r in roots:
        if any(abs(r - s) <= 1e-12 * max(1.0, abs(r)) for s in seen):
            continue
        seen.append(r)
        c = float(f.d2f(np.array([r]))[0])
        d2scale = float(np.max(np.abs(f.d2f(x))))
        if abs(c) <= 1e-10 * d2scale:
            raise DegenerateStationaryPointError(f"f''({r}) = {c} vanishes")
        out.append(StationaryPoint(r, c, True))
    return out


def _polish(f, lo, hi, scale):
    dlo = f.df(np.array([lo]))[0]
    for _ in range(200):
        if hi - lo <= 1e-10 * (abs(lo) + abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        dm = f.df(np.array([mid]))[0]
        if dm == 0:
            return float(mid)
        if np.sign(dm) == np.sign(dlo):
            lo, dlo = mid, dm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        d1 = f.df(np.array([x]))[0]
        if abs(d1) < 1e-14 * scale:
            break
        d2 = f.d2f(np.array([x]))[0]
        step = d1 / d2 if d2 != 0 else np.inf
        if not np.isfinite(step) or abs(step) > hi - lo + 1e-300:
            break
        x -= step
    return float(x)


def stationary_phase_main(w: SmoothWindow, f: Phase, x0: StationaryPoint, order=0):
    """Leading stationary-phase approximation of ``int w e(f)``.

    ``order=0`` gives ``e(f(x0)) w(x0) e(+-1/8) / sqrt|f''(x0)|``.
    ``order=1`` also includes every term of relative size ``1/f''`` (this
    needs ``f'''`` and ``f''''``).
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    x = np.array([x0.x0])
    c = x0.x0
    if min(c - w.a, w.b - c) < 1e-3 * w.width:
        warnings.warn(f"stationary point {c} near the boundary of "
                      f"[{w.a}, {w.b}]; expansion unreliable", BoundaryWarning)
    phi0 = TWO_PI * float(f.f(x)[0])
    phi2 = TWO_PI * float(f.d2f(x)[0])
    if phi2 == 0:
        raise DegenerateStationaryPointError("f''(x0) = 0")
    sgn = 1.0 if phi2 > 0 else -1.0
    w0 = float(w(x, 0)[0])
    amp = w0
    if order == 1:
        if f.d3f is None or f.d4f is None:
            raise DomainError("order 1 needs f''' and f''''")
        phi3 = TWO_PI * float(f.d3f(x)[0])
        phi4 = TWO_PI * float(f.d4f(x)[0])
        w1 = float(w(x, 1)[0])
        w2 = float(w(x, 2)[0])
        bracket = (w2 / (2 * phi2) - phi4 * w0 / (8 * phi2**2)
                   - phi3 * w1 / (2 * phi2**2) + 5 * phi3**2 * w0 / (24 * phi2**3))
        amp = w0 + 1j * bracket
    pref = np.sqrt(TWO_PI / abs(phi2)) * np.exp(1j * (phi0 + sgn * np.pi / 4))
    return complex(pref * amp)


def nonstationary_bound_check(w: SmoothWindow, f: Phase, tol=1e-13, grid=4001):
    """Compare ``|int w e(f)|`` with ``Var(w) / min|f'|``.

    Requires ``f'`` bounded away from zero on the support.
    """
    x = np.linspace(w.a, w.b, grid)
    min_slope = float(np.min(np.abs(f.df(x))))
    if min_slope <= 0:
        raise DomainError("f' vanishes on the support")
    value = integrate_direct(w, f, tol=max(tol, 1e-12))
    bound = w.variation() / min_slope
    return {"integral": value, "abs": abs(value), "bound": bound,
            "min_slope": min_slope, "ok": abs(value) <= bound}


def decay_exponent(w: SmoothWindow, family, scales, tol=1e-12):
    """Least-squares slope of ``log|I(s)|`` against ``log s`` where
    ``I(s) = int w e(family(s))``."""
    scales = np.asarray(scales, dtype=float)
    vals = np.array([abs(integrate_direct(w, family(s), tol=tol)) for s in scales])
    floor = np.finfo(float).eps * w.integral()
    vals = np.maximum(vals, floor)
    slope, _ = np.polyfit(np.log(scales), np.log(vals), 1)
    return float(slope), vals


def fit_error_slope(scales, errors):
    """Least-squares slope of ``log(error)`` against ``log(scale)``."""
    slope, _ = np.polyfit(np.log(np.asarray(scales, float)),
                          np.log(np.asarray(errors, float)), 1)
    return float(slope)


def rescale_phase(f: Phase, k):
    """The phase ``z -> f(z / k)`` with chain-rule derivatives."""
    k = float(k)
    wrap = lambda g, j: None if g is None else (lambda z: g(z / k) / k**j)
    return Phase(wrap(f.f, 0), wrap(f.df, 1), wrap(f.d2f, 2), wrap(f.d3f, 3),
                 wrap(f.d4f, 4), f.name)

"""Functional-equation transform of additively twisted sums.

For a self-dual degree-d sequence with gamma factor ``gamma(s)``,

    sum_n A(n) V(n/N) e(n x / Q) = sum_n A(n)/n Omega(n),
    Omega(n) = (2 pi)^{-1} int (N n)^{1/2 + i t} omega(1/2 + i t) gamma(1/2 + i t) dt,

with ``omega(s) = int V(z) e(N x z / Q) z^{s - 1} dz``.  Stationary phase in
z and then in t collapses ``Omega(n)`` to a closed form supported on the
dual window ``n ~ N^{d-1} / H^d``.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import bernoulli

from .coefficients import CoefficientTable
from .errors import DomainError, SingularityError
from .oscillatory import Phase, integrate_direct, rescale_phase
from .windows import SmoothWindow, gauss_legendre, window_V

TWO_PI = 2.0 * np.pi

_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
])
POLE_DISTANCE = 1e-8


def _pole_distance(z):
    # distance to the nearest non-positive integer
    near = np.minimum(np.round(z.real), 0.0)
    return np.abs(z - near)


def log_gamma(z):
    """Complex log-Gamma (Lanczos, g = 7), vectorised.

    Arguments with ``Re z < 1/2`` are shifted up by the recurrence, so the
    imaginary part may differ from the principal branch by a multiple of
    ``2 pi``; ``exp(log_gamma(z))`` is always Gamma(z).
    """
    z = np.asarray(z, dtype=complex)
    if np.any(_pole_distance(z) < POLE_DISTANCE):
        raise SingularityError("log_gamma evaluated at a pole")
    shift = np.maximum(0, np.ceil(0.5 - z.real)).astype(int)
    out = np.zeros(z.shape, dtype=complex)
    w = z.copy()
    for j in range(int(shift.max(initial=0))):
        active = shift > j
        out[active] -= np.log(w[active])
        w[active] += 1.0
    w = w - 1.0
    acc = np.full(w.shape, _LANCZOS[0], dtype=complex)
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (w + i)
    t = w + _LANCZOS_G + 0.5
    out += 0.5 * math.log(TWO_PI) + (w + 0.5) * np.log(t) - t + np.log(acc)
    return out


@dataclass(frozen=True)
class GammaData:
    """Archimedean data ``(d, alpha_1..alpha_d, delta0)`` of a gamma factor."""

    d: int
    alphas: tuple = None
    delta0: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("degree must be >= 1")
        alphas = (0j,) * self.d if self.alphas is None else tuple(complex(a) for a in self.alphas)
        if len(alphas) != self.d:
            raise DomainError(f"need {self.d} spectral parameters, got {len(alphas)}")
        if any(abs(a) > 2 for a in alphas):
            raise DomainError("spectral parameters must satisfy |alpha| <= 2")
        if self.delta0 not in (0, 1):
            raise DomainError("delta0 must be 0 or 1")
        object.__setattr__(self, "alphas", alphas)


def gamma_factor(g: GammaData, s):
    """``i^{-d delta0} pi^{-d(1/2 - s)} prod_j Gamma((1-s+delta0-conj a_j)/2) / Gamma((s+delta0-a_j)/2)``.

    Vectorised in ``s``.  Zeros of the denominator give 0; a numerator
    pole within ``1e-8`` raises :class:`SingularityError`.
    """
    s = np.asarray(s, dtype=complex)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    logsum = -g.d * (0.5 - s) * math.log(math.pi)
    zero = np.zeros(s.shape, dtype=bool)
    for a in g.alphas:
        num = (1.0 - s + g.delta0 - np.conj(a)) / 2.0
        den = (s + g.delta0 - a) / 2.0
        if np.any(_pole_distance(num) < POLE_DISTANCE):
            raise SingularityError(f"gamma factor has a pole near s = {s}")
        at_zero = _pole_distance(den) < POLE_DISTANCE
        zero |= at_zero
        logsum = logsum + log_gamma(num) - log_gamma(np.where(at_zero, 1.0, den))
    out = np.exp(logsum) * (1j) ** (-g.d * g.delta0)
    out[zero] = 0.0
    return complex(out[0]) if scalar else out


_BERNOULLI = bernoulli(40)


def zeta_em(s, terms=20, corrections=15):
    """Riemann zeta by Euler-Maclaurin summation (any complex ``s != 1``)."""
    s = complex(s)
    if abs(s - 1.0) < 1e-12:
        raise SingularityError("zeta has a pole at s = 1")
    n = np.arange(1, terms, dtype=float)
    head = complex(np.sum(n ** (-s)))
    M = float(terms)
    total = head + M ** (1 - s) / (s - 1) + 0.5 * M ** (-s)
    rising = s
    for k in range(1, corrections + 1):
        # rising = s (s+1) ... (s+2k-2)
        total += _BERNOULLI[2 * k] / math.factorial(2 * k) * rising * M ** (-s - 2 * k + 1)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return total


def stirling_ratio(tau):
    """``Gamma((1/2 - i t)/2) / Gamma((1/2 + i t)/2)``."""
    tau = np.asarray(tau, dtype=float)
    return np.exp(log_gamma((0.5 - 1j * tau) / 2) - log_gamma((0.5 + 1j * tau) / 2))


def _stirling_phase(tau):
    tau = np.asarray(tau, dtype=float)
    pred = np.exp(-1j * tau * np.log(tau / (2.0 * math.e)))
    return np.angle(stirling_ratio(tau) / pred), pred


def stirling_ratio_check(tau_grid):
    """Compare the Gamma ratio with ``(t / 2e)^{-i t}``.

    The residual phase ``rho(t) = arg(R(t) (t/2e)^{i t})`` is fitted as
    ``rho_inf + c / t``; ``exp(i rho_inf)`` is the unimodular constant.
    ``drift[t] = rho(2t) - rho(t)``.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.min() < 10:
        raise DomainError("tau grid must start at 10 or above")
    R = stirling_ratio(tau)
    rho, pred = _stirling_phase(tau)
    c, rho_inf = np.polyfit(1.0 / tau, rho, 1)
    unit = np.exp(1j * rho_inf)
    rho2, _ = _stirling_phase(2 * tau)
    return {
        "tau": tau.tolist(),
        "abs_deviation": (np.abs(R) - 1.0).tolist(),
        "residual_phase": rho.tolist(),
        "drift": (rho2 - rho).tolist(),
        "constant_phase": float(rho_inf),
        "inverse_tau_coefficient": float(c),
        "fitted_residual": np.abs(R - pred * unit).tolist(),
    }


# phases -------------------------------------------------------------------

def z_phase(N, x, Q, tau):
    """``z -> N x z / Q + (tau / 2 pi) log z``."""
    a = N * x / Q
    b = tau / TWO_PI
    return Phase(lambda z: a * z + b * np.log(z),
                 lambda z: a + b / z,
                 lambda z: -b / z**2,
                 lambda z: 2 * b / z**3,
                 lambda z: -6 * b / z**4,
                 "z-phase")


def tau_phase(n, Q, x, d):
    """``t -> (t / 2 pi) [log c - (d-1) log(t / 2 pi) + (d-1)]`` with ``c = Q n / |x|``."""
    logc = math.log(Q * n / abs(x))
    m = d - 1
    return Phase(lambda t: t / TWO_PI * (logc - m * np.log(t / TWO_PI) + m),
                 lambda t: (logc - m * np.log(t / TWO_PI)) / TWO_PI,
                 lambda t: -m / (TWO_PI * t),
                 lambda t: m / (TWO_PI * t**2),
                 lambda t: -2 * m / (TWO_PI * t**3),
                 "tau-phase")


def y_phase(n, m, H, d1, d2):
    """``y -> (d1-1)(H n / y)^{1/(d1-1)} - (d2-1)(H m / y)^{1/(d2-1)}``."""
    a, b = 1.0 / (d1 - 1), 1.0 / (d2 - 1)
    A, B = (H * n) ** a, (H * m) ** b

    def deriv(k):
        # k-th derivative of C y^{-p} is C (-1)^k p (p+1)...(p+k-1) y^{-p-k}
        def coef(p):
            out = 1.0
            for i in range(k):
                out *= -(p + i)
            return out
        ca, cb = (d1 - 1) * A * coef(a), (d2 - 1) * B * coef(b)
        return lambda y: ca * y ** (-a - k) - cb * y ** (-b - k)

    return Phase(deriv(0), deriv(1), deriv(2), deriv(3), deriv(4), "y-phase")


def find_y_stationary(n, m, H, d1, d2):
    """Stationary point of :func:`y_phase` (closed form)."""
    return theorem2_stationary_point(n, m, H, d1, d2)


def theorem2_stationary_point(n, m, H, d1, d2):
    """``y0 = H (m^{d1-1} / n^{d2-1})^{1/(d1-d2)}``, where the y-phase is stationary."""
    if d1 == d2:
        raise DomainError("d1 = d2 has no isolated stationary point")
    if not d1 > d2 >= 2:
        raise DomainError("need d1 > d2 >= 2")
    if n < 1 or m < 1:
        raise DomainError("n, m must be >= 1")
    # logs keep m^{d1-1} from overflowing
    e = ((d1 - 1) * math.log(m) - (d2 - 1) * math.log(n)) / (d1 - d2)
    return H * math.exp(e)


# Mellin side --------------------------------------------------------------

def mellin_window(N, x, Q, sigma, tau, V: SmoothWindow = None, tol=1e-12):
    """``int V(z) e(N x z / Q + (tau / 2 pi) log z) z^{sigma - 1} dz`` by quadrature."""
    if x == 0:
        raise DomainError("x must be nonzero")
    V = window_V() if V is None else V
    amp = V if sigma == 1 else V.times_power(sigma - 1.0)
    return integrate_direct(amp, z_phase(N, x, Q, tau), tol=tol)


def mellin_window_grid(N, x, Q, tau, V: SmoothWindow = None, nodes=None):
    """``omega(1/2 + i tau)`` on an array of ``tau`` by a fixed Gauss-Legendre rule."""
    V = window_V() if V is None else V
    tau = np.asarray(tau, dtype=float)
    slope = abs(N * x / Q) + float(np.max(np.abs(tau), initial=0.0)) / (TWO_PI * V.a)
    if nodes is None:
        nodes = int(64 + 8 * slope * V.width)
    zn, zw = gauss_legendre(nodes)
    h = V.width / 2
    z = V.a + h * (zn + 1)
    amp = V(z) * z ** (-0.5) * zw * h
    ph = np.exp(TWO_PI * 1j * N * x * z / Q)
    kern = np.exp(1j * np.multiply.outer(tau, np.log(z)))
    return kern @ (amp * ph)


@dataclass(frozen=True)
class DualSumParams:
    """Lengths of an additively twisted sum and of its dual.

    ``Q`` defaults to ``2 ceil(sqrt N)`` and ``x`` to ``-Q / H``.
    """

    N: int
    H: int
    d: int
    Q: int = None
    x: float = None
    V: SmoothWindow = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1 or self.H < 1:
            raise DomainError("N and H must be positive")
        if self.d < 2:
            raise DomainError("degree must be >= 2")
        if self.H < math.sqrt(self.N):
            raise DomainError(f"H = {self.H} below sqrt(N) = {math.sqrt(self.N):.1f}")
        if self.Q is None:
            object.__setattr__(self, "Q", 2 * (math.isqrt(self.N - 1) + 1))
        if self.x is None:
            object.__setattr__(self, "x", -self.Q / self.H)
        if self.x == 0:
            raise DomainError("x must be nonzero")
        if self.V is None:
            object.__setattr__(self, "V", window_V())
        if self.dual_length < 1:
            raise DomainError(f"dual length {self.dual_length:.3g} < 1")

    @property
    def dual_length(self):
        # N^{d-1} (|x| / Q)^d, which is N^{d-1} / H^d at the default x
        return self.N ** (self.d - 1) * (abs(self.x) / self.Q) ** self.d

    @property
    def dual_window(self):
        """Integer range of n with dual argument in ``[1, 2]``."""
        lo = self.dual_length
        return math.ceil(lo), math.floor(lo * 2 ** (self.d - 1))

    def dual_argument(self, n):
        n = np.asarray(n, dtype=float)
        d = self.d
        return (self.Q / abs(self.x)) ** (d / (d - 1)) * n ** (1 / (d - 1)) / self.N

    @property
    def k(self):
        # tau = z / k maps the z-window onto the tau-axis
        return self.Q / (TWO_PI * self.N * abs(self.x))


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def omega_closed_form(p: DualSumParams, n):
    """Stationary-phase value of ``Omega(n)`` (vectorised in ``n``).

    ``(N n)^{1/2} (d-1)^{-1/2} V(u) u^{1/2} e((d-1)(Q n / |x|)^{1/(d-1)}) e^{i (d-2) pi / 4}``
    with ``u`` the dual argument; conjugated for ``x > 0``.
    """
    n = np.asarray(n, dtype=float)
    d = p.d
    u = p.dual_argument(n)
    amp = np.sqrt(p.N * n / (d - 1)) * p.V(u) * np.sqrt(u)
    phase = TWO_PI * (d - 1) * (p.Q * n / abs(p.x)) ** (1 / (d - 1)) + (d - 2) * np.pi / 4
    out = amp * np.exp(1j * phase)
    return np.conj(out) if p.x > 0 else out


def omega_quadrature(p: DualSumParams, n, tol=1e-10):
    """``Omega(n)`` with the t-integral done by quadrature after Stirling.

    ``(N n)^{1/2} (2 pi)^{-1/2} e^{i (d-1) pi/4} int e(g1(t)) t^{-1/2} V(k t) (k t)^{1/2} dt``
    where ``k = Q / (2 pi N |x|)``; the substitution ``z = k t`` puts the
    integral on the support of V.
    """
    n = _check_n(n)
    d, k = p.d, p.k
    phase = rescale_phase(tau_phase(n, p.Q, p.x, d), k)
    integral = integrate_direct(p.V, phase, tol=tol)
    pref = math.sqrt(p.N * n / TWO_PI) * np.exp(1j * (d - 1) * np.pi / 4) / math.sqrt(k)
    out = complex(pref * integral)
    return out.conjugate() if p.x > 0 else out


def omega_mellin(p: DualSumParams, n, gamma: GammaData = None, panel=0.5, order=20):
    """``Omega(n)`` from the Mellin-Barnes integral on the line ``Re s = 1/2``.

    Uses the exact gamma factor of ``gamma`` (default: degree d, all
    parameters 0) and the z-integral by Gauss-Legendre; no asymptotics.
    """
    n = _check_n(n)
    g = GammaData(p.d) if gamma is None else gamma
    k = p.k
    lo, hi = 0.6 * p.V.a / k, 1.2 * p.V.b / k
    panels = max(1, int(math.ceil((hi - lo) / panel)))
    edges = np.linspace(lo, hi, panels + 1)
    tn, tw = gauss_legendre(order)
    half = (edges[1:] - edges[:-1]) / 2
    tau = ((edges[:-1] + edges[1:]) / 2)[:, None] + half[:, None] * tn[None, :]
    wts = (half[:, None] * tw[None, :]).ravel()
    tau = tau.ravel()
    omega = mellin_window_grid(p.N, -abs(p.x), p.Q, tau, p.V)
    s = 0.5 + 1j * tau
    integrand = (p.N * n) ** s * omega * gamma_factor(g, s)
    out = complex(np.sum(integrand * wts) / TWO_PI)
    return out.conjugate() if p.x > 0 else out


def omega_transform(p: DualSumParams, n, mode="closed_form", **kw):
    """``Omega(n)`` by ``mode`` in {closed_form, quadrature, mellin}.

    Outside the dual window the closed form is 0 and the integrals are
    negligible.
    """
    if mode == "closed_form":
        n = _check_n(n)
        return complex(omega_closed_form(p, np.array([n]))[0])
    if mode == "quadrature":
        return omega_quadrature(p, n, **kw)
    if mode == "mellin":
        return omega_mellin(p, n, **kw)
    raise ValueError(f"unknown mode {mode!r}")


def _pairwise_sum(v):
    # numpy's add.reduce is pairwise on contiguous arrays
    v = np.ascontiguousarray(v)
    return complex(np.add.reduce(v)) if v.size else 0j


def twisted_sum(t: CoefficientTable, p: DualSumParams):
    """``sum_n A(n) V(n/N) e(n x / Q)`` summed directly."""
    a, b = p.V.a * p.N, p.V.b * p.N
    n = np.arange(max(1, math.floor(a)), math.ceil(b) + 1)
    if n[-1] >= t.length + 1:
        raise DomainError(f"table of length {t.length} does not reach {n[-1]}")
    terms = t.values[n] * p.V(n / p.N) * np.exp(TWO_PI * 1j * ((n * p.x / p.Q) % 1.0))
    return _pairwise_sum(terms)


def dual_side(t: CoefficientTable, p: DualSumParams, mode="closed_form"):
    """``sum_n A(n)/n Omega(n)`` over the dual window."""
    lo, hi = p.dual_window
    if hi < lo:
        return 0j
    if hi > t.length:
        raise DomainError(f"table of length {t.length} does not reach the dual window end {hi}")
    n = np.arange(lo, hi + 1)
    A = t.values[n]
    if mode == "closed_form":
        omega = omega_closed_form(p, n)
    else:
        omega = np.array([omega_transform(p, int(m), mode) if A[i] != 0 else 0j
                          for i, m in enumerate(n)])
    return _pairwise_sum(A / n * omega)


def dual_sum_check(t: CoefficientTable, p: DualSumParams, mode="closed_form"):
    """Both sides of the dual-sum identity and their relative error.

    For ``x > 0`` and real coefficients both sides are the conjugates of
    the ``-x`` values.
    """
    if t.degree != p.d:
        raise DomainError(f"table degree {t.degree} != {p.d}")
    start = time.perf_counter()
    lhs = twisted_sum(t, p)
    rhs = dual_side(t, p, mode)
    scale = abs(lhs)
    if scale == 0.0 and abs(rhs) == 0.0:
        rel, rel_mod = 0.0, 0.0
    else:
        rel = abs(lhs - rhs) / scale if scale > 0 else math.inf
        rel_mod = abs(abs(lhs) - abs(rhs)) / scale if scale > 0 else math.inf
    return {
        "N": p.N, "H": p.H, "Q": p.Q, "x": p.x, "d": p.d,
        "dual_window": list(p.dual_window),
        "lhs": [lhs.real, lhs.imag], "rhs": [rhs.real, rhs.imag],
        "rel_err": rel, "rel_err_modulus": rel_mod,
        "phase_offset": float(np.angle(lhs / rhs)) if scale > 0 and rhs != 0 else 0.0,
        "runtime_ms": 1e3 * (time.perf_counter() - start),
    }


def fit_unimodular(lhs, rhs):
    """The ``c`` with ``|c| = 1`` minimising ``sum |lhs - c rhs|^2``; returns
    ``(c, relative residual)``."""
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    cross = np.sum(lhs * np.conj(rhs))
    c = cross / abs(cross) if cross != 0 else 1.0
    resid = math.sqrt(np.sum(np.abs(lhs - c * rhs) ** 2) / np.sum(np.abs(lhs) ** 2))
    return complex(c), resid

"""The Duke-Friedlander-Iwaniec expansion of the Kronecker delta.

With ``w`` supported on ``[Q, 2Q]`` and ``sum_r w(r) = 1``,

    delta(n) = sum_{q >= 1} sum*_{a mod q} e(a n / q) Delta_q(n),
    Delta_q(u) = sum_{r >= 1} (q r)^{-1} (w(q r) - w(|u| / (q r))),

holds exactly for every integer n; only ``q <= 2Q`` contribute when
``|n| <= 2 Q^2``.  The analytic weight ``g(q, x)`` is the Fourier transform
of ``Delta_q`` at frequency ``x / (q Q)`` and is recovered numerically.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericError, TruncationError
from .oscillatory import NODES, WG, WK
from .windows import bump, gauss_legendre, plateau_window, window_W


@dataclass(frozen=True)
class BumpW:
    """``w(r) = c psi(r / Q)`` supported on ``[Q, (1 + span) Q]`` inside ``[Q, 2Q]``.

    ``psi`` is the exp(-1/(1 - t^2)) template mapped onto the support and
    ``c`` normalises the discrete sum to 1.  ``span = 1`` fills ``[Q, 2Q]``;
    the default 1/2 makes ``g(q, x) = 1`` exactly (up to O(q/Q)) for
    ``|x| < 2/3`` rather than ``|x| < 1/2``.
    """

    Q: int
    c: float
    span: float = 0.5

    @classmethod
    def make(cls, Q, span=0.5):
        if Q < 2:
            raise ValueError("Q >= 2 required")
        if not 0.0 < span <= 1.0:
            raise ValueError("span must lie in (0, 1]")
        r = np.arange(Q, 2 * Q + 1, dtype=float)
        mass = math.fsum(cls._profile(r, Q, span))
        if mass == 0.0:
            raise ValueError(f"no integer inside the support for Q = {Q}, span = {span}")
        return cls(Q, 1.0 / mass, span)

    @staticmethod
    def _profile(r, Q, span):
        return bump((2.0 * r / Q - 2.0 - span) / span)

    @property
    def support(self):
        return (float(self.Q), (1.0 + self.span) * self.Q)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * self._profile(r, self.Q, self.span)

    def total(self):
        r = np.arange(1, 2 * self.Q + 2, dtype=float)
        return math.fsum(self(r))


@dataclass(frozen=True)
class DeltaExpansion:
    Q: int
    bump: BumpW

    @classmethod
    def make(cls, Q, span=0.5):
        return cls(Q, BumpW.make(Q, span))

    def r_cap(self, q):
        return -(-4 * self.Q**2 // q) + 2 * self.Q

    def q_max(self):
        return 2 * self.Q

    @property
    def safe_range(self):
        return 2 * self.Q**2


@dataclass(frozen=True)
class SmoothWindowB0:
    """Equal to 1 on ``[-Q^eps, Q^eps]`` and supported in ``[-2Q^eps, 2Q^eps]``."""

    epsilon_exponent: float
    Q: int

    @property
    def inner(self):
        return self.Q**self.epsilon_exponent

    def window(self):
        s = self.inner
        return plateau_window(-2 * s, 2 * s, -s, s, "B0")

    def __call__(self, x, k=0):
        return self.window()(x, k)


@lru_cache(maxsize=None)
def _mobius_upto(n):
    mu = np.ones(n + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if not is_comp[p]:
            is_comp[2 * p::p] = True
            mu[p::p] *= -1
            mu[p * p::p * p] = 0
    return mu


def ramanujan_sum(q, n):
    """``c_q(n) = sum*_{a mod q} e(a n / q) = sum_{d | (q, n)} mu(q/d) d``."""
    g = math.gcd(q, abs(int(n)))
    if g == 0:
        g = q
    mu = _mobius_upto(q)
    return int(sum(int(mu[q // d]) * d for d in range(1, g + 1) if g % d == 0))


def ramanujan_sum_literal(q, n):
    """The defining sum over reduced residues (complex)."""
    a = np.array([a for a in range(1, q + 1) if math.gcd(a, q) == 1], dtype=float)
    return complex(np.sum(np.exp(2j * np.pi * a * n / q)))


def _first_term(exp: DeltaExpansion, q):
    r = np.arange(1, exp.Q * 2 // q + 2, dtype=float)
    return math.fsum(exp.bump(q * r) / (q * r))


def delta_q(exp: DeltaExpansion, q, u):
    """``Delta_q(u)`` for scalar or array ``u``, r-sum truncated at ``r_cap``.

    Raises :class:`TruncationError` when ``r_cap`` cannot cover ``|u|``.
    """
    scalar = np.ndim(u) == 0
    u = np.abs(np.atleast_1d(np.asarray(u, dtype=float)))
    Q = exp.Q
    cap = exp.r_cap(q)
    if u.size and np.max(u) / (Q * q) > cap:
        raise TruncationError(f"r_cap = {cap} too small for |u| = {np.max(u)}")
    head = _first_term(exp, q)
    out = np.full(u.shape, head)
    # w(|u|/(qr)) is nonzero only for |u|/(2Qq) < r < |u|/(Qq)
    lo = np.maximum(1, np.floor(u / (2 * Q * q)).astype(np.int64))
    hi = np.minimum(cap, np.ceil(u / (Q * q)).astype(np.int64))
    span = int(np.max(hi - lo, initial=-1)) + 1
    if span > 0:
        chunk = max(1, 4_000_000 // span)
        for s in range(0, u.size, chunk):
            uu = u[s:s + chunk, None]
            r = lo[s:s + chunk, None] + np.arange(span)[None, :]
            valid = r <= hi[s:s + chunk, None]
            rr = np.where(valid, r, 1).astype(float)
            terms = np.where(valid, exp.bump(uu / (q * rr)) / (q * rr), 0.0)
            out[s:s + chunk] -= terms.sum(axis=1)
    return float(out[0]) if scalar else out


def evaluate_delta(exp: DeltaExpansion, n, method="ramanujan"):
    """Right-hand side of the expansion at the integer ``n``.

    ``method='ramanujan'`` uses ``c_q(n)``; ``'literal'`` sums
    ``e(a n / q)`` over reduced residues and checks the imaginary part.
    """
    n = int(n)
    terms = []
    imag = []
    for q in range(1, exp.q_max() + 1):
        dq = delta_q(exp, q, float(n))
        if method == "ramanujan":
            terms.append(ramanujan_sum(q, n) * dq)
        elif method == "literal":
            c = ramanujan_sum_literal(q, n)
            terms.append(c.real * dq)
            imag.append(c.imag * dq)
        else:
            raise ValueError(f"unknown method {method!r}")
    if imag and abs(math.fsum(imag)) > 1e-10:
        raise NumericError(f"imaginary part {math.fsum(imag):.2e} does not vanish")
    return math.fsum(terms)


def _divisors(q):
    small = [d for d in range(1, math.isqrt(q) + 1) if q % d == 0]
    return sorted(set(small + [q // d for d in small]))


def ramanujan_sums(q, n):
    """:func:`ramanujan_sum` over an integer array ``n``."""
    n = np.asarray(n, dtype=np.int64)
    mu = _mobius_upto(q)
    out = np.zeros(n.shape, dtype=np.int64)
    for d in _divisors(q):
        if mu[q // d]:
            out += np.where(n % d == 0, int(mu[q // d]) * d, 0)
    return out


def delta_identity_check(Q, n_range=None, span=0.5):
    """Deviation of the expansion from the Kronecker delta over
    ``|n| <= n_range`` (default ``2Q``), vectorised over n."""
    exp = DeltaExpansion.make(Q, span)
    n_range = 2 * Q if n_range is None else n_range
    if n_range > exp.safe_range:
        raise ValueError(f"n_range {n_range} exceeds the safe range {exp.safe_range}")
    n = np.arange(-n_range, n_range + 1)
    total = np.zeros(n.shape)
    for q in range(1, exp.q_max() + 1):
        total += ramanujan_sums(q, n) * delta_q(exp, q, n.astype(float))
    error = np.abs(total - (n == 0))
    per_n = [{"n": int(k), "value": float(v), "error": float(e)}
             for k, v, e in zip(n, total, error)]
    return {"Q": Q, "max_abs_error": float(error.max()), "per_n": per_n}


def _u_cutoff(Q):
    # 1 on |u| <= 2Q^2 (the safe range), vanishing beyond 4Q^2
    return plateau_window(-4.0 * Q * Q, 4.0 * Q * Q, -2.0 * Q * Q, 2.0 * Q * Q, "u-cutoff")


def tail_constant(exp: DeltaExpansion, q):
    """``lim_{|u| -> oo} Delta_q(u) = c_q - q^{-1} int w(t) / t dt``."""
    nodes, weights = gauss_legendre(400)
    a, b = exp.bump.support
    h = (b - a) / 2.0
    t = a + h * (nodes + 1.0)
    return _first_term(exp, q) - h * float(np.sum(weights * exp.bump(t) / t)) / q


def g_weight(exp: DeltaExpansion, q, x_grid, tol=1e-6, max_refine=4):
    """``g(q, x) = int phi(u) (Delta_q(u) - eps_q) e(-u x / (q Q)) du`` on ``x_grid``.

    Delta_q tends to the constant ``eps_q`` (:func:`tail_constant`) rather
    than to 0, so its transform carries a point mass ``eps_q q Q`` at
    ``x = 0``; what is returned is the regular part.  ``phi`` is a smooth
    cutoff equal to 1 on the safe range ``|u| <= 2Q^2`` and vanishing
    beyond ``4Q^2``, so for ``|n| <= 2Q^2``

        Delta_q(n) = eps_q + (qQ)^{-1} int g(q, x) e(n x / (qQ)) dx.

    Delta_q is real and even, hence g is real and even; the integral is
    taken over ``u >= 0`` against a cosine.  Composite Gauss-Kronrod
    panels are halved until the embedded error estimate is below ``tol``.
    """
    Q = exp.Q
    x = np.asarray(x_grid, dtype=float)
    xmax = max(float(np.max(np.abs(x), initial=0.0)), 1.0)
    cutoff = _u_cutoff(Q)
    eps = tail_constant(exp, q)
    U = 4.0 * Q * Q
    scale = q * Q
    # Delta_q is flat on [0, qQ) and varies on scale ~ qQ beyond;
    # e(ux/(qQ)) has period qQ/x
    width = min(0.05 * scale, scale / (2.0 * xmax))
    err = np.inf
    for _ in range(max_refine):
        count = int(math.ceil(U / width))
        edges = np.linspace(0.0, U, count + 1)
        mid = (edges[:-1] + edges[1:]) / 2.0
        half = (edges[1:] - edges[:-1]) / 2.0
        nodes = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
        vals = (delta_q(exp, q, nodes) - eps) * cutoff(nodes)
        wk = (half[:, None] * WK[None, :]).ravel() * vals
        wg = (half[:, None] * WG[None, :]).ravel() * vals
        k15 = np.zeros(x.shape)
        g7 = np.zeros(x.shape)
        step = max(1, 2_000_000 // max(1, x.size))
        for s in range(0, nodes.size, step):
            ker = np.cos(2.0 * np.pi * np.multiply.outer(x, nodes[s:s + step]) / scale)
            k15 += ker @ wk[s:s + step]
            g7 += ker @ wg[s:s + step]
        k15 *= 2.0
        g7 *= 2.0
        err = float(np.max(np.abs(k15 - g7), initial=0.0))
        if err <= tol:
            return k15.astype(complex)
        width /= 2.0
    raise NumericError(f"g_weight not converged: error {err:.2e} > {tol:.1e}",
                       estimate=k15.astype(complex), error=err)


def reconstruct_delta_q(exp: DeltaExpansion, q, u, x_max=20.0, points=4001):
    """Invert :func:`g_weight`: ``eps_q + (qQ)^{-1} int g e(u x/(qQ)) dx``."""
    x = np.linspace(0.0, x_max, points)
    wts = np.full(points, x[1] - x[0])
    wts[[0, -1]] *= 0.5
    g = g_weight(exp, q, x).real
    u = np.atleast_1d(np.asarray(u, dtype=float))
    ker = np.cos(2.0 * np.pi * np.multiply.outer(u, x) / (q * exp.Q))
    return tail_constant(exp, q) + 2.0 * (ker @ (g * wts)) / (q * exp.Q)


def g_mass(exp: DeltaExpansion, q, x_max=20.0, points=801):
    """``int (|g| + |g|^2) dx`` over ``[-x_max, x_max]`` (trapezoid rule)."""
    x = np.linspace(0.0, x_max, points)
    g = np.abs(g_weight(exp, q, x))
    f = g + g**2
    return 2.0 * float(np.trapezoid(f, x))


def zero_frequency_check(H, N, q, x=0.0, window=None, h_window=50, Q=None):
    """Relative size of the nonzero Poisson frequencies in the h-sum.

    Terms are ``hat W(x H / (q Q) + H h / q)`` for ``|h| <= h_window``
    with ``Q = 2 ceil(sqrt N)``; returns the h = 0 term, the largest
    ``h != 0`` term and their ratio.
    """
    W = window_W() if window is None else window
    Q = 2 * math.isqrt(N - 1) + 2 if Q is None else Q
    h = np.arange(-h_window, h_window + 1)
    xi = x * H / (q * Q) + H * h / q
    terms = np.abs(W.fourier(xi))
    zero = float(terms[h_window])
    others = np.delete(terms, h_window)
    worst = float(np.max(others))
    return {"H": H, "N": N, "q": q, "Q": Q, "x": x, "h0_mass": zero,
            "max_nonzero": worst,
            "argmax_h": int(np.delete(h, h_window)[np.argmax(others)]),
            "ratio": worst / zero if zero > 0 else math.inf}


def delta_with_b0(exp: DeltaExpansion, n, epsilon=0.2, x_points=2001):
    """The expansion with the weight ``B0(x) g(q, x)`` inserted.

    ``sum_q c_q(n) [eps_q + (qQ)^{-1} int B0(x) g(q,x) e(n x/(qQ)) dx]``;
    its deviation from ``delta(n)`` is what the cutoff costs.
    """
    Q = exp.Q
    b0 = SmoothWindowB0(epsilon, Q)
    x = np.linspace(0.0, 2.0 * b0.inner, x_points)
    wts = np.full(x_points, x[1] - x[0])
    wts[[0, -1]] *= 0.5
    total = []
    for q in range(1, exp.q_max() + 1):
        c = ramanujan_sum(q, n)
        if c == 0:
            continue
        g = g_weight(exp, q, x).real
        integrand = b0(x) * g * np.cos(2 * np.pi * n * x / (q * Q))
        total.append(c * (tail_constant(exp, q) + 2.0 * float(integrand @ wts) / (q * Q)))
    return math.fsum(total)

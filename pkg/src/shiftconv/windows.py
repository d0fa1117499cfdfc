"""Smooth compactly supported windows and their Fourier transforms.

Every window is built from the template ``psi(t) = exp(-1/(1 - t^2))`` on
``(-1, 1)``.  Derivatives up to order 4 are available in closed form.
"""

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np
from scipy.optimize import brentq

MAX_ORDER = 4

_GL_CACHE = {}


def gauss_legendre(n):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _g_derivative(t, k):
    # k-th derivative of g(t) = -1/(1 - t^2) = -(1/(1-t) + 1/(1+t))/2
    c = factorial(k) / 2.0
    return -c * ((1.0 - t) ** (-(k + 1)) + (-1) ** k * (1.0 + t) ** (-(k + 1)))


def bump(t, k=0):
    """k-th derivative of ``exp(-1/(1-t^2))``, zero outside (-1, 1)."""
    if k > MAX_ORDER:
        raise ValueError(f"derivative order {k} > {MAX_ORDER}")
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        psi = np.exp(-1.0 / (1.0 - ti * ti))
        if k == 0:
            val = psi
        else:
            g1 = _g_derivative(ti, 1)
            if k == 1:
                poly = g1
            elif k == 2:
                poly = _g_derivative(ti, 2) + g1**2
            elif k == 3:
                g2 = _g_derivative(ti, 2)
                poly = _g_derivative(ti, 3) + 3 * g1 * g2 + g1**3
            else:
                g2 = _g_derivative(ti, 2)
                g3 = _g_derivative(ti, 3)
                poly = (_g_derivative(ti, 4) + 4 * g1 * g3 + 3 * g2**2
                        + 6 * g1**2 * g2 + g1**4)
            val = np.where(psi > 0.0, poly * psi, 0.0)
    out[inside] = np.nan_to_num(val, nan=0.0, posinf=0.0, neginf=0.0)
    return out


def _bump_integral(t, nodes=96):
    """Integral of the template from -1 to t (vectorised in t)."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    x, w = gauss_legendre(nodes)
    half = (t[..., None] + 1.0) / 2.0
    pts = -1.0 + half * (x + 1.0)
    return np.sum(w * bump(pts), axis=-1) * half[..., 0]


BUMP_MASS = float(_bump_integral(np.array([1.0]), nodes=400)[0])


def smooth_step(t, k=0):
    """0 for t <= -1, 1 for t >= 1, C-infinity in between; k-th derivative."""
    t = np.asarray(t, dtype=float)
    if k == 0:
        # integrate from the nearer end so values next to 1 are exact
        lower = _bump_integral(-np.abs(t)) / BUMP_MASS
        return np.where(t > 0.0, 1.0 - lower, lower)
    return bump(t, k - 1) / BUMP_MASS


@dataclass(frozen=True)
class SmoothWindow:
    """A smooth amplitude supported on ``[a, b]``.

    ``fn(x, k)`` evaluates the k-th derivative (k <= 4) on an array.
    """

    a: float
    b: float
    fn: Callable[[np.ndarray, int], np.ndarray] = field(repr=False)
    family: str = "custom"

    def __call__(self, x, k=0):
        x = np.asarray(x, dtype=float)
        return self.fn(x, k)

    @property
    def width(self):
        return self.b - self.a

    def sup(self, samples=4001):
        x = np.linspace(self.a, self.b, samples)
        return float(np.max(np.abs(self(x))))

    def integral(self, nodes=200):
        x, w = gauss_legendre(nodes)
        h = self.width / 2.0
        return float(h * np.sum(w * self(self.a + h * (x + 1.0))))

    def variation(self, samples=4001):
        """Total variation, the integral of |w'| over the support.

        Summed as ``sum |w(t_{j+1}) - w(t_j)|`` between the zeros of w',
        which avoids integrating the kinks of |w'|.
        """
        x = np.linspace(self.a, self.b, samples)
        d = self(x, 1)
        marks = [self.a] + list(x[1:-1][d[1:-1] == 0.0])
        for i in np.nonzero(d[:-1] * d[1:] < 0)[0]:
            marks.append(brentq(lambda t: float(self(np.array([t]), 1)[0]), x[i], x[i + 1],
                                xtol=1e-15))
        marks = sorted(marks) + [self.b]
        vals = self(np.array(marks))
        return float(np.sum(np.abs(np.diff(vals))))

    def times_power(self, p):
        """The window ``x -> w(x) * x**p`` (requires a > 0)."""
        if self.a <= 0:
            raise ValueError("power weight needs a positive support")
        base = self.fn

        def fn(x, k):
            out = np.zeros_like(x)
            for j in range(k + 1):
                coef = 1.0
                for i in range(j):
                    coef *= p - i
                with np.errstate(divide="ignore", invalid="ignore"):
                    xp = np.where(x > 0, np.abs(x) ** (p - j), 0.0)
                out = out + _binom(k, j) * base(x, k - j) * coef * xp
            return out

        return SmoothWindow(self.a, self.b, fn, self.family)

    def fourier(self, xi, nodes=None):
        """``hat w(xi) = int w(x) e(-x xi) dx`` by composite Gauss-Legendre.

        ``nodes`` fixes a single-panel rule; by default panels of 48 nodes
        are added until each covers at most 4 periods of the kernel.
        """
        xi = np.asarray(xi, dtype=float)
        if nodes is not None:
            x, w = gauss_legendre(nodes)
            h = self.width / 2.0
            pts = self.a + h * (x + 1.0)
            wts = w * h
        else:
            panels = max(2, int(np.ceil(self.width * float(np.max(np.abs(xi), initial=0.0)) / 4.0)))
            x, w = gauss_legendre(48)
            edges = np.linspace(self.a, self.b, panels + 1)
            h = (edges[1:] - edges[:-1]) / 2.0
            pts = (edges[:-1, None] + h[:, None] * (x[None, :] + 1.0)).ravel()
            wts = (h[:, None] * w[None, :]).ravel()
        vals = self(pts) * wts
        phase = np.exp(-2j * np.pi * np.multiply.outer(xi, pts))
        return phase @ vals


def _binom(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


def bump_window(a, b, family="custom", peak=1.0):
    """Template bump mapped onto ``[a, b]`` with maximum ``peak``."""
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    scale = peak * np.e

    def fn(x, k):
        return scale * bump((x - mid) / half, k) / half**k

    return SmoothWindow(float(a), float(b), fn, family)


def plateau_window(a, b, inner_a, inner_b, family="custom"):
    """Equal to 1 on ``[inner_a, inner_b]``, supported on ``[a, b]``."""
    if not a < inner_a <= inner_b < b:
        raise ValueError("need a < inner_a <= inner_b < b")
    ra, rb = (inner_a - a) / 2.0, (b - inner_b) / 2.0
    ca, cb = a + ra, inner_b + rb

    def fn(x, k):
        if k == 0:
            return smooth_step((x - ca) / ra) * smooth_step((cb - x) / rb)
        # Leibniz rule on the product of the two steps
        out = np.zeros_like(x)
        for j in range(k + 1):
            fu = smooth_step((x - ca) / ra, j) / ra**j
            fd = smooth_step((cb - x) / rb, k - j) * (-1.0 / rb) ** (k - j)
            out = out + _binom(k, j) * fu * fd
        return out

    return SmoothWindow(float(a), float(b), fn, family)


def window_V():
    """Dyadic window V on [1, 2] with V(3/2) = 1."""
    return bump_window(1.0, 2.0, "V")


def window_W():
    """Shift window W on [1, 2]; same profile as V."""
    return bump_window(1.0, 2.0, "W")


def window_U():
    """Plateau U: 1 on [1, 2], supported on [1/2, 5/2]."""
    return plateau_window(0.5, 2.5, 1.0, 2.0, "U")

"""Shifted convolution sums ``B(H, N)`` and their exponent scans."""

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientTable
from .errors import DomainError
from .fitting import ExponentFit, fit_loglog
from .windows import SmoothWindow, window_V, window_W


@dataclass(frozen=True)
class ShiftedSumSpec:
    """``B(H, N) = H^{-1} sum_{h ~ H} sum_{n ~ N} t1[n] t2[n + h]``, ``n ~ N`` meaning ``N < n <= 2N``.

    ``smoothing='smooth'`` weights the terms by ``W(h/H) V(n/N)``.
    """

    t1: CoefficientTable
    t2: CoefficientTable
    N: int
    H: int
    smoothing: str = "sharp"
    W: SmoothWindow = field(default=None, repr=False, compare=False)
    V: SmoothWindow = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 4 or self.H < 1:
            raise DomainError("need N >= 4 and H >= 1")
        if self.smoothing not in ("sharp", "smooth"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.t1.length < 2 * self.N:
            raise DomainError(f"t1 has length {self.t1.length} < 2N = {2 * self.N}")
        if self.t2.length < 2 * self.N + 2 * self.H:
            raise DomainError(f"t2 has length {self.t2.length} < 2N + 2H = {2 * self.N + 2 * self.H}")
        if self.W is None:
            object.__setattr__(self, "W", window_W())
        if self.V is None:
            object.__setattr__(self, "V", window_V())

    def weights(self):
        """``(h, w_h, n, v_n)`` over ``H < h <= 2H`` and ``N < n <= 2N``."""
        h = np.arange(self.H + 1, 2 * self.H + 1)
        n = np.arange(self.N + 1, 2 * self.N + 1)
        if self.smoothing == "sharp":
            return h, np.ones(h.size), n, np.ones(n.size)
        return h, self.W(h / self.H), n, self.V(n / self.N)


def correlations(spec: ShiftedSumSpec, method="fft"):
    """``C[h] = sum_n v_n t1[n] t2[n + h]`` for every ``h`` in the shift range."""
    h, _, n, v = spec.weights()
    a = spec.t1.values[n] * v
    if method == "naive":
        b = spec.t2.values
        return h, np.array([math.fsum(a * b[n + k]) for k in h])
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    top = 2 * spec.N + 2 * spec.H
    L = 1 << int(top + 1).bit_length()
    left = np.zeros(L)
    left[n] = a
    right = np.zeros(L)
    right[: top + 1] = spec.t2.values[: top + 1]
    corr = np.fft.irfft(np.conj(np.fft.rfft(left)) * np.fft.rfft(right), L)
    return h, corr[h]


def compute_B(spec: ShiftedSumSpec, method="fft"):
    """The h-average of :func:`correlations`, compensated summation."""
    h, w, _, _ = spec.weights()
    _, C = correlations(spec, method)
    return math.fsum(w * C) / spec.H


def correlation_length(d1, d2, N, H):
    """``K0 = (H/N) N^{d2-1} / H^{d2}``, the range of ``m1 - m2`` that survives."""
    if d1 == d2:
        raise DomainError("d1 = d2: no correlation length")
    if not d1 > d2 >= 2:
        raise DomainError("need d1 > d2 >= 2")
    return (H / N) * N ** (d2 - 1) / H**d2


def correlation_length_dual(d1, d2, N, H):
    """The same length written as ``Ndual^{-1/(d1-d2)} Mdual^{1 + 1/(d1-d2)}``."""
    if d1 <= d2:
        raise DomainError("need d1 > d2")
    D = d1 - d2
    n_dual = N ** (d1 - 1) / H**d1
    m_dual = N ** (d2 - 1) / H**d2
    return n_dual ** (-1.0 / D) * m_dual ** (1.0 + 1.0 / D)


def theorem_bounds(d1, d2, theta):
    """Predicted exponents of ``|B(N^theta, N)|`` as powers of N.

    ``thm1`` applies when ``d1 == d2`` and ``thm2`` when ``d1 > d2``; the
    other is ``None``.
    """
    if not d1 >= d2 >= 2:
        raise DomainError("need d1 >= d2 >= 2")
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    s = d1 + d2
    return {
        "thm1": (d1 - 1) - d1 * theta if d1 == d2 else None,
        "thm2": (s - 2) / 2 - theta * s / 2 if d1 > d2 else None,
        "fi": 1 + (d2 - 1) / (d2 + 1) - theta,
        "trivial": 1.0,
        "thresholds": {
            "thm1": 1 - 2 / d1,
            "thm2": 1 - 4 / s,
            "fi": (d2 - 1) / (d2 + 1),
        },
    }


def scan_rows(t1, t2, theta, N_grid, method="fft"):
    """Sharp and smooth ``B`` at ``H = floor(N^theta)`` for each N, ascending."""
    rows = []
    for N in sorted(int(v) for v in N_grid):
        H = int(math.floor(N**theta + 1e-9))
        sharp = compute_B(ShiftedSumSpec(t1, t2, N, H, "sharp"), method)
        smooth = compute_B(ShiftedSumSpec(t1, t2, N, H, "smooth"), method)
        rows.append({"N": N, "H": H, "B_sharp": sharp, "B_smooth": smooth})
    prev = None
    for r in rows:
        if prev is None or r["B_smooth"] == 0 or prev["B_smooth"] == 0:
            r["log_slope_partial"] = math.nan
        else:
            r["log_slope_partial"] = (math.log(abs(r["B_smooth"])) - math.log(abs(prev["B_smooth"]))) \
                / (math.log(r["N"]) - math.log(prev["N"]))
        prev = r
    return rows


def fit_rows(rows, theta, d1, d2, column="B_smooth"):
    """Fit ``log|B|`` against ``log N`` and attach the predicted exponents."""
    N = np.array([r["N"] for r in rows], dtype=float)
    B = np.array([r[column] for r in rows], dtype=float)
    fit = fit_loglog(N, B, theta=theta, min_points=4)
    bounds = theorem_bounds(d1, d2, theta)
    fit.extra.update({"column": column, "bounds": bounds, "trivial_slope": 1.0})
    if fit.excluded:
        fit.extra["flagged_zero"] = fit.excluded
    return fit


def exponent_scan(t1: CoefficientTable, t2: CoefficientTable, theta, N_grid,
                  method="fft") -> ExponentFit:
    """Measured slope of ``log|B_smooth|`` over ``N_grid`` with ``H = floor(N^theta)``."""
    if len(N_grid) < 4:
        raise DomainError("need at least 4 grid points")
    if list(N_grid) != sorted(N_grid):
        raise DomainError("N_grid must be ascending")
    d1, d2 = max(t1.degree, t2.degree), min(t1.degree, t2.degree)
    rows = scan_rows(t1, t2, theta, N_grid, method)
    fit = fit_rows(rows, theta, max(d1, 2), max(d2, 2))
    fit.extra["rows"] = rows
    return fit

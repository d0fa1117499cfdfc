"""Multiplicative coefficient tables standing in for GL(d) Hecke eigenvalues.

Four kinds are available:

* ``divisor``: the d-fold divisor function tau_d (Dirichlet coefficients of zeta^d),
* ``gl2_cusp``: normalised Ramanujan tau, ``tau(n) / n^(11/2)``,
* ``sym_power``: symmetric powers of a ``gl2_cusp`` table (degree k + 1),
* ``random_model``: independent random signs.

Tables store ``values[0] = 0`` so that ``values[n]`` is the n-th coefficient.
All tables are real, hence self-dual: the dual coefficients equal the
originals.
"""

import os
import struct
from dataclasses import dataclass
from math import comb, isqrt

import numpy as np

from .errors import DataIntegrityError, DomainError, ResourceError
from .fitting import ExponentFit, fit_loglog

KINDS = ("divisor", "gl2_cusp", "sym_power", "random_model")
KIND_CODE = {k: i for i, k in enumerate(KINDS)}

MAX_DIVISOR_N = 10**8
MAX_TAU_N = 10**7


@dataclass(frozen=True)
class CoefficientTable:
    label: str
    degree: int
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in KIND_CODE:
            raise DomainError(f"unknown kind {self.kind!r}")
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def length(self):
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]

    def dual(self):
        """Coefficients of the contragredient form (identity for real tables)."""
        return self

    def scaled(self, a, label=None):
        return CoefficientTable(label or f"{a}*{self.label}", self.degree,
                                self.kind, self.values * a)


@dataclass(frozen=True)
class SatakeAngles:
    primes: np.ndarray
    theta: np.ndarray


def primes_upto(n):
    """Primes <= n (sieve of Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, isqrt(n) + 1, 2):
        if sieve[p]:
            sieve[p * p::2 * p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def build_multiplicative(N, at_primes, at_prime_powers):
    """Values of the multiplicative function with the given prime data.

    ``at_primes(p_array)`` gives f(p) for primes above sqrt(N);
    ``at_prime_powers(p, kmax)`` gives ``[f(1), f(p), ..., f(p^kmax)]``.
    """
    vals = np.ones(N + 1, dtype=np.float64)
    vals[0] = 0.0
    if N < 2:
        return vals
    rest = np.arange(N + 1, dtype=np.int64)
    primes = primes_upto(N)
    root = isqrt(N)
    for p in primes[primes <= root]:
        p = int(p)
        idx = np.arange(p, N + 1, p)
        expo = np.ones(len(idx), dtype=np.int64)
        kmax, q = 1, p
        while q * p <= N:
            expo[q - 1::q] += 1
            q *= p
            kmax += 1
        fp = np.asarray(at_prime_powers(p, kmax), dtype=np.float64)
        vals[idx] *= fp[expo]
        rest[idx] //= np.power(p, expo)
    large = primes[primes > root]
    lookup = np.zeros(N + 1, dtype=np.float64)
    lookup[1] = 1.0
    lookup[large] = at_primes(large)
    vals *= lookup[rest]
    return vals


# ---------------------------------------------------------------- divisor

def gen_divisor(d, N):
    """Table of tau_d(n), the number of ordered d-tuples with product n."""
    if not 1 <= d <= 16:
        raise DomainError("divisor degree must lie in 1..16")
    if N > MAX_DIVISOR_N:
        raise ResourceError(f"N = {N} exceeds {MAX_DIVISOR_N}")
    vals = build_multiplicative(
        N,
        lambda p: np.full(len(p), float(d)),
        lambda p, kmax: [comb(k + d - 1, d - 1) for k in range(kmax + 1)],
    )
    if N and vals.max() >= 2.0**53:
        raise ResourceError("divisor values exceed exact double range")
    return CoefficientTable(f"tau{d}", d, "divisor", vals)


# ---------------------------------------------------------------- Ramanujan tau

def _eta_cubed(L):
    # prod (1 - q^n)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}
    c = np.zeros(L, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < L:
        c[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return c


def _kronecker_pack(c, words):
    import gmpy2

    pos = np.zeros((len(c), words), dtype=np.uint64)
    neg = np.zeros((len(c), words), dtype=np.uint64)
    pos[:, 0] = np.where(c > 0, c, 0).astype(np.uint64)
    neg[:, 0] = np.where(c < 0, -c, 0).astype(np.uint64)
    return (gmpy2.mpz(int.from_bytes(pos.tobytes(), "little"))
            - gmpy2.mpz(int.from_bytes(neg.tobytes(), "little")))


def _delta_digits(N):
    """Coefficients of ``prod (1 - q^n)^24`` up to ``q^(N-1)`` as signed
    multi-word integers: returns (negative mask, magnitude words)."""
    import gmpy2

    # |tau(n)| <= d(n) n^(11/2); budget N^7 covers it with room to spare
    bits = int(7 * np.log2(max(N, 2))) + 8
    words = max(2, -(-bits // 64))
    width = 64 * words
    x = _kronecker_pack(_eta_cubed(N), words)
    offset_words = np.zeros((N, words), dtype=np.uint64)
    offset_words[:, -1] = np.uint64(1 << 63)
    offset = gmpy2.mpz(int.from_bytes(offset_words.tobytes(), "little"))
    mask = (gmpy2.mpz(1) << (width * N)) - 1
    y = None
    # (eta^3)^8 by three squarings; truncation keeps only q^0 .. q^(N-1).
    # Adding the offset makes every slot a nonnegative digit, so the
    # low N slots of (x^2 + offset) mod 2^(width N) are exact.
    for _ in range(3):
        y = (x * x + offset) & mask
        x = y - offset
    raw = np.frombuffer(int(y).to_bytes(width * N // 8, "little"),
                        dtype=np.uint64).reshape(N, words).copy()
    raw[:, -1] ^= np.uint64(1 << 63)
    negative = (raw[:, -1] >> np.uint64(63)).astype(bool)
    mag = raw.copy()
    # two's complement negation of negative slots
    neg_rows = mag[negative]
    neg_rows = ~neg_rows
    carry = np.ones(len(neg_rows), dtype=bool)
    for j in range(words):
        col = neg_rows[:, j] + carry.astype(np.uint64)
        carry = carry & (col == 0)
        neg_rows[:, j] = col
    mag[negative] = neg_rows
    return negative, mag


def ramanujan_tau_exact(N):
    """Exact integers tau(1), ..., tau(N) (list, index 0 holds tau(1))."""
    negative, mag = _delta_digits(N)
    out = []
    for neg, row in zip(negative, mag):
        v = int.from_bytes(row.tobytes(), "little")
        out.append(-v if neg else v)
    return out


def gen_ramanujan(N):
    """Normalised Ramanujan tau: ``values[n] = tau(n) / n^(11/2)``.

    tau is computed exactly from ``q prod (1 - q^n)^24`` with big-integer
    (Kronecker substitution) series multiplication; normalisation to double
    precision happens last.
    """
    if N > MAX_TAU_N:
        raise ResourceError(f"N = {N} exceeds {MAX_TAU_N}")
    vals = np.zeros(N + 1)
    if N >= 1:
        negative, mag = _delta_digits(N)
        f = np.zeros(N)
        for j in range(mag.shape[1] - 1, -1, -1):
            f = f * 2.0**64 + mag[:, j].astype(np.float64)
        f[negative] *= -1.0
        n = np.arange(1, N + 1, dtype=np.float64)
        vals[1:] = f / n**5.5
    return CoefficientTable("delta", 2, "gl2_cusp", vals)


# ---------------------------------------------------------------- symmetric powers

def chebyshev_u(k, theta):
    """``U_k(cos theta) = sin((k+1) theta) / sin(theta)``.

    Near theta = 0 or pi the ratio cancels badly; there the equivalent finite
    sum ``sum_m cos((k - 2m) theta)`` is used.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    small = np.abs(s) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin((k + 1) * theta) / s
    if np.any(small):
        ts = theta[small] if theta.ndim else theta
        direct = sum(np.cos((k - 2 * m) * ts) for m in range(k + 1))
        if theta.ndim:
            out[small] = direct
        else:
            out = direct
    return out


def satake_angles(base: CoefficientTable, N=None):
    N = base.length if N is None else N
    if N > base.length:
        raise DomainError("base table too short")
    p = primes_upto(N)
    lam = base.values[p]
    if np.any(np.abs(lam) > 2.0 * (1 + 1e-9)):
        bad = p[np.abs(lam) > 2.0 * (1 + 1e-9)][0]
        raise DataIntegrityError(f"|lambda({bad})| > 2: Satake angle undefined")
    return SatakeAngles(p, np.arccos(np.clip(lam / 2.0, -1.0, 1.0)))


def sym_power_prime_powers(k, theta, jmax):
    """``[A(p^0), ..., A(p^jmax)]`` for sym^k with Satake angle theta:
    complete homogeneous polynomials h_j of ``{e^{i(k-2m)theta}}``, from
    ``j h_j = sum_i P_i h_{j-i}`` with power sums ``P_i = U_k(cos(i theta))``."""
    power = [0.0] + [float(chebyshev_u(k, np.array(i * theta))) for i in range(1, jmax + 1)]
    h = [1.0]
    for j in range(1, jmax + 1):
        h.append(sum(power[i] * h[j - i] for i in range(1, j + 1)) / j)
    return h


def gen_sym_power(base: CoefficientTable, k, N=None):
    """Symmetric k-th power of a GL(2) table (degree k + 1)."""
    if base.kind != "gl2_cusp":
        raise DomainError("base must be a gl2_cusp table")
    if not 1 <= k <= 7:
        raise DomainError("need 1 <= k and k + 1 <= 8")
    N = base.length if N is None else N
    ang = satake_angles(base, N)
    theta = np.zeros(N + 1)
    theta[ang.primes] = ang.theta

    def at_primes(p):
        return chebyshev_u(k, theta[p])

    vals = build_multiplicative(
        N, at_primes, lambda p, jmax: sym_power_prime_powers(k, theta[p], jmax))
    at_p = vals[ang.primes]
    if np.any(np.abs(at_p) > (k + 1) * (1 + 1e-12)):
        raise DataIntegrityError("Deligne bound |A(p)| <= k+1 violated")
    return CoefficientTable(f"sym{k}-{base.label}", k + 1, "sym_power", vals)


# ---------------------------------------------------------------- random model

def gen_random_model(N, seed, degree=1):
    """Independent uniform signs from a counter-based (Philox) generator."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    vals = np.zeros(N + 1)
    vals[1:] = 2.0 * rng.integers(0, 2, size=N) - 1.0
    return CoefficientTable(f"random{seed}", degree, "random_model", vals)


def ones_table(N, label="ones"):
    """All-ones control table (counting measure), tagged as divisor degree 1."""
    vals = np.ones(N + 1)
    vals[0] = 0.0
    return CoefficientTable(label, 1, "divisor", vals)


# ---------------------------------------------------------------- empirical checks

def rankin_selberg_profile(t: CoefficientTable, X_grid):
    """Rows ``(X, S2(X)/X)`` with ``S2(X) = sum_{n<=X} A(n)^2``."""
    X = np.asarray(X_grid, dtype=np.int64)
    if X.size == 0:
        raise ValueError("empty grid")
    if X.max() > t.length or X.min() < 1:
        raise ValueError("grid outside the table")
    s2 = np.cumsum(t.values**2)
    return np.column_stack([X.astype(float), s2[X] / X])


def partial_sum_profile(t: CoefficientTable, X_grid, statistic="running_max"):
    """Exponent fit of the partial sums ``S(X) = sum_{n<=X} A(n)``.

    ``statistic='value'`` fits ``|S(X)|`` itself; the default
    ``'running_max'`` fits ``max_{Y<=X} |S(Y)|``, which is what an upper
    bound of the form ``S(X) << X^beta`` controls and is insensitive to
    accidental sign changes at grid points.
    """
    if t.kind == "divisor":
        raise DomainError("divisor tables have a main term; partial-sum "
                          "exponent only meaningful for cuspidal kinds")
    X = np.asarray(X_grid, dtype=np.int64)
    if X.size < 3:
        raise ValueError("need at least 3 grid points")
    if X.max() > t.length:
        raise ValueError("grid outside the table")
    s = np.cumsum(t.values)
    if statistic == "running_max":
        y = np.maximum.accumulate(np.abs(s))[X]
    elif statistic == "value":
        y = np.abs(s[X])
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    fit = fit_loglog(X, y)
    fit.extra["predicted"] = (t.degree - 1) / (t.degree + 1)
    fit.extra["statistic"] = statistic
    return fit


# ---------------------------------------------------------------- binary cache

MAGIC = b"SCSV1"
_HEADER = struct.Struct("<BBQ")
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def _fnv1a_py(data):
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


try:
    import numba

    @numba.njit(cache=True)
    def _fnv1a_jit(data):
        h = numba.uint64(FNV_OFFSET)
        prime = numba.uint64(FNV_PRIME)
        for i in range(data.shape[0]):
            h = (h ^ numba.uint64(data[i])) * prime
        return h

    def fnv1a64(data):
        return int(_fnv1a_jit(np.frombuffer(bytes(data), dtype=np.uint8)))

except ImportError:  # pragma: no cover
    fnv1a64 = _fnv1a_py


def encode_table(t: CoefficientTable):
    """Serialise: magic, u8 kind, u8 degree, u64 N, N doubles, u64 FNV-1a.

    The checksum covers everything after the magic and before itself.
    """
    payload = _HEADER.pack(KIND_CODE[t.kind], t.degree, t.length)
    payload += t.values[1:].astype("<f8").tobytes()
    return MAGIC + payload + struct.pack("<Q", fnv1a64(payload))


def decode_table(blob, label="table"):
    if blob[:5] != MAGIC:
        raise DataIntegrityError(f"{label}: bad magic")
    if len(blob) < 5 + _HEADER.size + 8:
        raise DataIntegrityError(f"{label}: truncated header")
    kind, degree, n = _HEADER.unpack_from(blob, 5)
    payload_end = 5 + _HEADER.size + 8 * n
    if len(blob) != payload_end + 8:
        raise DataIntegrityError(f"{label}: length mismatch (truncated file?)")
    payload = blob[5:payload_end]
    (stored,) = struct.unpack_from("<Q", blob, payload_end)
    if fnv1a64(payload) != stored:
        raise DataIntegrityError(f"{label}: checksum mismatch")
    if kind >= len(KINDS):
        raise DataIntegrityError(f"{label}: unknown kind code {kind}")
    vals = np.zeros(n + 1)
    vals[1:] = np.frombuffer(payload, dtype="<f8", offset=_HEADER.size)
    return CoefficientTable(label, degree, KINDS[kind], vals)


def save_table(t: CoefficientTable, path):
    """Write atomically (temp file + rename)."""
    path = os.fspath(path)
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(encode_table(t))
    os.replace(tmp, path)


def load_table(path):
    path = os.fspath(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    label = os.path.splitext(os.path.basename(path))[0]
    return decode_table(blob, label)

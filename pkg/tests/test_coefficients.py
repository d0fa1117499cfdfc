import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftconv import coefficients as co
from shiftconv.errors import DataIntegrityError, DomainError, ResourceError


def tau_series_naive(L):
    """Coefficients of q prod (1 - q^n)^24 up to q^L by plain integer convolution."""
    poly = [1] + [0] * L
    for n in range(1, L + 1):
        for _ in range(24):
            for i in range(L, n - 1, -1):
                poly[i] -= poly[i - n]
    return [0] + poly[:L]


def ordered_tuples(d, n):
    divs = [k for k in range(1, n + 1) if n % k == 0]
    return sum(1 for t in itertools.product(divs, repeat=d) if math.prod(t) == n)


@pytest.fixture(scope="module")
def delta():
    return co.gen_ramanujan(10_000)


# divisor

def test_divisor_examples():
    t3 = co.gen_divisor(3, 100)
    assert t3[1] == 1
    assert t3[4] == ordered_tuples(3, 4) == 6
    assert co.gen_divisor(2, 10)[6] == 4


def test_divisor_matches_enumeration():
    for d in (2, 3, 4):
        t = co.gen_divisor(d, 60)
        assert [t[n] for n in range(1, 61)] == [ordered_tuples(d, n) for n in range(1, 61)]


def test_divisor_prime_powers_binomial():
    for d in (2, 3, 5):
        t = co.gen_divisor(d, 10**6)
        for p in co.primes_upto(50):
            for k in range(1, 7):
                if p**k <= t.length:
                    assert t[p**k] == math.comb(k + d - 1, d - 1)


def test_divisor_value_at_primes():
    t = co.gen_divisor(4, 5000)
    assert np.all(t.values[co.primes_upto(5000)] == 4.0)


def test_divisor_limits():
    with pytest.raises(DomainError):
        co.gen_divisor(17, 10)
    with pytest.raises(ResourceError):
        co.gen_divisor(3, co.MAX_DIVISOR_N + 1)


# Ramanujan tau

def test_tau_against_series_oracle():
    naive = tau_series_naive(40)
    assert co.ramanujan_tau_exact(40) == naive[1:41]


def test_ramanujan_examples(delta):
    assert delta[1] == 1.0
    assert delta[2] == pytest.approx(-24 / 2**5.5, rel=1e-14)
    assert delta[2] == pytest.approx(-0.5303300859, abs=1e-10)
    assert delta[6] == pytest.approx(delta[2] * delta[3], rel=1e-12)
    assert delta.degree == 2 and delta.kind == "gl2_cusp"


def test_tau_large_exact():
    # Ramanujan congruence tau(n) = sigma_11(n) mod 691 at a large prime
    vals = co.ramanujan_tau_exact(1000)
    assert vals[996] % 691 == sum(d**11 for d in range(1, 998) if 997 % d == 0) % 691


def test_deligne_bound(delta):
    p = co.primes_upto(delta.length)
    assert np.all(np.abs(delta.values[p]) <= 2.0)


def test_gl2_hecke_recursion(delta):
    for p in co.primes_upto(100):
        p = int(p)
        for j in range(1, 6):
            if p ** (j + 1) > delta.length:
                break
            lhs = delta[p] * delta[p**j]
            rhs = delta[p ** (j + 1)] + delta[p ** (j - 1)]
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def _coprime_pairs(limit):
    for m in range(2, limit):
        for n in range(m + 1, limit // m + 1):
            if math.gcd(m, n) == 1:
                yield m, n


@pytest.mark.parametrize("kind", ["divisor", "delta", "sym3"])
def test_hecke_multiplicativity(kind, delta):
    t = {"divisor": co.gen_divisor(3, 10_000), "delta": delta,
         "sym3": co.gen_sym_power(delta, 3)}[kind]
    for m, n in _coprime_pairs(10_000):
        a, b = t[m] * t[n], t[m * n]
        if kind == "divisor":
            assert a == b
        else:
            assert a == pytest.approx(b, rel=1e-9, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 99), st.integers(2, 99))
def test_multiplicativity_property(m, n):
    t = co.gen_sym_power(co.gen_ramanujan(10_000), 2)
    if math.gcd(m, n) == 1:
        assert t[m * n] == pytest.approx(t[m] * t[n], rel=1e-9, abs=1e-300)


# symmetric powers

def test_sym1_is_identity(delta):
    s = co.gen_sym_power(delta, 1)
    np.testing.assert_allclose(s.values, delta.values, rtol=1e-12, atol=1e-15)


def test_chebyshev_at_right_angle():
    assert co.chebyshev_u(3, np.array(np.pi / 2)) == pytest.approx(0.0, abs=1e-15)


def test_sym2_against_satake_oracle(delta):
    s = co.gen_sym_power(delta, 2)
    for p in co.primes_upto(500):
        th = math.acos(delta[p] / 2)
        direct = sum(np.exp(1j * (2 - 2 * m) * th) for m in range(3)).real  # h_1 = 4cos^2 - 1
        assert s[p] == pytest.approx(delta[p] ** 2 - 1, abs=1e-12)
        assert s[p] == pytest.approx(direct, abs=1e-12)


def test_sym_prime_powers_against_h_j():
    # h_j of the Satake multiset by brute force over monomials
    th, k = 0.7, 3
    roots = [np.exp(1j * (k - 2 * m) * th) for m in range(k + 1)]
    h = co.sym_power_prime_powers(k, th, 4)
    for j in range(5):
        direct = sum(np.prod(c) for c in itertools.combinations_with_replacement(roots, j))
        assert h[j] == pytest.approx(direct.real, abs=1e-12)


def test_chebyshev_series_near_zero():
    th = np.array([1e-6, np.pi - 1e-6, 0.0])
    np.testing.assert_allclose(co.chebyshev_u(3, th), [4, -4, 4], atol=1e-9)


def test_sym_deligne_bound(delta):
    for k in (2, 3, 4):
        s = co.gen_sym_power(delta, k)
        p = co.primes_upto(s.length)
        assert np.all(np.abs(s.values[p]) <= k + 1)
        assert s.degree == k + 1 and s.values[1] == 1.0


def test_satake_rejects_large_eigenvalue():
    bad = co.CoefficientTable("bad", 2, "gl2_cusp", np.array([0, 1, 2.5, 0.0]))
    with pytest.raises(DataIntegrityError):
        co.gen_sym_power(bad, 2)


# random model

def test_random_model():
    a = co.gen_random_model(100_000, 7)
    b = co.gen_random_model(100_000, 7)
    assert np.array_equal(a.values, b.values)
    assert set(np.unique(a.values[1:])) == {-1.0, 1.0}
    assert abs(a.values[1:].mean()) < 0.02
    assert not np.array_equal(a.values, co.gen_random_model(100_000, 8).values)


# profiles

def test_rankin_selberg(delta):
    ones = co.ones_table(100)
    assert co.rankin_selberg_profile(ones, [100])[0, 1] == 1.0
    big = co.gen_ramanujan(2**20)
    r = co.rankin_selberg_profile(big, [2**k for k in range(10, 21)])[:, 1]
    assert r.max() / r.min() < 3
    d3 = co.gen_divisor(3, 2**16)
    r3 = co.rankin_selberg_profile(d3, [2**k for k in range(6, 17)])[:, 1]
    assert np.all(np.diff(r3) > 0)
    with pytest.raises(ValueError):
        co.rankin_selberg_profile(ones, [])


def test_partial_sums():
    big = co.gen_ramanujan(10**6)
    grid = np.unique(np.logspace(3, 6, 13).astype(int))
    assert co.partial_sum_profile(big, grid).slope <= 1 / 3 + 0.15
    s3 = co.gen_sym_power(big, 3)
    assert co.partial_sum_profile(s3, grid).slope <= 3 / 5 + 0.15
    rnd = co.gen_random_model(10**6, 3)
    assert abs(co.partial_sum_profile(rnd, grid).slope - 0.5) <= 0.1
    with pytest.raises(DomainError):
        co.partial_sum_profile(co.gen_divisor(2, 100), [10, 20, 40])
    with pytest.raises(ValueError):
        co.partial_sum_profile(big, [10, 20])


# binary cache

def test_cache_round_trip(tmp_path, delta):
    path = tmp_path / "delta.bin"
    co.save_table(delta, path)
    back = co.load_table(path)
    assert back.values.tobytes() == delta.values.tobytes()
    assert (back.kind, back.degree) == (delta.kind, delta.degree)


def test_cache_layout(delta):
    blob = co.encode_table(co.ones_table(3))
    assert blob[:5] == b"SCSV1"
    assert blob[5] == co.KIND_CODE["divisor"] and blob[6] == 1
    assert int.from_bytes(blob[7:15], "little") == 3
    assert len(blob) == 5 + 10 + 3 * 8 + 8


def test_fnv_reference_vectors():
    # published FNV-1a 64 test vectors
    assert co.fnv1a64(b"") == 0xCBF29CE484222325
    assert co.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert co.fnv1a64(b"foobar") == 0x85944171F73967E8
    assert co._fnv1a_py(b"foobar") == co.fnv1a64(b"foobar")


@pytest.mark.parametrize("damage", ["magic", "truncate", "flip"])
def test_cache_detects_damage(damage):
    blob = bytearray(co.encode_table(co.gen_divisor(2, 50)))
    if damage == "magic":
        blob[0] = ord("X")
    elif damage == "truncate":
        blob = blob[:-1]
    else:
        blob[20] ^= 1
    with pytest.raises(DataIntegrityError):
        co.decode_table(bytes(blob))

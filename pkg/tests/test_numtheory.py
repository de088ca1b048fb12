import math

import pytest
from hypothesis import given, settings, strategies as st

from unihand import numtheory as nt
from unihand.rng import DetRng

# primes below 200, by sieve, as an independent reference
REF_PRIMES = [
    p for p in range(2, 200) if all(p % d for d in range(2, int(p**0.5) + 1))
]


def test_small_primality_against_sieve():
    for n in range(2, 200):
        assert nt.is_probable_prime(n) == (n in REF_PRIMES), n


def test_known_large_prime_and_composite():
    # 2^127 - 1 is a Mersenne prime; its square is obviously composite
    m127 = 2**127 - 1
    assert nt.is_probable_prime(m127)
    assert not nt.is_probable_prime(m127 * m127)
    assert not nt.is_probable_prime(m127 * (2**61 - 1))


@given(st.integers(2, 10**9), st.integers(2, 10**9))
def test_ext_gcd_bezout(a, b):
    g, x, y = nt.ext_gcd(a, b)
    assert g == math.gcd(a, b)
    assert a * x + b * y == g


@given(st.integers(2, 10**12), st.integers(0, 10**6), st.integers(2, 10**6))
def test_powmod_matches_builtin(base, exp, mod):
    assert nt.powmod(base, exp, mod) == pow(base, exp, mod)


def test_powmod_negative_exponent():
    # c^-e * c^e == 1 in the unit group
    n = 257 * 263
    c = 5
    assert nt.powmod(c, -3, n) * nt.powmod(c, 3, n) % n == 1


def test_invmod():
    assert nt.invmod(3, 11) == 4
    with pytest.raises(ValueError):
        nt.invmod(6, 9)


def test_random_prime_properties():
    rng = DetRng(b"primes")
    seen = set()
    for _ in range(5):
        p = nt.random_prime(rng, 64)
        assert p.bit_length() == 64 and p % 2 == 1
        assert nt.is_probable_prime(p)
        seen.add(p)
    assert len(seen) == 5


def test_random_safe_prime():
    rng = DetRng(b"safe")
    p = nt.random_safe_prime(rng, 64)
    assert p.bit_length() == 64
    assert nt.is_probable_prime(p) and nt.is_probable_prime((p - 1) // 2)
    assert nt.is_safe_prime(p)
    assert not nt.is_safe_prime(2**61 - 1)  # (p-1)/2 is composite here


def test_backends_agree():
    pure = nt.get_backend("pure")
    try:
        gmp = nt.get_backend("gmpy2")
    except ImportError:
        pytest.skip("gmpy2 not installed")
    rng = DetRng(b"cross")
    for _ in range(20):
        a = rng.randbits(256) | 1
        b = rng.randbits(128) | 1
        n = (rng.randbits(256) | (1 << 255)) * 2 + 1
        assert pure.powmod(a, b, n) == gmp.powmod(a, b, n)
        assert pure.is_probable_prime(a) == gmp.is_probable_prime(a)
        g1 = pure.ext_gcd(a, b)[0]
        g2 = gmp.ext_gcd(a, b)[0]
        assert g1 == g2 == math.gcd(a, b)


def test_prime_search_is_backend_independent():
    """Same DetRng stream, same primes out, whichever backend tests them."""
    results = []
    for name in ("pure", "gmpy2"):
        try:
            backend = nt.get_backend(name)
        except ImportError:
            continue
        rng = DetRng(b"same-stream")
        results.append(
            (
                nt.random_prime(rng, 48, backend=backend),
                nt.random_safe_prime(rng, 24, backend=backend),
            )
        )
    assert len(set(results)) == 1


def test_pure_backend_runs_the_whole_protocol(monkeypatch):
    """Force the interpreter-only backend and run a full auth + handover:
    the compiled backend is an accelerator, never a correctness dependency."""
    from unihand.deploy import Deployment

    monkeypatch.setattr(nt, "_backend", nt.get_backend("pure"))
    dep = Deployment(
        "p256", b"pure-backend", modulus_bits=128, toy_accumulator=True
    )
    assert dep.run_auth("alice", "tower1").ok
    assert dep.run_handover("alice", "tower2").ok
    dep.revoke("alice")
    assert not dep.run_handover("alice", "tower1").ok


@settings(max_examples=25)
@given(st.binary(min_size=1, max_size=64))
def test_detrng_reproducible(seed):
    a, b = DetRng(seed), DetRng(seed)
    assert a.randbytes(33) == b.randbytes(33)
    assert a.randbelow(10**9) == b.randbelow(10**9)
    assert DetRng(seed).fork("x").randbytes(8) != DetRng(seed).fork("y").randbytes(8)


def test_detrng_ranges():
    rng = DetRng(b"ranges")
    for _ in range(200):
        v = rng.randrange(5, 11)
        assert 5 <= v < 11
    assert rng.randbits(1) in (0, 1)

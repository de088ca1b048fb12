"""Big-integer kernels behind the accumulator and the toy DH group.

Two interchangeable backends implement the hot operations (modular
exponentiation, inverses, primality): a compiled one using gmpy2 when it is
importable, and a pure-Python fallback. Selection happens once at import;
``BACKEND`` names the active one and ``get_backend`` lets the benchmark pit
them against each other. Both backends must agree bit-for-bit: prime search
consumes the caller's DetRng stream identically regardless of backend.
"""

from __future__ import annotations

import hashlib
from typing import Tuple

from .rng import DetRng

# Small primes for sieving candidates before Miller-Rabin.
_SIEVE_LIMIT = 2000


def _small_primes(limit: int) -> list[int]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(limit ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = b"\x00" * len(sieve[i * i :: i])
    return [i for i in range(2, limit + 1) if sieve[i]]


SMALL_PRIMES = _small_primes(_SIEVE_LIMIT)


class PureBackend:
    """CPython-only arithmetic. pow() is already C, but Miller-Rabin loops
    and witness searches run in the interpreter."""

    name = "pure"

    @staticmethod
    def powmod(base: int, exp: int, mod: int) -> int:
        if exp < 0:
            base = PureBackend.invmod(base, mod)
            exp = -exp
        return pow(base, exp, mod)

    @staticmethod
    def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
        """Return (g, x, y) with a*x + b*y == g == gcd(a, b)."""
        old_r, r = a, b
        old_s, s = 1, 0
        old_t, t = 0, 1
        while r:
            q = old_r // r
            old_r, r = r, old_r - q * r
            old_s, s = s, old_s - q * s
            old_t, t = t, old_t - q * t
        return old_r, old_s, old_t

    @staticmethod
    def invmod(a: int, n: int) -> int:
        g, x, _ = PureBackend.ext_gcd(a % n, n)
        if g != 1:
            raise ValueError("not invertible")
        return x % n

    @staticmethod
    def is_probable_prime(n: int, rounds: int = 40) -> bool:
        if n < 2:
            return False
        for p in SMALL_PRIMES:
            if n == p:
                return True
            if n % p == 0:
                return False
        d = n - 1
        r = 0
        while d % 2 == 0:
            d //= 2
            r += 1
        for a in _mr_bases(n, rounds):
            x = pow(a, d, n)
            if x == 1 or x == n - 1:
                continue
            for _ in range(r - 1):
                x = x * x % n
                if x == n - 1:
                    break
            else:
                return False
        return True


def _mr_bases(n: int, rounds: int):
    """Deterministic Miller-Rabin bases derived from n, so both backends and
    repeated runs agree without consuming an rng."""
    seed = hashlib.sha256(b"mr:" + n.to_bytes((n.bit_length() + 7) // 8, "big"))
    i = 0
    produced = 0
    while produced < rounds:
        h = hashlib.sha256(seed.digest() + i.to_bytes(4, "big")).digest()
        a = int.from_bytes(h, "big") % (n - 3) + 2
        i += 1
        produced += 1
        yield a


class GmpBackend:
    name = "gmpy2"

    def __init__(self):
        import gmpy2

        self._g = gmpy2

    def powmod(self, base: int, exp: int, mod: int) -> int:
        return int(self._g.powmod(base, exp, mod))

    def ext_gcd(self, a: int, b: int) -> Tuple[int, int, int]:
        g, x, y = self._g.gcdext(a, b)
        return int(g), int(x), int(y)

    def invmod(self, a: int, n: int) -> int:
        try:
            return int(self._g.invert(a, n))
        except ZeroDivisionError:
            raise ValueError("not invertible") from None

    def is_probable_prime(self, n: int, rounds: int = 40) -> bool:
        return bool(self._g.is_prime(n, rounds))


def _select_backend():
    try:
        return GmpBackend()
    except ImportError:
        return PureBackend()


_backend = _select_backend()
BACKEND = _backend.name


def get_backend(name: str):
    """Explicit backend instance, for the comparative benchmark."""
    if name == "pure":
        return PureBackend()
    if name == "gmpy2":
        return GmpBackend()
    raise ValueError(f"unknown backend {name!r}")


def powmod(base: int, exp: int, mod: int) -> int:
    return _backend.powmod(base, exp, mod)


def ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    return _backend.ext_gcd(a, b)


def invmod(a: int, n: int) -> int:
    return _backend.invmod(a, n)


def is_probable_prime(n: int, rounds: int = 40) -> bool:
    return _backend.is_probable_prime(n, rounds)


def random_prime(rng: DetRng, bits: int, backend=None) -> int:
    """Odd prime of exactly `bits` bits, rejection-sampled from rng."""
    if bits < 3:
        raise ValueError("bits too small")
    be = backend or _backend
    while True:
        cand = rng.randbits(bits) | (1 << (bits - 1)) | 1
        if any(cand % p == 0 for p in SMALL_PRIMES if p < cand):
            continue
        if be.is_probable_prime(cand):
            return cand


def random_safe_prime(rng: DetRng, bits: int, backend=None) -> int:
    """Safe prime p = 2q + 1 of exactly `bits` bits with q prime."""
    if bits < 4:
        raise ValueError("bits too small")
    be = backend or _backend
    while True:
        q = rng.randbits(bits - 1) | (1 << (bits - 2)) | 1
        p = 2 * q + 1
        # sieve both halves cheaply before the expensive tests
        if any(q % s == 0 or p % s == 0 for s in SMALL_PRIMES if s < q):
            continue
        if be.is_probable_prime(q, 5) and be.is_probable_prime(p, 5):
            if be.is_probable_prime(q) and be.is_probable_prime(p):
                return p


def is_safe_prime(p: int, backend=None) -> bool:
    be = backend or _backend
    return p > 5 and be.is_probable_prime(p) and be.is_probable_prime((p - 1) // 2)

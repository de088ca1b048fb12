"""Universal dynamic accumulator over an RSA group, non-membership only.

The accumulator value is c = g^(prod X) mod n for the set X of revoked prime
identifiers. A witness (a, d) proves x is absent via c^a == d^x * g (mod n),
0 < a < x. The authority holding the factorisation creates witnesses through
the trapdoor; everyone else refreshes witnesses across additions with public
values only (nonwit_update / catch_up).

Update algebra, for c* = c^y and a witness (a, d) for x with gcd(y, x) = 1:
let a0 = y^-1 mod x and t = (a0*y - 1)/x, so a0*y = 1 + t*x. With a'' = a*a0,
a' = a'' mod x and k = (a'' - a')/x we get y*a' = a + x*(a*t - y*k), hence
    (c*)^(a') = c^a * (c^(a*t - y*k))^x = (d * c^(a*t - y*k))^x * g,
so (a', d * c^(a*t - y*k) mod n) is a witness for x against c*.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from .errors import DuplicateElement, ElementAccumulated, StaleWitness
from .numtheory import (
    ext_gcd,
    invmod,
    is_probable_prime,
    is_safe_prime,
    powmod,
    random_prime,
    random_safe_prime,
)
from .rng import DetRng

ELEMENT_BITS = 128


class AccumulatedElement(int):
    """Odd prime identifier; primality is checked on construction."""

    def __new__(cls, value: int):
        value = int(value)
        if value < 3 or value % 2 == 0 or not is_probable_prime(value):
            raise ValueError("element must be an odd prime")
        return super().__new__(cls, value)


def random_element(rng: DetRng, bits: int = ELEMENT_BITS) -> AccumulatedElement:
    """Rejection-sample an odd prime of exactly `bits` bits."""
    return AccumulatedElement(random_prime(rng, bits))


@dataclass(frozen=True)
class AccumulatorSecret:
    """Trapdoor material: safe primes p, q. Held by the authority only."""

    p: int
    q: int

    def __post_init__(self):
        if self.p == self.q:
            raise ValueError("p and q must differ")

    @property
    def n(self) -> int:
        return self.p * self.q

    @property
    def phi(self) -> int:
        return (self.p - 1) * (self.q - 1)


@dataclass(frozen=True)
class AccumulatorState:
    """Public accumulator snapshot at one version. Immutable; updates return
    a new state, so holders can keep per-version history for catch_up."""

    n: int
    g: int
    c: int
    version: int
    log: Tuple[AccumulatedElement, ...]  # log[i] was added at version i+1

    def __post_init__(self):
        if len(self.log) != self.version:
            raise ValueError("version must equal the number of logged elements")

    def __contains__(self, x: int) -> bool:
        return x in self.log


@dataclass(frozen=True)
class NonMembershipWitness:
    a: int
    d: int
    witness_version: int

    def serialize(self) -> bytes:
        a_bytes = self.a.to_bytes((self.a.bit_length() + 7) // 8 or 1, "big")
        d_bytes = self.d.to_bytes((self.d.bit_length() + 7) // 8 or 1, "big")
        return b"".join(
            [
                struct.pack(">H", len(a_bytes)),
                a_bytes,
                struct.pack(">H", len(d_bytes)),
                d_bytes,
                struct.pack(">Q", self.witness_version),
            ]
        )

    @classmethod
    def deserialize(cls, data: bytes) -> "NonMembershipWitness":
        offset = 0
        parts = []
        for _ in range(2):
            if len(data) < offset + 2:
                raise ValueError("truncated witness")
            (plen,) = struct.unpack(">H", data[offset : offset + 2])
            offset += 2
            if len(data) < offset + plen:
                raise ValueError("truncated witness value")
            parts.append(int.from_bytes(data[offset : offset + plen], "big"))
            offset += plen
        if len(data) != offset + 8:
            raise ValueError("truncated witness version")
        (version,) = struct.unpack(">Q", data[offset:])
        return cls(parts[0], parts[1], version)


def kgen_acc(
    modulus_bits: int, rng: DetRng, toy: bool = False
) -> Tuple[AccumulatorSecret, int, int]:
    """Generate (secret, n, g): n a product of two safe primes, g a random QR.

    modulus_bits below 1024 requires toy=True and is for tests only.
    """
    if modulus_bits < 1024 and not toy:
        raise ValueError("modulus below 1024 bits requires toy=True")
    if modulus_bits < 16:
        raise ValueError("modulus too small even for toy use")
    half = modulus_bits // 2
    p = random_safe_prime(rng, half)
    while True:
        q = random_safe_prime(rng, half)
        if q != p:
            break
    secret = AccumulatorSecret(p, q)
    return secret, secret.n, _random_qr(rng, secret.n)


def kgen_acc_from_primes(
    p: int, q: int, g: int | None = None, rng: DetRng | None = None
) -> Tuple[AccumulatorSecret, int, int]:
    """Toy setup from explicit safe primes (e.g. p=11, q=23 gives n=253)."""
    if not (is_safe_prime(p) and is_safe_prime(q)):
        raise ValueError("p and q must be safe primes")
    secret = AccumulatorSecret(p, q)
    if g is None:
        if rng is None:
            raise ValueError("need g or an rng to sample it")
        g = _random_qr(rng, secret.n)
    n = secret.n
    if not 1 < g < n or _gcd(g, n) != 1:
        raise ValueError("g must be a unit in the group")
    return secret, n, g


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _random_qr(rng: DetRng, n: int) -> int:
    while True:
        s = rng.randrange(2, n)
        if _gcd(s, n) != 1:
            continue
        g = s * s % n
        if g != 1:
            return g


def gen_acc(
    secret: AccumulatorSecret, elements: Iterable[int], g: int
) -> AccumulatorState:
    """Accumulate a set from scratch using the trapdoor. Empty set gives c = g."""
    xs = [AccumulatedElement(x) for x in elements]
    if len(set(xs)) != len(xs):
        raise DuplicateElement("accumulated set must be distinct")
    exponent = 1
    for x in xs:
        exponent = exponent * x % secret.phi
    c = powmod(g, exponent, secret.n)
    return AccumulatorState(secret.n, g, c, len(xs), tuple(xs))


def update_acc(acc: AccumulatorState, x_new: int) -> AccumulatorState:
    """Add one element; trapdoor-free (c' = c^x mod n)."""
    x_new = AccumulatedElement(x_new)
    if x_new in acc:
        raise DuplicateElement(f"{int(x_new)} already accumulated")
    return AccumulatorState(
        acc.n,
        acc.g,
        powmod(acc.c, x_new, acc.n),
        acc.version + 1,
        acc.log + (x_new,),
    )


def nonwit_create(
    secret: AccumulatorSecret, acc: AccumulatorState, x: int
) -> NonMembershipWitness:
    """Trapdoor path: extended Euclid gives a*u + b*x = 1 for u = prod(X);
    the witness is (a, g^{-b} mod n) with exponents reduced through phi."""
    x = AccumulatedElement(x)
    if x in acc:
        raise ElementAccumulated(f"{int(x)} is accumulated")
    # u mod (x * phi): enough to recover both a = u^-1 mod x and -b mod phi,
    # since -b = (a*u - 1)/x shifts by multiples of phi when u does by x*phi.
    modulus = x * secret.phi
    u_red = 1
    for element in acc.log:
        u_red = u_red * element % modulus
    g_, a, _ = ext_gcd(u_red % x, x)
    if g_ != 1:
        raise ElementAccumulated(f"{int(x)} divides the accumulated product")
    a %= x
    neg_b = (a * u_red - 1) // x
    d = powmod(acc.g, neg_b % secret.phi, secret.n)
    return NonMembershipWitness(a, d, acc.version)


def verify_nonwit(
    acc: AccumulatorState, wit: NonMembershipWitness, x: int
) -> bool:
    """1 iff c^a == d^x * g (mod n) with 0 < a < x. Malformed input gives 0."""
    try:
        if not (0 < wit.a < x) or not (0 < wit.d < acc.n):
            return False
        lhs = powmod(acc.c, wit.a, acc.n)
        rhs = powmod(wit.d, x, acc.n) * acc.g % acc.n
        return lhs == rhs
    except Exception:
        return False


def nonwit_update(
    acc_old: AccumulatorState,
    acc_new: AccumulatorState,
    x_added: int,
    x: int,
    wit: NonMembershipWitness,
) -> NonMembershipWitness:
    """Refresh a witness across one addition using public values only."""
    if x == x_added:
        raise ElementAccumulated("the witness holder was revoked")
    if wit.witness_version != acc_old.version:
        raise StaleWitness(
            f"witness at v{wit.witness_version}, accumulator at v{acc_old.version}"
        )
    if (
        acc_new.version != acc_old.version + 1
        or not acc_new.log
        or acc_new.log[-1] != x_added
        or acc_new.n != acc_old.n
    ):
        raise ValueError("acc_new is not acc_old updated with x_added")
    a0 = invmod(x_added % x, x)
    t = (a0 * x_added - 1) // x
    a_lift = wit.a * a0
    a_new = a_lift % x
    k = (a_lift - a_new) // x
    exponent = wit.a * t - x_added * k
    d_new = wit.d * powmod(acc_old.c, exponent, acc_old.n) % acc_old.n
    return NonMembershipWitness(a_new, d_new, acc_new.version)


def catch_up(
    history: Sequence[AccumulatorState],
    wit: NonMembershipWitness,
    x: int,
    from_version: int,
) -> NonMembershipWitness:
    """Fold nonwit_update over every addition after from_version.

    history[v] must be the snapshot at version v; raises ElementAccumulated if
    x itself was revoked anywhere in the gap.
    """
    head = len(history) - 1
    if from_version > head or wit.witness_version != from_version:
        raise StaleWitness(
            f"cannot catch up from v{from_version} (witness v{wit.witness_version}, head v{head})"
        )
    for v in range(from_version, head):
        x_added = history[v + 1].log[-1]
        wit = nonwit_update(history[v], history[v + 1], x_added, x, wit)
    return wit

"""Prime-order group Diffie-Hellman, the two-output KDF and the AE envelope.

Every protocol message rides on these three primitives. The group sits behind
a small interface with two instantiations: P256Group for production (256-bit
ECDH, ~128-bit security) and ToyGroup (order-11 subgroup of Z_23*) whose
elements are small enough to check by hand.

Canonical encodings: group elements are fixed-length big-endian bytes (X9.62
uncompressed points for P-256); AE ciphertexts are nonce(12) || body || tag(16).
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import numtheory
from .errors import AuthFailure, InvalidElement
from .rng import DetRng

Scalar = int
GroupElement = bytes

KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16

KDF_LABEL_SESSION = b"unihand/sk"
KDF_LABEL_ENC = b"unihand/ks"


class ToyGroup:
    """Subgroup of prime order q inside Z_p*, small enough for hand checks.

    Defaults give the order-11 subgroup of Z_23* generated by 2, so e.g.
    2^15 mod 23 == 2^4 mod 23 == 16 is directly verifiable.
    """

    name = "toy"
    security_bits = 0  # not a secure group; test use only

    def __init__(self, p: int = 23, q: int = 11, g: int = 2):
        if not numtheory.is_probable_prime(q):
            raise ValueError("q must be prime")
        if (p - 1) % q != 0:
            raise ValueError("q must divide p-1")
        if pow(g, q, p) != 1 or g % p in (0, 1):
            raise ValueError("g must generate a subgroup of order q")
        self.p = p
        self.q = q
        self.g = g
        self.element_len = (p.bit_length() + 7) // 8

    def __reduce__(self):
        return (ToyGroup, (self.p, self.q, self.g))

    def encode(self, value: int) -> GroupElement:
        return value.to_bytes(self.element_len, "big")

    def decode(self, element: GroupElement) -> int:
        if len(element) != self.element_len:
            raise InvalidElement("wrong element length")
        return int.from_bytes(element, "big")

    def validate(self, element: GroupElement) -> int:
        value = self.decode(element)
        if not 1 < value < self.p or pow(value, self.q, self.p) != 1:
            raise InvalidElement("not a subgroup element (or identity)")
        return value

    def power(self, x: Scalar) -> GroupElement:
        return self.encode(pow(self.g, x % self.q, self.p))

    def dh(self, x: Scalar, peer: GroupElement) -> GroupElement:
        value = self.validate(peer)
        return self.encode(pow(value, x % self.q, self.p))


class P256Group:
    """NIST P-256; scalars are ints in [1, q-1], elements X9.62 uncompressed.

    The DH output is the standard ECDH shared secret (x-coordinate, 32 bytes);
    nothing downstream exponentiates it again, it only feeds the KDF.
    """

    name = "p256"
    security_bits = 128
    element_len = 65

    def __init__(self):
        self._curve = ec.SECP256R1()
        self.q = int(
            "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551", 16
        )

    def __reduce__(self):
        return (P256Group, ())

    def validate(self, element: GroupElement):
        try:
            return ec.EllipticCurvePublicKey.from_encoded_point(self._curve, element)
        except ValueError as exc:
            raise InvalidElement(str(exc)) from None

    def power(self, x: Scalar) -> GroupElement:
        priv = ec.derive_private_key(x, self._curve)
        return priv.public_key().public_bytes(
            serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
        )

    def dh(self, x: Scalar, peer: GroupElement) -> GroupElement:
        pub = self.validate(peer)
        priv = ec.derive_private_key(x, self._curve)
        return priv.exchange(ec.ECDH(), pub)


def group_by_name(name: str):
    if name == "toy":
        return ToyGroup()
    if name in ("p256", "prod"):
        return P256Group()
    raise ValueError(f"unknown group {name!r}")


def dh_keygen(group, rng: DetRng, scalar: Scalar | None = None):
    """Sample x uniform in [1, q-1] and return (x, g^x).

    `scalar` pins the exponent for hand-checkable tests (e.g. x=1 gives g).
    """
    x = scalar if scalar is not None else rng.randrange(1, group.q)
    if not 1 <= x < group.q:
        raise ValueError("scalar out of range")
    return x, group.power(x)


def dh_shared(group, x: Scalar, peer: GroupElement) -> GroupElement:
    """peer^x with group-membership and identity checks on peer."""
    return group.dh(x, peer)


@dataclass(frozen=True)
class KeyPairOut:
    session_key: bytes  # sk_i
    enc_key: bytes  # k_s / k_s'


def kdf(secret: GroupElement) -> KeyPairOut:
    """HKDF-SHA256: one extract over the shared element, two labeled expands."""
    prk = hmac.new(b"\x00" * 32, secret, hashlib.sha256).digest()

    def expand(label: bytes) -> bytes:
        return hmac.new(prk, label + b"\x01", hashlib.sha256).digest()

    return KeyPairOut(expand(KDF_LABEL_SESSION), expand(KDF_LABEL_ENC))


def ae_encrypt(
    key: bytes, plaintext: bytes, rng: DetRng | None = None, nonce: bytes | None = None
) -> bytes:
    """AES-256-GCM; output is nonce(12) || body || tag(16).

    The nonce must be unique per (key, message): pass either a DetRng that
    owns the stream or an explicit 12-byte nonce.
    """
    if len(key) != KEY_LEN:
        raise ValueError("key must be 256 bits")
    if nonce is None:
        if rng is None:
            raise ValueError("need a nonce source")
        nonce = rng.randbytes(NONCE_LEN)
    if len(nonce) != NONCE_LEN:
        raise ValueError("nonce must be 96 bits")
    return nonce + AESGCM(key).encrypt(nonce, plaintext, None)


def ae_decrypt(key: bytes, ciphertext: bytes) -> bytes:
    if len(key) != KEY_LEN:
        raise ValueError("key must be 256 bits")
    if len(ciphertext) < NONCE_LEN + TAG_LEN:
        raise AuthFailure("ciphertext too short")
    nonce, body = ciphertext[:NONCE_LEN], ciphertext[NONCE_LEN:]
    try:
        return AESGCM(key).decrypt(nonce, body, None)
    except InvalidTag:
        raise AuthFailure("tag verification failed") from None

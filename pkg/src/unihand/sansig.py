"""Sanitisable signatures built from two Ed25519 signatures.

The signer commits to the fixed blocks, the admissible-block descriptor and
the sanitiser's public key with sig_fix; whoever authored the current message
state (signer or sanitiser) covers all blocks plus sig_fix with sig_full.
A sanitiser can therefore rewrite admissible blocks and re-sign, but any touch
of a fixed block, the descriptor or the key binding breaks sig_fix.

Wire form of a signature: author(1) || len4 || sig_fix || len4 || sig_full ||
block_count(2) || adm bitmap.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, Tuple

from cryptography.exceptions import InvalidSignature as _BadSig
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import BadDescriptor, Inadmissible, InvalidSignature
from .rng import DetRng

MessageBlocks = Tuple[bytes, ...]

_FIX_CONTEXT = b"unihand.sansig.fix\x00"
_FULL_CONTEXT = b"unihand.sansig.full\x00"


def encode_blocks(blocks: MessageBlocks) -> bytes:
    """Length-prefixed canonical encoding; concatenation is unambiguous."""
    out = [struct.pack(">H", len(blocks))]
    for block in blocks:
        out.append(struct.pack(">I", len(block)))
        out.append(block)
    return b"".join(out)


def decode_blocks(data: bytes) -> Tuple[MessageBlocks, bytes]:
    """Inverse of encode_blocks; returns (blocks, remaining bytes)."""
    if len(data) < 2:
        raise ValueError("truncated block list")
    (count,) = struct.unpack(">H", data[:2])
    offset = 2
    blocks = []
    for _ in range(count):
        if len(data) < offset + 4:
            raise ValueError("truncated block length")
        (blen,) = struct.unpack(">I", data[offset : offset + 4])
        offset += 4
        if len(data) < offset + blen:
            raise ValueError("truncated block body")
        blocks.append(data[offset : offset + blen])
        offset += blen
    return tuple(blocks), data[offset:]


@dataclass(frozen=True)
class Adm:
    """Admissible-block descriptor: 1-based indices the sanitiser may modify."""

    indices: frozenset
    block_count: int

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(self.indices))
        if self.block_count < 1:
            raise BadDescriptor("empty message")
        for i in self.indices:
            if not 1 <= i <= self.block_count:
                raise BadDescriptor(f"index {i} outside [1, {self.block_count}]")

    def admissible(self, modified: MessageBlocks, original: MessageBlocks) -> bool:
        """The ADM(m*, m) predicate: agreement on every fixed index."""
        if len(modified) != self.block_count or len(original) != self.block_count:
            return False
        return all(
            modified[i - 1] == original[i - 1]
            for i in range(1, self.block_count + 1)
            if i not in self.indices
        )

    def bitmap(self) -> bytes:
        out = bytearray((self.block_count + 7) // 8)
        for i in self.indices:
            out[(i - 1) // 8] |= 1 << ((i - 1) % 8)
        return struct.pack(">H", self.block_count) + bytes(out)

    @classmethod
    def from_bitmap(cls, data: bytes) -> Tuple["Adm", bytes]:
        if len(data) < 2:
            raise ValueError("truncated adm")
        (count,) = struct.unpack(">H", data[:2])
        nbytes = (count + 7) // 8
        if len(data) < 2 + nbytes:
            raise ValueError("truncated adm bitmap")
        raw = data[2 : 2 + nbytes]
        for i in range(count, nbytes * 8):
            if raw[i // 8] & (1 << (i % 8)):
                raise ValueError("non-canonical bitmap padding")
        indices = frozenset(
            i + 1 for i in range(count) if raw[i // 8] & (1 << (i % 8))
        )
        try:
            return cls(indices, count), data[2 + nbytes :]
        except BadDescriptor as exc:
            raise ValueError(f"malformed descriptor: {exc}") from None


class Author(IntEnum):
    SIGNER = 1
    SANITISER = 2


@dataclass(frozen=True)
class SanSignature:
    sig_fix: bytes
    sig_full: bytes
    author: Author
    adm: Adm

    def serialize(self) -> bytes:
        return b"".join(
            [
                struct.pack(">B", int(self.author)),
                struct.pack(">I", len(self.sig_fix)),
                self.sig_fix,
                struct.pack(">I", len(self.sig_full)),
                self.sig_full,
                self.adm.bitmap(),
            ]
        )

    @classmethod
    def deserialize(cls, data: bytes) -> Tuple["SanSignature", bytes]:
        if len(data) < 1:
            raise ValueError("truncated signature")
        author = Author(data[0])
        offset = 1
        parts = []
        for _ in range(2):
            if len(data) < offset + 4:
                raise ValueError("truncated signature part")
            (plen,) = struct.unpack(">I", data[offset : offset + 4])
            offset += 4
            if len(data) < offset + plen:
                raise ValueError("truncated signature body")
            parts.append(data[offset : offset + plen])
            offset += plen
        adm, rest = Adm.from_bitmap(data[offset:])
        return cls(parts[0], parts[1], author, adm), rest


@dataclass(frozen=True)
class SigKeyPair:
    """An EUF-CMA signature key pair; used for both signer and sanitiser roles."""

    secret: bytes
    public: bytes

    @classmethod
    def generate(cls, rng: DetRng) -> "SigKeyPair":
        seed = rng.randbytes(32)
        priv = Ed25519PrivateKey.from_private_bytes(seed)
        return cls(seed, priv.public_key().public_bytes_raw())

    def sign(self, data: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.secret).sign(data)

    @staticmethod
    def verify(public: bytes, data: bytes, signature: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public).verify(signature, data)
            return True
        except (_BadSig, ValueError):
            return False


def kgen_sig(security: int, rng: DetRng) -> SigKeyPair:
    if security != 128:
        raise ValueError("only the 128-bit security level is supported")
    return SigKeyPair.generate(rng)


def kgen_san(security: int, rng: DetRng) -> SigKeyPair:
    if security != 128:
        raise ValueError("only the 128-bit security level is supported")
    return SigKeyPair.generate(rng)


def _fix_payload(blocks: MessageBlocks, adm: Adm, pk_san: bytes) -> bytes:
    fixed = tuple(
        struct.pack(">H", i) + blocks[i - 1]
        for i in range(1, len(blocks) + 1)
        if i not in adm.indices
    )
    return _FIX_CONTEXT + adm.bitmap() + pk_san + encode_blocks(fixed)


def _full_payload(blocks: MessageBlocks, sig_fix: bytes) -> bytes:
    return _FULL_CONTEXT + encode_blocks(blocks) + sig_fix


def sign(
    blocks: MessageBlocks, sk_sig: SigKeyPair, pk_san: bytes, adm: Adm
) -> SanSignature:
    if len(blocks) < 1:
        raise BadDescriptor("message needs at least one block")
    if adm.block_count != len(blocks):
        raise BadDescriptor("descriptor block count does not match message")
    sig_fix = sk_sig.sign(_fix_payload(blocks, adm, pk_san))
    sig_full = sk_sig.sign(_full_payload(blocks, sig_fix))
    return SanSignature(sig_fix, sig_full, Author.SIGNER, adm)


def verify(
    blocks: MessageBlocks, sig: SanSignature, pk_sig: bytes, pk_san: bytes
) -> bool:
    """1 iff sig_fix holds under pk_sig and sig_full under the author's key.

    Never raises: malformed input verifies to 0.
    """
    try:
        if sig.adm.block_count != len(blocks):
            return False
        if not SigKeyPair.verify(
            pk_sig, _fix_payload(blocks, sig.adm, pk_san), sig.sig_fix
        ):
            return False
        author_key = pk_sig if sig.author == Author.SIGNER else pk_san
        return SigKeyPair.verify(
            author_key, _full_payload(blocks, sig.sig_fix), sig.sig_full
        )
    except Exception:
        return False


def sanit(
    blocks: MessageBlocks,
    mod: Dict[int, bytes],
    sig: SanSignature,
    pk_sig: bytes,
    sk_san: SigKeyPair,
) -> Tuple[MessageBlocks, SanSignature]:
    """Apply MOD to the admissible blocks and re-sign as the sanitiser."""
    if not verify(blocks, sig, pk_sig, sk_san.public):
        raise InvalidSignature("input signature does not verify")
    outside = set(mod) - set(sig.adm.indices)
    if outside:
        raise Inadmissible(f"blocks {sorted(outside)} are not admissible")
    new_blocks = list(blocks)
    for i, replacement in mod.items():
        new_blocks[i - 1] = replacement
    new_blocks = tuple(new_blocks)
    sig_full = sk_san.sign(_full_payload(new_blocks, sig.sig_fix))
    return new_blocks, SanSignature(sig.sig_fix, sig_full, Author.SANITISER, sig.adm)


def modify(blocks: MessageBlocks, mod: Dict[int, bytes]) -> MessageBlocks:
    """MOD(m) without re-signing; used to state expected outputs in tests."""
    out = list(blocks)
    for i, replacement in mod.items():
        out[i - 1] = replacement
    return tuple(out)


def indices_of(blocks_range: Iterable[int]) -> frozenset:
    return frozenset(blocks_range)

"""Deterministic randomness.

Every sampling operation in the package draws from a DetRng so that a run is
reproducible from one seed: identical (scenario, seed) must give byte-identical
traces. The generator is a SHA-256 counter DRBG; independent sub-streams are
derived by label so parties never share a stream.
"""

from __future__ import annotations

import hashlib
import os


class DetRng:
    """SHA-256 counter DRBG. Not thread-safe; one instance per owner."""

    def __init__(self, seed: bytes):
        if not isinstance(seed, bytes) or len(seed) == 0:
            raise ValueError("seed must be non-empty bytes")
        self._key = hashlib.sha256(b"unihand-drbg:" + seed).digest()
        self._counter = 0
        self._buf = b""

    def fork(self, label: str) -> "DetRng":
        """Derive an independent stream keyed by label."""
        return DetRng(self._key + b"/" + label.encode())

    def randbytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbits(self, k: int) -> int:
        if k <= 0:
            raise ValueError("k must be positive")
        nbytes = (k + 7) // 8
        value = int.from_bytes(self.randbytes(nbytes), "big")
        return value >> (nbytes * 8 - k)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = n.bit_length()
        while True:
            value = self.randbits(k)
            if value < n:
                return value

    def randrange(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi)."""
        if hi <= lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo)


def system_rng() -> DetRng:
    """Fresh unpredictable generator for non-reproducible use."""
    return DetRng(os.urandom(32))


def rng_from_hex(seed_hex: str) -> DetRng:
    return DetRng(bytes.fromhex(seed_hex))

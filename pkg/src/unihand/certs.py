"""Identity material and the fixed/modifiable certificate layout.

A certificate is an ordered block list plus the admissible descriptor and its
sanitisable signature. User certificates carry six blocks:

    1 UID          (fixed)   16-byte prime identifier
    2 T_U          (fixed)   subscription window, start(8) || end(8)
    3..6           (admissible) issuance writes (RUID, T_ID*, witness, v);
                   a handover rewrites them as (RUID, witness, v, g^u)

gNB certificates carry (GID | EID, dh_share) with the last two admissible.
Receiving contexts parse the admissible slots positionally.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Tuple

from . import sansig
from .accumulator import AccumulatedElement, NonMembershipWitness
from .errors import MalformedCertificate
from .rng import DetRng
from .sansig import Adm, MessageBlocks, SanSignature

PID_LEN = 32
TID_LEN = 32
KI_LEN = 32
RID_LEN = 32
UID_LEN = 16
GID_LEN = 16
EID_LEN = 16
RUID_LEN = 16

USER_ADM_INDICES = frozenset({3, 4, 5, 6})
GNB_ADM_INDICES = frozenset({2, 3})
GNB_EID_SLOT = 2
GNB_SHARE_SLOT = 3


@dataclass
class UserIdentity:
    """Everything a subscriber holds; uid and t_u are assigned at first
    initial authentication, not at registration."""

    pid: bytes
    tid: bytes
    k_i: bytes
    tid_next: Optional[bytes] = None
    uid: Optional[AccumulatedElement] = None
    t_u: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if len(self.pid) != PID_LEN or len(self.tid) != TID_LEN:
            raise ValueError("pid/tid must be 256-bit")
        if self.pid == self.tid:
            raise ValueError("pid and tid must be sampled independently")
        if len(self.k_i) != KI_LEN:
            raise ValueError("k_i must be 256-bit")
        if self.t_u is not None and self.t_u[0] >= self.t_u[1]:
            raise ValueError("subscription window must be non-empty")


@dataclass
class GnbIdentity:
    gid: bytes
    eid: bytes

    def __post_init__(self):
        if len(self.gid) != GID_LEN or len(self.eid) != EID_LEN:
            raise ValueError("gid/eid must be 128-bit")

    def refresh_eid(self, rng: DetRng) -> bytes:
        self.eid = rng.randbytes(EID_LEN)
        return self.eid


def fresh_ruid(rng: DetRng) -> bytes:
    return rng.randbytes(RUID_LEN)


@dataclass(frozen=True)
class Certificate:
    blocks: MessageBlocks
    adm: Adm
    sig: SanSignature

    @property
    def fixed_blocks(self) -> MessageBlocks:
        return tuple(
            b for i, b in enumerate(self.blocks, 1) if i not in self.adm.indices
        )

    @property
    def modifiable_blocks(self) -> MessageBlocks:
        return tuple(
            b for i, b in enumerate(self.blocks, 1) if i in self.adm.indices
        )

    def verify(self, pk_sig: bytes, pk_san: bytes) -> bool:
        return sansig.verify(self.blocks, self.sig, pk_sig, pk_san)

    def encode(self) -> bytes:
        return sansig.encode_blocks(self.blocks) + self.adm.bitmap() + self.sig.serialize()


def encode_cert(cert: Certificate) -> bytes:
    return cert.encode()


def decode_cert(data: bytes) -> Certificate:
    try:
        blocks, rest = sansig.decode_blocks(data)
        adm, rest = Adm.from_bitmap(rest)
        sig, rest = SanSignature.deserialize(rest)
    except ValueError as exc:
        raise MalformedCertificate(str(exc)) from None
    if rest:
        raise MalformedCertificate("trailing bytes after signature")
    if adm != sig.adm:
        raise MalformedCertificate("descriptor does not match signature")
    if adm.block_count != len(blocks):
        raise MalformedCertificate("descriptor block count mismatch")
    return Certificate(blocks, adm, sig)


def _uid_bytes(uid: int) -> bytes:
    return int(uid).to_bytes(UID_LEN, "big")


def _uid_from_bytes(data: bytes) -> AccumulatedElement:
    if len(data) != UID_LEN:
        raise MalformedCertificate("bad UID block")
    return AccumulatedElement(int.from_bytes(data, "big"))


def _window_bytes(t_u: Tuple[int, int]) -> bytes:
    return struct.pack(">QQ", t_u[0], t_u[1])


def _window_from_bytes(data: bytes) -> Tuple[int, int]:
    if len(data) != 16:
        raise MalformedCertificate("bad validity block")
    return struct.unpack(">QQ", data)


def user_cert_template(
    uid: int,
    t_u: Tuple[int, int],
    ruid: bytes,
    tid_next: bytes,
    wit: NonMembershipWitness,
    version: int,
) -> Tuple[MessageBlocks, Adm]:
    blocks = (
        _uid_bytes(uid),
        _window_bytes(t_u),
        ruid,
        tid_next,
        wit.serialize(),
        struct.pack(">Q", version),
    )
    return blocks, Adm(USER_ADM_INDICES, 6)


def gnb_cert_template(
    gid: bytes, eid: bytes, dh_share: bytes
) -> Tuple[MessageBlocks, Adm]:
    return (gid, eid, dh_share), Adm(GNB_ADM_INDICES, 3)


def parse_gnb_cert(cert: Certificate) -> Tuple[bytes, bytes, bytes]:
    """(gid, eid, dh_share); raises MalformedCertificate on shape violations."""
    if len(cert.blocks) != 3 or cert.adm.indices != GNB_ADM_INDICES:
        raise MalformedCertificate("not a gNB certificate")
    gid, eid, share = cert.blocks
    if len(gid) != GID_LEN:
        raise MalformedCertificate("bad GID block")
    return gid, eid, share


def _user_cert_common(cert: Certificate):
    if len(cert.blocks) != 6 or cert.adm.indices != USER_ADM_INDICES:
        raise MalformedCertificate("not a user certificate")
    uid = _uid_from_bytes(cert.blocks[0])
    t_u = _window_from_bytes(cert.blocks[1])
    return uid, t_u


def parse_user_cert_issuance(cert: Certificate):
    """(uid, t_u, ruid, tid_next, witness, version) as written by the issuer."""
    uid, t_u = _user_cert_common(cert)
    ruid, tid_next, wit_bytes, v_bytes = cert.blocks[2:]
    if len(tid_next) != TID_LEN or len(v_bytes) != 8:
        raise MalformedCertificate("bad issuance blocks")
    try:
        wit = NonMembershipWitness.deserialize(wit_bytes)
    except ValueError as exc:
        raise MalformedCertificate(str(exc)) from None
    return uid, t_u, ruid, tid_next, wit, struct.unpack(">Q", v_bytes)[0]


def parse_user_cert_handover(cert: Certificate):
    """(uid, t_u, ruid, witness, version, dh_share) as rewritten for handover."""
    uid, t_u = _user_cert_common(cert)
    ruid, wit_bytes, v_bytes, share = cert.blocks[2:]
    if len(v_bytes) != 8:
        raise MalformedCertificate("bad version block")
    try:
        wit = NonMembershipWitness.deserialize(wit_bytes)
    except ValueError as exc:
        raise MalformedCertificate(str(exc)) from None
    return uid, t_u, ruid, wit, struct.unpack(">Q", v_bytes)[0], share

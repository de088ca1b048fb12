"""Role state machines: UE, gNB and AuC handlers for initial authentication
(M1..M7 plus the ACK chain), universal handover (HO M1..M3) and revocation.

Handler discipline: every error raised inside a handler freezes the session
(status -> rejected) and emits nothing. Messages addressed to a terminal
session are ghost-processed on a throwaway copy so the outcome is observable
without thawing frozen state. Re-keying of the temporary identity keeps both
the current and the pending alias resolvable until the final ACK lands, which
is what lets a user re-authenticate after a cut run.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from . import sansig
from .accumulator import (
    AccumulatedElement,
    AccumulatorSecret,
    AccumulatorState,
    NonMembershipWitness,
    catch_up,
    gen_acc,
    kgen_acc,
    nonwit_create,
    random_element,
    update_acc,
    verify_nonwit,
)
from .certs import (
    Certificate,
    EID_LEN,
    GID_LEN,
    GNB_EID_SLOT,
    GNB_SHARE_SLOT,
    KI_LEN,
    PID_LEN,
    RID_LEN,
    TID_LEN,
    UserIdentity,
    GnbIdentity,
    decode_cert,
    fresh_ruid,
    gnb_cert_template,
    parse_gnb_cert,
    parse_user_cert_handover,
    parse_user_cert_issuance,
    user_cert_template,
)
from .errors import (
    AbortAuthFailure,
    AbortExpired,
    AbortInvalidCert,
    AbortInvalidSig,
    AbortRevoked,
    AbortShareMismatch,
    AbortTidMismatch,
    AuthFailure,
    DuplicateElement,
    DuplicateRegistration,
    ElementAccumulated,
    InvalidElement,
    MalformedCertificate,
    NoCredential,
    ProtocolAbort,
    UnihandError,
    UnknownTid,
    VersionGap,
)
from .groupcrypto import ae_decrypt, ae_encrypt, dh_keygen, dh_shared, kdf
from .rng import DetRng
from .wire import MsgTag, WireMessage, pack_fields, unpack_fields

FLAG_OK = b"\x01"
DEFAULT_SUBSCRIPTION = 30 * 24 * 3600  # simulated seconds

_M2_CONTEXT = b"unihand.m2\x00"

Reply = Tuple[str, WireMessage]
HandleResult = Tuple[List[Reply], Optional[str]]


class DispatchError(UnihandError):
    """Message cannot be routed to any session; dropped with a trace note."""


class Role(Enum):
    UE = "UE"
    GNB = "gNB"
    AUC = "AuC"


class Status(Enum):
    IN_PROGRESS = "in-progress"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass
class SessionState:
    """Per-run execution state mirroring the security-model session fields."""

    party_id: str
    role: Role
    index: int
    flow: int
    kind: str  # "auth" or "ho"
    sid: bytes = b""
    pid: Optional[bytes] = None
    gid: Optional[bytes] = None
    msg_s: List[bytes] = field(default_factory=list)
    msg_r: List[bytes] = field(default_factory=list)
    k_i: Optional[bytes] = None
    k: Optional[bytes] = None
    status: Status = Status.IN_PROGRESS
    reason: Optional[str] = None
    it: Dict[str, object] = field(default_factory=dict)

    def _check_live(self):
        if self.status is not Status.IN_PROGRESS:
            raise RuntimeError("terminal session state is frozen")

    def accept(self, k: bytes):
        self._check_live()
        self.k = k
        self.status = Status.ACCEPTED

    def reject(self, reason: str):
        self._check_live()
        self.status = Status.REJECTED
        self.reason = reason


@dataclass
class Credential:
    """What a UE holds after initial authentication."""

    cert: Certificate
    wit: NonMembershipWitness
    version: int
    uid: AccumulatedElement
    t_u: Tuple[int, int]
    ruids_used: set = field(default_factory=set)


@dataclass
class RLDelta:
    version: int
    element: AccumulatedElement
    c: int


@dataclass
class RegistryEntry:
    k_i: bytes
    pid: bytes
    pk_san: bytes
    tid_current: bytes
    tid_pending: Optional[bytes] = None
    uid: Optional[AccumulatedElement] = None
    revoked: bool = False


class Party:
    """Shared session plumbing for the three roles."""

    role: Role

    def __init__(self, name: str, group, rng: DetRng):
        self.name = name
        self.group = group
        self.rng = rng
        self.sessions: Dict[int, SessionState] = {}
        self._session_counter = 0
        self.clock = lambda: 0

    def _new_session(self, flow: int, kind: str) -> SessionState:
        if flow in self.sessions:
            raise DispatchError(f"flow {flow} already has a session at {self.name}")
        self._session_counter += 1
        session = SessionState(self.name, self.role, self._session_counter, flow, kind)
        self.sessions[flow] = session
        return session

    def handle(self, sender: str, msg: WireMessage) -> HandleResult:
        """Dispatch one message. Returns (replies, error_note); any handler
        error rejects the session and suppresses output."""
        session = self.sessions.get(msg.flow)
        if session is not None and session.status is not Status.IN_PROGRESS:
            ghost = copy.deepcopy(self)
            ghost.sessions[msg.flow].status = Status.IN_PROGRESS
            try:
                ghost._dispatch(sender, msg)
                note = "ignored-by-terminal-session"
            except UnihandError as exc:
                note = f"{type(exc).__name__}"
            return [], f"frozen:{note}"
        try:
            return self._dispatch(sender, msg), None
        except ProtocolAbort as exc:
            session = self.sessions.get(msg.flow)
            if session is not None and session.status is Status.IN_PROGRESS:
                session.reject(exc.reason + (f"({exc.detail})" if exc.detail else ""))
            return [], exc.reason
        except (UnknownTid, NoCredential) as exc:
            session = self.sessions.get(msg.flow)
            if session is not None and session.status is Status.IN_PROGRESS:
                session.reject(type(exc).__name__)
            return [], type(exc).__name__
        except DispatchError as exc:
            return [], f"undeliverable:{exc}"

    def _dispatch(self, sender: str, msg: WireMessage) -> List[Reply]:
        raise NotImplementedError

    # -- small helpers shared by handlers --------------------------------

    def _recv(self, session: SessionState, msg: WireMessage):
        session.msg_r.append(msg.encode())

    def _send(self, session: SessionState, msg: WireMessage, to: str) -> Reply:
        session.msg_s.append(msg.encode())
        return (to, msg)

    @staticmethod
    def _decrypt(key: bytes, blob: bytes) -> bytes:
        try:
            return ae_decrypt(key, blob)
        except AuthFailure as exc:
            raise AbortAuthFailure(str(exc)) from None


def _m2_binding(tid: bytes, m_a0: bytes, share: bytes) -> bytes:
    return _M2_CONTEXT + pack_fields(tid, m_a0, share)


class UserEquipment(Party):
    role = Role.UE

    def __init__(self, name: str, group, rng: DetRng):
        super().__init__(name, group, rng)
        self.sk_san = sansig.kgen_san(128, rng.fork("san-key"))
        self.identity: Optional[UserIdentity] = None
        self.pk_sig_auc: Optional[bytes] = None
        self.gnb_key_dir: Dict[bytes, bytes] = {}
        self.credential: Optional[Credential] = None

    def install_identity(
        self, identity: UserIdentity, pk_sig_auc: bytes, gnb_key_dir: Dict[bytes, bytes]
    ):
        self.identity = identity
        self.pk_sig_auc = pk_sig_auc
        self.gnb_key_dir = gnb_key_dir

    def _dispatch(self, sender: str, msg: WireMessage) -> List[Reply]:
        if msg.tag == MsgTag.M1:
            return self.on_m1(sender, msg)
        if msg.tag == MsgTag.M7:
            return self.on_m7(sender, msg)
        if msg.tag == MsgTag.HO_M1:
            return self.ho_on_m1(sender, msg)
        if msg.tag == MsgTag.HO_M3:
            return self.ho_on_m3(sender, msg)
        raise DispatchError(f"UE cannot handle {msg.tag.name}")

    def _verify_gnb_broadcast(self, session: SessionState, msg: WireMessage) -> bytes:
        """Common M1/HO-M1 validation; returns the DH share."""
        try:
            cert_bytes, share = unpack_fields(msg.payload, 2)
            cert = decode_cert(cert_bytes)
            gid, _eid, embedded = parse_gnb_cert(cert)
        except (ValueError, MalformedCertificate) as exc:
            raise AbortInvalidCert(str(exc)) from None
        pk_san_gnb = self.gnb_key_dir.get(gid)
        if pk_san_gnb is None:
            raise AbortInvalidCert("unknown gNB identity")
        if not cert.verify(self.pk_sig_auc, pk_san_gnb):
            raise AbortInvalidCert("certificate does not verify")
        if embedded != share:
            # integrity cross-check: signed share must equal the trailing field
            if msg.tag == MsgTag.M1:
                raise AbortShareMismatch("broadcast share differs from signed share")
            raise AbortInvalidCert("share-mismatch")
        session.gid = gid
        return share

    def on_m1(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self._new_session(msg.flow, "auth")
        self._recv(session, msg)
        share = self._verify_gnb_broadcast(session, msg)
        ident = self.identity
        if ident is None:
            raise DispatchError("UE is not registered")
        r_id = self.rng.randbytes(RID_LEN)
        u, g_u = dh_keygen(self.group, self.rng)
        keys = kdf(dh_shared(self.group, u, share))
        m_a0 = ae_encrypt(ident.k_i, ident.pid + r_id + ident.tid, rng=self.rng)
        sigma = self.sk_san.sign(_m2_binding(ident.tid, m_a0, g_u))
        envelope = ae_encrypt(keys.enc_key, pack_fields(m_a0, ident.tid), rng=self.rng)
        session.it.update(
            u=u, r_id=r_id, sk_i=keys.session_key, k_s=keys.enc_key, peer=sender
        )
        session.k_i = ident.k_i
        session.sid += m_a0
        reply = WireMessage(MsgTag.M2, msg.flow, pack_fields(envelope, sigma, g_u))
        return [self._send(session, reply, sender)]

    def on_m7(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "k_s" not in session.it:
            raise DispatchError("M7 without a live session")
        self._recv(session, msg)
        ident = self.identity
        m_a1 = self._decrypt(session.it["k_s"], msg.payload)
        plain = self._decrypt(ident.k_i, m_a1)
        try:
            cert_bytes, tid_star = unpack_fields(plain, 2)
            cert = decode_cert(cert_bytes)
        except (ValueError, MalformedCertificate) as exc:
            raise AbortInvalidCert(str(exc)) from None
        if not cert.verify(self.pk_sig_auc, self.sk_san.public):
            raise AbortInvalidCert("user certificate does not verify")
        try:
            uid, t_u, _ruid, tid_next_cert, wit, version = parse_user_cert_issuance(cert)
        except MalformedCertificate as exc:
            raise AbortInvalidCert(str(exc)) from None
        expected = bytes(a ^ b for a, b in zip(ident.tid, session.it["r_id"]))
        if tid_star != expected or tid_next_cert != tid_star:
            raise AbortTidMismatch("T_ID* is not T_ID xor r_id")
        if wit.witness_version != version:
            raise AbortInvalidCert("witness version differs from certificate version")
        self.credential = Credential(cert, wit, version, uid, t_u)
        old_tid = ident.tid
        ident.tid = tid_star
        ident.tid_next = None
        ident.uid = uid
        ident.t_u = t_u
        ack_inner = ae_encrypt(ident.k_i, FLAG_OK + old_tid, rng=self.rng)
        ack = ae_encrypt(
            session.it["k_s"], pack_fields(ack_inner, old_tid), rng=self.rng
        )
        session.sid += m_a1 + ack_inner
        sk_i = session.it["sk_i"]
        reply = WireMessage(MsgTag.ACK_PRIME, msg.flow, ack)
        result = [self._send(session, reply, sender)]
        session.accept(sk_i)
        return result

    def ho_on_m1(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self._new_session(msg.flow, "ho")
        self._recv(session, msg)
        if self.credential is None:
            raise NoCredential("no certificate to hand over with")
        share = self._verify_gnb_broadcast(session, msg)
        cred = self.credential
        u, g_u = dh_keygen(self.group, self.rng)
        while True:
            ruid = fresh_ruid(self.rng)
            if ruid not in cred.ruids_used:
                break
        cred.ruids_used.add(ruid)
        keys = kdf(dh_shared(self.group, u, share))
        mod = {
            3: ruid,
            4: cred.wit.serialize(),
            5: cred.version.to_bytes(8, "big"),
            6: g_u,
        }
        blocks, sig = sansig.sanit(
            cred.cert.blocks, mod, cred.cert.sig, self.pk_sig_auc, self.sk_san
        )
        cert_star = Certificate(blocks, cred.cert.adm, sig)
        envelope = ae_encrypt(
            keys.enc_key,
            pack_fields(cert_star.encode(), self.sk_san.public),
            rng=self.rng,
        )
        session.it.update(u=u, sk_i=keys.session_key, k_s=keys.enc_key, peer=sender)
        session.sid += msg.encode()
        reply = WireMessage(MsgTag.HO_M2, msg.flow, pack_fields(envelope, g_u))
        out = self._send(session, reply, sender)
        session.sid += reply.encode()
        return [out]

    def ho_on_m3(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "k_s" not in session.it:
            raise DispatchError("HO M3 without a live session")
        self._recv(session, msg)
        plain = self._decrypt(session.it["k_s"], msg.payload)
        try:
            wit_bytes, v_bytes = unpack_fields(plain, 2)
            wit = NonMembershipWitness.deserialize(wit_bytes)
            version = int.from_bytes(v_bytes, "big")
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        if wit.witness_version != version:
            raise AbortAuthFailure("inconsistent witness version")
        self.credential.wit = wit
        self.credential.version = version
        session.sid += msg.encode()
        session.accept(session.it["sk_i"])
        return []


class GNodeB(Party):
    role = Role.GNB

    def __init__(self, name: str, group, rng: DetRng):
        super().__init__(name, group, rng)
        self.sk_san = sansig.kgen_san(128, rng.fork("san-key"))
        self.ident = GnbIdentity(rng.randbytes(GID_LEN), rng.randbytes(EID_LEN))
        self.cert: Optional[Certificate] = None
        self.pk_sig_auc: Optional[bytes] = None
        self.auc_name: Optional[str] = None
        self.ue_key_dir: Dict[bytes, bytes] = {}
        self.rl_history: List[AccumulatorState] = []

    def install_registration(
        self,
        cert: Certificate,
        pk_sig_auc: bytes,
        auc_name: str,
        ue_key_dir: Dict[bytes, bytes],
        rl_history: List[AccumulatorState],
    ):
        self.cert = cert
        self.pk_sig_auc = pk_sig_auc
        self.auc_name = auc_name
        self.ue_key_dir = ue_key_dir
        self.rl_history = list(rl_history)

    def _dispatch(self, sender: str, msg: WireMessage) -> List[Reply]:
        if msg.tag == MsgTag.M2:
            return self.on_m2(sender, msg)
        if msg.tag == MsgTag.M4:
            return self.on_m4(sender, msg)
        if msg.tag == MsgTag.M6:
            return self.on_m6(sender, msg)
        if msg.tag == MsgTag.ACK_PRIME:
            return self.on_ack_prime(sender, msg)
        if msg.tag == MsgTag.HO_M2:
            return self.ho_on_m2(sender, msg)
        raise DispatchError(f"gNB cannot handle {msg.tag.name}")

    def _sanitised_cert(self, mod: Dict[int, bytes]) -> Certificate:
        blocks, sig = sansig.sanit(
            self.cert.blocks, mod, self.cert.sig, self.pk_sig_auc, self.sk_san
        )
        return Certificate(blocks, self.cert.adm, sig)

    def _broadcast(self, flow: int, to_ue: str, tag: MsgTag) -> List[Reply]:
        session = self._new_session(flow, "auth" if tag == MsgTag.M1 else "ho")
        h, g_h = dh_keygen(self.group, self.rng)
        eid = self.ident.refresh_eid(self.rng)
        cert_star = self._sanitised_cert({GNB_EID_SLOT: eid, GNB_SHARE_SLOT: g_h})
        session.it.update(h=h, ue=to_ue)
        msg = WireMessage(tag, flow, pack_fields(cert_star.encode(), g_h))
        if tag == MsgTag.HO_M1:
            session.sid += msg.encode()
        return [self._send(session, msg, to_ue)]

    def emit_m1(self, flow: int, to_ue: str) -> List[Reply]:
        """Start an initial-authentication run toward one UE."""
        return self._broadcast(flow, to_ue, MsgTag.M1)

    def ho_emit_m1(self, flow: int, to_ue: str) -> List[Reply]:
        """Start a universal-handover run toward one UE."""
        return self._broadcast(flow, to_ue, MsgTag.HO_M1)

    def on_m2(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "h" not in session.it:
            raise DispatchError("M2 without a live session")
        self._recv(session, msg)
        try:
            envelope, sigma, g_u = unpack_fields(msg.payload, 3)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        try:
            keys = kdf(dh_shared(self.group, session.it["h"], g_u))
        except InvalidElement as exc:
            raise AbortAuthFailure(str(exc)) from None
        inner = self._decrypt(keys.enc_key, envelope)
        try:
            m_a0, tid = unpack_fields(inner, 2)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        pk_san_ue = self.ue_key_dir.get(tid)
        if pk_san_ue is None:
            raise AbortInvalidSig("no sanitising key registered for this T_ID")
        if not sansig.SigKeyPair.verify(pk_san_ue, _m2_binding(tid, m_a0, g_u), sigma):
            raise AbortInvalidSig("M2 signature does not verify")
        a, g_a = dh_keygen(self.group, self.rng)
        cert_star = self._sanitised_cert({GNB_SHARE_SLOT: g_a})
        session.it.update(
            a=a, sk_i=keys.session_key, k_s=keys.enc_key, m_a0=m_a0, tid=tid
        )
        reply = WireMessage(MsgTag.M3, msg.flow, pack_fields(cert_star.encode(), g_a))
        return [self._send(session, reply, self.auc_name)]

    def on_m4(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "a" not in session.it:
            raise DispatchError("M4 without a live session")
        self._recv(session, msg)
        try:
            cert_bytes, g_b = unpack_fields(msg.payload, 2)
            cert = decode_cert(cert_bytes)
            _gid, _eid, embedded = parse_gnb_cert(cert)
        except (ValueError, MalformedCertificate) as exc:
            raise AbortInvalidCert(str(exc)) from None
        if not cert.verify(self.pk_sig_auc, self.sk_san.public):
            raise AbortInvalidCert("M4 certificate does not verify")
        if embedded != g_b:
            raise AbortShareMismatch("M4 share differs from signed share")
        keys = kdf(dh_shared(self.group, session.it["a"], g_b))
        session.it["k_s_prime"] = keys.enc_key
        envelope = ae_encrypt(
            keys.enc_key,
            pack_fields(session.it["m_a0"], session.it["tid"]),
            rng=self.rng,
        )
        reply = WireMessage(MsgTag.M5, msg.flow, envelope)
        return [self._send(session, reply, self.auc_name)]

    def on_m6(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "k_s_prime" not in session.it:
            raise DispatchError("M6 without a live session")
        self._recv(session, msg)
        m_a1 = self._decrypt(session.it["k_s_prime"], msg.payload)
        envelope = ae_encrypt(session.it["k_s"], m_a1, rng=self.rng)
        reply = WireMessage(MsgTag.M7, msg.flow, envelope)
        return [self._send(session, reply, session.it["ue"])]

    def on_ack_prime(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "k_s_prime" not in session.it:
            raise DispatchError("ACK' without a live session")
        self._recv(session, msg)
        inner = self._decrypt(session.it["k_s"], msg.payload)
        try:
            ack_inner, tid = unpack_fields(inner, 2)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        envelope = ae_encrypt(
            session.it["k_s_prime"], pack_fields(ack_inner, tid), rng=self.rng
        )
        sk_i = session.it["sk_i"]
        reply = WireMessage(MsgTag.ACK_DPRIME, msg.flow, envelope)
        result = [self._send(session, reply, self.auc_name)]
        session.accept(sk_i)
        return result

    def ho_on_m2(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "h" not in session.it:
            raise DispatchError("HO M2 without a live session")
        self._recv(session, msg)
        session.sid += msg.encode()
        try:
            envelope, g_u = unpack_fields(msg.payload, 2)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        try:
            keys = kdf(dh_shared(self.group, session.it["h"], g_u))
        except InvalidElement as exc:
            raise AbortAuthFailure(str(exc)) from None
        inner = self._decrypt(keys.enc_key, envelope)
        try:
            cert_bytes, pk_san_ue = unpack_fields(inner, 2)
            cert = decode_cert(cert_bytes)
        except (ValueError, MalformedCertificate) as exc:
            raise AbortInvalidCert(str(exc)) from None
        if not cert.verify(self.pk_sig_auc, pk_san_ue):
            raise AbortInvalidCert("handover certificate does not verify")
        try:
            uid, t_u, _ruid, wit, v_cert, embedded = parse_user_cert_handover(cert)
        except MalformedCertificate as exc:
            raise AbortInvalidCert(str(exc)) from None
        if embedded != g_u:
            raise AbortInvalidCert("share-mismatch")
        now = self.clock()
        if not t_u[0] <= now < t_u[1]:
            raise AbortExpired(f"subscription window {t_u} at t={now}")
        if wit.witness_version != v_cert:
            raise AbortInvalidCert("witness version differs from certificate version")
        head = self.rl_history[-1]
        if v_cert > head.version:
            raise AbortInvalidCert("certificate claims a future revocation version")
        if v_cert == head.version:
            wit_new = wit
        else:
            try:
                wit_new = catch_up(self.rl_history, wit, uid, v_cert)
            except ElementAccumulated:
                raise AbortRevoked("identifier was revoked since the witness version") from None
        if not verify_nonwit(head, wit_new, uid):
            raise AbortRevoked("non-membership witness does not verify")
        out = ae_encrypt(
            keys.enc_key,
            pack_fields(wit_new.serialize(), head.version.to_bytes(8, "big")),
            rng=self.rng,
        )
        reply = WireMessage(MsgTag.HO_M3, msg.flow, out)
        result = [self._send(session, reply, sender)]
        session.sid += reply.encode()
        session.accept(keys.session_key)
        return result

    def apply_rl_delta(self, delta: RLDelta):
        head = self.rl_history[-1]
        if delta.element in head:
            raise DuplicateElement("delta replays an accumulated element")
        if delta.version != head.version + 1:
            raise VersionGap(f"have v{head.version}, delta is v{delta.version}")
        new = update_acc(head, delta.element)
        if new.c != delta.c:
            raise UnihandError("delta accumulator value mismatch")
        self.rl_history.append(new)


class AuthCenter(Party):
    role = Role.AUC

    def __init__(
        self,
        name: str,
        group,
        rng: DetRng,
        modulus_bits: int = 2048,
        toy_accumulator: bool = False,
        subscription_period: int = DEFAULT_SUBSCRIPTION,
        acc_setup: Optional[Tuple[AccumulatorSecret, int, int]] = None,
    ):
        super().__init__(name, group, rng)
        self.sk_sig = sansig.kgen_sig(128, rng.fork("sig-key"))
        if acc_setup is None:
            acc_setup = kgen_acc(modulus_bits, rng.fork("acc"), toy=toy_accumulator)
        self.acc_secret, _n, g = acc_setup
        self.rl_history: List[AccumulatorState] = [gen_acc(self.acc_secret, (), g)]
        self.subscription_period = subscription_period
        self.registry: Dict[bytes, RegistryEntry] = {}
        self.gnb_registry: Dict[bytes, bytes] = {}
        # shared with gNBs / UEs over the secure registration channel
        self.ue_key_dir: Dict[bytes, bytes] = {}
        self.gnb_key_dir: Dict[bytes, bytes] = {}

    @property
    def rl_head(self) -> AccumulatorState:
        return self.rl_history[-1]

    # -- System initialisation (secure channel) ---------------------------

    def register_gnb(self, pk_san: bytes, gid: bytes) -> Certificate:
        if gid in self.gnb_registry:
            raise DuplicateRegistration(f"gid {gid.hex()} already registered")
        blocks, adm = gnb_cert_template(gid, bytes(EID_LEN), b"")
        sig = sansig.sign(blocks, self.sk_sig, pk_san, adm)
        self.gnb_registry[gid] = pk_san
        self.gnb_key_dir[gid] = pk_san
        return Certificate(blocks, adm, sig)

    def register_ue(self, pk_san: bytes) -> Tuple[bytes, bytes, bytes]:
        while True:
            pid = self.rng.randbytes(PID_LEN)
            tid = self.rng.randbytes(TID_LEN)
            if pid != tid and tid not in self.registry:
                break
        k_i = self.rng.randbytes(KI_LEN)
        self.registry[tid] = RegistryEntry(k_i, pid, pk_san, tid)
        self.ue_key_dir[tid] = pk_san
        return pid, tid, k_i

    # -- Initial authentication -------------------------------------------

    def _dispatch(self, sender: str, msg: WireMessage) -> List[Reply]:
        if msg.tag == MsgTag.M3:
            return self.on_m3(sender, msg)
        if msg.tag == MsgTag.M5:
            return self.on_m5(sender, msg)
        if msg.tag == MsgTag.ACK_DPRIME:
            return self.on_ack_dprime(sender, msg)
        raise DispatchError(f"AuC cannot handle {msg.tag.name}")

    def on_m3(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self._new_session(msg.flow, "auth")
        self._recv(session, msg)
        try:
            cert_bytes, g_a = unpack_fields(msg.payload, 2)
            cert = decode_cert(cert_bytes)
            gid, _eid, embedded = parse_gnb_cert(cert)
        except (ValueError, MalformedCertificate) as exc:
            raise AbortInvalidCert(str(exc)) from None
        pk_san_gnb = self.gnb_registry.get(gid)
        if pk_san_gnb is None:
            raise AbortInvalidCert("unknown gNB identity")
        if not cert.verify(self.sk_sig.public, pk_san_gnb):
            raise AbortInvalidCert("M3 certificate does not verify")
        if embedded != g_a:
            raise AbortInvalidCert("share-mismatch")
        b, g_b = dh_keygen(self.group, self.rng)
        keys = kdf(dh_shared(self.group, b, g_a))
        blocks = sansig.modify(cert.blocks, {GNB_SHARE_SLOT: g_b})
        sig = sansig.sign(blocks, self.sk_sig, pk_san_gnb, cert.adm)
        cert_out = Certificate(blocks, cert.adm, sig)
        session.it.update(k_s_prime=keys.enc_key, gnb=sender)
        session.gid = gid
        reply = WireMessage(MsgTag.M4, msg.flow, pack_fields(cert_out.encode(), g_b))
        return [self._send(session, reply, sender)]

    def _resolve(self, tid: bytes) -> RegistryEntry:
        entry = self.registry.get(tid)
        if entry is None or entry.revoked:
            raise UnknownTid("temporary identity does not resolve")
        return entry

    def on_m5(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "k_s_prime" not in session.it:
            raise DispatchError("M5 without a live session")
        self._recv(session, msg)
        inner = self._decrypt(session.it["k_s_prime"], msg.payload)
        try:
            m_a0, tid = unpack_fields(inner, 2)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        entry = self._resolve(tid)
        plain = self._decrypt(entry.k_i, m_a0)
        if len(plain) != PID_LEN + RID_LEN + TID_LEN:
            raise AbortAuthFailure("inner credential has wrong shape")
        pid, r_id, tid_inner = (
            plain[:PID_LEN],
            plain[PID_LEN : PID_LEN + RID_LEN],
            plain[PID_LEN + RID_LEN :],
        )
        if pid != entry.pid or tid_inner != tid:
            raise AbortAuthFailure("identity binding mismatch")
        tid_next = bytes(a ^ b for a, b in zip(tid, r_id))
        head = self.rl_head
        while True:
            uid = random_element(self.rng)
            if uid not in head:
                break
        wit = nonwit_create(self.acc_secret, head, uid)
        now = self.clock()
        t_u = (now, now + self.subscription_period)
        ruid = fresh_ruid(self.rng)
        blocks, adm = user_cert_template(uid, t_u, ruid, tid_next, wit, head.version)
        sig = sansig.sign(blocks, self.sk_sig, entry.pk_san, adm)
        cert = Certificate(blocks, adm, sig)
        m_a1 = ae_encrypt(entry.k_i, pack_fields(cert.encode(), tid_next), rng=self.rng)
        envelope = ae_encrypt(session.it["k_s_prime"], m_a1, rng=self.rng)
        # re-key the alias set: whatever alias the UE just used becomes
        # current, the fresh T_ID* becomes pending; both resolve until ACK''
        for alias in (entry.tid_current, entry.tid_pending):
            if alias is not None and alias != tid:
                self.registry.pop(alias, None)
                self.ue_key_dir.pop(alias, None)
        entry.tid_current = tid
        entry.tid_pending = tid_next
        entry.uid = uid
        self.registry[tid_next] = entry
        self.ue_key_dir[tid_next] = entry.pk_san
        session.it.update(tid_used=tid)
        session.pid = entry.pid
        session.k_i = entry.k_i
        session.sid += m_a0 + m_a1
        reply = WireMessage(MsgTag.M6, msg.flow, envelope)
        return [self._send(session, reply, sender)]

    def on_ack_dprime(self, sender: str, msg: WireMessage) -> List[Reply]:
        session = self.sessions.get(msg.flow)
        if session is None or "tid_used" not in session.it:
            raise DispatchError("ACK'' without a live session")
        self._recv(session, msg)
        outer = self._decrypt(session.it["k_s_prime"], msg.payload)
        try:
            ack_inner, tid = unpack_fields(outer, 2)
        except ValueError as exc:
            raise AbortAuthFailure(str(exc)) from None
        entry = self._resolve(tid)
        plain = self._decrypt(entry.k_i, ack_inner)
        if len(plain) != 1 + TID_LEN or plain[:1] != FLAG_OK or plain[1:] != tid:
            raise AbortAuthFailure("acknowledgement does not check out")
        if entry.tid_pending is not None:
            # promote the pending alias, retire the acknowledged one
            self.registry.pop(entry.tid_current, None)
            self.ue_key_dir.pop(entry.tid_current, None)
            entry.tid_current = entry.tid_pending
            entry.tid_pending = None
        session.sid += ack_inner
        session.accept(session.it["k_s_prime"])
        return []

    # -- Revocation --------------------------------------------------------

    def revoke(self, uid: int) -> RLDelta:
        uid = AccumulatedElement(uid)
        new = update_acc(self.rl_head, uid)
        self.rl_history.append(new)
        for tid in [
            t for t, e in self.registry.items() if e.uid == uid
        ]:
            self.registry[tid].revoked = True
            self.registry.pop(tid)
            self.ue_key_dir.pop(tid, None)
        return RLDelta(new.version, uid, new.c)

    def uid_of_pid(self, pid: bytes) -> Optional[AccumulatedElement]:
        for entry in self.registry.values():
            if entry.pid == pid:
                return entry.uid
        return None

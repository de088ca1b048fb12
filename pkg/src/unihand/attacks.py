"""Interactive adversary programs for attacks the primitive script actions
cannot express (the adversary must answer mid-protocol with computed values).

Each program registers a malicious endpoint in the roster and drives one
crafted flow against its target. Programs only ever use public material plus
whatever keys the scenario explicitly leaked via corrupt-ltk / corrupt-ask;
they assert those leaks happened so a scenario cannot silently over-empower
the adversary.
"""

from __future__ import annotations

from . import sansig
from .certs import (
    Certificate,
    GNB_EID_SLOT,
    GNB_SHARE_SLOT,
    decode_cert,
    user_cert_template,
)
from .accumulator import AccumulatedElement, NonMembershipWitness
from .errors import ScenarioError
from .groupcrypto import ae_decrypt, ae_encrypt, dh_keygen, dh_shared, kdf
from .wire import MsgTag, WireMessage, pack_fields, unpack_fields

ATTACKER = "mallory"


class AttackParty:
    """Roster endpoint under adversary control; `respond` is installed by the
    launching program."""

    def __init__(self, name: str):
        self.name = name
        self.sessions = {}
        self.respond = lambda sender, msg: []
        self.clock = lambda: 0

    def handle(self, sender: str, msg: WireMessage):
        return self.respond(sender, msg), None


def _attacker(sim) -> AttackParty:
    party = sim.parties.get(ATTACKER)
    if party is None:
        party = AttackParty(ATTACKER)
        sim.parties[ATTACKER] = party
    return party


def _observed_gnb_cert(sim) -> bytes:
    """Certificate bytes from any broadcast already on the public trace."""
    for record in sim.trace.wire_records():
        msg = WireMessage.decode(record.payload)
        if msg.tag in (MsgTag.M1, MsgTag.HO_M1):
            return unpack_fields(msg.payload, 2)[0]
    raise ScenarioError("attack needs an observed gNB broadcast on the trace")


def _require_leak(sim, kind: str, name: str):
    if (kind, name) not in sim.corrupted:
        raise ScenarioError(f"attack requires corrupt-{kind} {name} first")


def kci_forge_m1(sim, ue_name: str):
    """KCI scenario A: the UE's long-term key k_i is leaked, nothing else.
    The adversary replays an observed certificate under its own DH share;
    without the gNB's sanitising key the signed share cannot be rewritten,
    so the UE must reject."""
    _require_leak(sim, "ltk", ue_name)
    attacker = _attacker(sim)
    cert_bytes = _observed_gnb_cert(sim)
    _x, fresh_share = dh_keygen(sim.group, sim.adv_rng)
    flow = sim.new_flow()
    msg = WireMessage(MsgTag.M1, flow, pack_fields(cert_bytes, fresh_share))
    sim.send(attacker.name, ue_name, msg)


def _impersonate_gnb_m1(sim, gnb_name: str, flow: int):
    """Craft a valid M1 using the leaked sanitising key of gnb_name."""
    leaked_san = sim.gnbs[gnb_name].sk_san
    cert = decode_cert(_observed_gnb_cert(sim))
    h, g_h = dh_keygen(sim.group, sim.adv_rng)
    blocks, sig = sansig.sanit(
        cert.blocks,
        {GNB_EID_SLOT: sim.adv_rng.randbytes(16), GNB_SHARE_SLOT: g_h},
        cert.sig,
        sim.auc.sk_sig.public,
        leaked_san,
    )
    cert_star = Certificate(blocks, cert.adm, sig)
    msg = WireMessage(MsgTag.M1, flow, pack_fields(cert_star.encode(), g_h))
    return h, msg


def kci_forge_ma1(sim, ue_name: str, gnb_name: str):
    """KCI scenario B: only the gNB's sanitising key is leaked. The adversary
    fully impersonates the gNB (valid M1, real k_s), but cannot build the
    inner user-certificate envelope without k_i; the UE must reject M7."""
    _require_leak(sim, "ask", gnb_name)
    attacker = _attacker(sim)
    flow = sim.new_flow()
    h, m1 = _impersonate_gnb_m1(sim, gnb_name, flow)

    def respond(sender, msg):
        if msg.tag != MsgTag.M2 or msg.flow != flow:
            return []
        _env, _sigma, g_u = unpack_fields(msg.payload, 3)
        keys = kdf(dh_shared(sim.group, h, g_u))
        fake_ma1 = sim.adv_rng.randbytes(96)  # not decryptable under k_i
        m7 = ae_encrypt(keys.enc_key, fake_ma1, rng=sim.adv_rng)
        return [(ue_name, WireMessage(MsgTag.M7, flow, m7))]

    attacker.respond = respond
    sim.send(attacker.name, ue_name, m1)


def forge_user_cert(sim, ue_name: str, gnb_name: str):
    """Both envelope keys are leaked (k_i and the gNB sanitising key), so the
    adversary can open every layer and craft a well-formed M7 carrying a
    certificate signed under its own key. The UE's final line of defence is
    the signature check against the issuer key, which must reject."""
    _require_leak(sim, "ltk", ue_name)
    _require_leak(sim, "ask", gnb_name)
    attacker = _attacker(sim)
    k_i = sim.ues[ue_name].identity.k_i
    flow = sim.new_flow()
    h, m1 = _impersonate_gnb_m1(sim, gnb_name, flow)
    rogue_signer = sansig.kgen_sig(128, sim.adv_rng.fork("rogue"))

    def respond(sender, msg):
        if msg.tag != MsgTag.M2 or msg.flow != flow:
            return []
        envelope, _sigma, g_u = unpack_fields(msg.payload, 3)
        keys = kdf(dh_shared(sim.group, h, g_u))
        m_a0, tid = unpack_fields(ae_decrypt(keys.enc_key, envelope), 2)
        plain = ae_decrypt(k_i, m_a0)
        r_id = plain[32:64]
        tid_next = bytes(a ^ b for a, b in zip(tid, r_id))
        wit = NonMembershipWitness(1, 1, 0)
        blocks, adm = user_cert_template(
            AccumulatedElement(3),
            (0, 2**40),
            sim.adv_rng.randbytes(16),
            tid_next,
            wit,
            0,
        )
        sig = sansig.sign(blocks, rogue_signer, rogue_signer.public, adm)
        cert = Certificate(blocks, adm, sig)
        m_a1 = ae_encrypt(k_i, pack_fields(cert.encode(), tid_next), rng=sim.adv_rng)
        m7 = ae_encrypt(keys.enc_key, m_a1, rng=sim.adv_rng)
        return [(ue_name, WireMessage(MsgTag.M7, flow, m7))]

    attacker.respond = respond
    sim.send(attacker.name, ue_name, m1)


PROGRAMS = {
    "kci-a": (kci_forge_m1, 1),
    "kci-b": (kci_forge_ma1, 2),
    "forge-cert": (forge_user_cert, 2),
}


def launch(sim, name: str, args):
    entry = PROGRAMS.get(name)
    if entry is None:
        raise ScenarioError(f"unknown attack program {name}")
    program, arity = entry
    if len(args) != arity:
        raise ScenarioError(f"attack {name} takes {arity} argument(s)")
    program(sim, *args)

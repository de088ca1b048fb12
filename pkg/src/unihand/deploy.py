"""One wired deployment (AuC + gNBs + UEs) with a direct message router.

The CLI and the benchmark drive flows through this instead of the adversarial
simulator: no attack surface, but per-party handler timings and per-message
wire sizes are collected. The whole object graph pickles, which is how
`unihand flow --state FILE` keeps a deployment alive across invocations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .accumulator import AccumulatorSecret
from .certs import UserIdentity
from .errors import UnihandError
from .groupcrypto import group_by_name
from .protocol import AuthCenter, GNodeB, Status, UserEquipment
from .rng import DetRng
from .wire import MsgTag


class SimClock:
    """Virtual seconds; advanced once per delivered message."""

    def __init__(self):
        self.now = 0

    def __call__(self) -> int:
        return self.now

    def advance(self, seconds: int = 1):
        self.now += seconds


@dataclass
class FlowReport:
    flow: int
    kind: str
    statuses: Dict[str, str]
    reasons: Dict[str, str]
    notes: List[str]
    per_party_ms: Dict[str, float]
    messages: List[Tuple[str, str, str, int]]  # (tag, sender, receiver, bits)
    wall_ms: float

    @property
    def ok(self) -> bool:
        return all(s == Status.ACCEPTED.value for s in self.statuses.values())


class Deployment:
    def __init__(
        self,
        group_name: str = "p256",
        seed: bytes = b"deployment",
        gnbs: Tuple[str, ...] = ("tower1", "tower2"),
        ues: Tuple[str, ...] = ("alice",),
        modulus_bits: int = 2048,
        toy_accumulator: bool = False,
        subscription_period: int = 30 * 24 * 3600,
        acc_setup: Optional[Tuple[AccumulatorSecret, int, int]] = None,
    ):
        self.group = group_by_name(group_name)
        self.clock = SimClock()
        master = DetRng(seed)
        self.auc = AuthCenter(
            "auc",
            self.group,
            master.fork("party:auc"),
            modulus_bits=modulus_bits,
            toy_accumulator=toy_accumulator,
            subscription_period=subscription_period,
            acc_setup=acc_setup,
        )
        self.parties: Dict[str, object] = {"auc": self.auc}
        self.gnbs: Dict[str, GNodeB] = {}
        self.ues: Dict[str, UserEquipment] = {}
        for name in gnbs:
            gnb = GNodeB(name, self.group, master.fork(f"party:{name}"))
            cert = self.auc.register_gnb(gnb.sk_san.public, gnb.ident.gid)
            gnb.install_registration(
                cert,
                self.auc.sk_sig.public,
                "auc",
                self.auc.ue_key_dir,
                self.auc.rl_history,
            )
            self.gnbs[name] = gnb
            self.parties[name] = gnb
        for name in ues:
            ue = UserEquipment(name, self.group, master.fork(f"party:{name}"))
            pid, tid, k_i = self.auc.register_ue(ue.sk_san.public)
            ue.install_identity(
                UserIdentity(pid, tid, k_i), self.auc.sk_sig.public, self.auc.gnb_key_dir
            )
            self.ues[name] = ue
            self.parties[name] = ue
        for party in self.parties.values():
            party.clock = self.clock
        self.flow_counter = 0

    # -- direct routing ----------------------------------------------------

    def _route(
        self, sender: str, replies, report: FlowReport, drop_tags: Set[MsgTag]
    ):
        queue = [(sender, to, msg) for to, msg in replies]
        while queue:
            frm, to, msg = queue.pop(0)
            encoded = msg.encode()
            report.messages.append((msg.tag.name, frm, to, len(encoded) * 8))
            self.clock.advance()
            if msg.tag in drop_tags:
                report.notes.append(f"dropped {msg.tag.name}")
                drop_tags = drop_tags - {msg.tag}
                continue
            started = time.perf_counter()
            out, note = self.parties[to].handle(frm, msg)
            elapsed = (time.perf_counter() - started) * 1000.0
            report.per_party_ms[to] = report.per_party_ms.get(to, 0.0) + elapsed
            if note:
                report.notes.append(f"{to}: {note}")
            queue.extend((to, nto, nmsg) for nto, nmsg in out)

    def _run_flow(
        self, kind: str, ue: str, gnb: str, drop_tags: Optional[Set[MsgTag]] = None
    ) -> FlowReport:
        if ue not in self.ues or gnb not in self.gnbs:
            raise UnihandError(f"unknown parties {ue}/{gnb}")
        self.flow_counter += 1
        flow = self.flow_counter
        report = FlowReport(flow, kind, {}, {}, [], {}, [], 0.0)
        emit = self.gnbs[gnb].emit_m1 if kind == "auth" else self.gnbs[gnb].ho_emit_m1
        started = time.perf_counter()
        replies = emit(flow, ue)
        report.per_party_ms[gnb] = (time.perf_counter() - started) * 1000.0
        self._route(gnb, replies, report, set(drop_tags or ()))
        report.wall_ms = (time.perf_counter() - started) * 1000.0
        for name in (ue, gnb, "auc"):
            session = self.parties[name].sessions.get(flow)
            if session is not None:
                report.statuses[name] = session.status.value
                if session.reason:
                    report.reasons[name] = session.reason
        return report

    def run_auth(self, ue: str, gnb: str, drop_ack: bool = False) -> FlowReport:
        drops = {MsgTag.ACK_DPRIME} if drop_ack else set()
        return self._run_flow("auth", ue, gnb, drops)

    def run_handover(self, ue: str, gnb: str) -> FlowReport:
        return self._run_flow("handover", ue, gnb)

    def revoke(self, ue: str) -> int:
        user = self.ues.get(ue)
        if user is None or user.credential is None:
            raise UnihandError(f"{ue} holds no revocable identifier")
        delta = self.auc.revoke(user.credential.uid)
        for gnb in self.gnbs.values():
            gnb.apply_rl_delta(delta)
        return delta.version

    def session_key_agreement(self, flow: int, ue: str, gnb: str) -> bool:
        s_ue = self.ues[ue].sessions.get(flow)
        s_gnb = self.gnbs[gnb].sessions.get(flow)
        return (
            s_ue is not None
            and s_gnb is not None
            and s_ue.k is not None
            and s_ue.k == s_gnb.k
        )

"""Deterministic in-memory network with a scriptable adversary.

One Simulator run drives a party roster through scripted flows while the
adversary intercepts the public channel: drop, modify, tamper, replay and
inject act on wire messages by their send index; corruption hooks leak keys;
named attack programs (see attacks.py) mount the interactive impersonations
that primitive actions cannot express. Registration and revocation deltas ride
a secure channel the adversary cannot touch, as assumed for the initialisation
phase.

Time is a virtual clock advanced one tick per delivery, so identical
(scenario, seed) pairs give byte-identical traces.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .accumulator import AccumulatorSecret
from .certs import UserIdentity
from .errors import AlreadyCorrupted, ScenarioError
from .groupcrypto import group_by_name
from .protocol import (
    AuthCenter,
    GNodeB,
    Role,
    SessionState,
    Status,
    UserEquipment,
)
from .rng import DetRng
from .wire import MsgTag, WireMessage, pack_fields, unpack_fields

IDLE_TIMEOUT = 10  # simulated seconds before an unfinished session is noted


# --------------------------------------------------------------------------
# scenario model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Action:
    kind: str
    args: tuple = ()
    kwargs: tuple = ()  # sorted (key, value) pairs to stay hashable

    def kw(self) -> dict:
        return dict(self.kwargs)


@dataclass(frozen=True)
class Expectation:
    check: str  # accepted | rejected | in-progress | error
    target: str
    flow: Optional[int] = None
    reason: Optional[str] = None


@dataclass
class Scenario:
    parties: List[Tuple[str, str]] = field(default_factory=list)  # (role, name)
    actions: List[Action] = field(default_factory=list)
    expectations: List[Expectation] = field(default_factory=list)
    options: Dict[str, str] = field(default_factory=dict)


def parse_scenario(text: str) -> Scenario:
    """Line-oriented UTF-8: one directive per line, # comments."""
    scenario = Scenario()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head, rest = words[0], words[1:]
        try:
            _parse_directive(scenario, head, rest)
        except (ScenarioError, ValueError, IndexError) as exc:
            raise ScenarioError(f"line {lineno}: {raw.strip()!r}: {exc}") from None
    return scenario


def _kv(rest: List[str], known: set) -> Tuple[List[str], dict]:
    plain, kv = [], {}
    for word in rest:
        if "=" in word:
            key, value = word.split("=", 1)
            if key not in known:
                raise ScenarioError(f"unknown option {key}")
            kv[key] = value
        else:
            plain.append(word)
    return plain, kv


def _parse_directive(scenario: Scenario, head: str, rest: List[str]):
    if head == "party":
        role, name = rest
        if role not in ("ue", "gnb", "auc"):
            raise ScenarioError(f"unknown role {role}")
        scenario.parties.append((role, name))
    elif head == "option":
        scenario.options[rest[0]] = rest[1]
    elif head == "flow":
        kind, ue, gnb = rest
        if kind not in ("auth", "handover"):
            raise ScenarioError(f"unknown flow kind {kind}")
        scenario.actions.append(Action("flow", (kind, ue, gnb)))
    elif head == "drop":
        scenario.actions.append(Action("drop", (int(rest[0]),)))
    elif head == "replay":
        plain, kv = _kv(rest, {"hint"})
        hint = int(kv["hint"]) if "hint" in kv else None
        scenario.actions.append(
            Action("replay", (int(plain[0]),), (("hint", hint),))
        )
    elif head == "modify":
        plain, kv = _kv(rest, {"off", "bytes"})
        scenario.actions.append(
            Action(
                "modify",
                (int(plain[0]),),
                (("off", int(kv["off"])), ("bytes", kv["bytes"])),
            )
        )
    elif head == "tamper":
        plain, kv = _kv(rest, {"field"})
        scenario.actions.append(
            Action("tamper", (int(plain[0]),), (("field", kv.get("field", "share")),))
        )
    elif head == "inject":
        _plain, kv = _kv(rest, {"to", "tag", "flow", "hex"})
        pairs = (
            ("flow", int(kv["flow"])),
            ("hex", kv["hex"]),
            ("tag", kv["tag"]),
            ("to", kv["to"]),
        )
        scenario.actions.append(Action("inject", (), pairs))
    elif head == "corrupt-ltk":
        scenario.actions.append(Action("corrupt-ltk", (rest[0],)))
    elif head == "corrupt-ask":
        scenario.actions.append(Action("corrupt-ask", (rest[0],)))
    elif head == "reveal-state":
        scenario.actions.append(Action("reveal-state", (rest[0], int(rest[1]))))
    elif head == "revoke":
        scenario.actions.append(Action("revoke", (rest[0],)))
    elif head == "advance":
        scenario.actions.append(Action("advance", (int(rest[0]),)))
    elif head == "attack":
        scenario.actions.append(Action("attack", tuple(rest)))
    elif head == "expect":
        _parse_expect(scenario, rest)
    else:
        raise ScenarioError(f"unknown directive {head}")


def _parse_expect(scenario: Scenario, rest: List[str]):
    check = rest[0]
    if check == "error":
        scenario.expectations.append(Expectation("error", " ".join(rest[1:])))
        return
    if check not in ("accepted", "rejected", "in-progress"):
        raise ScenarioError(f"unknown expectation {check}")
    plain, kv = _kv(rest[1:], {"flow", "reason"})
    scenario.expectations.append(
        Expectation(
            check,
            plain[0],
            int(kv["flow"]) if "flow" in kv else None,
            kv.get("reason"),
        )
    )


# --------------------------------------------------------------------------
# trace
# --------------------------------------------------------------------------

@dataclass
class TraceRecord:
    step: int
    clock: int
    kind: str  # wire | secure | drop | error | corrupt | reveal | revoke | timeout | note
    sender: str
    receiver: str
    payload: bytes
    note: str = ""
    index: int = -1  # wire send index when kind in (wire, drop)

    def render(self) -> str:
        idx = f"[{self.index}]" if self.index >= 0 else ""
        body = self.payload.hex()
        return (
            f"{self.step:04d} t={self.clock:04d} {self.kind}{idx} "
            f"{self.sender}->{self.receiver} {self.note} {body}"
        ).rstrip()


@dataclass
class TraceLog:
    records: List[TraceRecord] = field(default_factory=list)
    sessions: Dict[str, Dict[int, SessionState]] = field(default_factory=dict)
    corruptions: List[Tuple[int, str, str]] = field(default_factory=list)
    reveals: Dict[Tuple[str, int], dict] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    parties: dict = field(default_factory=dict)  # live objects, not exported

    def wire_records(self) -> List[TraceRecord]:
        return [r for r in self.records if r.kind == "wire"]

    def public_bytes(self) -> List[bytes]:
        return [r.payload for r in self.records if r.kind in ("wire", "drop")]

    def errors(self) -> List[str]:
        return [r.note for r in self.records if r.note]

    def export(self) -> str:
        lines = [r.render() for r in self.records]
        for name in sorted(self.sessions):
            for flow in sorted(self.sessions[name]):
                s = self.sessions[name][flow]
                lines.append(
                    f"final {name} flow={flow} role={s.role.value} kind={s.kind} "
                    f"status={s.status.value} reason={s.reason or '-'} "
                    f"k={(s.k or b'').hex()}"
                )
        return "\n".join(lines) + "\n"

    def session(self, name: str, flow: Optional[int] = None) -> SessionState:
        flows = self.sessions.get(name)
        if not flows:
            raise KeyError(f"no sessions for {name}")
        if flow is None:
            flow = max(flows)
        return flows[flow]


# --------------------------------------------------------------------------
# matching-conversation oracles
# --------------------------------------------------------------------------

def _all_substrings(subset: List[bytes], superset: List[bytes]) -> bool:
    return all(any(s in t for t in superset) for s in subset)


def is_matching_subset(si: SessionState, sj: SessionState) -> bool:
    """The gNB-proxy partnering relation over sent/received message sets."""
    if not sj.msg_r or si.role == sj.role:
        return False
    if sj.role == Role.GNB:
        return _all_substrings(si.msg_r, sj.msg_s) and _all_substrings(
            si.msg_s, sj.msg_r
        )
    if si.role == Role.GNB:
        return _all_substrings(sj.msg_r, si.msg_s) and _all_substrings(
            sj.msg_s, si.msg_r
        )
    return False


def is_matching_session(si: SessionState, sj: SessionState) -> bool:
    """sid-prefix partnering (UE <-> AuC over the authenticated payloads)."""
    if si.role == sj.role or not si.sid or not sj.sid:
        return False
    return si.sid.startswith(sj.sid) or sj.sid.startswith(si.sid)


def _peer_sessions(trace: TraceLog, own: SessionState):
    for name, flows in trace.sessions.items():
        for peer in flows.values():
            if peer is not own:
                yield peer


def assert_matching_subset(trace: TraceLog, party: str, flow: int) -> bool:
    """1 iff some session on the trace is a matching subset of the given one."""
    own = trace.sessions[party][flow]
    return any(is_matching_subset(own, peer) for peer in _peer_sessions(trace, own))


def has_matching_session(trace: TraceLog, party: str, flow: int) -> bool:
    own = trace.sessions[party][flow]
    return any(is_matching_session(own, peer) for peer in _peer_sessions(trace, own))


def check_partnering(trace: TraceLog) -> List[str]:
    """Safety sweep used across the attack suite: every accepted session must
    have an honest partner under one of the two relations. Returns violations
    (empty list == safe)."""
    bad = []
    for name, flows in trace.sessions.items():
        for flow, session in flows.items():
            if session.status is not Status.ACCEPTED:
                continue
            if not (
                assert_matching_subset(trace, name, flow)
                or has_matching_session(trace, name, flow)
            ):
                bad.append(f"{name} flow={flow} accepted without a partner")
    return bad


def scan_identifier_hygiene(trace: TraceLog, secrets: List[bytes]) -> List[str]:
    """Flag any raw occurrence of the given identifier bytes on the public
    channel; legitimate occurrences are always inside AE ciphertexts."""
    hits = []
    for record in trace.records:
        if record.kind not in ("wire", "drop"):
            continue
        for secret in secrets:
            if secret and secret in record.payload:
                hits.append(f"identifier exposed in message {record.index}")
    return hits


# --------------------------------------------------------------------------
# simulator
# --------------------------------------------------------------------------

@dataclass
class _InFlight:
    sender: str
    receiver: str
    data: bytes
    index: int


class Simulator:
    """Executes one scenario deterministically. Public channels pass through
    the adversary's pre-registered filters; sequential adversary actions fire
    whenever the wire is quiet, in script order."""

    def __init__(
        self,
        scenario: Scenario,
        seed: bytes,
        group=None,
        acc_setup: Optional[Tuple[AccumulatorSecret, int, int]] = None,
        modulus_bits: int = 256,
        toy_accumulator: bool = True,
        idle_timeout: int = IDLE_TIMEOUT,
    ):
        self.scenario = scenario
        self.idle_timeout = idle_timeout
        self.master = DetRng(seed)
        self.adv_rng = self.master.fork("adversary")
        group_name = scenario.options.get("group")
        self.group = group or group_by_name(group_name or "p256")
        self.trace = TraceLog()
        self.clock = 0
        self.queue: List[_InFlight] = []
        self.next_index = 0
        self.step = 0
        self.flow_counter = 0
        self.sent: Dict[int, _InFlight] = {}
        self.drops: set = set()
        self.modifies: Dict[int, List[dict]] = {}
        self.corrupted: set = set()
        self.timings: Dict[str, float] = {}

        self.parties: Dict[str, object] = {}
        self.ues: Dict[str, UserEquipment] = {}
        self.gnbs: Dict[str, GNodeB] = {}
        self.auc: Optional[AuthCenter] = None
        self._build_roster(acc_setup, modulus_bits, toy_accumulator)

    # -- roster -----------------------------------------------------------

    def _build_roster(self, acc_setup, modulus_bits, toy_accumulator):
        roster = list(self.scenario.parties)
        if not any(role == "auc" for role, _ in roster):
            roster.insert(0, ("auc", "auc"))
        sub_period = int(
            self.scenario.options.get("subscription-period", 30 * 24 * 3600)
        )
        for role, name in roster:
            if name in self.parties:
                raise ScenarioError(f"duplicate party {name}")
            rng = self.master.fork(f"party:{name}")
            if role == "auc":
                if self.auc is not None:
                    raise ScenarioError("exactly one AuC per scenario")
                self.auc = AuthCenter(
                    name,
                    self.group,
                    rng,
                    modulus_bits=modulus_bits,
                    toy_accumulator=toy_accumulator,
                    subscription_period=sub_period,
                    acc_setup=acc_setup,
                )
                self.parties[name] = self.auc
            elif role == "gnb":
                gnb = GNodeB(name, self.group, rng)
                self.gnbs[name] = gnb
                self.parties[name] = gnb
            else:
                ue = UserEquipment(name, self.group, rng)
                self.ues[name] = ue
                self.parties[name] = ue
        if self.auc is None:
            raise ScenarioError("scenario needs an AuC")
        for party in self.parties.values():
            party.clock = lambda: self.clock
        # system initialisation over the secure channel
        for name, gnb in self.gnbs.items():
            cert = self.auc.register_gnb(gnb.sk_san.public, gnb.ident.gid)
            gnb.install_registration(
                cert,
                self.auc.sk_sig.public,
                self.auc.name,
                self.auc.ue_key_dir,
                self.auc.rl_history,
            )
            self._record("secure", self.auc.name, name, b"", "register-gnb")
        for name, ue in self.ues.items():
            pid, tid, k_i = self.auc.register_ue(ue.sk_san.public)
            ue.install_identity(
                UserIdentity(pid, tid, k_i), self.auc.sk_sig.public, self.auc.gnb_key_dir
            )
            self._record("secure", self.auc.name, name, b"", "register-ue")

    # -- trace plumbing -----------------------------------------------------

    def _record(self, kind, sender, receiver, payload, note="", index=-1):
        self.trace.records.append(
            TraceRecord(self.step, self.clock, kind, sender, receiver, payload, note, index)
        )
        self.step += 1

    def send(self, sender: str, receiver: str, msg: WireMessage):
        data = msg.encode()
        item = _InFlight(sender, receiver, data, self.next_index)
        self.sent[self.next_index] = item
        self.next_index += 1
        self.queue.append(item)

    # -- adversary primitives ----------------------------------------------

    def corrupt_ltk(self, name: str) -> bytes:
        key = ("ltk", name)
        if key in self.corrupted:
            raise AlreadyCorrupted(f"ltk of {name} already leaked")
        ue = self.ues.get(name)
        if ue is None or ue.identity is None:
            raise ScenarioError(f"no long-term key to corrupt at {name}")
        self.corrupted.add(key)
        self.trace.corruptions.append((self.step, "ltk", name))
        self._record("corrupt", "adversary", name, b"", "corrupt-ltk")
        return ue.identity.k_i

    def corrupt_ask(self, name: str):
        key = ("ask", name)
        if key in self.corrupted:
            raise AlreadyCorrupted(f"asymmetric key of {name} already leaked")
        party = self.parties.get(name)
        if party is None:
            raise ScenarioError(f"no such party {name}")
        self.corrupted.add(key)
        self.trace.corruptions.append((self.step, "ask", name))
        self._record("corrupt", "adversary", name, b"", "corrupt-ask")
        return party.sk_sig if isinstance(party, AuthCenter) else party.sk_san

    def reveal_state(self, name: str, flow: int) -> dict:
        party = self.parties.get(name)
        if party is None or flow not in party.sessions:
            raise ScenarioError(f"no session {flow} at {name}")
        key = ("state", name, flow)
        if key in self.corrupted:
            raise AlreadyCorrupted(f"state of {name}/{flow} already revealed")
        self.corrupted.add(key)
        snapshot = dict(party.sessions[flow].it)
        self.trace.reveals[(name, flow)] = snapshot
        self.trace.corruptions.append((self.step, "state", f"{name}/{flow}"))
        self._record("reveal", "adversary", name, b"", f"reveal-state flow={flow}")
        return snapshot

    # -- delivery loop -------------------------------------------------------

    def _deliver_one(self):
        item = self.queue.pop(0)
        self.clock += 1
        data = item.data
        if item.index in self.drops:
            self._record("drop", item.sender, item.receiver, data, "dropped", item.index)
            return
        note_bits = []
        for change in self.modifies.get(item.index, []):
            data = self._apply_modify(data, change)
            note_bits.append(change["kind"])
        receiver = self.parties.get(item.receiver)
        if receiver is None:
            self._record("error", item.sender, item.receiver, data, "no-such-party", item.index)
            return
        try:
            msg = WireMessage.decode(data)
        except ValueError as exc:
            self._record(
                "error", item.sender, item.receiver, data, f"unparseable:{exc}", item.index
            )
            return
        started = time.perf_counter()
        replies, note = receiver.handle(item.sender, msg)
        self.timings[item.receiver] = self.timings.get(item.receiver, 0.0) + (
            time.perf_counter() - started
        )
        if note:
            note_bits.append(note)
        self._record(
            "wire", item.sender, item.receiver, data, ",".join(note_bits), item.index
        )
        for to, reply in replies:
            self.send(item.receiver, to, reply)

    def _apply_modify(self, data: bytes, change: dict) -> bytes:
        if change["kind"] == "modify":
            off, patch = change["off"], change["bytes"]
            if off + len(patch) > len(data):
                raise ScenarioError("modify range outside message")
            return data[:off] + patch + data[off + len(patch) :]
        # tamper: substitute a named field with a fresh valid value
        msg = WireMessage.decode(data)
        if change["field"] != "share":
            raise ScenarioError(f"unknown tamper field {change['field']}")
        counts = {
            MsgTag.M1: 2, MsgTag.M3: 2, MsgTag.M4: 2, MsgTag.HO_M1: 2,
            MsgTag.M2: 3, MsgTag.HO_M2: 2,
        }
        if msg.tag not in counts:
            raise ScenarioError(f"{msg.tag.name} carries no share field")
        fields = unpack_fields(msg.payload, counts[msg.tag])
        fresh = self.group.power(self.adv_rng.randrange(1, self.group.q))
        fields[-1] = fresh
        return WireMessage(msg.tag, msg.flow, pack_fields(*fields)).encode()

    def _drain(self):
        while self.queue:
            self._deliver_one()

    # -- script execution ------------------------------------------------------

    def run(self) -> TraceLog:
        sequential = []
        for action in self.scenario.actions:
            if action.kind == "drop":
                self.drops.add(action.args[0])
            elif action.kind in ("modify", "tamper"):
                change = {"kind": action.kind, **action.kw()}
                if action.kind == "modify":
                    change["bytes"] = bytes.fromhex(change["bytes"])
                self.modifies.setdefault(action.args[0], []).append(change)
            else:
                sequential.append(action)
        for action in sequential:
            self._drain()
            self._run_action(action)
        self._drain()
        self._finish()
        return self.trace

    def _run_action(self, action: Action):
        kind = action.kind
        if kind == "flow":
            self._start_flow(*action.args)
        elif kind == "replay":
            index = action.args[0]
            original = self.sent.get(index)
            if original is None:
                raise ScenarioError(f"replay references unsent message {index}")
            data = original.data
            hint = action.kw().get("hint")
            if hint is not None:
                msg = WireMessage.decode(data)
                data = WireMessage(msg.tag, hint, msg.payload).encode()
            item = _InFlight("adversary", original.receiver, data, self.next_index)
            self.sent[self.next_index] = item
            self.next_index += 1
            self.queue.append(item)
            self._record("note", "adversary", original.receiver, b"", f"replay {index}")
        elif kind == "inject":
            kw = action.kw()
            msg = WireMessage(MsgTag[kw["tag"]], kw["flow"], bytes.fromhex(kw["hex"]))
            self.send("adversary", kw["to"], msg)
            self._record("note", "adversary", kw["to"], b"", "inject")
        elif kind == "corrupt-ltk":
            self.corrupt_ltk(action.args[0])
        elif kind == "corrupt-ask":
            self.corrupt_ask(action.args[0])
        elif kind == "reveal-state":
            self.reveal_state(*action.args)
        elif kind == "revoke":
            self._revoke(action.args[0])
        elif kind == "advance":
            self.clock += action.args[0]
            self._record("note", "clock", "clock", b"", f"advance {action.args[0]}")
        elif kind == "attack":
            from .attacks import launch

            launch(self, action.args[0], action.args[1:])
        else:
            raise ScenarioError(f"unknown action {kind}")

    def new_flow(self) -> int:
        self.flow_counter += 1
        return self.flow_counter

    def _start_flow(self, kind: str, ue: str, gnb: str):
        if ue not in self.ues or gnb not in self.gnbs:
            raise ScenarioError(f"flow references unknown parties {ue}/{gnb}")
        flow = self.new_flow()
        emit = self.gnbs[gnb].emit_m1 if kind == "auth" else self.gnbs[gnb].ho_emit_m1
        for to, msg in emit(flow, ue):
            self.send(gnb, to, msg)

    def _revoke(self, ue_name: str):
        ue = self.ues.get(ue_name)
        if ue is None or ue.credential is None:
            raise ScenarioError(f"{ue_name} has no issued identifier to revoke")
        delta = self.auc.revoke(ue.credential.uid)
        self._record("revoke", self.auc.name, "-", b"", f"revoke v{delta.version}")
        for name, gnb in self.gnbs.items():
            gnb.apply_rl_delta(delta)
            self._record("secure", self.auc.name, name, b"", f"rl-delta v{delta.version}")

    def _finish(self):
        # the wire is quiet, so every unfinished session has exceeded any
        # finite idle budget; note the configured one and leave α untouched
        for name, party in self.parties.items():
            flows = {}
            for flow, session in getattr(party, "sessions", {}).items():
                flows[flow] = session
                if session.status is Status.IN_PROGRESS:
                    self._record(
                        "timeout", name, name, b"",
                        f"flow={flow} idle>{self.idle_timeout}s",
                    )
            if flows:
                self.trace.sessions[name] = flows
        self.trace.timings = dict(self.timings)
        self.trace.parties = dict(self.parties)


def run_scenario(
    scenario: Scenario | str,
    seed: bytes,
    **kwargs,
) -> TraceLog:
    """Parse (if needed) and execute a scenario; returns the trace."""
    if isinstance(scenario, str):
        scenario = parse_scenario(scenario)
    return Simulator(scenario, seed, **kwargs).run()


def evaluate_expectations(scenario: Scenario, trace: TraceLog) -> List[str]:
    """Check every `expect` directive; returns failure strings (empty == pass)."""
    failures = []
    status_map = {
        "accepted": Status.ACCEPTED,
        "rejected": Status.REJECTED,
        "in-progress": Status.IN_PROGRESS,
    }
    for exp in scenario.expectations:
        if exp.check == "error":
            if not any(exp.target in note for note in trace.errors()):
                failures.append(f"expected error {exp.target!r} never recorded")
            continue
        try:
            session = trace.session(exp.target, exp.flow)
        except KeyError:
            failures.append(f"no session for {exp.target}")
            continue
        if session.status is not status_map[exp.check]:
            failures.append(
                f"{exp.target} flow={session.flow}: expected {exp.check}, "
                f"got {session.status.value} ({session.reason})"
            )
            continue
        if exp.reason and exp.reason not in (session.reason or ""):
            failures.append(
                f"{exp.target}: reason {session.reason!r} does not contain {exp.reason!r}"
            )
    return failures

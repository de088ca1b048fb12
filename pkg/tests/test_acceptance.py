"""Acceptance suite: one test per release criterion, each printing a PASS
line with the tolerance it enforces. Run with `pytest tests/test_acceptance.py -s`
to see the lines; every tolerance is pinned here, nothing is deferred.

Expected values marked "enumeration oracle" were computed independently with
builtin pow over the toy modulus n = 253 (see _enumerate_witnesses below,
which recomputes them from scratch every run)."""

import itertools
import time
from collections import Counter

import pytest

from unihand import netsim, sansig
from unihand.accumulator import (
    gen_acc,
    nonwit_create,
    nonwit_update,
    update_acc,
    verify_nonwit,
)
from unihand.bench import run_bench
from unihand.errors import Inadmissible
from unihand.netsim import (
    check_partnering,
    evaluate_expectations,
    parse_scenario,
    run_scenario,
    scan_identifier_hygiene,
)
from unihand.protocol import Status
from unihand.rng import DetRng
from unihand.sansig import Adm, SanSignature

RUNS = 100

HONEST_SCENARIO = """
party auc core
party ue alice
party gnb tower1
party gnb tower2
flow auth alice tower1
flow handover alice tower2
"""

ATTACK_SCENARIOS = [
    "mitm_m1.scn",
    "mitm_m3.scn",
    "mitm_m4.scn",
    "replay_m2.scn",
    "replay_ack2.scn",
    "forge_cu.scn",
    "kci_a.scn",
    "kci_b.scn",
    "revoked_ho.scn",
]


def _bundled(name: str) -> str:
    import importlib.resources

    return (importlib.resources.files("unihand") / "scenarios" / name).read_text()


@pytest.fixture(scope="module")
def honest_traces(prod_acc_setup):
    """The 100 seeded production-parameter runs shared by criteria 1 and 6."""
    scenario = parse_scenario(HONEST_SCENARIO)
    started = time.perf_counter()
    traces = [
        run_scenario(
            scenario,
            b"acceptance-run-%d" % i,
            acc_setup=prod_acc_setup,
            modulus_bits=2048,
        )
        for i in range(RUNS)
    ]
    return traces, time.perf_counter() - started


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def test_criterion_1_honest_flow_correctness(honest_traces):
    """100 seeded initial authentications and 100 handovers, production
    parameters; key agreement and the T_ID* = T_ID xor r_id rollover hold in
    every run; total runtime under 30 s."""
    traces, elapsed = honest_traces
    assert len(traces) == RUNS
    for trace in traces:
        for name in ("alice", "tower1", "core"):
            for session in trace.sessions.get(name, {}).values():
                assert session.status is Status.ACCEPTED, (name, session.reason)
        # initial auth: UE and serving gNB agree on the session key
        assert trace.session("alice", 1).k == trace.session("tower1", 1).k is not None
        # handover: UE and target gNB agree
        assert trace.session("alice", 2).k == trace.session("tower2", 2).k is not None
        # registry rollover: the new alias is exactly T_ID xor r_id
        ue = trace.parties["alice"]
        r_id = trace.session("alice", 1).it["r_id"]
        tid_used = trace.session("core", 1).it["tid_used"]
        assert ue.identity.tid == _xor(tid_used, r_id)
        registry = trace.parties["core"].registry
        assert ue.identity.tid in registry
        assert tid_used not in registry  # retired after ACK''
    assert elapsed < 30.0, f"honest runs took {elapsed:.1f}s"
    print(
        f"\nPASS criterion 1: {RUNS} auth + {RUNS} handover runs accepted, "
        f"keys agree, rollover exact ({elapsed:.1f}s < 30s)"
    )


UNIVERSE = (3, 5, 7, 11, 13)
PRIMES_50 = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)

# frozen output of the enumeration oracle below (recomputed and re-asserted
# every run): witness pairs for the worked example, and the accidental-pass
# census for accumulated elements over every subset of UNIVERSE
WORKED_SOLUTIONS = {(2, 4), (2, 27), (2, 119), (2, 188), (2, 234)}
MEMBER_PASS_TOTAL = 320
MEMBER_PASS_DISTRIBUTION = {0: 32, 2: 16, 6: 16, 12: 16}


def _enumerate_witnesses(c: int, x: int, n: int = 253, g: int = 4):
    """Independent oracle: all (a, d) passing the verification equation,
    by exhaustive search with builtin pow only."""
    return {
        (a, d)
        for a in range(1, x)
        for d in range(n)
        if pow(c, a, n) == (pow(d, x, n) * g) % n
    }


def test_criterion_2_accumulator_oracle_equivalence(toy_acc_setup):
    """Toy moduli, exact: trapdoor and trapdoor-free witnesses agree for every
    X subset of {3,5,7,11,13} and prime x <= 50 outside X; exhaustive brute
    force confirms the worked example c=64, a=2, d=4 over n=253."""
    secret, n, g = toy_acc_setup
    started = time.perf_counter()
    checked = updated = 0
    for r in range(len(UNIVERSE) + 1):
        for subset in itertools.combinations(UNIVERSE, r):
            acc = gen_acc(secret, subset, g)
            for x in PRIMES_50:
                if x in subset:
                    continue
                wit = nonwit_create(secret, acc, x)
                assert verify_nonwit(acc, wit, x), (subset, x)
                checked += 1
                for y in UNIVERSE:
                    if y in subset or y == x:
                        continue
                    acc_next = update_acc(acc, y)
                    moved = nonwit_update(acc, acc_next, y, x, wit)
                    fresh = nonwit_create(secret, acc_next, x)
                    assert verify_nonwit(acc_next, moved, x) is True
                    assert verify_nonwit(acc_next, fresh, x) is True
                    updated += 1

    # worked example, brute force
    acc = gen_acc(secret, {3}, g)
    assert acc.c == 64
    solutions = _enumerate_witnesses(64, 5)
    assert solutions == WORKED_SOLUTIONS
    wit = nonwit_create(secret, acc, 5)
    assert (wit.a, wit.d) == (2, 4) and (2, 4) in solutions

    # recorded exhaustive result for accumulated elements: accidental passes
    # exist only as toy-modulus artifacts, bounded and frozen here
    census = Counter()
    total = 0
    for r in range(1, len(UNIVERSE) + 1):
        for subset in itertools.combinations(UNIVERSE, r):
            acc = gen_acc(secret, subset, g)
            for x in subset:
                hits = len(_enumerate_witnesses(acc.c, x))
                census[hits] += 1
                total += hits
                assert hits / ((x - 1) * n) <= 0.004, (subset, x, hits)
    assert total == MEMBER_PASS_TOTAL
    assert dict(census) == MEMBER_PASS_DISTRIBUTION
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"criterion 2 took {elapsed:.1f}s"
    print(
        f"\nPASS criterion 2: {checked} witness creations and {updated} updates "
        f"verify identically; brute force matches frozen census ({elapsed:.1f}s < 10s)"
    )


def test_criterion_3_sansig_property_suite():
    """1000 random sign/verify and sanit/verify cycles all pass; 100% of
    inadmissible modifications error; 100% of transplant/bit-flip forgeries
    verify to 0. Runtime under 60 s."""
    rng = DetRng(b"sansig-acceptance")
    started = time.perf_counter()
    cycles = 1000
    ok_cycles = inadmissible_errors = inadmissible_tried = 0
    forgeries_rejected = forgeries_tried = 0
    for i in range(cycles):
        n = 1 + rng.randbelow(6)
        blocks = tuple(rng.randbytes(1 + rng.randbelow(24)) for _ in range(n))
        indices = frozenset(
            j + 1 for j in range(n) if rng.randbits(1)
        )
        adm = Adm(indices, n)
        signer = sansig.kgen_sig(128, rng.fork(f"sig{i}"))
        sanitiser = sansig.kgen_san(128, rng.fork(f"san{i}"))
        sig = sansig.sign(blocks, signer, sanitiser.public, adm)
        assert sansig.verify(blocks, sig, signer.public, sanitiser.public)
        if indices:
            mod = {j: rng.randbytes(8) for j in indices if rng.randbits(1)}
            new_blocks, new_sig = sansig.sanit(
                blocks, mod, sig, signer.public, sanitiser
            )
            assert sansig.verify(new_blocks, new_sig, signer.public, sanitiser.public)
        ok_cycles += 1

        fixed = sorted(set(range(1, n + 1)) - indices)
        if fixed:
            inadmissible_tried += 1
            try:
                sansig.sanit(blocks, {fixed[0]: b"evil"}, sig, signer.public, sanitiser)
            except Inadmissible:
                inadmissible_errors += 1

        if i < 100:  # transplant forgeries
            other = tuple(b + b"x" for b in blocks)
            forgeries_tried += 1
            if not sansig.verify(other, sig, signer.public, sanitiser.public):
                forgeries_rejected += 1
            rogue = sansig.kgen_san(128, rng.fork(f"rogue{i}"))
            forgeries_tried += 1
            if not sansig.verify(blocks, sig, signer.public, rogue.public):
                forgeries_rejected += 1

    # exhaustive bit flips over one short signature
    blocks = (b"fixed", b"open")
    signer = sansig.kgen_sig(128, rng.fork("flip-sig"))
    sanitiser = sansig.kgen_san(128, rng.fork("flip-san"))
    sig = sansig.sign(blocks, signer, sanitiser.public, Adm({2}, 2))
    blob = sig.serialize()
    for bit in range(len(blob) * 8):
        corrupt = bytearray(blob)
        corrupt[bit // 8] ^= 1 << (bit % 8)
        forgeries_tried += 1
        try:
            mangled, rest = SanSignature.deserialize(bytes(corrupt))
            if rest:
                raise ValueError("trailing bytes")
        except ValueError:
            forgeries_rejected += 1
            continue
        if not sansig.verify(blocks, mangled, signer.public, sanitiser.public):
            forgeries_rejected += 1

    elapsed = time.perf_counter() - started
    assert ok_cycles == cycles
    assert inadmissible_errors == inadmissible_tried > 0
    assert forgeries_rejected == forgeries_tried > 0
    assert elapsed < 60.0, f"criterion 3 took {elapsed:.1f}s"
    print(
        f"\nPASS criterion 3: {cycles} cycles ok, {inadmissible_errors}/"
        f"{inadmissible_tried} inadmissible errored, {forgeries_rejected}/"
        f"{forgeries_tried} forgeries rejected ({elapsed:.1f}s < 60s)"
    )


def test_criterion_4_attack_regression_suite():
    """Nine adversarial scenarios: the targeted session always ends rejected
    and no accepted session lacks an honest partner. Exact; under 30 s."""
    started = time.perf_counter()
    for name in ATTACK_SCENARIOS:
        scenario = parse_scenario(_bundled(name))
        trace = run_scenario(scenario, b"acceptance-attacks")
        failures = evaluate_expectations(scenario, trace)
        assert not failures, (name, failures)
        assert check_partnering(trace) == [], name
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"criterion 4 took {elapsed:.1f}s"
    print(
        f"\nPASS criterion 4: {len(ATTACK_SCENARIOS)} attack scenarios end in "
        f"rejection, no unpartnered acceptance ({elapsed:.1f}s < 30s)"
    )


def test_criterion_5_desync_resilience():
    """Dropping ACK'' mid-run never locks the subscriber out: the registry
    keeps resolving the pending alias. Exact."""
    scenario = parse_scenario(_bundled("drop_ack.scn"))
    trace = run_scenario(scenario, b"acceptance-desync")
    assert evaluate_expectations(scenario, trace) == []
    assert trace.session("core", 1).status is Status.IN_PROGRESS
    assert trace.session("alice", 2).status is Status.ACCEPTED
    assert trace.session("core", 2).status is Status.ACCEPTED
    print("\nPASS criterion 5: re-authentication succeeds after a dropped ACK''")


def test_criterion_6_identifier_hygiene(honest_traces):
    """The raw bytes of pid and UID never appear on the public channel in any
    of the criterion-1 traces. Exact (128/256-bit values, negligible
    false-positive probability)."""
    traces, _ = honest_traces
    scanned = 0
    for trace in traces:
        ue = trace.parties["alice"]
        identifiers = [
            ue.identity.pid,
            int(ue.credential.uid).to_bytes(16, "big"),
        ]
        hits = scan_identifier_hygiene(trace, identifiers)
        assert hits == [], hits
        scanned += len(trace.wire_records())
    print(
        f"\nPASS criterion 6: pid/UID bytes absent from {scanned} public "
        f"wire messages across {len(traces)} traces"
    )


def test_criterion_7_performance_sanity(prod_acc_setup):
    """One full handover (compute plus simulated transfer) under 78.3 ms with
    a 2048-bit accumulator modulus and a 128-bit-security group; the report
    quotes the published reference rows."""
    report = run_bench(
        10, "p256", 2048, b"acceptance-bench", acc_setup=prod_acc_setup
    )
    ho_ms = report.flow_totals["handover"]
    assert ho_ms < 78.3, f"handover took {ho_ms:.2f} ms"
    text = report.to_text()
    for needle in ("5.516", "5.561", "2109", "3901", "7.83", "not asserted"):
        assert needle in text, needle
    print(
        f"\nPASS criterion 7: handover mean {ho_ms:.2f} ms < 78.3 ms "
        f"(10x published 7.83 ms); reference rows printed"
    )

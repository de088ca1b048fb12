"""Command-line front end: honest flows, attack scenarios, and benchmarks.

    unihand flow auth
    unihand flow handover --state lab.state
    unihand attack --bundled
    unihand bench --iterations 100 --report csv

Seeds come from --seed (hex) or the UNIHAND_SEED environment variable; without
either, a fresh random seed is drawn and printed so a run can be replayed.
"""

from __future__ import annotations

import importlib.resources
import os
import pickle
import sys

import click

from . import bench as bench_mod
from . import netsim
from .deploy import Deployment
from .errors import ScenarioError, UnihandError

BUNDLED = [
    "honest_auth.scn",
    "mitm_m1.scn",
    "mitm_m3.scn",
    "mitm_m4.scn",
    "replay_m2.scn",
    "replay_ack2.scn",
    "forge_cu.scn",
    "kci_a.scn",
    "kci_b.scn",
    "revoked_ho.scn",
    "drop_ack.scn",
]


def _resolve_seed(seed_hex: str | None) -> bytes:
    if seed_hex:
        try:
            return bytes.fromhex(seed_hex)
        except ValueError:
            raise click.UsageError(f"--seed must be hex, got {seed_hex!r}")
    fresh = os.urandom(16)
    click.echo(f"seed: {fresh.hex()}")
    return fresh


def _load_or_build(state, group, modulus_bits, seed_hex) -> Deployment:
    if state and os.path.exists(state):
        with open(state, "rb") as fh:
            deployment = pickle.load(fh)
        if not isinstance(deployment, Deployment):
            raise click.UsageError(f"{state} does not contain a deployment")
        return deployment
    seed = _resolve_seed(seed_hex)
    return Deployment(
        "p256" if group == "prod" else group,
        seed,
        modulus_bits=modulus_bits,
        toy_accumulator=modulus_bits < 1024,
    )


def _save(deployment: Deployment, state):
    if state:
        with open(state, "wb") as fh:
            pickle.dump(deployment, fh)


def _echo_report(report):
    state = "ok" if report.ok else "failed"
    click.echo(f"{report.kind} flow {report.flow}: {state}")
    for name, status in sorted(report.statuses.items()):
        reason = report.reasons.get(name)
        click.echo(f"  {name}: {status}" + (f" ({reason})" if reason else ""))
    for note in report.notes:
        click.echo(f"  note: {note}")


@click.group()
@click.version_option()
def main():
    """Privacy-preserving universal handover: flows, attacks, benchmarks."""


@main.command()
@click.argument("kind", type=click.Choice(["register", "auth", "handover", "revoke"]))
@click.option("--group", type=click.Choice(["prod", "toy"]), default="prod")
@click.option("--modulus-bits", type=int, default=2048, show_default=True)
@click.option("--seed", envvar="UNIHAND_SEED", default=None, help="hex seed")
@click.option("--state", type=click.Path(), default=None,
              help="pickle file keeping the deployment between invocations")
@click.option("--drop-ack", is_flag=True,
              help="drop the final ACK, then re-authenticate (desync demo)")
@click.option("--ue", default="alice", show_default=True)
@click.option("--gnb", default="tower1", show_default=True)
@click.option("--target-gnb", default="tower2", show_default=True,
              help="handover destination cell")
def flow(kind, group, modulus_bits, seed, state, drop_ack, ue, gnb, target_gnb):
    """Run one protocol flow on a fresh or persisted deployment."""
    deployment = _load_or_build(state, group, modulus_bits, seed)
    exit_code = 0
    try:
        if kind == "register":
            click.echo(
                f"registered {len(deployment.ues)} UE(s), {len(deployment.gnbs)} gNB(s); "
                f"revocation list at v{deployment.auc.rl_head.version}"
            )
        elif kind == "auth":
            report = deployment.run_auth(ue, gnb, drop_ack=drop_ack)
            _echo_report(report)
            if drop_ack:
                click.echo("desync-note: final ACK dropped; re-authenticating "
                           "with the rolled identity")
                second = deployment.run_auth(ue, gnb)
                _echo_report(second)
                exit_code = 0 if second.ok else 1
            elif not report.ok:
                exit_code = 1
        elif kind == "handover":
            if deployment.ues[ue].credential is None:
                click.echo("no credential yet; running initial authentication first")
                auth = deployment.run_auth(ue, gnb)
                if not auth.ok:
                    _echo_report(auth)
                    sys.exit(1)
            report = deployment.run_handover(ue, target_gnb)
            _echo_report(report)
            if not report.ok:
                exit_code = 1
        else:  # revoke
            if deployment.ues[ue].credential is None:
                click.echo("no credential yet; running initial authentication first")
                auth = deployment.run_auth(ue, gnb)
                if not auth.ok:
                    _echo_report(auth)
                    sys.exit(1)
            version = deployment.revoke(ue)
            click.echo(f"revoked {ue}; revocation list now at v{version}")
    except UnihandError as exc:
        click.echo(f"error: {exc}", err=True)
        exit_code = 1
    _save(deployment, state)
    sys.exit(exit_code)


@main.command()
@click.argument("scenarios", nargs=-1, type=click.Path(exists=True))
@click.option("--scenario", "named", multiple=True, type=click.Path(exists=True),
              help="scenario file (same as the positional form)")
@click.option("--bundled", is_flag=True, help="run every packaged scenario")
@click.option("--list", "list_only", is_flag=True, help="list packaged scenarios")
@click.option("--seed", envvar="UNIHAND_SEED", default=None, help="hex seed")
def attack(scenarios, named, bundled, list_only, seed):
    """Run attack scenario files; exit 0 iff every expected abort occurred."""
    if list_only:
        for name in BUNDLED:
            click.echo(name)
        return
    todo: list[tuple[str, str]] = []
    for path in list(scenarios) + list(named):
        with open(path, "r", encoding="utf-8") as fh:
            todo.append((path, fh.read()))
    if bundled:
        base = importlib.resources.files("unihand") / "scenarios"
        todo.extend((name, (base / name).read_text()) for name in BUNDLED)
    if not todo:
        raise click.UsageError("give scenario files or --bundled")
    seed_bytes = bytes.fromhex(seed) if seed else b"unihand-attack-suite"
    failures = 0
    for name, text in todo:
        try:
            scenario = netsim.parse_scenario(text)
            trace = netsim.run_scenario(scenario, seed_bytes)
        except ScenarioError as exc:
            raise click.UsageError(f"{name}: {exc}")
        problems = netsim.evaluate_expectations(scenario, trace)
        problems += netsim.check_partnering(trace)
        if problems:
            failures += 1
            click.echo(f"FAIL {name}")
            for problem in problems:
                click.echo(f"  {problem}")
        else:
            click.echo(f"PASS {name}")
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--iterations", type=int, default=50, show_default=True)
@click.option("--group", type=click.Choice(["prod", "toy"]), default="prod")
@click.option("--modulus-bits", type=int, default=2048, show_default=True)
@click.option("--seed", envvar="UNIHAND_SEED", default=None, help="hex seed")
@click.option("--report", "fmt", type=click.Choice(["text", "csv"]), default="text")
@click.option("--compare-backends", is_flag=True,
              help="also time the big-integer kernels on both backends")
def bench(iterations, group, modulus_bits, seed, fmt, compare_backends):
    """Benchmark both protocols and report wire sizes."""
    if iterations < 1:
        raise click.UsageError("--iterations must be >= 1")
    seed_bytes = bytes.fromhex(seed) if seed else b"unihand-bench"
    report = bench_mod.run_bench(
        iterations,
        "p256" if group == "prod" else group,
        modulus_bits,
        seed_bytes,
        with_backend_comparison=compare_backends,
    )
    click.echo(report.to_text() if fmt == "text" else report.to_csv(), nl=False)


if __name__ == "__main__":
    main()

"""Deterministic cost counters and attack success rates per auth mode.

Legs, wire bytes and MD5 call counts are exact and repeatable for a given
``(mode, seed, count)``; elapsed time and throughput are informational.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .fsm import (
    ClientAgent,
    CredentialStore,
    Credentials,
    Mode,
    ServerAgent,
    converse,
    summarize,
)
from .sim import (
    ECHO_PARAMS,
    ScenarioConfig,
    forge_ok_attack,
    offline_dictionary_attack,
    replay_attack,
    run_scenario,
    tamper_authorization_attack,
)
from .transcript import Channel, Transcript

MODES = ("legacy", "mutual", "selective")

NOTES = (
    "Millisecond figures for compilation, encoding, overhead and throughput are "
    "environment-bound; elapsed_ns and handshakes_per_second are measured here and "
    "informational only.",
    "Intruder step counts from a model checker are not reproduced; attacks report "
    "digest trials and injected messages instead.",
    "The 'Analyze' stage row has no defined unit and is omitted.",
    "OfflineDictionary succeeds whenever the password is in the wordlist, in every mode: "
    "the extension adds no protection against offline guessing.",
    "ForgeOk counts single-parameter echo mutations; an unmodified relay of the genuine "
    "200 OK always passes (ForgeOkRelay), since every echoed value is visible on the wire.",
)

_USER = Credentials("alice", "biloxi.com", "pw")


@dataclass
class MetricsReport:
    mode: str
    handshakes_run: int
    legs_per_handshake: int
    bytes_per_handshake: int
    hash_calls_client: int
    hash_calls_server: int
    elapsed_ns: int
    handshakes_per_second: float

    def counters(self) -> dict:
        """The repetition-stable fields."""
        return {k: v for k, v in asdict(self).items() if k not in ("elapsed_ns", "handshakes_per_second")}


@dataclass
class ComparisonReport:
    rows: list[MetricsReport]
    attack_summary: dict[str, float]
    notes: list[str] = field(default_factory=lambda: list(NOTES))

    def __post_init__(self) -> None:
        if sorted(r.mode for r in self.rows) != sorted(MODES):
            raise ValueError("a comparison report has exactly one row per mode")

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "attack_summary": dict(self.attack_summary),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ComparisonReport:
        return cls(
            rows=[MetricsReport(**r) for r in data["rows"]],
            attack_summary=dict(data["attack_summary"]),
            notes=list(data["notes"]),
        )


def handshake_seed(seed: int, mode: str, i: int) -> str:
    """Sub-seed for handshake ``i``; independent of how the batch is sharded."""
    return f"bench:{mode}:{seed}:{i}"


def _shard(mode: str, seed: int, start: int, stop: int) -> tuple[int, int, int, int, int, int]:
    """Run handshakes ``start..stop-1``; return (count, legs, bytes, client, server, failures)."""
    store = CredentialStore([_USER])
    legs = wire = client_calls = server_calls = failures = 0
    for i in range(start, stop):
        rng = random.Random(handshake_seed(seed, mode, i))
        server = ServerAgent(store, random.Random(rng.getrandbits(64)), legacy=mode == "legacy")
        client = ClientAgent(_USER, mode, random.Random(rng.getrandbits(64)))
        transcript = Transcript(f"bench-{mode}", None)
        converse(client, server, Channel(transcript))
        summarize(transcript, client, server)
        if not transcript.accepted:
            failures += 1
        legs += transcript.legs
        wire += transcript.wire_size
        client_calls += client.hash_counter.calls
        server_calls += server.hash_counter.calls
    return stop - start, legs, wire, client_calls, server_calls, failures


def _split(count: int, workers: int) -> list[tuple[int, int]]:
    step, extra = divmod(count, workers)
    bounds, lo = [], 0
    for w in range(workers):
        hi = lo + step + (1 if w < extra else 0)
        if hi > lo:
            bounds.append((lo, hi))
        lo = hi
    return bounds


def run_mode(mode: str, count: int, seed: int, workers: int = 1) -> MetricsReport:
    """Run ``count`` honest handshakes in ``mode`` and aggregate the counters."""
    Mode(mode)
    if count < 1:
        raise ValueError("handshake count must be at least 1")
    workers = max(1, min(workers, count))
    started = time.perf_counter_ns()
    if workers == 1:
        parts = [_shard(mode, seed, 0, count)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_shard, mode, seed, lo, hi) for lo, hi in _split(count, workers)]
            parts = [f.result() for f in futures]
    elapsed = max(time.perf_counter_ns() - started, 1)
    n, legs, wire, client_calls, server_calls, failures = (sum(col) for col in zip(*parts))
    if failures:
        raise RuntimeError(f"{failures} honest {mode} handshakes failed")
    return MetricsReport(
        mode=mode,
        handshakes_run=n,
        legs_per_handshake=legs // n,
        bytes_per_handshake=wire // n,
        hash_calls_client=client_calls,
        hash_calls_server=server_calls,
        elapsed_ns=elapsed,
        handshakes_per_second=n / (elapsed * 1e-9),
    )


def attack_rates(seed: int, runs: int, wordlist_size: int = 16) -> dict[str, float]:
    """Success rate of each attack over ``runs`` seeded mutual-mode victims.

    The dictionary wordlist always contains the password, at a
    seed-dependent position, across all three modes.
    """
    tallies = {k: [0, 0] for k in ("Replay", "ForgeOk", "ForgeOkRelay", "TamperAuthorization",
                                    "OfflineDictionary")}

    def count(key: str, succeeded: bool) -> None:
        tallies[key][0] += int(succeeded)
        tallies[key][1] += 1

    for r in range(runs):
        s = seed * 100_003 + r
        victim = run_scenario("honest-mutual", s)
        count("Replay", replay_attack(victim, s).succeeded)
        for mutation in ECHO_PARAMS:
            count("ForgeOk", forge_ok_attack(victim, mutation).succeeded)
        count("ForgeOkRelay", forge_ok_attack(victim, "none").succeeded)
        count("TamperAuthorization", tamper_authorization_attack(victim, "uri").succeeded)
        words = [f"guess{j}" for j in range(wordlist_size)]
        words[random.Random(s).randrange(wordlist_size)] = "pw"
        for mode in MODES:
            cap = run_scenario(ScenarioConfig("dictionary", mode=mode), s)
            count("OfflineDictionary", offline_dictionary_attack(cap, words).succeeded)
    return {k: (ok / total if total else 0.0) for k, (ok, total) in tallies.items()}


def run_bench(count: int, seed: int, workers: int = 1,
              attack_runs: Optional[int] = None) -> ComparisonReport:
    rows = [run_mode(mode, count, seed, workers) for mode in MODES]
    runs = min(count, 100) if attack_runs is None else attack_runs
    return ComparisonReport(rows, attack_rates(seed, runs))


def format_table(report: ComparisonReport) -> str:
    cols = ("mode", "handshakes_run", "legs_per_handshake", "bytes_per_handshake",
            "hash_calls_client", "hash_calls_server", "elapsed_ns", "handshakes_per_second")
    rows = [asdict(r) for r in report.rows]
    cells = [[c for c in cols]] + [
        [f"{row[c]:.1f}" if isinstance(row[c], float) else str(row[c]) for c in cols] for row in rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)) for r in cells]
    lines.append("")
    lines.append("attack success rates:")
    lines.extend(f"  {k:<20} {v:.3f}" for k, v in report.attack_summary.items())
    lines.append("")
    lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines)

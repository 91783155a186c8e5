"""Command-line entry point.

Exit codes: 0 success, 1 rejection (or an attack that got through under
``--expect defended``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import bench, digest, sim
from .fsm import DEFAULT_REALM, DEFAULT_SERVER_IP, CredentialStore, Credentials, run_handshake
from .transcript import Transcript

# server-side store used when --creds is not given
DEMO_CREDENTIALS = ("alice:biloxi.com:pw",)

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _emit(payload, fmt: str, table: Optional[str] = None) -> None:
    if fmt == "table" and table is not None:
        print(table)
    else:
        print(json.dumps(payload, indent=2))


def _transcript_table(t: Transcript) -> str:
    lines = [f"scenario={t.scenario_name} seed={t.seed} server={t.server_verdict} "
             f"client={t.client_verdict}"]
    for e in t.events:
        first = e.wire_bytes.split(b"\r\n", 1)[0].decode("utf-8", "replace")
        lines.append(f"{e.index:>3} {e.direction.value:<18} {e.annotation.value:<9} {first}")
    return "\n".join(lines)


def cmd_handshake(args) -> int:
    store = CredentialStore.from_file(args.creds) if args.creds else CredentialStore.from_lines(
        DEMO_CREDENTIALS
    )
    creds = Credentials(args.user, args.realm, args.password)
    transcript = run_handshake(
        store, creds, args.mode, args.seed, server_ip=args.server_ip, realm=args.realm
    )
    _emit(transcript.to_dict(), args.format, _transcript_table(transcript))
    return EXIT_OK if transcript.accepted else EXIT_REJECTED


def cmd_attack(args) -> int:
    config = sim.ScenarioConfig(
        "honest-mutual", seed=args.seed, mode=args.mode, username=args.user,
        password=args.password, realm=args.realm, server_ip=args.server_ip,
    )
    if args.attack == "dictionary":
        if not args.wordlist:
            raise UsageError("dictionary attack needs --wordlist")
        if args.transcript:
            with open(args.transcript, encoding="utf-8") as fh:
                victim = Transcript.from_dict(json.load(fh))
        else:
            victim = sim.run_scenario(config, args.seed)
        outcome = sim.offline_dictionary_attack(victim, sim.load_wordlist(args.wordlist))
    elif args.attack == "replay":
        victim = sim.run_scenario(config, args.seed)
        outcome = sim.replay_attack(victim, args.seed, fresh_server=args.fresh_server)
    elif args.attack == "forge-ok":
        if args.mode != "mutual":
            raise UsageError("forge-ok needs --mode mutual")
        victim = sim.run_scenario(config, args.seed)
        outcome = sim.forge_ok_attack(victim, args.mutation or "cnonce")
    else:
        victim = sim.run_scenario(config, args.seed)
        outcome = sim.tamper_authorization_attack(victim, args.mutation or "uri")
    print(json.dumps(outcome.to_dict(), indent=2))
    if args.expect == "defended" and outcome.succeeded:
        return EXIT_REJECTED
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    report = bench.run_bench(args.count, args.seed, args.workers, args.attack_runs)
    _emit(report.to_dict(), args.format, bench.format_table(report))
    return EXIT_OK


def cmd_vectors(args) -> int:
    rows = digest.check_vectors()
    table = "\n".join(
        f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']:<20} {r['expected']}" for r in rows
    )
    _emit(rows, args.format, table)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_REJECTED


def cmd_scenario(args) -> int:
    if args.config:
        config = sim.ScenarioConfig.from_file(args.config)
    elif args.name:
        config = sim.ScenarioConfig(args.name, seed=args.seed if args.seed is not None else 0)
    else:
        raise UsageError("scenario needs --config or --name")
    seed = args.seed if args.seed is not None else config.seed
    transcript = sim.run_scenario(config, seed)
    payload = transcript.to_dict()
    table = _transcript_table(transcript)
    if config.wordlist_path:
        # offline guessing against the transcript just captured
        outcome = sim.offline_dictionary_attack(transcript, sim.load_wordlist(config.wordlist_path))
        payload["attack"] = outcome.to_dict()
        table += "\n" + json.dumps(outcome.to_dict())
    _emit(payload, args.format, table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sipmutual",
        description="SIP digest authentication with server echo-back, plus attack harness.",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, seed_required: bool) -> None:
        p.add_argument("--seed", type=int, required=seed_required)
        p.add_argument("--format", choices=("json", "table"), default="json")

    def party(p) -> None:
        p.add_argument("--mode", choices=bench.MODES, default="mutual")
        p.add_argument("--user", default="alice")
        p.add_argument("--password", default="pw")
        p.add_argument("--realm", default=DEFAULT_REALM)
        p.add_argument("--server-ip", default=DEFAULT_SERVER_IP)

    p = sub.add_parser("handshake", help="run one handshake and print its transcript")
    common(p, seed_required=True)
    party(p)
    p.add_argument("--creds", help="server credentials file (username:realm:password lines)")
    p.set_defaults(func=cmd_handshake)

    p = sub.add_parser("attack", help="run an attack against a seeded victim handshake")
    p.add_argument("attack", choices=("replay", "forge-ok", "tamper-auth", "dictionary"))
    common(p, seed_required=True)
    party(p)
    p.add_argument("--mutation", help="parameter to alter (forge-ok: nonce|cnonce|qop|nc|none)")
    p.add_argument("--wordlist", help="newline-separated candidate passwords")
    p.add_argument("--transcript", help="exported transcript JSON to attack (dictionary only)")
    p.add_argument("--fresh-server", action="store_true", help="replay against a new server")
    p.add_argument("--expect", choices=("defended",), help="exit 1 if the attack succeeds")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="comparison report across legacy, mutual and selective")
    common(p, seed_required=True)
    p.add_argument("--count", "-n", type=int, required=True, help="handshakes per mode")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--attack-runs", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("vectors", help="check the golden digest vectors")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("scenario", help="run a named scenario or a JSON scenario config")
    p.add_argument("--config")
    p.add_argument("--name", choices=sorted(sim.SCENARIOS))
    common(p, seed_required=False)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(f"sipmutual: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, sim.SimError) as exc:
        print(f"sipmutual: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

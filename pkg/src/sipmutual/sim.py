"""Seeded adversarial scenarios over the in-process channel.

The intruder sees and injects wire bytes only: hooks get ``(direction,
bytes)`` and attacks read nothing but transcript events.  Re-driving a
scenario with the same seed reproduces the same bytes, which is how the
active attacks get hold of live actors that match a captured transcript.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from . import codec
from .codec import AuthParams, SipMessage, parse_auth_params, parse_message, serialize_auth_params
from .digest import DigestInputs, compute_response, counting
from .fsm import (
    DEFAULT_REALM,
    DEFAULT_SERVER_IP,
    ClientAgent,
    CredentialStore,
    Credentials,
    Mode,
    ServerAgent,
    converse,
    summarize,
)
from .transcript import (
    Annotation,
    Channel,
    Direction,
    Hook,
    Relay,
    Tamper,
    Transcript,
    TranscriptEvent,
)


class SimError(Exception):
    pass


class UnknownScenario(SimError):
    pass


class NoAuthorizationLeg(SimError):
    pass


class NotMutualMode(SimError):
    pass


class IncompleteTranscript(SimError):
    pass


ATTACKS = ("Replay", "ForgeOk", "OfflineDictionary", "TamperAuthorization")
ECHO_PARAMS = ("nonce", "cnonce", "qop", "nc")
TAMPERABLE = ("nonce", "cnonce", "qop", "nc", "serverip", "uri", "username", "realm", "response")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    seed: int = 0
    mode: str = "mutual"
    username: str = "alice"
    password: str = field(default="pw", repr=False)
    realm: str = DEFAULT_REALM
    server_ip: str = DEFAULT_SERVER_IP
    wordlist_path: Optional[str] = None
    mutation: Optional[str] = None

    def __post_init__(self) -> None:
        Mode(self.mode)

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> ScenarioConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["password"]
        return out


@dataclass(frozen=True)
class AttackOutcome:
    attack: str
    succeeded: bool
    detail: str
    recovered_secret: Optional[str] = field(default=None, repr=False)
    trials: int = 0
    injected_messages: int = 0
    server_reason: Optional[str] = None

    def __post_init__(self) -> None:
        if self.attack not in ATTACKS:
            raise ValueError(f"unknown attack {self.attack!r}")
        if self.recovered_secret is not None and not (
            self.attack == "OfflineDictionary" and self.succeeded
        ):
            raise ValueError("only a successful dictionary attack recovers a secret")

    def to_dict(self) -> dict:
        out = {
            "attack": self.attack,
            "succeeded": self.succeeded,
            "detail": self.detail,
            "trials": self.trials,
            "injected_messages": self.injected_messages,
        }
        if self.server_reason is not None:
            out["server_reason"] = self.server_reason
        if self.recovered_secret is not None:
            out["recovered_secret"] = self.recovered_secret
        return out


# ---------------------------------------------------------------------------
# Simulation plumbing


@dataclass
class Simulation:
    """Live actors plus the channel and transcript of one scenario run."""

    config: ScenarioConfig
    transcript: Transcript
    channel: Channel
    client: ClientAgent
    server: ServerAgent


def _simulate(config: ScenarioConfig, seed: int, name: str, *, mode: Optional[str] = None,
              client_password: Optional[str] = None, hooks: Sequence[Hook] = ()) -> Simulation:
    mode = Mode(mode or config.mode)
    # keyed on mode, not scenario name, so attack scenarios share the honest
    # exchange byte-for-byte up to the point the adversary acts
    rng = random.Random(f"{mode.value}:{seed}")
    store = CredentialStore([Credentials(config.username, config.realm, config.password)])
    server = ServerAgent(
        store, random.Random(rng.getrandbits(64)), server_ip=config.server_ip,
        realm=config.realm, legacy=mode is Mode.LEGACY,
    )
    password = config.password if client_password is None else client_password
    client = ClientAgent(
        Credentials(config.username, config.realm, password), mode,
        random.Random(rng.getrandbits(64)),
    )
    transcript = Transcript(name, seed, config=replace(config, scenario=name, seed=seed, mode=mode.value))
    channel = Channel(transcript, hooks)
    converse(client, server, channel)
    summarize(transcript, client, server)
    return Simulation(transcript.config, transcript, channel, client, server)


def _first_matching(direction: Direction, predicate: Callable[[SipMessage], bool]) -> Hook:
    """Hook factory: fire once on the first message in ``direction`` matching ``predicate``."""
    fired = False

    def decide(d: Direction, wire: bytes) -> Optional[SipMessage]:
        nonlocal fired
        if fired or d is not direction:
            return None
        try:
            msg = parse_message(wire)
        except codec.CodecError:
            return None
        if predicate(msg):
            fired = True
            return msg
        return None

    return decide


def _is_auth_invite(msg: SipMessage) -> bool:
    return msg.method == "INVITE" and msg.has_header("Authorization")


def _is_ok(msg: SipMessage) -> bool:
    return msg.status == 200


def _flip_hex(value: str) -> str:
    last = value[-1]
    swapped = "0123456789abcdef"[(int(last, 16) + 1) % 16]
    return value[:-1] + swapped


def mutate_param(params: AuthParams, name: str) -> AuthParams:
    """Change exactly one parameter to a different but well-formed value."""
    value = params.get(name)
    if value is None:
        raise SimError(f"parameter {name!r} not present")
    if name in ("nonce", "cnonce", "nc", "response"):
        new = _flip_hex(value)
    elif name == "qop":
        return replace(params, qop=("auth-int",) if params.qop != ("auth-int",) else ("auth",))
    elif name == "serverip":
        octets = value.split(".")
        octets[-1] = str((int(octets[-1]) + 1) % 256)
        new = ".".join(octets)
    else:
        new = value + "x"
    return replace(params, **{name: new})


def mutate_header(wire: bytes, header: str, name: str) -> tuple[bytes, str]:
    msg = parse_message(wire)
    raw = msg.header(header)
    if raw is None:
        raise SimError(f"message carries no {header} header")
    before = parse_auth_params(raw)
    after = mutate_param(before, name)
    new_msg = msg.with_header(header, serialize_auth_params(after, header))
    desc = f"{header} {name}: {before.get(name)!r} -> {after.get(name)!r}"
    return codec.serialize_message(new_msg), desc


def _mutating_hook(direction: Direction, predicate, header: str, mutation: str) -> Hook:
    decide = _first_matching(direction, predicate)

    def hook(d: Direction, wire: bytes):
        if decide(d, wire) is None:
            return None
        if mutation == "none":
            return Relay()
        new_wire, desc = mutate_header(wire, header, mutation)
        return Tamper(new_wire, desc)

    return hook


# ---------------------------------------------------------------------------
# Scenarios


def _honest(mode: Optional[str]):
    def run(config: ScenarioConfig, seed: int, name: str) -> Simulation:
        return _simulate(config, seed, name, mode=mode)

    return run


def _wrong_password(config: ScenarioConfig, seed: int, name: str) -> Simulation:
    return _simulate(config, seed, name, client_password=config.password + "-wrong")


def _replay(config: ScenarioConfig, seed: int, name: str) -> Simulation:
    sim = _simulate(config, seed, name)
    index = _authorization_index(sim.transcript)
    _, reason = _inject_replay(sim, index)
    # the verdict of interest is the server's answer to the replayed leg
    sim.transcript.server_verdict = reason
    return sim


def _forge_ok(config: ScenarioConfig, seed: int, name: str) -> Simulation:
    mutation = config.mutation or "cnonce"
    if mutation not in ECHO_PARAMS + ("none",):
        raise ValueError(f"forge-ok mutation must be one of {ECHO_PARAMS + ('none',)}")
    hook = _mutating_hook(Direction.SERVER_TO_CLIENT, _is_ok, "Authentication-Info", mutation)
    return _simulate(config, seed, name, mode="mutual", hooks=[hook])


def _tamper_auth(config: ScenarioConfig, seed: int, name: str) -> Simulation:
    mutation = config.mutation or "uri"
    if mutation not in TAMPERABLE:
        raise ValueError(f"tamper-auth mutation must be one of {TAMPERABLE}")
    hook = _mutating_hook(Direction.CLIENT_TO_SERVER, _is_auth_invite, "Authorization", mutation)
    return _simulate(config, seed, name, hooks=[hook])


SCENARIOS: dict[str, Callable[[ScenarioConfig, int, str], Simulation]] = {
    "honest-mutual": _honest("mutual"),
    "honest-selective": _honest("selective"),
    "honest-legacy": _honest("legacy"),
    "wrong-password": _wrong_password,
    "replay": _replay,
    "forge-ok": _forge_ok,
    "tamper-auth": _tamper_auth,
    # eavesdropping only; the attack itself runs offline on the transcript
    "dictionary": _honest(None),
}


def simulate(config: Union[ScenarioConfig, str], seed: Optional[int] = None) -> Simulation:
    if isinstance(config, str):
        config = ScenarioConfig(config)
    seed = config.seed if seed is None else seed
    try:
        runner = SCENARIOS[config.scenario]
    except KeyError:
        raise UnknownScenario(f"unknown scenario {config.scenario!r}") from None
    return runner(config, seed, config.scenario)


def run_scenario(config: Union[ScenarioConfig, str], seed: Optional[int] = None) -> Transcript:
    """Run a registered scenario and return its transcript."""
    return simulate(config, seed).transcript


# ---------------------------------------------------------------------------
# Attacks


def _parsed(event: TranscriptEvent) -> Optional[SipMessage]:
    try:
        return parse_message(event.wire_bytes)
    except codec.CodecError:
        return None


def _reaches(event: TranscriptEvent, side: str) -> bool:
    if event.annotation is Annotation.DROPPED:
        return False
    if event.direction is Direction.ADVERSARY_INJECTED:
        return event.target == side
    wanted = Direction.CLIENT_TO_SERVER if side == "server" else Direction.SERVER_TO_CLIENT
    return event.direction is wanted


def _authorization_index(transcript: Transcript) -> int:
    for event in transcript.events:
        if _reaches(event, "server"):
            msg = _parsed(event)
            if msg is not None and _is_auth_invite(msg):
                return event.index
    raise NoAuthorizationLeg("transcript has no delivered Authorization leg")


def _inject_replay(sim: Simulation, index: int) -> tuple[Optional[SipMessage], str]:
    """Re-send event ``index`` to the server; log and return its answer."""
    wire = sim.transcript.events[index].wire_bytes
    delivered = sim.channel.inject(wire, "server", original_index=index, description="replay")
    before = len(sim.server.verdicts)
    reply = sim.server.handle(delivered)
    reason = sim.server.verdicts[-1].reason.value if len(sim.server.verdicts) > before else "NoVerdict"
    if reply is None:
        return None, reason
    sim.transcript.append(Direction.SERVER_TO_CLIENT, reply)
    return parse_message(reply), reason


def _check_prefix(victim: Transcript, sim: Simulation) -> None:
    """The re-driven run must match the victim up to the first adversary action."""
    for mine, theirs in zip(sim.transcript.events, victim.events):
        if mine.annotation is not Annotation.DELIVERED or theirs.annotation is not Annotation.DELIVERED:
            return
        if mine.wire_bytes != theirs.wire_bytes:
            raise SimError("re-driven scenario diverged from the captured transcript")


def _rebuild(victim: Transcript) -> Simulation:
    if not isinstance(victim.config, ScenarioConfig):
        raise SimError("transcript carries no scenario config; cannot re-drive it")
    sim = simulate(victim.config, victim.seed)
    _check_prefix(victim, sim)
    return sim


def replay_attack(victim: Transcript, seed: int, *, fresh_server: bool = False) -> AttackOutcome:
    """Re-inject the captured Authorization INVITE.

    By default the target is the very server that handled the victim run
    (re-driven from its seed) with its ledger intact; ``fresh_server``
    targets a new instance, seeded from ``seed``, that never issued the
    nonce.  The attack succeeds iff the server answers 200 OK.
    """
    index = _authorization_index(victim)
    if fresh_server:
        config = victim.config if isinstance(victim.config, ScenarioConfig) else ScenarioConfig("replay")
        store = CredentialStore([Credentials(config.username, config.realm, config.password)])
        server = ServerAgent(
            store, random.Random(f"fresh-server:{seed}"), server_ip=config.server_ip,
            realm=config.realm, legacy=Mode(config.mode) is Mode.LEGACY,
        )
        transcript = Transcript("replay-fresh-server", seed)
        sim = Simulation(config, transcript, Channel(transcript), None, server)
        transcript.events.append(replace(victim.events[index], index=0))
        index = 0
    else:
        sim = _rebuild(victim)
    reply, reason = _inject_replay(sim, index)
    succeeded = reply is not None and reply.status == 200
    target = "fresh server" if fresh_server else "original server"
    status = reply.status if reply is not None else "no answer"
    return AttackOutcome(
        "Replay", succeeded, f"replayed leg {index} to {target}: {status} ({reason})",
        injected_messages=1, server_reason=reason,
    )


def _mode_of(victim: Transcript) -> Optional[Mode]:
    if isinstance(victim.config, ScenarioConfig):
        return Mode(victim.config.mode)
    return None


def forge_ok_attack(victim: Transcript, mutation: str) -> AttackOutcome:
    """Intercept the 200 OK, alter one echoed parameter, deliver it to the client.

    ``mutation="none"`` relays the genuine 200 OK unchanged; it passes,
    because every echoed value was already visible on the wire.
    """
    if mutation not in ECHO_PARAMS + ("none",):
        raise ValueError(f"mutation must be one of {ECHO_PARAMS + ('none',)}")
    if _mode_of(victim) is not Mode.MUTUAL or not victim.accepted:
        raise NotMutualMode("forge-ok needs a successful mutual-mode transcript")
    config = replace(victim.config, mutation=mutation)
    sim = simulate(replace(config, scenario="forge-ok"), victim.seed)
    _check_prefix(victim, sim)
    verdict = sim.client.verdict
    succeeded = verdict is not None and verdict.accepted
    what = "relayed genuine 200 OK" if mutation == "none" else f"mutated echoed {mutation}"
    return AttackOutcome(
        "ForgeOk", succeeded,
        f"{what}; client verdict {verdict.reason.value if verdict else 'none'}",
        injected_messages=1,
    )


def tamper_authorization_attack(victim: Transcript, parameter: str) -> AttackOutcome:
    """Alter one Authorization parameter in flight; succeeds iff the server still accepts."""
    if parameter not in TAMPERABLE:
        raise ValueError(f"parameter must be one of {TAMPERABLE}")
    if not isinstance(victim.config, ScenarioConfig):
        raise SimError("transcript carries no scenario config; cannot re-drive it")
    _authorization_index(victim)
    config = replace(victim.config, scenario="tamper-auth", mutation=parameter)
    sim = simulate(config, victim.seed)
    _check_prefix(victim, sim)
    reason = sim.server.verdicts[-1].reason.value if sim.server.verdicts else "NoVerdict"
    succeeded = reason == "Ok"
    return AttackOutcome(
        "TamperAuthorization", succeeded, f"tampered {parameter}; server verdict {reason}",
        injected_messages=1, server_reason=reason,
    )


def _captured_exchange(victim: Transcript) -> tuple[AuthParams, SipMessage]:
    challenge = request = None
    for event in victim.events:
        msg = _parsed(event)
        if msg is None:
            continue
        if challenge is None and msg.status == 401 and (
            msg.header("WWW-Authenticate") or msg.header("Authenticate")
        ):
            challenge = msg
        elif challenge is not None and msg.is_request and _is_auth_invite(msg):
            request = msg
            break
    if challenge is None or request is None:
        raise IncompleteTranscript("need a 401 challenge followed by an Authorization")
    try:
        auth = parse_auth_params(request.header("Authorization"))
    except codec.CodecError as exc:
        raise IncompleteTranscript(f"captured Authorization unparseable: {exc}") from None
    needed = ("username", "realm", "nonce", "uri", "response")
    if any(auth.get(k) is None for k in needed):
        raise IncompleteTranscript("captured Authorization lacks digest fields")
    return auth, request


def offline_dictionary_attack(victim: Transcript, wordlist: Iterable[str]) -> AttackOutcome:
    """Guess the password from a captured challenge/response pair.

    Every digest input except the password travels in clear, so each
    candidate costs one recomputation and a string compare.  Works the same
    for legacy, selective and mutual transcripts.
    """
    auth, request = _captured_exchange(victim)
    qop = auth.qop[0] if auth.qop else None
    trials = 0
    with counting():
        for candidate in wordlist:
            trials += 1
            guess = compute_response(
                DigestInputs(
                    username=auth.username, realm=auth.realm, password=candidate,
                    method=request.method, digest_uri=auth.uri, nonce=auth.nonce,
                    nc=auth.nc if qop else None, cnonce=auth.cnonce if qop else None, qop=qop,
                )
            )
            if guess == auth.response:
                return AttackOutcome(
                    "OfflineDictionary", True,
                    f"password recovered after {trials} digest trials", candidate, trials,
                )
    return AttackOutcome(
        "OfflineDictionary", False, f"no candidate matched after {trials} digest trials",
        trials=trials,
    )


def load_wordlist(path: Union[str, Path]) -> list[str]:
    """Newline-separated UTF-8 candidates, file order kept."""
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh if line.rstrip("\r\n")]

"""Client and server state machines for the INVITE digest handshake.

Three client modes are supported:

``mutual``
    The client adds a cnonce; after verifying the client the server echoes
    nonce, cnonce, qop and nc in the 200 OK, and the client only accepts
    the server if every echoed value matches its saved copy.
``selective``
    No cnonce and no echo; the client does not authenticate the server.
``legacy``
    Plain qop-less digest, kept as the baseline for comparisons.

The server issues ``nc=00000001`` and its own IP in every extended
challenge and records each accepted ``(nonce, nc)`` pair so it can never
be accepted twice.
"""

from __future__ import annotations

import dataclasses
import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from . import codec
from .codec import AuthParams, SipMessage, parse_auth_params, parse_message, serialize_auth_params
from .digest import (
    DigestInputs,
    HashCounter,
    compute_response,
    counting,
    digest_equal,
    format_nc,
    parse_nc,
)
from .transcript import Channel, Direction, Hook, Transcript

DEFAULT_REALM = "biloxi.com"
DEFAULT_SERVER_IP = "192.0.2.10"
DEFAULT_SERVER_URI = "sip:bob@biloxi.com"
OFFERED_QOP = ("auth", "auth-int")
SELECTED_QOP = "auth"


class FsmError(Exception):
    pass


class InvalidPhase(FsmError):
    pass


class MissingCallId(FsmError):
    pass


class UnparseableChallenge(FsmError):
    pass


class UnsupportedQop(FsmError):
    pass


class Mode(str, enum.Enum):
    LEGACY = "legacy"
    MUTUAL = "mutual"
    SELECTIVE = "selective"


class ServerPhase(str, enum.Enum):
    AWAITING_AUTH = "AwaitingAuth"
    AUTHENTICATED = "Authenticated"
    TERMINATED = "Terminated"


class ClientPhase(str, enum.Enum):
    AWAITING_CHALLENGE = "AwaitingChallenge"
    AWAITING_OK = "AwaitingOk"
    SERVER_AUTHENTICATED = "ServerAuthenticated"
    DONE = "Done"
    TERMINATED = "Terminated"


class Reason(str, enum.Enum):
    OK = "Ok"
    BAD_RESPONSE = "BadResponse"
    NONCE_MISMATCH = "NonceMismatch"
    QOP_MISMATCH = "QopMismatch"
    NC_MISMATCH = "NcMismatch"
    REPLAY_DETECTED = "ReplayDetected"
    UNKNOWN_USER = "UnknownUser"
    IP_MISMATCH = "IpMismatch"
    ECHO_MISMATCH = "EchoMismatch"


@dataclass(frozen=True)
class Verdict:
    reason: Reason

    @property
    def accepted(self) -> bool:
        return self.reason is Reason.OK

    @property
    def outcome(self) -> str:
        return "Accepted" if self.accepted else "Rejected"

    def __str__(self) -> str:
        return f"{self.outcome}/{self.reason.value}"


ACCEPTED = Verdict(Reason.OK)


def _reject(reason: Reason) -> Verdict:
    return Verdict(reason)


# ---------------------------------------------------------------------------
# Credentials


@dataclass(frozen=True)
class Credentials:
    username: str
    realm: str
    password: str = field(repr=False)


class CredentialStore:
    """In-memory ``username -> (realm, password)`` table, exact-match lookups."""

    def __init__(self, entries: Iterable[Credentials] = ()) -> None:
        self._entries: dict[str, Credentials] = {}
        for cred in entries:
            self.add(cred)

    def add(self, cred: Credentials) -> None:
        if cred.username in self._entries:
            raise ValueError(f"duplicate username {cred.username!r}")
        self._entries[cred.username] = cred

    def lookup(self, username: str) -> Optional[Credentials]:
        return self._entries.get(username)

    def __contains__(self, username: str) -> bool:
        return username in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"CredentialStore(users={sorted(self._entries)!r})"

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> CredentialStore:
        """Build from ``username:realm:password`` lines; blanks and ``#`` lines skipped."""
        store = cls()
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split(":", 2)
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected username:realm:password")
            store.add(Credentials(*parts))
        return store

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> CredentialStore:
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


# ---------------------------------------------------------------------------
# Session state


@dataclass
class ServerSessionState:
    call_id: str
    issued_nonce: str
    realm: str
    # None for a legacy (qop-less) challenge
    issued_qop: Optional[tuple[str, ...]]
    issued_nc: Optional[str]
    server_ip: Optional[str]
    nonce_ledger: dict[str, int] = field(default_factory=dict, repr=False)
    phase: ServerPhase = ServerPhase.AWAITING_AUTH
    stored_cnonce: Optional[str] = None
    stored_qop: Optional[str] = None
    reply_headers: tuple[tuple[str, str], ...] = ()

    @property
    def legacy(self) -> bool:
        return self.issued_qop is None

    def reopened(self) -> ServerSessionState:
        """Fresh verification view of a closed session, sharing the ledger."""
        return dataclasses.replace(
            self, phase=ServerPhase.AWAITING_AUTH, stored_cnonce=None, stored_qop=None
        )


@dataclass
class ClientSessionState:
    call_id: str
    mode: Mode
    saved_nonce: str
    saved_realm: str
    saved_qop: Optional[str]
    saved_server_ip: Optional[str]
    nc_counter: int = 1
    generated_cnonce: Optional[str] = None
    phase: ClientPhase = ClientPhase.AWAITING_OK
    request_uri: str = DEFAULT_SERVER_URI
    dialog_headers: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.mode is Mode.SELECTIVE and self.generated_cnonce is not None:
            raise ValueError("selective sessions carry no cnonce")
        if self.nc_counter < 1:
            raise ValueError("nc_counter starts at 1")

    @property
    def saved_nc(self) -> Optional[str]:
        return None if self.mode is Mode.LEGACY else format_nc(self.nc_counter)


# ---------------------------------------------------------------------------
# Message helpers

_DIALOG_HEADERS = ("via", "from", "to", "call-id", "cseq")


def _hex(rng: random.Random, nbytes: int) -> str:
    return rng.randbytes(nbytes).hex()


def _copy_dialog_headers(msg: SipMessage) -> tuple[tuple[str, str], ...]:
    return tuple((n, v) for n, v in msg.headers if n.lower() in _DIALOG_HEADERS)


def _response(status: int, reason: str, dialog: Iterable[tuple[str, str]],
              extra: Iterable[tuple[str, str]] = ()) -> SipMessage:
    headers = list(dialog) + list(extra) + [("Content-Length", "0")]
    return SipMessage.response(status, reason, headers)


def _challenge_params(msg: SipMessage) -> Optional[str]:
    # some traces label the challenge header plain "Authenticate"
    return msg.header("WWW-Authenticate") or msg.header("Authenticate")


def _uri_from_to(value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    if "<" in value and ">" in value:
        return value[value.index("<") + 1 : value.index(">")]
    return value.split(";", 1)[0].strip() or None


def make_invite(username: str, rng: random.Random, request_uri: str = DEFAULT_SERVER_URI,
                realm: str = DEFAULT_REALM) -> SipMessage:
    """Initial unauthenticated INVITE with fresh Call-ID, tag and branch."""
    call_id = f"{_hex(rng, 8)}@client.invalid"
    headers = [
        ("Via", f"SIP/2.0/UDP client.invalid;branch=z9hG4bK{_hex(rng, 6)}"),
        ("From", f"<sip:{username}@{realm}>;tag={_hex(rng, 4)}"),
        ("To", f"<{request_uri}>"),
        ("Call-ID", call_id),
        ("CSeq", "1 INVITE"),
        ("Contact", f"<sip:{username}@client.invalid>"),
        ("Content-Length", "0"),
    ]
    return SipMessage.request("INVITE", request_uri, headers)


# ---------------------------------------------------------------------------
# Server side


def server_make_challenge(
    rng: random.Random,
    server_ip: str,
    invite: SipMessage,
    *,
    realm: str = DEFAULT_REALM,
    legacy: bool = False,
    nonce_ledger: Optional[dict[str, int]] = None,
) -> tuple[SipMessage, ServerSessionState]:
    """Answer an INVITE with a 401 carrying a fresh 128-bit nonce.

    The extended challenge offers ``qop="auth,auth-int"`` and adds the
    server IP and ``nc=00000001``; the legacy one carries realm, nonce and
    algorithm only.
    """
    call_id = invite.header("Call-ID")
    if not call_id:
        raise MissingCallId("INVITE has no Call-ID")
    nonce = _hex(rng, 16)
    if legacy:
        params = AuthParams(realm=realm, nonce=nonce, algorithm="MD5")
        state = ServerSessionState(call_id, nonce, realm, None, None, None)
    else:
        nc = format_nc(1)
        params = AuthParams(
            realm=realm, qop=OFFERED_QOP, serverip=server_ip, nonce=nonce, nc=nc, algorithm="MD5"
        )
        state = ServerSessionState(call_id, nonce, realm, OFFERED_QOP, nc, server_ip)
    if nonce_ledger is not None:
        state.nonce_ledger = nonce_ledger
    header = serialize_auth_params(params, "WWW-Authenticate")
    challenge = _response(
        401, "Unauthorized", _copy_dialog_headers(invite), [("WWW-Authenticate", header)]
    )
    return challenge, state


def _check_authorization(state: ServerSessionState, store: CredentialStore,
                         request: SipMessage) -> tuple[Verdict, Optional[AuthParams]]:
    raw = request.header("Authorization")
    if raw is None:
        return _reject(Reason.BAD_RESPONSE), None
    try:
        auth = parse_auth_params(raw)
    except codec.CodecError:
        return _reject(Reason.BAD_RESPONSE), None

    cred = store.lookup(auth.username) if auth.username is not None else None
    if cred is None:
        return _reject(Reason.UNKNOWN_USER), auth
    if auth.nonce is None or auth.nonce != state.issued_nonce:
        return _reject(Reason.NONCE_MISMATCH), auth

    if state.legacy:
        if auth.qop is not None or auth.nc is not None:
            return _reject(Reason.QOP_MISMATCH), auth
        if state.nonce_ledger.get(auth.nonce, 0) >= 1:
            return _reject(Reason.REPLAY_DETECTED), auth
        nc_value = 1
    else:
        if (
            auth.qop is None
            or len(auth.qop) != 1
            or auth.qop[0] not in state.issued_qop
            or auth.qop[0] != SELECTED_QOP
        ):
            return _reject(Reason.QOP_MISMATCH), auth
        if auth.nc is None or auth.nc != state.issued_nc:
            return _reject(Reason.NC_MISMATCH), auth
        nc_value = parse_nc(auth.nc)
        if nc_value <= state.nonce_ledger.get(auth.nonce, 0):
            return _reject(Reason.REPLAY_DETECTED), auth
        if auth.serverip is None or auth.serverip != state.server_ip:
            return _reject(Reason.IP_MISMATCH), auth

    if auth.response is None or auth.uri is None or auth.uri != request.uri:
        return _reject(Reason.BAD_RESPONSE), auth
    # the realm is a digest input; a swapped one must not slip past via the store
    if auth.realm != state.realm:
        return _reject(Reason.BAD_RESPONSE), auth
    expected = compute_response(
        DigestInputs(
            username=cred.username,
            realm=cred.realm,
            password=cred.password,
            method=request.method,
            digest_uri=auth.uri,
            nonce=auth.nonce,
            nc=auth.nc,
            cnonce=auth.cnonce,
            qop=None if state.legacy else auth.qop[0],
        )
    )
    if not digest_equal(expected, auth.response):
        return _reject(Reason.BAD_RESPONSE), auth
    state.nonce_ledger[auth.nonce] = nc_value
    return ACCEPTED, auth


def server_verify_authorization(
    state: ServerSessionState, store: CredentialStore, auth_invite: SipMessage
) -> tuple[Verdict, SipMessage]:
    """Check an authenticated INVITE; answer 200 OK (with echo) or 403.

    Checks run in a fixed order and the first failure is reported:
    unknown user, nonce, qop, nc, replay, server IP, then uri, realm and
    the response digest.
    The digest is only recomputed once every compare step has passed.
    """
    if state.phase is not ServerPhase.AWAITING_AUTH:
        raise InvalidPhase(f"session {state.call_id!r} is {state.phase.value}")
    verdict, auth = _check_authorization(state, store, auth_invite)
    state.reply_headers = _copy_dialog_headers(auth_invite)
    if not verdict.accepted:
        state.phase = ServerPhase.TERMINATED
        return verdict, _response(403, "Forbidden", state.reply_headers)
    state.phase = ServerPhase.AUTHENTICATED
    state.stored_cnonce = auth.cnonce
    state.stored_qop = None if state.legacy else auth.qop[0]
    return verdict, server_make_ok_echo(state)


def server_make_ok_echo(state: ServerSessionState) -> SipMessage:
    """200 OK for an authenticated session.

    A mutual session (one that presented a cnonce) gets an
    Authentication-Info header echoing nonce, cnonce, qop and nc verbatim
    from the saved state; selective and legacy sessions get a bare 200 OK.
    """
    if state.phase is not ServerPhase.AUTHENTICATED:
        raise InvalidPhase(f"session {state.call_id!r} is {state.phase.value}")
    extra = []
    if state.stored_cnonce is not None:
        echo = AuthParams(
            qop=(state.stored_qop,),
            nonce=state.issued_nonce,
            nc=state.issued_nc,
            cnonce=state.stored_cnonce,
        )
        extra.append(("Authentication-Info", serialize_auth_params(echo, "Authentication-Info")))
    return _response(200, "OK", state.reply_headers, extra)


# ---------------------------------------------------------------------------
# Client side


def client_handle_challenge(
    creds: Credentials,
    mode: Union[Mode, str],
    challenge: SipMessage,
    rng: random.Random,
    *,
    invite: Optional[SipMessage] = None,
) -> tuple[SipMessage, ClientSessionState]:
    """Answer a 401 with an authenticated INVITE.

    Saves the challenge's nonce, server IP and the selected qop, sets the
    nonce count to one and, in mutual mode, draws a fresh 64-bit cnonce.
    The realm used is the one the challenge announces.
    """
    mode = Mode(mode)
    if challenge.is_request or challenge.status != 401:
        raise UnparseableChallenge("expected a 401 response")
    raw = _challenge_params(challenge)
    if raw is None:
        raise UnparseableChallenge("401 carries no WWW-Authenticate header")
    try:
        offered = parse_auth_params(raw)
    except codec.CodecError as exc:
        raise UnparseableChallenge(str(exc)) from None
    if offered.realm is None or offered.nonce is None:
        raise UnparseableChallenge("challenge lacks realm or nonce")
    call_id = challenge.header("Call-ID")
    if not call_id:
        raise UnparseableChallenge("challenge lacks Call-ID")

    if invite is not None:
        request_uri = invite.uri
        base = [(n, v) for n, v in invite.headers if n.lower() != "authorization"]
    else:
        request_uri = _uri_from_to(challenge.header("To")) or DEFAULT_SERVER_URI
        base = list(_copy_dialog_headers(challenge)) + [("Content-Length", "0")]

    nc_counter = 1
    if mode is Mode.LEGACY:
        qop = nc = cnonce = None
    else:
        if not offered.qop or SELECTED_QOP not in offered.qop:
            raise UnsupportedQop(f"challenge offers qop {offered.qop!r}, need {SELECTED_QOP!r}")
        qop = SELECTED_QOP
        nc = format_nc(nc_counter)
        cnonce = _hex(rng, 8) if mode is Mode.MUTUAL else None

    response = compute_response(
        DigestInputs(
            username=creds.username,
            realm=offered.realm,
            password=creds.password,
            method="INVITE",
            digest_uri=request_uri,
            nonce=offered.nonce,
            nc=nc,
            cnonce=cnonce,
            qop=qop,
        )
    )
    serverip = None if mode is Mode.LEGACY else offered.serverip
    auth = AuthParams(
        realm=offered.realm,
        qop=(qop,) if qop else None,
        serverip=serverip,
        nonce=offered.nonce,
        nc=nc,
        username=creds.username,
        uri=request_uri,
        cnonce=cnonce,
        response=response,
        algorithm="MD5",
    )

    headers = []
    for name, value in base:
        key = name.lower()
        if key == "cseq":
            value = "2 INVITE"
        elif key == "via":
            value = f"SIP/2.0/UDP client.invalid;branch=z9hG4bK{_hex(rng, 6)}"
        elif key == "content-length":
            headers.append(("Authorization", serialize_auth_params(auth, "Authorization")))
        headers.append((name, value))
    if not any(n.lower() == "authorization" for n, _ in headers):
        headers.append(("Authorization", serialize_auth_params(auth, "Authorization")))

    state = ClientSessionState(
        call_id=call_id,
        mode=mode,
        saved_nonce=offered.nonce,
        saved_realm=offered.realm,
        saved_qop=qop,
        saved_server_ip=serverip,
        nc_counter=nc_counter,
        generated_cnonce=cnonce,
        request_uri=request_uri,
    )
    return SipMessage.request("INVITE", request_uri, headers), state


def client_verify_ok(state: ClientSessionState, ok: SipMessage) -> Verdict:
    """Decide whether the server is authenticated by its 200 OK.

    Mutual mode demands nonce, cnonce, qop and nc in the echo, each equal
    to the client's saved copy.  Selective and legacy clients accept any
    200 OK.
    """
    if state.phase is not ClientPhase.AWAITING_OK:
        raise InvalidPhase(f"client session is {state.phase.value}")
    if ok.is_request or ok.status != 200:
        state.phase = ClientPhase.TERMINATED
        return _reject(Reason.ECHO_MISMATCH)
    state.dialog_headers = _copy_dialog_headers(ok)
    if state.mode is not Mode.MUTUAL:
        state.phase = ClientPhase.DONE
        return ACCEPTED

    raw = ok.header("Authentication-Info")
    try:
        echo = parse_auth_params(raw) if raw is not None else None
    except codec.CodecError:
        echo = None
    expected = {
        "nonce": state.saved_nonce,
        "cnonce": state.generated_cnonce,
        "qop": state.saved_qop,
        "nc": state.saved_nc,
    }
    if echo is None or any(echo.get(k) is None or echo.get(k) != v for k, v in expected.items()):
        state.phase = ClientPhase.TERMINATED
        return _reject(Reason.ECHO_MISMATCH)
    state.phase = ClientPhase.SERVER_AUTHENTICATED
    return ACCEPTED


def client_make_ack(state: ClientSessionState) -> SipMessage:
    if state.phase not in (ClientPhase.SERVER_AUTHENTICATED, ClientPhase.DONE):
        raise InvalidPhase(f"client session is {state.phase.value}")
    headers = [
        (n, "2 ACK" if n.lower() == "cseq" else v) for n, v in state.dialog_headers
    ] + [("Content-Length", "0")]
    return SipMessage.request("ACK", state.request_uri, headers)


# ---------------------------------------------------------------------------
# Actors


class ServerAgent:
    """Server actor: owns its sessions and the nonce ledger, speaks bytes."""

    def __init__(
        self,
        store: CredentialStore,
        rng: random.Random,
        *,
        server_ip: str = DEFAULT_SERVER_IP,
        realm: str = DEFAULT_REALM,
        legacy: bool = False,
    ) -> None:
        self.store = store
        self.rng = rng
        self.server_ip = server_ip
        self.realm = realm
        self.legacy = legacy
        self.nonce_ledger: dict[str, int] = {}
        self.sessions: dict[str, ServerSessionState] = {}
        self.verdicts: list[Verdict] = []
        self.errors: list[str] = []
        self.hash_counter = HashCounter()

    def handle(self, wire: bytes) -> Optional[bytes]:
        try:
            msg = parse_message(wire)
        except codec.CodecError as exc:
            self.errors.append(f"server dropped unparseable message: {exc}")
            return None
        with counting(self.hash_counter):
            reply = self._dispatch(msg)
        return codec.serialize_message(reply) if reply is not None else None

    def _dispatch(self, msg: SipMessage) -> Optional[SipMessage]:
        if not msg.is_request:
            self.errors.append(f"server ignored response {msg.status}")
            return None
        if msg.method == "ACK":
            return None
        if msg.method != "INVITE":
            self.errors.append(f"server ignored {msg.method}")
            return None
        if not msg.has_header("Authorization"):
            try:
                challenge, state = server_make_challenge(
                    self.rng, self.server_ip, msg, realm=self.realm, legacy=self.legacy,
                    nonce_ledger=self.nonce_ledger,
                )
            except FsmError as exc:
                self.errors.append(f"server: {exc}")
                return None
            self.sessions[state.call_id] = state
            return challenge
        session = self.sessions.get(msg.header("Call-ID") or "")
        if session is None:
            # never issued a nonce for this dialog
            verdict = _reject(Reason.NONCE_MISMATCH)
            self.verdicts.append(verdict)
            return _response(403, "Forbidden", _copy_dialog_headers(msg))
        if session.phase is not ServerPhase.AWAITING_AUTH:
            session = session.reopened()
        verdict, reply = server_verify_authorization(session, self.store, msg)
        self.verdicts.append(verdict)
        return reply


class ClientAgent:
    """Client actor for one outgoing INVITE."""

    def __init__(self, creds: Credentials, mode: Union[Mode, str], rng: random.Random,
                 request_uri: str = DEFAULT_SERVER_URI) -> None:
        self.creds = creds
        self.mode = Mode(mode)
        self.rng = rng
        self.request_uri = request_uri
        self.invite: Optional[SipMessage] = None
        self.state: Optional[ClientSessionState] = None
        self.verdict: Optional[Verdict] = None
        self.errors: list[str] = []
        self.hash_counter = HashCounter()

    def start(self) -> bytes:
        self.invite = make_invite(self.creds.username, self.rng, self.request_uri, self.creds.realm)
        return codec.serialize_message(self.invite)

    def handle(self, wire: bytes) -> Optional[bytes]:
        try:
            msg = parse_message(wire)
        except codec.CodecError as exc:
            self.errors.append(f"client dropped unparseable message: {exc}")
            return None
        with counting(self.hash_counter):
            reply = self._dispatch(msg)
        return codec.serialize_message(reply) if reply is not None else None

    def _dispatch(self, msg: SipMessage) -> Optional[SipMessage]:
        if msg.is_request:
            self.errors.append(f"client ignored {msg.method}")
            return None
        if msg.status == 401 and self.state is None:
            try:
                request, self.state = client_handle_challenge(
                    self.creds, self.mode, msg, self.rng, invite=self.invite
                )
            except FsmError as exc:
                self.errors.append(f"client: {exc}")
                return None
            return request
        if self.state is None or self.state.phase is not ClientPhase.AWAITING_OK:
            self.errors.append(f"client ignored unexpected {msg.status}")
            return None
        if msg.status == 200:
            self.verdict = client_verify_ok(self.state, msg)
            if self.verdict.accepted:
                return client_make_ack(self.state)
            return None
        if msg.status >= 300:
            # rejected by the server: the session is over
            self.state.phase = ClientPhase.TERMINATED
            return None
        return None


def converse(client: ClientAgent, server: ServerAgent, channel: Channel) -> None:
    """Ping-pong messages between the two actors until one goes quiet."""
    wire: Optional[bytes] = client.start()
    from_client = True
    while wire is not None:
        direction = Direction.CLIENT_TO_SERVER if from_client else Direction.SERVER_TO_CLIENT
        delivered = channel.transmit(direction, wire)
        if delivered is None:
            break
        wire = (server if from_client else client).handle(delivered)
        from_client = not from_client


def summarize(transcript: Transcript, client: ClientAgent, server: ServerAgent) -> Transcript:
    if server.verdicts:
        transcript.server_verdict = server.verdicts[-1].reason.value
    if client.verdict is not None:
        transcript.client_verdict = client.verdict.reason.value
    transcript.notes.extend(server.errors + client.errors)
    return transcript


def run_handshake(
    server_creds: CredentialStore,
    client_creds: Credentials,
    mode: Union[Mode, str],
    rng: Union[int, random.Random],
    *,
    server_ip: str = DEFAULT_SERVER_IP,
    realm: str = DEFAULT_REALM,
    hooks: Iterable[Hook] = (),
    scenario_name: Optional[str] = None,
) -> Transcript:
    """Run INVITE / 401 / INVITE+Authorization / 200 or 403 / ACK in-process.

    Client and server each get their own RNG split off ``rng`` so the run
    is fully determined by it.  A successful run has five legs; a rejected
    one stops after the 403.
    """
    mode = Mode(mode)
    seed = rng if isinstance(rng, int) else None
    if isinstance(rng, int):
        rng = random.Random(rng)
    server = ServerAgent(
        server_creds, random.Random(rng.getrandbits(64)), server_ip=server_ip, realm=realm,
        legacy=mode is Mode.LEGACY,
    )
    client = ClientAgent(client_creds, mode, random.Random(rng.getrandbits(64)))
    transcript = Transcript(scenario_name or f"handshake-{mode.value}", seed)
    converse(client, server, Channel(transcript, hooks))
    return summarize(transcript, client, server)

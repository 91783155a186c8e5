"""SIP message and digest auth-header codec.

Covers the request/response subset used by the INVITE handshake and the
``Digest`` parameter lists carried in WWW-Authenticate, Authorization and
Authentication-Info.  Parsing is strict enough that anything the serializer
emits round-trips byte-for-byte.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

CRLF = b"\r\n"
SIP_VERSION = "SIP/2.0"

METHODS = frozenset({"INVITE", "ACK", "BYE", "CANCEL", "OPTIONS", "REGISTER"})
AUTH_HEADERS = ("WWW-Authenticate", "Authorization", "Authentication-Info")
# headers that must carry a realm when serialized
_REALM_HEADERS = frozenset({"www-authenticate", "authorization"})

# RFC 3261 token characters
_TOKEN_RE = re.compile(r"[A-Za-z0-9\-.!%*_+`'~]+")
_HEX_RE = re.compile(r"[0-9a-f]+")
_NC_RE = re.compile(r"[0-9a-f]{8}")
_DIGEST32_RE = re.compile(r"[0-9a-f]{32}")
_STATUS_RE = re.compile(r"[1-6][0-9]{2}")


class CodecError(ValueError):
    """Base class for every parse/serialize failure raised by this module."""


class MessageError(CodecError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedStartLine(MessageError):
    pass


class UnknownMethod(MessageError):
    pass


class MissingBlankLine(MessageError):
    pass


class BadContentLength(MessageError):
    pass


class MalformedHeader(MessageError):
    pass


class AuthParamError(CodecError):
    pass


class NotDigestScheme(AuthParamError):
    pass


class DuplicateParameter(AuthParamError):
    pass


class UnterminatedQuote(AuthParamError):
    pass


class MalformedParameter(AuthParamError):
    pass


class MissingRealm(AuthParamError):
    pass


def is_token(text: str) -> bool:
    return bool(_TOKEN_RE.fullmatch(text))


def _check_header_value(value: str) -> bool:
    if "\r" in value or "\n" in value:
        return False
    return value == value.strip(" \t")


@dataclass(frozen=True)
class SipMessage:
    """A parsed SIP request or response.

    Requests carry ``method`` and ``uri``; responses carry ``status`` and
    ``reason``.  ``headers`` is an ordered tuple of ``(name, value)`` pairs
    with the original name casing kept for re-serialization.
    """

    method: Optional[str] = None
    uri: Optional[str] = None
    status: Optional[int] = None
    reason: Optional[str] = None
    headers: tuple[tuple[str, str], ...] = ()
    body: bytes = b""

    def __post_init__(self) -> None:
        object.__setattr__(self, "headers", tuple((n, v) for n, v in self.headers))
        if self.method is not None:
            if self.status is not None or self.reason is not None:
                raise ValueError("a request cannot carry a status line")
            if self.method not in METHODS:
                raise ValueError(f"unsupported method {self.method!r}")
            if not self.uri or any(c in self.uri for c in " \t\r\n"):
                raise ValueError(f"bad request-uri {self.uri!r}")
        elif self.status is not None:
            if self.uri is not None:
                raise ValueError("a response cannot carry a request-uri")
            if not 100 <= self.status <= 699:
                raise ValueError(f"status {self.status} out of range")
            if self.reason is None or "\r" in self.reason or "\n" in self.reason:
                raise ValueError(f"bad reason phrase {self.reason!r}")
        else:
            raise ValueError("message needs either a method or a status code")
        for name, value in self.headers:
            if not is_token(name):
                raise ValueError(f"bad header name {name!r}")
            if not _check_header_value(value):
                raise ValueError(f"bad header value {value!r}")

    @classmethod
    def request(cls, method: str, uri: str, headers=(), body: bytes = b"") -> SipMessage:
        return cls(method=method, uri=uri, headers=tuple(headers), body=body)

    @classmethod
    def response(cls, status: int, reason: str, headers=(), body: bytes = b"") -> SipMessage:
        return cls(status=status, reason=reason, headers=tuple(headers), body=body)

    @property
    def kind(self) -> str:
        return "request" if self.method is not None else "response"

    @property
    def is_request(self) -> bool:
        return self.method is not None

    def header(self, name: str, default: Optional[str] = None) -> Optional[str]:
        """First value of header ``name`` (case-insensitive), or ``default``."""
        key = name.lower()
        for n, v in self.headers:
            if n.lower() == key:
                return v
        return default

    def header_all(self, name: str) -> list[str]:
        key = name.lower()
        return [v for n, v in self.headers if n.lower() == key]

    def has_header(self, name: str) -> bool:
        key = name.lower()
        return any(n.lower() == key for n, _ in self.headers)

    def with_header(self, name: str, value: str) -> SipMessage:
        """Copy with ``name`` replaced in place (or appended if absent)."""
        key = name.lower()
        out, replaced = [], False
        for n, v in self.headers:
            if n.lower() == key:
                if not replaced:
                    out.append((n, value))
                    replaced = True
                continue
            out.append((n, v))
        if not replaced:
            out.append((name, value))
        return replace(self, headers=tuple(out))

    def without_header(self, name: str) -> SipMessage:
        key = name.lower()
        return replace(self, headers=tuple((n, v) for n, v in self.headers if n.lower() != key))


def serialize_message(msg: SipMessage) -> bytes:
    if msg.is_request:
        start = f"{msg.method} {msg.uri} {SIP_VERSION}"
    else:
        start = f"{SIP_VERSION} {msg.status} {msg.reason}"
    lines = [start] + [f"{name}: {value}" for name, value in msg.headers]
    return "\r\n".join(lines).encode("utf-8") + b"\r\n\r\n" + msg.body


def _decode_line(raw: bytes, index: int, exc: type[MessageError]) -> str:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise exc("line is not valid UTF-8", index) from None
    if "\r" in text or "\n" in text:
        raise exc("bare CR or LF inside line", index)
    return text


def _parse_start_line(line: str) -> dict:
    if line.startswith(SIP_VERSION + " "):
        rest = line[len(SIP_VERSION) + 1 :]
        code, sep, reason = rest.partition(" ")
        if not sep or not _STATUS_RE.fullmatch(code):
            raise MalformedStartLine(f"bad status line {line!r}", 0)
        return {"status": int(code), "reason": reason}
    parts = line.split(" ")
    if len(parts) != 3 or parts[2] != SIP_VERSION or not parts[1]:
        raise MalformedStartLine(f"bad request line {line!r}", 0)
    method, uri = parts[0], parts[1]
    if not is_token(method):
        raise MalformedStartLine(f"bad method token {method!r}", 0)
    if method not in METHODS:
        raise UnknownMethod(f"unknown method {method!r}", 0)
    if "\t" in uri:
        raise MalformedStartLine(f"bad request-uri {uri!r}", 0)
    return {"method": method, "uri": uri}


def parse_message(data: bytes) -> SipMessage:
    """Parse one complete SIP message.

    Header lines are ``Name: value``; surrounding whitespace on the value is
    dropped, so the serializer's ``Name: value`` form is the canonical one.
    Raises a :class:`MessageError` subclass naming the offending line index
    (0 is the start line).
    """
    end = data.find(b"\r\n\r\n")
    if end < 0:
        raise MissingBlankLine("no blank line after headers", data.count(CRLF))
    head, body = data[:end], data[end + 4 :]
    raw_lines = head.split(CRLF)

    start = _decode_line(raw_lines[0], 0, MalformedStartLine)
    fields = _parse_start_line(start)

    headers: list[tuple[str, str]] = []
    declared: list[tuple[int, str]] = []
    for index, raw in enumerate(raw_lines[1:], start=1):
        line = _decode_line(raw, index, MalformedHeader)
        if line[:1] in (" ", "\t"):
            raise MalformedHeader("folded header lines are not supported", index)
        name, sep, value = line.partition(":")
        name = name.rstrip(" \t")
        if not sep or not is_token(name):
            raise MalformedHeader(f"bad header line {line!r}", index)
        value = value.strip(" \t")
        headers.append((name, value))
        if name.lower() == "content-length":
            declared.append((index, value))

    for index, value in declared:
        if not (value.isascii() and value.isdigit() and len(value) <= 18) or int(value) != len(body):
            raise BadContentLength(
                f"Content-Length {value!r} does not match body of {len(body)} bytes", index
            )

    return SipMessage(headers=tuple(headers), body=body, **fields)


# ---------------------------------------------------------------------------
# Digest auth parameters


@dataclass(frozen=True)
class AuthParams:
    """Parameter set of a ``Digest`` challenge, credentials or echo header.

    Hex-valued parameters are lowercased at parse time.  ``extra`` keeps
    unrecognized ``(name, raw_value)`` pairs exactly as they appeared on the
    wire, quotes included.
    """

    realm: Optional[str] = None
    qop: Optional[tuple[str, ...]] = None
    serverip: Optional[str] = None
    nonce: Optional[str] = None
    nc: Optional[str] = None
    username: Optional[str] = None
    uri: Optional[str] = None
    cnonce: Optional[str] = None
    response: Optional[str] = None
    algorithm: Optional[str] = None
    extra: tuple[tuple[str, str], ...] = ()
    scheme: str = field(default="Digest", repr=False)

    def __post_init__(self) -> None:
        if self.scheme != "Digest":
            raise ValueError("scheme must be Digest")
        if self.qop is not None:
            object.__setattr__(self, "qop", tuple(self.qop))
            for tok in self.qop:
                if not is_token(tok):
                    raise ValueError(f"bad qop token {tok!r}")
        object.__setattr__(self, "extra", tuple((n, v) for n, v in self.extra))
        for name in ("nonce", "cnonce"):
            value = getattr(self, name)
            if value is not None and not _HEX_RE.fullmatch(value):
                raise ValueError(f"{name} must be lowercase hex, got {value!r}")
        if self.nc is not None and not _NC_RE.fullmatch(self.nc):
            raise ValueError(f"nc must be 8 lowercase hex digits, got {self.nc!r}")
        if self.response is not None and not _DIGEST32_RE.fullmatch(self.response):
            raise ValueError(f"response must be 32 lowercase hex digits, got {self.response!r}")
        if self.serverip is not None and not _is_dotted_quad(self.serverip):
            raise ValueError(f"serverip must be a dotted quad, got {self.serverip!r}")
        if self.algorithm is not None and not is_token(self.algorithm):
            raise ValueError(f"bad algorithm token {self.algorithm!r}")
        for name in ("realm", "username", "uri"):
            value = getattr(self, name)
            if value is not None and ("\r" in value or "\n" in value):
                raise ValueError(f"{name} may not contain line breaks")
        for name, raw in self.extra:
            if not is_token(name) or name.lower() in _KNOWN or name.lower() == "ip":
                raise ValueError(f"bad extra parameter name {name!r}")
            if not _valid_raw_value(raw):
                raise ValueError(f"bad extra parameter value {raw!r}")

    def get(self, name: str) -> Optional[str]:
        """Value of a known parameter as it would be compared on the wire."""
        value = getattr(self, name)
        if name == "qop" and value is not None:
            return ",".join(value)
        return value


# canonical emission order; also the set of recognized names
_CANONICAL = (
    "realm", "qop", "serverip", "nonce", "nc", "username",
    "uri", "cnonce", "response", "algorithm",
)
_KNOWN = frozenset(_CANONICAL)
_ALIASES = {"ip": "serverip"}
_BARE = frozenset({"nc", "algorithm"})
_HEX_PARAMS = frozenset({"nonce", "cnonce", "nc", "response"})


def _is_dotted_quad(text: str) -> bool:
    try:
        ipaddress.IPv4Address(text)
    except ValueError:
        return False
    return True


def _valid_raw_value(raw: str) -> bool:
    if raw.startswith('"'):
        try:
            value, end = _read_quoted(raw, 0)
        except UnterminatedQuote:
            return False
        return end == len(raw) and "\r" not in value and "\n" not in value
    return is_token(raw)


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _read_quoted(text: str, pos: int) -> tuple[str, int]:
    """Read a quoted-string starting at ``text[pos] == '"'``; return (value, end)."""
    out = []
    i = pos + 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            if i + 1 >= n:
                break
            out.append(text[i + 1])
            i += 2
            continue
        if c == '"':
            return "".join(out), i + 1
        out.append(c)
        i += 1
    raise UnterminatedQuote(f"unterminated quoted string at offset {pos}")


def _skip_ws(text: str, i: int) -> int:
    n = len(text)
    while i < n and text[i] in " \t":
        i += 1
    return i


def _iter_pairs(text: str, pos: int) -> Iterator[tuple[str, str, str]]:
    """Yield ``(name, value, raw_value)`` triples from a comma list."""
    n = len(text)
    i = _skip_ws(text, pos)
    while i < n:
        if text[i] == ",":
            # tolerate empty list elements and a trailing comma
            i = _skip_ws(text, i + 1)
            continue
        j = i
        while j < n and text[j] not in "= \t,":
            j += 1
        name = text[i:j]
        if not name or not is_token(name):
            raise MalformedParameter(f"bad parameter name at offset {i}")
        j = _skip_ws(text, j)
        if j >= n or text[j] != "=":
            raise MalformedParameter(f"parameter {name!r} has no value")
        j = _skip_ws(text, j + 1)
        if j < n and text[j] == '"':
            value, k = _read_quoted(text, j)
            raw = text[j:k]
        else:
            k = j
            while k < n and text[k] not in ", \t":
                k += 1
            value = raw = text[j:k]
            if not value or not is_token(value):
                raise MalformedParameter(f"bad bare value for {name!r}")
        yield name, value, raw
        i = _skip_ws(text, k)
        if i < n and text[i] != ",":
            raise MalformedParameter(f"expected ',' at offset {i}")


def parse_auth_params(header_value: str) -> AuthParams:
    """Parse a ``Digest k=v, ...`` header value.

    ``ip`` is accepted as an alias of ``serverip``.  Raises an
    :class:`AuthParamError` subclass on failure.
    """
    text = header_value.strip(" \t")
    scheme_end = 0
    while scheme_end < len(text) and text[scheme_end] not in " \t":
        scheme_end += 1
    if text[:scheme_end].lower() != "digest":
        raise NotDigestScheme(f"expected Digest scheme, got {text[:scheme_end]!r}")

    values: dict[str, object] = {}
    extra: list[tuple[str, str]] = []
    seen: set[str] = set()
    for name, value, raw in _iter_pairs(text, scheme_end):
        key = _ALIASES.get(name.lower(), name.lower())
        if key in seen:
            raise DuplicateParameter(f"parameter {name!r} given twice")
        seen.add(key)
        if key not in _KNOWN:
            extra.append((name, raw))
            continue
        if key in _HEX_PARAMS:
            value = value.lower()
        if key == "qop":
            values[key] = tuple(t.strip(" \t") for t in value.split(",") if t.strip(" \t"))
        else:
            values[key] = value
    try:
        return AuthParams(extra=tuple(extra), **values)
    except ValueError as exc:
        raise MalformedParameter(str(exc)) from None


def serialize_auth_params(params: AuthParams, header_name: str = "Authorization") -> str:
    """Render ``params`` as a header value in canonical parameter order.

    ``nc`` and ``algorithm`` are emitted bare; every other known value is
    quoted.  Extras follow in their original order and form.
    """
    if header_name.lower() in _REALM_HEADERS and params.realm is None:
        raise MissingRealm(f"{header_name} requires a realm")
    parts = []
    for name in _CANONICAL:
        value = params.get(name)
        if value is None:
            continue
        parts.append(f"{name}={value if name in _BARE else _quote(value)}")
    parts.extend(f"{name}={raw}" for name, raw in params.extra)
    return "Digest " + ", ".join(parts) if parts else "Digest"

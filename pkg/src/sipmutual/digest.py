"""MD5 digest primitives for SIP authentication.

Every hash goes through :func:`md5_hex`, which also feeds the optional
per-context :class:`HashCounter` used to measure handshake cost.
"""

from __future__ import annotations

import contextlib
import contextvars
import hashlib
import hmac
from dataclasses import dataclass
from typing import Iterator, Optional

HexDigest = str

NC_MAX = 2**32 - 1


class DigestError(ValueError):
    pass


class MissingNc(DigestError):
    pass


class UnsupportedQop(DigestError):
    pass


class NcOutOfRange(DigestError):
    pass


class HashCounter:
    """Counts md5_hex evaluations made while it is active."""

    def __init__(self) -> None:
        self.calls = 0

    def __repr__(self) -> str:
        return f"HashCounter(calls={self.calls})"


_active_counter: contextvars.ContextVar[Optional[HashCounter]] = contextvars.ContextVar(
    "sipmutual_hash_counter", default=None
)


@contextlib.contextmanager
def counting(counter: Optional[HashCounter] = None) -> Iterator[HashCounter]:
    """Route md5_hex calls in this context to ``counter`` (a new one if omitted).

    Nested scopes shadow outer ones; the outer counter resumes on exit.
    """
    counter = counter if counter is not None else HashCounter()
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)


def md5_hex(data: bytes | str) -> HexDigest:
    if isinstance(data, str):
        data = data.encode("utf-8")
    counter = _active_counter.get()
    if counter is not None:
        counter.calls += 1
    return hashlib.md5(data).hexdigest()


def h_a1(username: str, realm: str, password: str) -> HexDigest:
    return md5_hex(f"{username}:{realm}:{password}")


def h_a2(method: str, digest_uri: str) -> HexDigest:
    return md5_hex(f"{method}:{digest_uri}")


def response_legacy(ha1: HexDigest, nonce: str, ha2: HexDigest) -> HexDigest:
    """Response without qop: MD5(H(A1):nonce:H(A2))."""
    return md5_hex(f"{ha1}:{nonce}:{ha2}")


@dataclass(frozen=True)
class DigestInputs:
    """Everything needed to compute a request digest from raw credentials."""

    username: str
    realm: str
    password: str
    method: str
    digest_uri: str
    nonce: str
    nc: Optional[str] = None
    cnonce: Optional[str] = None
    qop: Optional[str] = None

    def __post_init__(self) -> None:
        if self.qop is not None and self.nc is None:
            raise MissingNc("qop given without nc")
        if self.cnonce is not None and self.qop is None:
            raise DigestError("cnonce given without qop")

    def __repr__(self) -> str:
        # keep the password out of logs and tracebacks
        return (
            f"DigestInputs(username={self.username!r}, realm={self.realm!r}, "
            f"method={self.method!r}, digest_uri={self.digest_uri!r}, nonce={self.nonce!r}, "
            f"nc={self.nc!r}, cnonce={self.cnonce!r}, qop={self.qop!r})"
        )


def response_qop(inputs: DigestInputs) -> HexDigest:
    """Request digest for a qop-bearing response.

    With a cnonce the hashed string is ``H(A1):nonce:nc:cnonce:qop:H(A2)``;
    without one (selective mode) the cnonce segment is dropped entirely.
    """
    if inputs.qop is None:
        raise DigestError("response_qop needs a qop")
    if inputs.nc is None:
        raise MissingNc("qop given without nc")
    if inputs.qop != "auth":
        raise UnsupportedQop(f"qop {inputs.qop!r} is not supported")
    ha1 = h_a1(inputs.username, inputs.realm, inputs.password)
    ha2 = h_a2(inputs.method, inputs.digest_uri)
    if inputs.cnonce is None:
        return md5_hex(f"{ha1}:{inputs.nonce}:{inputs.nc}:{inputs.qop}:{ha2}")
    return md5_hex(f"{ha1}:{inputs.nonce}:{inputs.nc}:{inputs.cnonce}:{inputs.qop}:{ha2}")


def compute_response(inputs: DigestInputs) -> HexDigest:
    """Dispatch to the legacy or qop formula depending on ``inputs.qop``."""
    if inputs.qop is None:
        ha1 = h_a1(inputs.username, inputs.realm, inputs.password)
        ha2 = h_a2(inputs.method, inputs.digest_uri)
        return response_legacy(ha1, inputs.nonce, ha2)
    return response_qop(inputs)


def format_nc(counter: int) -> str:
    if not 1 <= counter <= NC_MAX:
        raise NcOutOfRange(f"nonce count {counter} outside 1..{NC_MAX}")
    return f"{counter:08x}"


def parse_nc(text: str) -> int:
    if len(text) != 8 or not all(c in "0123456789abcdef" for c in text):
        raise NcOutOfRange(f"bad nonce count {text!r}")
    value = int(text, 16)
    if value < 1:
        raise NcOutOfRange(f"bad nonce count {text!r}")
    return value


def digest_equal(a: HexDigest, b: HexDigest) -> bool:
    """Constant-time comparison of two hex digests."""
    return hmac.compare_digest(a.encode("ascii"), b.encode("ascii"))


@dataclass(frozen=True)
class GoldenVector:
    name: str
    formula: str
    inputs: dict
    expected: HexDigest
    note: str = ""

    def evaluate(self) -> HexDigest:
        args = self.inputs
        if self.formula == "md5":
            return md5_hex(args["data"])
        if self.formula == "h_a1":
            return h_a1(args["username"], args["realm"], args["password"])
        if self.formula == "h_a2":
            return h_a2(args["method"], args["digest_uri"])
        if self.formula == "legacy":
            ha1 = h_a1(args["username"], args["realm"], args["password"])
            ha2 = h_a2(args["method"], args["digest_uri"])
            return response_legacy(ha1, args["nonce"], ha2)
        if self.formula == "qop":
            return response_qop(DigestInputs(**args))
        raise ValueError(f"unknown formula {self.formula!r}")


_MUFASA = {"username": "Mufasa", "realm": "testrealm@host.com", "password": "Circle Of Life"}
_NONCE = "dcd98b7102dd2f0e8b11d0f600bfb0"
_QOP_BASE = dict(
    _MUFASA, method="GET", digest_uri="/dir/index.html", nonce=_NONCE, nc="00000001", qop="auth"
)

# expected values pinned with an external MD5 tool (openssl md5)
GOLDEN_VECTORS: tuple[GoldenVector, ...] = (
    GoldenVector("md5-empty", "md5", {"data": ""}, "d41d8cd98f00b204e9800998ecf8427e"),
    GoldenVector("md5-abc", "md5", {"data": "abc"}, "900150983cd24fb0d6963f7d28e17f72"),
    GoldenVector("ha1-mufasa", "h_a1", dict(_MUFASA), "939e7578ed9e3c518a452acee763bce9"),
    GoldenVector(
        "ha2-get", "h_a2", {"method": "GET", "digest_uri": "/dir/index.html"},
        "39aff3a2bab6126f332b942af96d3366",
    ),
    GoldenVector(
        "ha2-invite", "h_a2", {"method": "INVITE", "digest_uri": "sip:bob@biloxi.com"},
        "13a14a3eb5e2c24732a1a04fff543e92",
    ),
    GoldenVector(
        "legacy-invite", "legacy",
        dict(_MUFASA, method="INVITE", digest_uri="sip:bob@biloxi.com", nonce=_NONCE),
        "4eea32df75e552866b678a3d2f3ec329",
    ),
    GoldenVector(
        "qop-auth-cnonce", "qop", dict(_QOP_BASE, cnonce="0a4f113b"),
        "10e58fdbf9ae9408e7554c51afd08d1d",
        note=(
            "The Authorization example using these values prints "
            "response=\"6629faea05397450978507c4ef1\": 25 hex digits, not a possible MD5 "
            "output. It matches the RFC 2617 example digest "
            "6629fae49393a05397450978507c4ef1 with five digits dropped; that digest "
            "belongs to the longer nonce dcd98b7102dd2f0e8b11d0f600bfb0c093 "
            "(see rfc2617-example)."
        ),
    ),
    GoldenVector(
        "qop-auth-selective", "qop", dict(_QOP_BASE), "e573b62a5616b51e6c2f215ebc107631",
        note="cnonce-less request digest (selective mode)",
    ),
    GoldenVector(
        "qop-auth-nc2", "qop", dict(_QOP_BASE, nc="00000002", cnonce="0a4f113b"),
        "e1c3aea49a13a2c81e1f06f53b346c14",
    ),
    GoldenVector(
        "rfc2617-example", "qop",
        dict(_QOP_BASE, nonce=_NONCE + "c093", cnonce="0a4f113b"),
        "6629fae49393a05397450978507c4ef1",
        note="RFC 2617 worked example",
    ),
)


def check_vectors() -> list[dict]:
    """Evaluate every golden vector into JSON-ready rows.

    The vector passwords are published test data, so they are reported.
    """
    rows = []
    for vec in GOLDEN_VECTORS:
        actual = vec.evaluate()
        row = {
            "name": vec.name,
            "formula": vec.formula,
            "inputs": dict(vec.inputs),
            "expected": vec.expected,
            "actual": actual,
            "pass": actual == vec.expected,
        }
        if vec.note:
            row["note"] = vec.note
        rows.append(row)
    return rows

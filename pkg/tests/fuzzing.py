"""Seeded input generators and a crash-hunting loop for the codec parsers."""

from __future__ import annotations

import random
import time

from sipmutual.codec import (
    CodecError,
    SipMessage,
    parse_auth_params,
    parse_message,
    serialize_auth_params,
    serialize_message,
)
from sipmutual.sim import SCENARIOS, run_scenario

MAX_INPUT = 64 * 1024
SLOW_INPUT_S = 0.5

_SPICE = [b"\r\n", b"\r\n\r\n", b"\r", b"\n", b":", b",", b"=", b'"', b"\\", b" ", b"\t",
          b"Content-Length: ", b"99999999999999999999", b"Digest ", b"\x00", b"\xff", b"\xc3",
          b"SIP/2.0 ", b"INVITE ", b'nonce="', b"qop=", b"nc=", b"-1", b"0x1f"]


def seed_corpus() -> tuple[list[bytes], list[str]]:
    """Real wire messages and auth headers from a handful of scenario runs."""
    messages, headers = [], []
    for name in sorted(SCENARIOS):
        for seed in range(3):
            for event in run_scenario(name, seed).events:
                messages.append(event.wire_bytes)
                msg = parse_message(event.wire_bytes)
                for h in ("WWW-Authenticate", "Authorization", "Authentication-Info"):
                    if msg.header(h):
                        headers.append(msg.header(h))
    return messages, headers


def _size(rng: random.Random) -> int:
    roll = rng.random()
    if roll < 0.001:
        return rng.randint(MAX_INPUT // 2, MAX_INPUT)
    if roll < 0.02:
        return rng.randint(0, 8192)
    return min(int(rng.expovariate(1 / 120)), MAX_INPUT)


def _mutate(rng: random.Random, data: bytes, max_edits: int = 6) -> bytes:
    buf = bytearray(data)
    for _ in range(rng.randint(1, max_edits)):
        op = rng.randrange(6)
        pos = rng.randint(0, len(buf))
        if op == 0 and buf:
            buf[min(pos, len(buf) - 1)] = rng.randrange(256)
        elif op == 1:
            buf[pos:pos] = rng.choice(_SPICE)
        elif op == 2:
            del buf[pos:pos + rng.randint(1, 16)]
        elif op == 3 and buf:
            start = rng.randrange(len(buf))
            buf[pos:pos] = buf[start:start + rng.randint(1, 64)]
        elif op == 4:
            del buf[pos:]
        else:
            buf[pos:pos] = rng.randbytes(rng.randint(1, 8))
    return bytes(buf[:MAX_INPUT])


def make_input(rng: random.Random, messages: list[bytes], headers: list[str]) -> bytes:
    kind = rng.random()
    if kind < 0.4:
        return rng.randbytes(_size(rng))
    if kind < 0.8:
        return _mutate(rng, rng.choice(messages))
    if kind < 0.9:
        # random printable text: exercises the auth-param scanner harder
        alphabet = 'abcdefqopncrealmuri="\\ ,=\t0123456789Digest'
        return "".join(rng.choice(alphabet) for _ in range(min(_size(rng), 2048))).encode()
    return _mutate(rng, rng.choice(headers).encode(), max_edits=2)


def _probe(data: bytes) -> tuple[bool, bool]:
    """Feed both parsers; return (message parsed, auth params parsed)."""
    parsed_msg = parsed_auth = False
    try:
        msg = parse_message(data)
    except CodecError:
        pass
    else:
        parsed_msg = True
        # anything the parser accepts must survive a canonical round trip
        again = parse_message(serialize_message(msg))
        if again != msg:
            raise AssertionError(f"message not stable under round trip: {data[:80]!r}")
    text = data.decode("utf-8", "replace")
    try:
        params = parse_auth_params(text)
    except CodecError:
        pass
    else:
        parsed_auth = True
        header = "Authentication-Info" if params.realm is None else "Authorization"
        if parse_auth_params(serialize_auth_params(params, header)) != params:
            raise AssertionError(f"auth params not stable under round trip: {text[:80]!r}")
    return parsed_msg, parsed_auth


def fuzz_chunk(seed: int, count: int) -> dict:
    """Run ``count`` inputs; collect unexpected exceptions and slow inputs."""
    rng = random.Random(f"fuzz:{seed}")
    messages, headers = seed_corpus()
    crashes, slow = [], []
    parsed_msgs = parsed_auth = 0
    largest = 0
    for i in range(count):
        data = make_input(rng, messages, headers)
        largest = max(largest, len(data))
        started = time.perf_counter()
        try:
            m, a = _probe(data)
        except Exception as exc:  # noqa: BLE001 - anything else is a finding
            crashes.append((seed, i, type(exc).__name__, str(exc)[:200]))
            continue
        if time.perf_counter() - started > SLOW_INPUT_S:
            slow.append((seed, i, len(data)))
        parsed_msgs += m
        parsed_auth += a
    return {"count": count, "crashes": crashes, "slow": slow, "parsed_messages": parsed_msgs,
            "parsed_auth": parsed_auth, "largest": largest}


def random_valid_message(rng: random.Random) -> SipMessage:
    """Structurally valid message with random headers and body."""
    names = ["Via", "From", "To", "Call-ID", "CSeq", "Contact", "Subject", "X-Fuzz"]
    headers = []
    for _ in range(rng.randint(0, 10)):
        value = "".join(rng.choice("abcxyz019 ;=<>@:.-\"é") for _ in range(rng.randint(0, 30)))
        headers.append((rng.choice(names), value.strip(" ")))
    body = rng.randbytes(rng.randint(0, 200)) if rng.random() < 0.5 else b""
    if body or rng.random() < 0.5:
        headers.append(("Content-Length", str(len(body))))
    if rng.random() < 0.5:
        method = rng.choice(["INVITE", "ACK", "BYE", "CANCEL", "REGISTER", "OPTIONS"])
        return SipMessage.request(method, f"sip:u{rng.randrange(1000)}@example.com", headers, body)
    return SipMessage.response(rng.randint(100, 699), rng.choice(["OK", "Unauthorized", "Forbidden", ""]),
                               headers, body)

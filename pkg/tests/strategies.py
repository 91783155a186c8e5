"""Hypothesis strategies for well-formed codec values."""

from hypothesis import strategies as st

from sipmutual.codec import METHODS, AuthParams, SipMessage

_LINE_TEXT = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\n"),
    max_size=40,
)

tokens = st.from_regex(r"[A-Za-z0-9][A-Za-z0-9\-.!%*_+`'~]{0,12}", fullmatch=True)
header_names = st.one_of(
    st.sampled_from(["Via", "From", "To", "Call-ID", "CSeq", "Contact", "X-Custom", "subject"]),
    st.from_regex(r"[A-Za-z][A-Za-z0-9\-]{0,15}", fullmatch=True),
).filter(lambda n: n.lower() != "content-length")
header_values = _LINE_TEXT.map(lambda s: s.strip(" \t"))
uris = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters=" \t\r\n"),
    min_size=1, max_size=30,
)


@st.composite
def sip_messages(draw):
    headers = draw(st.lists(st.tuples(header_names, header_values), max_size=8))
    body = draw(st.binary(max_size=64))
    if body or draw(st.booleans()):
        pos = draw(st.integers(0, len(headers)))
        headers.insert(pos, (draw(st.sampled_from(["Content-Length", "content-length"])), str(len(body))))
    if draw(st.booleans()):
        return SipMessage.request(draw(st.sampled_from(sorted(METHODS))), draw(uris), headers, body)
    reason = draw(_LINE_TEXT)
    return SipMessage.response(draw(st.integers(100, 699)), reason, headers, body)


hex_text = st.from_regex(r"[0-9a-f]{1,32}", fullmatch=True)
_KNOWN = {"realm", "qop", "serverip", "nonce", "nc", "username", "uri", "cnonce", "response",
          "algorithm", "ip"}


def _opt(strategy):
    return st.one_of(st.none(), strategy)


@st.composite
def auth_params(draw):
    extra_names = draw(
        st.lists(tokens.filter(lambda n: n.lower() not in _KNOWN), max_size=3,
                 unique_by=lambda n: n.lower())
    )
    extra = []
    for name in extra_names:
        if draw(st.booleans()):
            raw = draw(tokens)
        else:
            text = draw(_LINE_TEXT)
            raw = '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'
        extra.append((name, raw))
    return AuthParams(
        realm=_draw_opt(draw, _LINE_TEXT),
        qop=draw(_opt(st.lists(tokens, max_size=3).map(tuple))),
        serverip=draw(_opt(st.ip_addresses(v=4).map(str))),
        nonce=draw(_opt(hex_text)),
        nc=draw(_opt(st.from_regex(r"[0-9a-f]{8}", fullmatch=True))),
        username=_draw_opt(draw, _LINE_TEXT),
        uri=_draw_opt(draw, _LINE_TEXT),
        cnonce=draw(_opt(hex_text)),
        response=draw(_opt(st.from_regex(r"[0-9a-f]{32}", fullmatch=True))),
        algorithm=draw(_opt(tokens)),
        extra=tuple(extra),
    )


def _draw_opt(draw, strategy):
    return draw(_opt(strategy))

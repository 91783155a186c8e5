"""SIP digest authentication with mutual and selective server authentication."""

from .codec import AuthParams, SipMessage, parse_auth_params, parse_message, serialize_auth_params, serialize_message
from .digest import DigestInputs, format_nc, h_a1, h_a2, md5_hex, response_legacy, response_qop
from .fsm import CredentialStore, Credentials, Mode, Reason, Verdict, run_handshake
from .sim import (
    AttackOutcome,
    ScenarioConfig,
    forge_ok_attack,
    offline_dictionary_attack,
    replay_attack,
    run_scenario,
    tamper_authorization_attack,
)
from .transcript import Transcript, TranscriptEvent

__all__ = [
    "AttackOutcome",
    "AuthParams",
    "CredentialStore",
    "Credentials",
    "DigestInputs",
    "Mode",
    "Reason",
    "ScenarioConfig",
    "SipMessage",
    "Transcript",
    "TranscriptEvent",
    "Verdict",
    "forge_ok_attack",
    "format_nc",
    "h_a1",
    "h_a2",
    "md5_hex",
    "offline_dictionary_attack",
    "parse_auth_params",
    "parse_message",
    "replay_attack",
    "response_legacy",
    "response_qop",
    "run_handshake",
    "run_scenario",
    "serialize_auth_params",
    "serialize_message",
    "tamper_authorization_attack",
]

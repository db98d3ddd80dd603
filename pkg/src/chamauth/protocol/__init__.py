"""Decentralized avatar authentication protocols."""

from .messages import AbortReason, MsgType, ProtocolMessage, parse_frame
from .session import (
    OnePartyProver,
    OnePartyVerifier,
    RetainedBundle,
    SessionConfig,
    TwoPartyInitiator,
    TwoPartyResponder,
    TwoPartyResult,
    VerifierVerdict,
    drive,
    dump_transcript,
    instrumented_costs,
    one_party_run,
    pump_pair,
    two_party_run,
)
from .transport import InProcessPair, TcpTransport

__all__ = [
    "AbortReason",
    "MsgType",
    "ProtocolMessage",
    "parse_frame",
    "SessionConfig",
    "RetainedBundle",
    "VerifierVerdict",
    "TwoPartyResult",
    "OnePartyProver",
    "OnePartyVerifier",
    "TwoPartyInitiator",
    "TwoPartyResponder",
    "one_party_run",
    "two_party_run",
    "pump_pair",
    "drive",
    "dump_transcript",
    "instrumented_costs",
    "InProcessPair",
    "TcpTransport",
]

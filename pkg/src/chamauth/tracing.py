"""Virtual-physical tracing.

A whistleblower hands the IDP the identity parameters retained from an
authentication run (token, virtual identity, physical identity, challenge
and watermark salt).  The IDP re-runs the full verifier pipeline; only if
every check passes does it look up the registered real identity.  Nobody
without the player's trapdoor can fabricate a bundle that traces, so
honest players cannot be framed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from . import biometric, identity
from .biometric import Challenge
from .errors import DecodeError
from .group_backend import SystemParams
from .identity import (
    IdentityProvider,
    MetaverseIdentityToken,
    PhysicalIdentity,
    VirtualIdentity,
)

__all__ = ["TraceReason", "TraceRequest", "TraceVerdict", "trace"]


class TraceReason(Enum):
    DISCLOSED = "Disclosed"
    BAD_MIT = "BadMIT"
    BAD_VID = "BadVID"
    BAD_PID = "BadPID"
    BAD_FRESHNESS = "BadFreshness"
    BAD_BIOMETRIC = "BadBiometric"
    UNREGISTERED = "Unregistered"


@dataclass(frozen=True)
class TraceRequest:
    """The whistleblower's bundle: everything a verifier retained."""

    mit: MetaverseIdentityToken
    vid: VirtualIdentity
    pid: PhysicalIdentity
    challenge: Challenge
    salt: bytes
    reporter: bytes = b""

    @classmethod
    def from_bundle(cls, bundle, reporter: bytes = b"") -> "TraceRequest":
        return cls(
            mit=bundle.mit,
            vid=bundle.vid,
            pid=bundle.pid,
            challenge=bundle.challenge,
            salt=bundle.salt,
            reporter=reporter,
        )

    def encode(self) -> bytes:
        parts = [
            self.mit.encode(),
            self.vid.encode(),
            self.pid.encode(),
            self.challenge.nonce,
            self.salt,
            self.reporter,
        ]
        out = bytearray()
        for part in parts:
            out += len(part).to_bytes(4, "big") + part
        return bytes(out)

    @classmethod
    def decode(cls, params: SystemParams, data: bytes) -> "TraceRequest":
        parts = []
        offset = 0
        while offset < len(data):
            if offset + 4 > len(data):
                raise DecodeError("truncated trace request")
            n = int.from_bytes(data[offset : offset + 4], "big")
            offset += 4
            if offset + n > len(data):
                raise DecodeError("truncated trace request")
            parts.append(data[offset : offset + n])
            offset += n
        if len(parts) != 6:
            raise DecodeError(f"trace request must have 6 fields, got {len(parts)}")
        return cls(
            mit=MetaverseIdentityToken.decode(params, parts[0]),
            vid=VirtualIdentity.decode(params, parts[1]),
            pid=PhysicalIdentity.decode(params, parts[2]),
            challenge=Challenge(nonce=parts[3], issued_at=0.0),
            salt=parts[4],
            reporter=parts[5],
        )


@dataclass(frozen=True)
class TraceVerdict:
    reason: TraceReason
    disclosed: bytes | None = None

    def __post_init__(self):
        if (self.reason is TraceReason.DISCLOSED) != (self.disclosed is not None):
            raise ValueError("disclosed identity present iff reason is Disclosed")

    def to_json(self) -> str:
        blob = {"reason": self.reason.value}
        if self.disclosed is not None:
            blob["disclosed"] = self.disclosed.hex()
        return json.dumps(blob, sort_keys=True)


def trace(idp: IdentityProvider, request: TraceRequest) -> TraceVerdict:
    """Re-run the verifier pipeline on a retained bundle and, only on full
    success, disclose the registered real identity."""
    params = idp.params
    if not identity.verify_mit(params, idp.verify_key, request.mit, idp.ledger):
        return TraceVerdict(TraceReason.BAD_MIT)
    if not identity.verify_vid(params, request.mit, request.vid):
        return TraceVerdict(TraceReason.BAD_VID)
    feature = request.pid.feature()
    extracted = biometric.extract_watermark(feature, request.salt)
    if extracted != request.challenge.nonce:
        return TraceVerdict(TraceReason.BAD_FRESHNESS)
    if not biometric.match(feature, request.mit.template, biometric.DEFAULT_THRESHOLD):
        return TraceVerdict(TraceReason.BAD_BIOMETRIC)
    if not identity.verify_pid(params, request.mit, request.pid):
        return TraceVerdict(TraceReason.BAD_PID)
    real_id = idp.registry.lookup(request.mit.digest())
    if real_id is None:
        return TraceVerdict(TraceReason.UNREGISTERED)
    return TraceVerdict(TraceReason.DISCLOSED, disclosed=real_id)

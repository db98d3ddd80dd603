"""Wire format of the authentication protocols.

Frames are length-prefixed: a 4-byte big-endian length covering one byte
of message type, a 16-byte session id, and a type-specific body in
canonical encoding.  Abort reasons ride the wire as one byte so negative
tests are deterministic across implementations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from ..errors import DecodeError
from ..group_backend import G1Element, SystemParams
from ..identity import MetaverseIdentityToken, PhysicalIdentity, VirtualIdentity

__all__ = [
    "MsgType",
    "AbortReason",
    "ProtocolMessage",
    "SESSION_ID_LEN",
    "NONCE_LEN",
]

SESSION_ID_LEN = 16
NONCE_LEN = 16
_LEN = struct.Struct("!I")


class MsgType(IntEnum):
    CLAIM = 1
    CHALLENGE = 2
    RESPONSE = 3
    COUNTER_CLAIM = 4
    RESPONSE_WITH_CHALLENGE = 5
    RESPONSE_WITH_KEY_SHARE = 6
    KEY_CONFIRM = 7
    ACCEPT = 8
    ABORT = 9


class AbortReason(IntEnum):
    BAD_MIT = 1          # IDP signature / ledger presence failed
    BAD_VID = 2          # virtual-identity collision check failed
    BAD_FRESHNESS = 3    # extracted challenge does not match the issued one
    BAD_BIOMETRIC = 4    # feature does not match the enrolled template
    BAD_PID = 5          # physical-identity collision check failed
    TIMEOUT = 6          # response arrived after the challenge deadline
    PHASE_VIOLATION = 7  # message outside the protocol's total order
    BAD_KEY_CONFIRM = 8  # key-confirmation MAC mismatch
    MALFORMED = 9        # body failed to decode


@dataclass(frozen=True)
class ProtocolMessage:
    msg_type: MsgType
    session_id: bytes
    body: bytes

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_LEN:
            raise ValueError(f"session id must be {SESSION_ID_LEN} bytes")

    def frame(self) -> bytes:
        payload = bytes([self.msg_type]) + self.session_id + self.body
        return _LEN.pack(len(payload)) + payload


def parse_frame(frame: bytes) -> ProtocolMessage:
    """Parse one full wire frame (including the length prefix)."""
    if len(frame) < 4 + 1 + SESSION_ID_LEN:
        raise DecodeError("frame too short")
    (length,) = _LEN.unpack(frame[:4])
    if length != len(frame) - 4:
        raise DecodeError("frame length prefix mismatch")
    try:
        msg_type = MsgType(frame[4])
    except ValueError as exc:
        raise DecodeError(f"unknown message type {frame[4]}") from exc
    session_id = frame[5 : 5 + SESSION_ID_LEN]
    return ProtocolMessage(msg_type, session_id, frame[5 + SESSION_ID_LEN :])


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def _take(data: bytes, offset: int, n: int) -> tuple[bytes, int]:
    if offset + n > len(data):
        raise DecodeError("truncated message body")
    return data[offset : offset + n], offset + n


def _take_prefixed(data: bytes, offset: int) -> tuple[bytes, int]:
    raw, offset = _take(data, offset, 4)
    return _take(data, offset, int.from_bytes(raw, "big"))


# -- body codecs ------------------------------------------------------------


def encode_claim(mit: MetaverseIdentityToken, vid: VirtualIdentity) -> bytes:
    mit_enc = mit.encode()
    vid_enc = vid.encode()
    return _u32(len(mit_enc)) + mit_enc + _u32(len(vid_enc)) + vid_enc


def decode_claim(params: SystemParams, body: bytes) -> tuple[MetaverseIdentityToken, VirtualIdentity]:
    mit_enc, offset = _take_prefixed(body, 0)
    vid_enc, offset = _take_prefixed(body, offset)
    if offset != len(body):
        raise DecodeError("trailing bytes in claim")
    return MetaverseIdentityToken.decode(params, mit_enc), VirtualIdentity.decode(params, vid_enc)


def encode_challenge(nonce: bytes) -> bytes:
    return nonce


def decode_challenge(body: bytes) -> bytes:
    if len(body) != NONCE_LEN:
        raise DecodeError("challenge nonce must be 128 bits")
    return body


def encode_response(pid: PhysicalIdentity) -> bytes:
    pid_enc = pid.encode()
    return _u32(len(pid_enc)) + pid_enc


def decode_response(params: SystemParams, body: bytes) -> PhysicalIdentity:
    pid_enc, offset = _take_prefixed(body, 0)
    if offset != len(body):
        raise DecodeError("trailing bytes in response")
    return PhysicalIdentity.decode(params, pid_enc)


def encode_counter_claim(
    mit: MetaverseIdentityToken, vid: VirtualIdentity, nonce: bytes
) -> bytes:
    return encode_claim(mit, vid) + nonce


def decode_counter_claim(
    params: SystemParams, body: bytes
) -> tuple[MetaverseIdentityToken, VirtualIdentity, bytes]:
    mit_enc, offset = _take_prefixed(body, 0)
    vid_enc, offset = _take_prefixed(body, offset)
    nonce, offset = _take(body, offset, NONCE_LEN)
    if offset != len(body):
        raise DecodeError("trailing bytes in counter-claim")
    return (
        MetaverseIdentityToken.decode(params, mit_enc),
        VirtualIdentity.decode(params, vid_enc),
        nonce,
    )


def encode_response_with_challenge(pid: PhysicalIdentity, nonce: bytes) -> bytes:
    return encode_response(pid) + nonce


def decode_response_with_challenge(
    params: SystemParams, body: bytes
) -> tuple[PhysicalIdentity, bytes]:
    pid_enc, offset = _take_prefixed(body, 0)
    nonce, offset = _take(body, offset, NONCE_LEN)
    if offset != len(body):
        raise DecodeError("trailing bytes in response-with-challenge")
    return PhysicalIdentity.decode(params, pid_enc), nonce


def encode_response_with_key_share(pid: PhysicalIdentity, key_share: G1Element) -> bytes:
    return encode_response(pid) + key_share.encode()


def decode_response_with_key_share(
    params: SystemParams, body: bytes
) -> tuple[PhysicalIdentity, G1Element]:
    pid_enc, offset = _take_prefixed(body, 0)
    share_enc, offset = _take(body, offset, params.g1_encoded_len())
    if offset != len(body):
        raise DecodeError("trailing bytes in response-with-key-share")
    return PhysicalIdentity.decode(params, pid_enc), params.decode_g1(share_enc)


def encode_key_confirm(mac: bytes) -> bytes:
    return mac


def decode_key_confirm(body: bytes) -> bytes:
    if len(body) != 32:
        raise DecodeError("key-confirmation MAC must be 32 bytes")
    return body


def encode_abort(reason: AbortReason) -> bytes:
    return bytes([reason])


def decode_abort(body: bytes) -> AbortReason:
    if len(body) != 1:
        raise DecodeError("abort body must be one byte")
    try:
        return AbortReason(body[0])
    except ValueError as exc:
        raise DecodeError(f"unknown abort reason {body[0]}") from exc

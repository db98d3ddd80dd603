"""Synthetic iris-code biometrics.

Stands in for a real capture/extraction pipeline: templates are uniform
random 2048-bit codes, captures flip each bit independently at a noise
rate, and matching compares fractional Hamming distance against a
threshold.  Replay protection comes from watermarking: the verifier's
128-bit challenge overwrites feature bits at salt-derived positions and is
exactly recoverable by whoever knows the salt.
"""

from __future__ import annotations

import hashlib
import hmac
import time
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, WatermarkError

__all__ = [
    "IRIS_CODE_BITS",
    "CHALLENGE_BITS",
    "DEFAULT_THRESHOLD",
    "BioTemplate",
    "BioFeature",
    "Challenge",
    "gen_template",
    "capture",
    "embed_watermark",
    "extract_watermark",
    "watermark_positions",
    "fractional_hamming",
    "match",
    "new_challenge",
    "encode_bits",
    "decode_bits",
]

IRIS_CODE_BITS = 2048
CHALLENGE_BITS = 128
CHALLENGE_LEN = CHALLENGE_BITS // 8
DEFAULT_THRESHOLD = 0.32


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _check_code(code: np.ndarray, length: int = IRIS_CODE_BITS) -> np.ndarray:
    code = np.asarray(code, dtype=np.uint8)
    if code.ndim != 1 or code.size != length:
        raise ValueError(f"iris code must be {length} bits, got shape {code.shape}")
    if code.max(initial=0) > 1:
        raise ValueError("iris code bits must be 0/1")
    code = code.copy()
    code.setflags(write=False)
    return code


@dataclass(frozen=True, eq=False)
class BioTemplate:
    """Enrolled iris code of a single subject."""

    code: np.ndarray
    subject_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "code", _check_code(self.code))

    def encode(self) -> bytes:
        return encode_bits(self.code)

    # subject_id is a debugging label, not identity-bearing data: equality
    # follows the wire encoding, which carries only the code bits
    def __eq__(self, other):
        return isinstance(other, BioTemplate) and np.array_equal(self.code, other.code)

    def __hash__(self):
        return hash(self.code.tobytes())


@dataclass(frozen=True, eq=False)
class BioFeature:
    """A captured (possibly watermarked) iris code sample."""

    code: np.ndarray
    watermark_present: bool = False

    def __post_init__(self):
        object.__setattr__(self, "code", _check_code(self.code))

    def encode(self) -> bytes:
        return encode_bits(self.code)

    def __eq__(self, other):
        return (
            isinstance(other, BioFeature)
            and self.watermark_present == other.watermark_present
            and np.array_equal(self.code, other.code)
        )

    def __hash__(self):
        return hash((self.watermark_present, self.code.tobytes()))


@dataclass(frozen=True)
class Challenge:
    """128-bit random nonce with its issuing instant (monotonic clock)."""

    nonce: bytes
    issued_at: float

    def __post_init__(self):
        if len(self.nonce) != CHALLENGE_LEN:
            raise ValueError(f"challenge nonce must be {CHALLENGE_BITS} bits")


def new_challenge(rng=None, clock=time.monotonic) -> Challenge:
    if rng is None:
        import secrets

        nonce = secrets.token_bytes(CHALLENGE_LEN)
    else:
        nonce = bytes(_as_rng(rng).integers(0, 256, CHALLENGE_LEN, dtype=np.uint8))
    return Challenge(nonce=nonce, issued_at=clock())


def gen_template(rng_seed=None, subject_id: str = "") -> BioTemplate:
    """Uniform random template; deterministic under a seed."""
    rng = _as_rng(rng_seed)
    code = rng.integers(0, 2, IRIS_CODE_BITS, dtype=np.uint8)
    return BioTemplate(code=code, subject_id=subject_id)


def capture(template: BioTemplate, noise_rate: float, rng=None) -> BioFeature:
    """Sample the live biometric: each bit flips independently at noise_rate."""
    if not 0 <= noise_rate < 0.5:
        raise ValueError(f"noise rate must be in [0, 0.5), got {noise_rate}")
    rng = _as_rng(rng)
    flips = rng.random(IRIS_CODE_BITS) < noise_rate
    return BioFeature(code=template.code ^ flips.astype(np.uint8), watermark_present=False)


def watermark_positions(salt: bytes, count: int = CHALLENGE_BITS) -> list[int]:
    """128 distinct bit positions derived from a PRF keyed by the salt.

    HMAC-SHA256(salt, counter) blocks are consumed two bytes at a time;
    65536 is an exact multiple of the code length, so reduction is unbiased.
    """
    positions: list[int] = []
    seen: set[int] = set()
    counter = 0
    while len(positions) < count:
        block = hmac.new(salt, counter.to_bytes(4, "big"), hashlib.sha256).digest()
        for i in range(0, len(block) - 1, 2):
            idx = int.from_bytes(block[i : i + 2], "big") % IRIS_CODE_BITS
            if idx not in seen:
                seen.add(idx)
                positions.append(idx)
                if len(positions) == count:
                    break
        counter += 1
    return positions


def embed_watermark(feature: BioFeature, challenge: Challenge, salt: bytes) -> BioFeature:
    """Overwrite the PRF-selected positions with the challenge bits."""
    if feature.watermark_present:
        raise WatermarkError("feature already carries a watermark")
    positions = watermark_positions(salt)
    bits = np.unpackbits(np.frombuffer(challenge.nonce, dtype=np.uint8))
    code = feature.code.copy()
    code[positions] = bits
    return BioFeature(code=code, watermark_present=True)


def extract_watermark(feature: BioFeature, salt: bytes) -> bytes:
    """Read the challenge bits back from the PRF-selected positions."""
    if not feature.watermark_present:
        raise WatermarkError("feature carries no watermark")
    positions = watermark_positions(salt)
    return np.packbits(feature.code[positions]).tobytes()


def fractional_hamming(a, b) -> float:
    """Fraction of differing bits between two equal-length codes."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a != b)) / a.size


def match(feature: BioFeature, template: BioTemplate, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """True iff the fractional Hamming distance is within the threshold."""
    return fractional_hamming(feature.code, template.code) <= threshold


# ---------------------------------------------------------------------------
# File format: 4-byte big-endian bit count, then packed code bits
# ---------------------------------------------------------------------------


def encode_bits(code: np.ndarray) -> bytes:
    return len(code).to_bytes(4, "big") + np.packbits(code).tobytes()


def decode_bits(data: bytes, expect_bits: int = IRIS_CODE_BITS) -> np.ndarray:
    if len(data) < 4:
        raise DecodeError("truncated bit vector")
    nbits = int.from_bytes(data[:4], "big")
    if nbits != expect_bits:
        raise DecodeError(f"expected {expect_bits}-bit code, header says {nbits}")
    body = data[4:]
    if len(body) != (nbits + 7) // 8:
        raise DecodeError("bit vector length does not match header")
    return np.unpackbits(np.frombuffer(body, dtype=np.uint8))[:nbits]

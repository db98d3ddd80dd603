"""Chameleon collision signatures.

One trapdoor scalar x with public key y = g^(1/x) serves both hashing and
signing: the holder of x can forge, for any new message M', a check
parameter R' = (h/m')^x that collides with the original (M, R) under the
same chameleon hash h.  The collision itself is the signature, so a single
key pair covers the whole scheme.

Verification equation (asymmetric-pairing realization):

    e(h / H(M), g2) == e(R, y2)

with hashes, h and R in source group one and the second public-key half
y2 = g2^(1/x) in source group two.  The two halves are bound by
e(y1, g2) == e(g1, y2).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DecodeError, DegenerateBaseError
from .group_backend import G1Element, G2Element, SystemParams

__all__ = [
    "ChameleonPublicKey",
    "ChameleonKeyPair",
    "ChameleonHash",
    "CheckParam",
    "CollisionClaim",
    "keygen",
    "hash",
    "check",
    "check_claim",
    "sign",
    "verify",
    "encode_key_file",
    "decode_key_file",
]

KEYFILE_MAGIC = b"CHAM"
KEYFILE_VERSION = 1
_FLAG_SK = 0x01
_FLAG_PK = 0x02


@dataclass(frozen=True)
class ChameleonPublicKey:
    """The public key y realized in both source groups."""

    g1: G1Element
    g2: G2Element

    def is_consistent(self, params: SystemParams) -> bool:
        """Dual-key binding: e(y1, g2) == e(g1, y2)."""
        return params.pairing_check(
            [(self.g1, params.g2), (params.g1.inverse(), self.g2)]
        )

    def encode(self) -> bytes:
        return self.g1.encode() + self.g2.encode()


@dataclass(frozen=True)
class ChameleonKeyPair:
    """Trapdoor scalar x plus its public halves g1^(1/x), g2^(1/x)."""

    sk: int
    pk: ChameleonPublicKey


@dataclass(frozen=True)
class ChameleonHash:
    """The chameleon hash value h = m * y^r."""

    h: G1Element

    def __post_init__(self):
        if self.h.is_identity():
            raise ValueError("chameleon hash must not be the identity element")

    def encode(self) -> bytes:
        return self.h.encode()


@dataclass(frozen=True)
class CheckParam:
    """Check parameter R accompanying a message under some hash h."""

    R: G1Element

    def __post_init__(self):
        if self.R.is_identity():
            raise ValueError("identity check parameter rejected")

    def encode(self) -> bytes:
        return self.R.encode()


@dataclass(frozen=True)
class CollisionClaim:
    """A (message, check parameter) pair; validity is established by check."""

    message: bytes
    check: CheckParam


def keygen(params: SystemParams, rng=None) -> ChameleonKeyPair:
    """Sample the trapdoor x uniformly from [1, q) and derive both public
    halves g1^(1/x) and g2^(1/x)."""
    x = params.random_scalar(rng)
    x_inv = params.scalar_inverse(x)
    pk = ChameleonPublicKey(params.g1**x_inv, params.g2**x_inv)
    return ChameleonKeyPair(sk=x, pk=pk)


def hash(
    params: SystemParams, pk: ChameleonPublicKey, message: bytes, rng=None
) -> tuple[ChameleonHash, CheckParam]:
    """Chameleon hash: h = m * y^r, R = g^r with fresh uniform r.

    Costs exactly two G1 exponentiations and one G1 multiplication.  The
    randomness r never leaves this function; only R = g^r is returned.
    """
    m = params.hash_to_g1(message)
    while True:
        r = params.random_scalar(rng)
        h = m * (pk.g1**r)
        if h.is_identity():
            continue  # measure-zero on the curve; redraw keeps the invariant
        return ChameleonHash(h), CheckParam(params.g1**r)


def check(
    params: SystemParams,
    pk: ChameleonPublicKey,
    ch: ChameleonHash,
    message: bytes,
    check_param: CheckParam,
) -> bool:
    """Compatibility check e(h/m, g2) == e(R, y2).

    Costs exactly one G1 multiplication (the division) and two pairings.
    """
    m = params.hash_to_g1(message)
    base = ch.h / m
    return params.pairing_check(
        [(base, params.g2), (check_param.R.inverse(), pk.g2)]
    )


def check_claim(
    params: SystemParams, pk: ChameleonPublicKey, ch: ChameleonHash, claim: CollisionClaim
) -> bool:
    """Single-claim convenience form of check."""
    return check(params, pk, ch, claim.message, claim.check)


def sign(
    params: SystemParams, sk: int, ch: ChameleonHash, new_message: bytes
) -> CheckParam:
    """Forge the collision R' = (h/m')^x that signs new_message under h.

    Deterministic: identical (sk, h, M') always produce identical R'.
    Costs exactly one G1 multiplication and one G1 exponentiation.
    """
    m_new = params.hash_to_g1(new_message)
    base = ch.h / m_new
    if base.is_identity():
        raise DegenerateBaseError(
            "h equals the hash of the new message; the check parameter would be vacuous"
        )
    return CheckParam(base**sk)


def verify(
    params: SystemParams,
    pk: ChameleonPublicKey,
    ch: ChameleonHash,
    claim_a: CollisionClaim,
    claim_b: CollisionClaim,
) -> bool:
    """Verify a collision pair: both claims must individually pass check."""
    return check_claim(params, pk, ch, claim_a) and check_claim(params, pk, ch, claim_b)


# ---------------------------------------------------------------------------
# Key file format: magic, version, flags, then sk and/or pk halves
# ---------------------------------------------------------------------------


def encode_key_file(
    params: SystemParams,
    keypair: ChameleonKeyPair | None = None,
    *,
    pk: ChameleonPublicKey | None = None,
) -> bytes:
    """Serialize key material: 'CHAM', version byte, flags, payload."""
    if keypair is None and pk is None:
        raise ValueError("nothing to encode")
    flags = 0
    payload = b""
    if keypair is not None:
        flags |= _FLAG_SK
        payload += params.encode_scalar(keypair.sk)
        pk = keypair.pk
    if pk is not None:
        flags |= _FLAG_PK
        payload += pk.encode()
    return KEYFILE_MAGIC + bytes([KEYFILE_VERSION, flags]) + payload


def decode_key_file(
    params: SystemParams, data: bytes
) -> tuple[int | None, ChameleonPublicKey | None]:
    """Parse a key file; returns (sk or None, public key or None)."""
    if len(data) < 6 or data[:4] != KEYFILE_MAGIC:
        raise DecodeError("not a chameleon key file")
    if data[4] != KEYFILE_VERSION:
        raise DecodeError(f"unsupported key file version {data[4]}")
    flags = data[5]
    offset = 6
    sk = None
    pk = None
    if flags & _FLAG_SK:
        sk = params.decode_scalar(data[offset : offset + 32])
        offset += 32
    if flags & _FLAG_PK:
        n1 = params.g1_encoded_len()
        n2 = params.g2_encoded_len()
        if len(data) < offset + n1 + n2:
            raise DecodeError("truncated public key")
        pk = ChameleonPublicKey(
            params.decode_g1(data[offset : offset + n1]),
            params.decode_g2(data[offset + n1 : offset + n1 + n2]),
        )
        offset += n1 + n2
    if offset != len(data):
        raise DecodeError("trailing bytes in key file")
    if sk is None and pk is None:
        raise DecodeError("key file carries no material")
    return sk, pk

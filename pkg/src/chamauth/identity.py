"""Avatar identity model: identity tokens, virtual/physical identities,
the identity provider's registry, and the public append-only ledger.

The metaverse identity token (MIT) bridges the physical player and the
virtual avatar: it binds a biometric template and a chameleon public key
to an anonymous identity under the provider's signature, and is published
on the ledger.  Virtual and physical identities are chameleon collisions
forged against the token's (h, M, R) with the player's trapdoor, so any
number of avatars verify against one unchanged token.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from . import biometric, chameleon
from .biometric import BioFeature, BioTemplate, Challenge
from .chameleon import (
    ChameleonHash,
    ChameleonPublicKey,
    CheckParam,
    CollisionClaim,
)
from .errors import DecodeError, LedgerError, RegistrationError
from .group_backend import G1Element, SystemParams

__all__ = [
    "MetaverseIdentityToken",
    "VirtualIdentity",
    "PhysicalIdentity",
    "SchnorrKeyPair",
    "schnorr_keygen",
    "schnorr_sign",
    "schnorr_verify",
    "Ledger",
    "LedgerEntry",
    "Registry",
    "IdentityProvider",
    "create_vid",
    "create_pid",
    "verify_mit",
    "verify_vid",
    "verify_pid",
]

SALT_LEN = 16
_SIG_LEN = 64


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def _read_u32(data: bytes, offset: int) -> tuple[int, int]:
    if offset + 4 > len(data):
        raise DecodeError("truncated length prefix")
    return int.from_bytes(data[offset : offset + 4], "big"), offset + 4


# ---------------------------------------------------------------------------
# Deterministic Schnorr signature over source group one (the IDP signature)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchnorrKeyPair:
    sk: int
    vk: G1Element


def schnorr_keygen(params: SystemParams, rng=None) -> SchnorrKeyPair:
    sk = params.random_scalar(rng)
    return SchnorrKeyPair(sk=sk, vk=params.g1**sk)


def _hash_to_scalar(params: SystemParams, tag: bytes, *parts: bytes) -> int:
    h = hashlib.sha256(tag)
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return int.from_bytes(h.digest(), "big") % params.q


def schnorr_sign(params: SystemParams, keypair: SchnorrKeyPair, message: bytes) -> bytes:
    """Deterministic Schnorr: the nonce is derived from (sk, message)."""
    vk_enc = keypair.vk.encode()
    counter = 0
    while True:
        k = _hash_to_scalar(
            params,
            b"CHAMAUTH-SIG-NONCE",
            params.encode_scalar(keypair.sk),
            message,
            counter.to_bytes(4, "big"),
        )
        if k != 0:
            break
        counter += 1
    commit = params.g1**k
    e = _hash_to_scalar(params, b"CHAMAUTH-SIG-CHAL", commit.encode(), vk_enc, message)
    s = (k + e * keypair.sk) % params.q
    return params.encode_scalar(e) + params.encode_scalar(s)


def schnorr_verify(params: SystemParams, vk: G1Element, message: bytes, sig: bytes) -> bool:
    if len(sig) != _SIG_LEN:
        return False
    e = params.decode_scalar(sig[:32])
    s = params.decode_scalar(sig[32:])
    commit = (params.g1**s) * (vk ** (params.q - e))
    return e == _hash_to_scalar(params, b"CHAMAUTH-SIG-CHAL", commit.encode(), vk.encode(), message)


# ---------------------------------------------------------------------------
# Identity records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetaverseIdentityToken:
    """The ledger-published bridge record (T, y, h, M, R) plus IDP signature."""

    template: BioTemplate
    pk: ChameleonPublicKey
    ch: ChameleonHash
    anonymous_id: bytes
    check: CheckParam
    idp_sig: bytes

    def canonical_bytes(self) -> bytes:
        """Signed portion, fixed field order: T, y1, y2, h, len(M), M, R."""
        return (
            self.template.encode()
            + self.pk.g1.encode()
            + self.pk.g2.encode()
            + self.ch.encode()
            + _u32(len(self.anonymous_id))
            + self.anonymous_id
            + self.check.encode()
        )

    def encode(self) -> bytes:
        return self.canonical_bytes() + _u32(len(self.idp_sig)) + self.idp_sig

    def digest(self) -> bytes:
        return hashlib.sha256(self.encode()).digest()

    def claim(self) -> CollisionClaim:
        """The token's own (M, R) pair, the anchor of every collision."""
        return CollisionClaim(self.anonymous_id, self.check)

    @classmethod
    def decode(cls, params: SystemParams, data: bytes) -> "MetaverseIdentityToken":
        offset = 0
        tmpl_len = 4 + (biometric.IRIS_CODE_BITS + 7) // 8
        template = BioTemplate(biometric.decode_bits(data[offset : offset + tmpl_len]))
        offset += tmpl_len
        n1, n2 = params.g1_encoded_len(), params.g2_encoded_len()
        pk = ChameleonPublicKey(
            params.decode_g1(data[offset : offset + n1]),
            params.decode_g2(data[offset + n1 : offset + n1 + n2]),
        )
        offset += n1 + n2
        ch = ChameleonHash(params.decode_g1(data[offset : offset + n1]))
        offset += n1
        m_len, offset = _read_u32(data, offset)
        if offset + m_len > len(data):
            raise DecodeError("truncated anonymous identity")
        anonymous_id = data[offset : offset + m_len]
        offset += m_len
        check = CheckParam(params.decode_g1(data[offset : offset + n1]))
        offset += n1
        sig_len, offset = _read_u32(data, offset)
        if offset + sig_len != len(data):
            raise DecodeError("malformed token signature field")
        return cls(template, pk, ch, anonymous_id, check, data[offset:])


@dataclass(frozen=True)
class VirtualIdentity:
    """Avatar-facing identity: (M_a, R_a), a collision against the MIT."""

    claim: CollisionClaim

    def encode(self) -> bytes:
        return _u32(len(self.claim.message)) + self.claim.message + self.claim.check.encode()

    @classmethod
    def decode(cls, params: SystemParams, data: bytes) -> "VirtualIdentity":
        m_len, offset = _read_u32(data, 0)
        n1 = params.g1_encoded_len()
        if offset + m_len + n1 != len(data):
            raise DecodeError("malformed virtual identity")
        message = data[offset : offset + m_len]
        check = CheckParam(params.decode_g1(data[offset + m_len :]))
        return cls(CollisionClaim(message, check))


@dataclass(frozen=True)
class PhysicalIdentity:
    """Watermarked biometric feature plus its forged check parameter."""

    claim: CollisionClaim
    salt: bytes

    def feature(self) -> BioFeature:
        return BioFeature(biometric.decode_bits(self.claim.message), watermark_present=True)

    def encode(self) -> bytes:
        return (
            _u32(len(self.claim.message))
            + self.claim.message
            + self.claim.check.encode()
            + bytes([len(self.salt)])
            + self.salt
        )

    @classmethod
    def decode(cls, params: SystemParams, data: bytes) -> "PhysicalIdentity":
        m_len, offset = _read_u32(data, 0)
        n1 = params.g1_encoded_len()
        if offset + m_len + n1 + 1 > len(data):
            raise DecodeError("malformed physical identity")
        message = data[offset : offset + m_len]
        offset += m_len
        check = CheckParam(params.decode_g1(data[offset : offset + n1]))
        offset += n1
        salt_len = data[offset]
        offset += 1
        if offset + salt_len != len(data):
            raise DecodeError("malformed physical identity salt")
        return cls(CollisionClaim(message, check), data[offset:])


# ---------------------------------------------------------------------------
# Ledger and registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    prev_digest: bytes
    payload_digest: bytes
    payload: bytes

    def serialize(self) -> bytes:
        return (
            self.index.to_bytes(8, "big")
            + self.prev_digest
            + self.payload_digest
            + _u32(len(self.payload))
            + self.payload
        )

    def digest(self) -> bytes:
        return hashlib.sha256(self.serialize()).digest()


_GENESIS = b"\x00" * 32


class Ledger:
    """Append-only hash chain standing in for the blockchain."""

    def __init__(self):
        self.entries: list[LedgerEntry] = []
        self._by_payload_digest: dict[bytes, int] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, payload: bytes) -> int:
        prev = self.entries[-1].digest() if self.entries else _GENESIS
        entry = LedgerEntry(
            index=len(self.entries),
            prev_digest=prev,
            payload_digest=hashlib.sha256(payload).digest(),
            payload=payload,
        )
        self.entries.append(entry)
        self._by_payload_digest[entry.payload_digest] = entry.index
        return entry.index

    def get(self, key: int | bytes) -> bytes:
        if isinstance(key, int):
            if not 0 <= key < len(self.entries):
                raise LedgerError(f"no ledger entry at index {key}")
            return self.entries[key].payload
        index = self._by_payload_digest.get(key)
        if index is None:
            raise LedgerError(f"no ledger entry with digest {key.hex()}")
        return self.entries[index].payload

    def contains(self, payload_digest: bytes) -> bool:
        return payload_digest in self._by_payload_digest

    def verify_chain(self) -> bool:
        prev = _GENESIS
        for i, entry in enumerate(self.entries):
            if (
                entry.index != i
                or entry.prev_digest != prev
                or hashlib.sha256(entry.payload).digest() != entry.payload_digest
            ):
                return False
            prev = entry.digest()
        return True

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            for entry in self.entries:
                blob = entry.serialize()
                fh.write(_u32(len(blob)) + blob)

    @classmethod
    def load(cls, path: str) -> "Ledger":
        ledger = cls()
        with open(path, "rb") as fh:
            data = fh.read()
        offset = 0
        while offset < len(data):
            blob_len, offset = _read_u32(data, offset)
            blob = data[offset : offset + blob_len]
            offset += blob_len
            index = int.from_bytes(blob[:8], "big")
            payload_len = int.from_bytes(blob[72:76], "big")
            entry = LedgerEntry(
                index=index,
                prev_digest=blob[8:40],
                payload_digest=blob[40:72],
                payload=blob[76 : 76 + payload_len],
            )
            ledger.entries.append(entry)
            ledger._by_payload_digest[entry.payload_digest] = entry.index
        if not ledger.verify_chain():
            raise LedgerError(f"hash chain broken in {path}")
        return ledger


class Registry:
    """The IDP's private (mit_digest -> real identity) database."""

    def __init__(self):
        self._records: dict[bytes, bytes] = {}

    def __len__(self) -> int:
        return len(self._records)

    def record(self, mit_digest: bytes, real_id: bytes) -> None:
        self._records[mit_digest] = real_id

    def lookup(self, mit_digest: bytes) -> bytes | None:
        return self._records.get(mit_digest)

    def save(self, path: str) -> None:
        blob = {k.hex(): v.hex() for k, v in self._records.items()}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(blob, fh, indent=0, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "Registry":
        registry = cls()
        with open(path, "r", encoding="utf-8") as fh:
            blob = json.load(fh)
        for k, v in blob.items():
            registry._records[bytes.fromhex(k)] = bytes.fromhex(v)
        return registry


# ---------------------------------------------------------------------------
# The identity provider
# ---------------------------------------------------------------------------


class IdentityProvider:
    """Trusted registrar: audits players, issues signed tokens, keeps the
    (ID, MIT) registry, and publishes tokens on the ledger."""

    def __init__(
        self,
        params: SystemParams,
        sig_keypair: SchnorrKeyPair | None = None,
        ledger: Ledger | None = None,
        registry: Registry | None = None,
        rng=None,
    ):
        self.params = params
        self.sig = sig_keypair if sig_keypair is not None else schnorr_keygen(params, rng)
        self.ledger = ledger if ledger is not None else Ledger()
        self.registry = registry if registry is not None else Registry()
        self._anonymous_ids: set[bytes] = set()
        for entry in self.ledger.entries:
            token = MetaverseIdentityToken.decode(params, entry.payload)
            self._anonymous_ids.add(token.anonymous_id)

    @property
    def verify_key(self) -> G1Element:
        return self.sig.vk

    def register(
        self,
        real_id: bytes,
        anonymous_id: bytes,
        template: BioTemplate,
        pk: ChameleonPublicKey,
        rng=None,
    ) -> MetaverseIdentityToken:
        """Issue an MIT: the IDP itself runs Hash(y, M), signs the token,
        publishes it on the ledger, and stores (ID, digest) privately."""
        if not anonymous_id:
            raise RegistrationError("anonymous identity must be nonempty")
        if anonymous_id in self._anonymous_ids:
            raise RegistrationError("anonymous identity already registered with this IDP")
        if not pk.is_consistent(self.params):
            raise RegistrationError("chameleon public key fails the dual-key consistency check")
        ch, check = chameleon.hash(self.params, pk, anonymous_id, rng)
        unsigned = MetaverseIdentityToken(template, pk, ch, anonymous_id, check, b"")
        sig = schnorr_sign(self.params, self.sig, unsigned.canonical_bytes())
        token = MetaverseIdentityToken(template, pk, ch, anonymous_id, check, sig)
        if not chameleon.check(self.params, pk, ch, anonymous_id, check):
            raise RegistrationError("issued token fails its own chameleon check")
        self.ledger.append(token.encode())
        self.registry.record(token.digest(), real_id)
        self._anonymous_ids.add(anonymous_id)
        return token


def verify_mit(
    params: SystemParams,
    idp_verify_key: G1Element,
    mit: MetaverseIdentityToken,
    ledger: Ledger | None = None,
) -> bool:
    """IDP signature check, plus ledger presence when a ledger is supplied."""
    if not schnorr_verify(params, idp_verify_key, mit.canonical_bytes(), mit.idp_sig):
        return False
    if ledger is not None and not ledger.contains(mit.digest()):
        return False
    return True


# ---------------------------------------------------------------------------
# Virtual and physical identity construction
# ---------------------------------------------------------------------------


def create_vid(
    params: SystemParams, sk: int, mit: MetaverseIdentityToken, avatar_info: bytes
) -> VirtualIdentity:
    """Forge the collision (M_a, R_a) that presents avatar_info under the MIT."""
    check = chameleon.sign(params, sk, mit.ch, avatar_info)
    return VirtualIdentity(CollisionClaim(avatar_info, check))


def create_pid(
    params: SystemParams,
    sk: int,
    mit: MetaverseIdentityToken,
    challenge: Challenge,
    salt: bytes,
    capture_noise: float,
    live_template: BioTemplate | None = None,
    rng=None,
) -> PhysicalIdentity:
    """Capture a live sample, watermark it with the challenge, and sign it.

    The live template defaults to the enrolled one (an honest player); pass
    a different template to model an impersonating manipulator.
    """
    source = live_template if live_template is not None else mit.template
    feature = biometric.capture(source, capture_noise, rng)
    watermarked = biometric.embed_watermark(feature, challenge, salt)
    message = watermarked.encode()
    check = chameleon.sign(params, sk, mit.ch, message)
    return PhysicalIdentity(CollisionClaim(message, check), salt)


def verify_vid(params: SystemParams, mit: MetaverseIdentityToken, vid: VirtualIdentity) -> bool:
    """Collision verification of the VID against the token's (M, R)."""
    return chameleon.verify(params, mit.pk, mit.ch, mit.claim(), vid.claim)


def verify_pid(params: SystemParams, mit: MetaverseIdentityToken, pid: PhysicalIdentity) -> bool:
    """Collision verification of the PID against the token's (M, R)."""
    return chameleon.verify(params, mit.pk, mit.ch, mit.claim(), pid.claim)


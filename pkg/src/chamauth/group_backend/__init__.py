"""Bilinear-group abstraction with interchangeable backends.

Two backends share one element API: a production pairing-friendly curve
(`setup`) and a toy exponent-arithmetic oracle over a small prime
(`toy_setup`) whose elements are their own discrete logs.  Group
operations feed the thread-local operation counters in
:mod:`chamauth.group_backend.counting`; exponentiation, G1 multiplication
and pairing evaluation are the counted events.
"""

from __future__ import annotations

import secrets
from typing import Sequence

from ..errors import DecodeError, UnsupportedSecurityLevel
from . import bn254, counting
from .counting import OpCounter, measure
from .toy import ToyBackend

__all__ = [
    "SystemParams",
    "G1Element",
    "G2Element",
    "GTElement",
    "OpCounter",
    "measure",
    "setup",
    "toy_setup",
    "SCALAR_LEN",
]

SCALAR_LEN = 32

HASH_DST = b"CHAMAUTH-H2G-v1"


class _Element:
    __slots__ = ("params", "raw")

    group = "?"

    def __init__(self, params: "SystemParams", raw):
        self.params = params
        self.raw = raw

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and other.params.group_id == self.params.group_id
            and other.raw == self.raw
        )

    def __hash__(self):
        return hash((self.group, self.encode()))

    def __repr__(self):
        return f"<{type(self).__name__} {self.encode().hex()[:16]}…>"


class G1Element(_Element):
    """Element of source group one with canonical compressed encoding."""

    group = "g1"

    def __mul__(self, other: "G1Element") -> "G1Element":
        counting.record_m1()
        return G1Element(self.params, self.params._ops.g1_mul(self.raw, other.raw))

    def __truediv__(self, other: "G1Element") -> "G1Element":
        counting.record_m1()
        ops = self.params._ops
        return G1Element(self.params, ops.g1_mul(self.raw, ops.g1_inv(other.raw)))

    def __pow__(self, exponent: int) -> "G1Element":
        counting.record_e1()
        return G1Element(self.params, self.params._ops.g1_exp(self.raw, exponent))

    def inverse(self) -> "G1Element":
        return G1Element(self.params, self.params._ops.g1_inv(self.raw))

    def encode(self) -> bytes:
        return self.params._ops.g1_encode(self.raw)

    def is_identity(self) -> bool:
        return self.params._ops.g1_is_identity(self.raw)


class G2Element(_Element):
    """Element of source group two; caches pairing precomputation."""

    __slots__ = ("params", "raw", "_prepared")

    group = "g2"

    def __init__(self, params: "SystemParams", raw):
        super().__init__(params, raw)
        self._prepared = None

    def __mul__(self, other: "G2Element") -> "G2Element":
        return G2Element(self.params, self.params._ops.g2_mul(self.raw, other.raw))

    def __pow__(self, exponent: int) -> "G2Element":
        counting.record_e2()
        return G2Element(self.params, self.params._ops.g2_exp(self.raw, exponent))

    def inverse(self) -> "G2Element":
        return G2Element(self.params, self.params._ops.g2_inv(self.raw))

    def encode(self) -> bytes:
        return self.params._ops.g2_encode(self.raw)

    def is_identity(self) -> bool:
        return self.params._ops.g2_is_identity(self.raw)

    def prepared(self):
        if self._prepared is None:
            self._prepared = self.params._ops.prepare_g2(self.raw)
        return self._prepared


class GTElement(_Element):
    """Element of the target group."""

    group = "gt"

    def __mul__(self, other: "GTElement") -> "GTElement":
        return GTElement(self.params, self.params._ops.gt_mul(self.raw, other.raw))

    def __pow__(self, exponent: int) -> "GTElement":
        counting.record_et()
        return GTElement(self.params, self.params._ops.gt_exp(self.raw, exponent))

    def encode(self) -> bytes:
        return self.params._ops.gt_encode(self.raw)

    def is_identity(self) -> bool:
        return self.params._ops.gt_is_identity(self.raw)


class _Bn254Ops:
    """Raw-value operations over the curve backend."""

    backend_id = "bn254"
    g1_encoded_len = 32
    g2_encoded_len = 64
    gt_encoded_len = 384

    def __init__(self):
        self.q = int(bn254.ORDER)
        self.g1_raw = bn254.G1_GEN
        self.g2_raw = bn254.G2_GEN
        self.gt_identity_raw = bn254.F12_ONE
        self._g1_comb = bn254.G1FixedBase(bn254.G1_GEN)
        self._g2_comb = bn254.G2FixedBase(bn254.G2_GEN)

    def g1_mul(self, a, b):
        return bn254.g1_add(a, b)

    def g1_exp(self, a, s):
        if a == self.g1_raw:
            return self._g1_comb.mul(s)
        return bn254.g1_scalar_mul(a, s)

    def g1_inv(self, a):
        return bn254.g1_neg(a)

    def g1_encode(self, a):
        return bn254.g1_encode(a)

    def g1_decode(self, data):
        return bn254.g1_decode(data)

    def g1_is_identity(self, a):
        return a is None

    def g1_random(self, randrange):
        return self._g1_comb.mul(randrange(1, self.q))

    def g2_mul(self, a, b):
        return bn254.g2_add(a, b)

    def g2_exp(self, a, s):
        if a == self.g2_raw:
            return self._g2_comb.mul(s)
        return bn254.g2_scalar_mul(a, s)

    def g2_inv(self, a):
        return bn254.g2_neg(a)

    def g2_encode(self, a):
        return bn254.g2_encode(a)

    def g2_decode(self, data):
        return bn254.g2_decode(data)

    def g2_is_identity(self, a):
        return a is None

    def g2_random(self, randrange):
        return self._g2_comb.mul(randrange(1, self.q))

    def gt_mul(self, a, b):
        return bn254.f12_mul(a, b)

    def gt_exp(self, a, s):
        return bn254.f12_pow(a, s % self.q)

    def gt_encode(self, a):
        return bn254.gt_encode(a)

    def gt_decode(self, data):
        return bn254.gt_decode(data)

    def gt_is_identity(self, a):
        return a == bn254.F12_ONE

    def prepare_g2(self, raw):
        return bn254.prepare_g2(raw)

    def pairing(self, a, prepared):
        return bn254.pairing(a, prepared)

    def multi_pairing(self, pairs):
        return bn254.multi_pairing(pairs)

    def hash_to_g1(self, message: bytes):
        return bn254.hash_to_g1(message, HASH_DST)


class _ToyOps(ToyBackend):
    """Toy backend plus the trivial pairing precomputation hooks."""

    def prepare_g2(self, raw):
        return raw

    def pairing(self, a, prepared):
        return a * prepared % self.q

    def multi_pairing(self, pairs):
        acc = 0
        for a, prepared in pairs:
            acc = (acc + a * prepared) % self.q
        return acc


class SystemParams:
    """Published system parameters: groups, generators, and hash-to-group."""

    def __init__(self, ops, group_id: str, security_level: int | None):
        self._ops = ops
        self.group_id = group_id
        self.security_level = security_level
        self.q = ops.q
        self.g1 = G1Element(self, ops.g1_raw)
        self.g2 = G2Element(self, ops.g2_raw)

    @property
    def backend_id(self) -> str:
        return self._ops.backend_id

    def hash_to_g1(self, message: bytes) -> G1Element:
        return G1Element(self, self._ops.hash_to_g1(message))

    def pairing(self, a: G1Element, b: G2Element) -> GTElement:
        counting.record_p()
        return GTElement(self, self._ops.pairing(a.raw, b.prepared()))

    def multi_pairing(self, pairs: Sequence[tuple[G1Element, G2Element]]) -> GTElement:
        counting.record_p(len(pairs))
        raw = self._ops.multi_pairing([(a.raw, b.prepared()) for a, b in pairs])
        return GTElement(self, raw)

    def pairing_check(self, pairs: Sequence[tuple[G1Element, G2Element]]) -> bool:
        """True iff the product of the pairings is the identity in GT."""
        return self.multi_pairing(pairs).is_identity()

    def gt_identity(self) -> GTElement:
        return GTElement(self, self._ops.gt_identity_raw)

    # -- scalars --

    def random_scalar(self, rng=None) -> int:
        """Uniform nonzero scalar in [1, q)."""
        randrange = rng.randrange if rng is not None else _secure_randrange
        return randrange(1, self.q)

    def scalar_inverse(self, s: int) -> int:
        return pow(s, -1, self.q)

    def encode_scalar(self, s: int) -> bytes:
        return (s % self.q).to_bytes(SCALAR_LEN, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != SCALAR_LEN:
            raise DecodeError(f"scalar must be {SCALAR_LEN} bytes")
        return int.from_bytes(data, "big") % self.q

    # -- element decode / random --

    def decode_g1(self, data: bytes) -> G1Element:
        return G1Element(self, self._ops.g1_decode(data))

    def decode_g2(self, data: bytes) -> G2Element:
        return G2Element(self, self._ops.g2_decode(data))

    def decode_gt(self, data: bytes) -> GTElement:
        return GTElement(self, self._ops.gt_decode(data))

    def random_g1(self, rng=None) -> G1Element:
        randrange = rng.randrange if rng is not None else _secure_randrange
        return G1Element(self, self._ops.g1_random(randrange))

    def random_g2(self, rng=None) -> G2Element:
        randrange = rng.randrange if rng is not None else _secure_randrange
        return G2Element(self, self._ops.g2_random(randrange))

    def g1_encoded_len(self) -> int:
        return self._ops.g1_encoded_len

    def g2_encoded_len(self) -> int:
        return self._ops.g2_encoded_len

    def __repr__(self):
        return f"<SystemParams {self.group_id} q~2^{self.q.bit_length()}>"


def _secure_randrange(lo: int, hi: int) -> int:
    return lo + secrets.randbelow(hi - lo)


def setup(security_level: int = 128) -> SystemParams:
    """Publish system parameters for the curve backend.

    Only the 128-bit level is provided; it selects the standard 254-bit
    Barreto-Naehrig curve.
    """
    if security_level != 128:
        raise UnsupportedSecurityLevel(
            f"curve backend supports security level 128 only, got {security_level}"
        )
    return SystemParams(_Bn254Ops(), group_id="bn254-128", security_level=128)


def toy_setup(q: int = 13) -> SystemParams:
    """Publish toy parameters: exponent arithmetic mod a small prime q."""
    return SystemParams(_ToyOps(q), group_id=f"toy-{q}", security_level=None)

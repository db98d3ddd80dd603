"""Toy exponent-arithmetic backend.

Group elements are their own discrete logs: integers mod a small prime q.
The group operation is addition, exponentiation by a scalar is
multiplication, and the pairing multiplies exponents mod q.  Every identity
that holds on a real bilinear group holds here verbatim, so the backend
serves as a brute-force oracle for the curve backend at desk scale.
"""

from __future__ import annotations

import hashlib

from ..errors import DecodeError

ENCODED_LEN = 8


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond any sensible toy order."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class ToyBackend:
    """Arithmetic oracle over Z_q with addition as the group law."""

    backend_id = "toy"
    g1_encoded_len = ENCODED_LEN
    g2_encoded_len = ENCODED_LEN
    gt_encoded_len = ENCODED_LEN

    def __init__(self, q: int):
        if not is_prime(q) or q < 3:
            raise ValueError(f"toy group order must be a small odd prime, got {q}")
        if q >= 1 << 63:
            raise ValueError("toy group order must fit the 8-byte encoding")
        self.q = q
        self.g1_raw = 1
        self.g2_raw = 1
        self.gt_identity_raw = 0

    # -- shared arithmetic (all three groups are Z_q additive) --

    def _mul(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def _exp(self, a: int, s: int) -> int:
        return a * (s % self.q) % self.q

    def _inv(self, a: int) -> int:
        return -a % self.q

    def _encode(self, a: int) -> bytes:
        return a.to_bytes(ENCODED_LEN, "big")

    def _decode(self, data: bytes) -> int:
        if len(data) != ENCODED_LEN:
            raise DecodeError(f"toy element must be {ENCODED_LEN} bytes")
        value = int.from_bytes(data, "big")
        if value >= self.q:
            raise DecodeError("toy element out of range")
        return value

    g1_mul = g2_mul = gt_mul = _mul
    g1_exp = g2_exp = gt_exp = _exp
    g1_inv = g2_inv = gt_inv = _inv
    g1_encode = g2_encode = gt_encode = _encode
    g1_decode = g2_decode = gt_decode = _decode

    def g1_is_identity(self, a: int) -> bool:
        return a == 0

    g2_is_identity = gt_is_identity = g1_is_identity

    def g1_random(self, randrange) -> int:
        return randrange(1, self.q)

    g2_random = g1_random

    # -- pairing --

    def pairing(self, a: int, b: int) -> int:
        return a * b % self.q

    def multi_pairing(self, pairs) -> int:
        acc = 0
        for a, b in pairs:
            acc = (acc + a * b) % self.q
        return acc

    # -- hashing --

    def hash_to_g1(self, message: bytes) -> int:
        digest = hashlib.sha256(message).digest()
        return int.from_bytes(digest, "big") % (self.q - 1) + 1

"""Pairing arithmetic over the 254-bit Barreto-Naehrig curve (alt_bn128).

Self-contained implementation: tower fields FQ2/FQ6/FQ12 over gmpy2
integers, affine/Jacobian point arithmetic on the curve and its sextic
twist, an optimal ate pairing with precomputable G2 line coefficients, and
a Fouque-Tibouchi hash to G1.

Curve: y^2 = x^3 + 3 over F_p, subgroup order q, G1 cofactor 1.  The twist
E': y^2 = x^3 + 3/(9+i) over F_p2 hosts G2.  Tower: FQ2 = FQ[i]/(i^2+1),
FQ6 = FQ2[v]/(v^3 - (9+i)), FQ12 = FQ6[w]/(w^2 - v).

Elements are plain tuples of gmpy2 mpz, points are affine pairs (None is
the identity); nothing here counts operations or knows about the rest of
the package.
"""

from __future__ import annotations

import hashlib

from gmpy2 import invert, mpz, powmod

from ..errors import DecodeError

# BN parameter and derived constants
U = 4965661367192848881
P = mpz(36 * U**4 + 36 * U**3 + 24 * U**2 + 6 * U + 1)
ORDER = mpz(36 * U**4 + 36 * U**3 + 18 * U**2 + 6 * U + 1)
ATE_LOOP = 6 * U + 2

_ATE_BITS = bin(ATE_LOOP)[3:]


def _naf_digits(n: int) -> list[int]:
    out = []
    while n:
        if n & 1:
            d = 2 - (n & 3)
            out.append(d)
            n -= d
        else:
            out.append(0)
        n >>= 1
    out.reverse()
    return out


_U_NAF = _naf_digits(U)[1:]  # leading digit is always 1

B = mpz(3)

G1_GEN = (mpz(1), mpz(2))

# G2 generator of the order-q subgroup on the twist (x, y in FQ2 as (re, im))
G2_GEN = (
    (
        mpz(10857046999023057135944570762232829481370756359578518086990519993285655852781),
        mpz(11559732032986387107991004021392285783925812861821192530917403151452391805634),
    ),
    (
        mpz(8495653923123431417604973247489272438418190587263600148770280649306958101930),
        mpz(4082367875863433681332203403145435568316851327593401208105741076214120093531),
    ),
)

_ZERO = mpz(0)
_ONE = mpz(1)

# ---------------------------------------------------------------------------
# FQ2 arithmetic: (a, b) means a + b*i with i^2 = -1
# ---------------------------------------------------------------------------

F2_ZERO = (_ZERO, _ZERO)
F2_ONE = (_ONE, _ZERO)

XI = (mpz(9), _ONE)  # the FQ6 non-residue 9 + i


def f2_add(x, y):
    return ((x[0] + y[0]) % P, (x[1] + y[1]) % P)


def f2_sub(x, y):
    return ((x[0] - y[0]) % P, (x[1] - y[1]) % P)


def f2_neg(x):
    return (-x[0] % P, -x[1] % P)


def f2_conj(x):
    return (x[0], -x[1] % P)


def f2_dbl(x):
    return (x[0] * 2 % P, x[1] * 2 % P)


def f2_mul(x, y):
    a, b = x
    c, d = y
    ac = a * c
    bd = b * d
    return ((ac - bd) % P, ((a + b) * (c + d) - ac - bd) % P)


def f2_sqr(x):
    a, b = x
    return ((a + b) * (a - b) % P, 2 * a * b % P)


def f2_mul_scalar(x, s):
    return (x[0] * s % P, x[1] * s % P)


def f2_mul_xi(x):
    # (9 + i) * (a + bi) = (9a - b) + (a + 9b)i
    a, b = x
    return ((9 * a - b) % P, (a + 9 * b) % P)


def f2_inv(x):
    a, b = x
    norm = (a * a + b * b) % P
    t = invert(norm, P)
    return (a * t % P, -b * t % P)


def f2_is_zero(x):
    return x[0] == 0 and x[1] == 0


def f2_pow(x, e):
    result = F2_ONE
    for bit in bin(e)[2:]:
        result = f2_sqr(result)
        if bit == "1":
            result = f2_mul(result, x)
    return result


def f2_legendre(x):
    """1 if x is a nonzero square in FQ2, -1 if non-square, 0 if zero."""
    if f2_is_zero(x):
        return 0
    norm = (x[0] * x[0] + x[1] * x[1]) % P
    return 1 if powmod(norm, (P - 1) >> 1, P) == 1 else -1


def f2_sqrt(x):
    """Square root in FQ2 for p = 3 mod 4, or None if x is a non-square."""
    a, b = x
    if b == 0:
        if powmod(a, (P - 1) >> 1, P) <= 1:
            return (powmod(a, (P + 1) >> 2, P), _ZERO)
        return (_ZERO, powmod(-a % P, (P + 1) >> 2, P))
    norm = (a * a + b * b) % P
    alpha = powmod(norm, (P + 1) >> 2, P)
    if alpha * alpha % P != norm:
        return None
    delta = (a + alpha) * invert(2, P) % P
    if powmod(delta, (P - 1) >> 1, P) > 1:
        delta = (a - alpha) * invert(2, P) % P
    x0 = powmod(delta, (P + 1) >> 2, P)
    if x0 * x0 % P != delta:
        return None
    x1 = b * invert(2 * x0, P) % P
    root = (x0, x1)
    return root if f2_sqr(root) == (a % P, b % P) else None


# ---------------------------------------------------------------------------
# FQ6 arithmetic: (c0, c1, c2) means c0 + c1*v + c2*v^2 with v^3 = XI
# ---------------------------------------------------------------------------

F6_ZERO = (F2_ZERO, F2_ZERO, F2_ZERO)
F6_ONE = (F2_ONE, F2_ZERO, F2_ZERO)


def f6_add(x, y):
    return (f2_add(x[0], y[0]), f2_add(x[1], y[1]), f2_add(x[2], y[2]))


def f6_sub(x, y):
    return (f2_sub(x[0], y[0]), f2_sub(x[1], y[1]), f2_sub(x[2], y[2]))


def f6_neg(x):
    return (f2_neg(x[0]), f2_neg(x[1]), f2_neg(x[2]))


def f6_mul(x, y):
    a0, a1, a2 = x
    b0, b1, b2 = y
    t0 = f2_mul(a0, b0)
    t1 = f2_mul(a1, b1)
    t2 = f2_mul(a2, b2)
    c0 = f2_add(t0, f2_mul_xi(f2_sub(f2_mul(f2_add(a1, a2), f2_add(b1, b2)), f2_add(t1, t2))))
    c1 = f2_add(f2_sub(f2_mul(f2_add(a0, a1), f2_add(b0, b1)), f2_add(t0, t1)), f2_mul_xi(t2))
    c2 = f2_add(f2_sub(f2_mul(f2_add(a0, a2), f2_add(b0, b2)), f2_add(t0, t2)), t1)
    return (c0, c1, c2)


def f6_sqr(x):
    a0, a1, a2 = x
    s0 = f2_sqr(a0)
    s1 = f2_sqr(a1)
    s2 = f2_sqr(a2)
    t01 = f2_mul(a0, a1)
    t12 = f2_mul(a1, a2)
    t02 = f2_mul(a0, a2)
    return (
        f2_add(s0, f2_mul_xi(f2_dbl(t12))),
        f2_add(f2_dbl(t01), f2_mul_xi(s2)),
        f2_add(f2_dbl(t02), s1),
    )


def f6_mul_by_v(x):
    return (f2_mul_xi(x[2]), x[0], x[1])


def f6_mul_fq2(x, s):
    return (f2_mul(x[0], s), f2_mul(x[1], s), f2_mul(x[2], s))


def f6_mul_scalar(x, s):
    return (f2_mul_scalar(x[0], s), f2_mul_scalar(x[1], s), f2_mul_scalar(x[2], s))


def f6_inv(x):
    a0, a1, a2 = x
    t0 = f2_sub(f2_sqr(a0), f2_mul_xi(f2_mul(a1, a2)))
    t1 = f2_sub(f2_mul_xi(f2_sqr(a2)), f2_mul(a0, a1))
    t2 = f2_sub(f2_sqr(a1), f2_mul(a0, a2))
    norm = f2_add(f2_mul(a0, t0), f2_mul_xi(f2_add(f2_mul(a2, t1), f2_mul(a1, t2))))
    inv = f2_inv(norm)
    return (f2_mul(t0, inv), f2_mul(t1, inv), f2_mul(t2, inv))


def f6_is_zero(x):
    return all(f2_is_zero(c) for c in x)


# ---------------------------------------------------------------------------
# FQ12 arithmetic: (c0, c1) means c0 + c1*w with w^2 = v
# ---------------------------------------------------------------------------

F12_ONE = (F6_ONE, F6_ZERO)


def f12_mul(x, y):
    a0, a1 = x
    b0, b1 = y
    t0 = f6_mul(a0, b0)
    t1 = f6_mul(a1, b1)
    c1 = f6_sub(f6_mul(f6_add(a0, a1), f6_add(b0, b1)), f6_add(t0, t1))
    return (f6_add(t0, f6_mul_by_v(t1)), c1)


def f12_sqr(x):
    a0, a1 = x
    t = f6_mul(a0, a1)
    c0 = f6_sub(f6_mul(f6_add(a0, a1), f6_add(a0, f6_mul_by_v(a1))), f6_add(t, f6_mul_by_v(t)))
    return (c0, f6_add(t, t))


def f12_conj(x):
    """x^(p^6): the conjugation a - b*w, the inverse on the cyclotomic subgroup."""
    return (x[0], f6_neg(x[1]))


def f12_inv(x):
    a0, a1 = x
    t = f6_inv(f6_sub(f6_sqr(a0), f6_mul_by_v(f6_sqr(a1))))
    return (f6_mul(a0, t), f6_neg(f6_mul(a1, t)))


def f12_eq_one(x):
    return x == F12_ONE


# Frobenius coefficients, derived from XI at import time
_G1FROB = f2_pow(XI, (P - 1) // 3)        # gamma for the v coefficient
_G2FROB = f2_sqr(_G1FROB)                 # gamma for the v^2 coefficient
_GWFROB = f2_pow(XI, (P - 1) // 6)        # gamma for the w coefficient
TWIST_FROB_X = f2_pow(XI, (P - 1) // 3)   # twist-point Frobenius on x
TWIST_FROB_Y = f2_pow(XI, (P - 1) // 2)   # twist-point Frobenius on y


def f6_frob(x):
    return (
        f2_conj(x[0]),
        f2_mul(f2_conj(x[1]), _G1FROB),
        f2_mul(f2_conj(x[2]), _G2FROB),
    )


def f12_frob(x):
    return (f6_frob(x[0]), f6_mul_fq2(f6_frob(x[1]), _GWFROB))


def f12_csqr(x):
    """Squaring restricted to the cyclotomic subgroup (a^2 - v*b^2 = 1)."""
    a0, a1 = x
    asq = f6_sqr(a0)
    c0 = f6_sub(f6_add(asq, asq), F6_ONE)
    ab = f6_mul(a0, a1)
    return (c0, f6_add(ab, ab))


def f12_cyc_exp_u(x):
    """x^U for x in the cyclotomic subgroup (NAF; inversion is conjugation)."""
    x_conj = f12_conj(x)
    result = x
    for digit in _U_NAF:
        result = f12_csqr(result)
        if digit == 1:
            result = f12_mul(result, x)
        elif digit == -1:
            result = f12_mul(result, x_conj)
    return result


def f12_pow(x, e):
    result = F12_ONE
    if e == 0:
        return result
    for bit in bin(e)[2:]:
        result = f12_sqr(result)
        if bit == "1":
            result = f12_mul(result, x)
    return result


# ---------------------------------------------------------------------------
# G1: points on y^2 = x^3 + 3 over FQ, affine (x, y) tuples, None = identity
# ---------------------------------------------------------------------------


def g1_is_on_curve(pt):
    if pt is None:
        return True
    x, y = pt
    return (y * y - (x * x * x + B)) % P == 0


def g1_neg(pt):
    if pt is None:
        return None
    return (pt[0], -pt[1] % P)


def g1_add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if (y1 + y2) % P == 0:
            return None
        lam = 3 * x1 * x1 * invert(2 * y1, P) % P
    else:
        lam = (y2 - y1) * invert(x2 - x1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def _g1_jac_dbl(pt):
    x, y, z = pt
    if y == 0:
        return (_ONE, _ONE, _ZERO)
    a = x * x % P
    b = y * y % P
    c = b * b % P
    d = 2 * ((x + b) * (x + b) - a - c) % P
    e = 3 * a % P
    f = e * e % P
    x3 = (f - 2 * d) % P
    y3 = (e * (d - x3) - 8 * c) % P
    z3 = 2 * y * z % P
    return (x3, y3, z3)


def _g1_jac_madd(pt, aff):
    # mixed addition: pt in Jacobian, aff affine (z = 1); pt must not be infinity
    x1, y1, z1 = pt
    if z1 == 0:
        return (aff[0], aff[1], _ONE)
    x2, y2 = aff
    z1z1 = z1 * z1 % P
    u2 = x2 * z1z1 % P
    s2 = y2 * z1 * z1z1 % P
    if u2 == x1 and s2 == y1:
        return _g1_jac_dbl(pt)
    h = (u2 - x1) % P
    hh = h * h % P
    i = 4 * hh % P
    j = h * i % P
    r = 2 * (s2 - y1) % P
    if h == 0 and r == 0:
        return (_ONE, _ONE, _ZERO)
    v = x1 * i % P
    x3 = (r * r - j - 2 * v) % P
    y3 = (r * (v - x3) - 2 * y1 * j) % P
    z3 = ((z1 + h) * (z1 + h) - z1z1 - hh) % P
    return (x3, y3, z3)


def _g1_jac_to_affine(pt):
    x, y, z = pt
    if z == 0:
        return None
    zinv = invert(z, P)
    zinv2 = zinv * zinv % P
    return (x * zinv2 % P, y * zinv2 * zinv % P)


def g1_scalar_mul(pt, k):
    k %= ORDER
    if pt is None or k == 0:
        return None
    # 4-bit window over an affine table of 1P..15P
    table = [pt]
    for _ in range(14):
        table.append(g1_add(table[-1], pt))
    acc = (_ONE, _ONE, _ZERO)
    started = False
    for shift in range((k.bit_length() + 3) // 4 * 4 - 4, -1, -4):
        if started:
            acc = _g1_jac_dbl(acc)
            acc = _g1_jac_dbl(acc)
            acc = _g1_jac_dbl(acc)
            acc = _g1_jac_dbl(acc)
        window = (k >> shift) & 0xF
        if window:
            acc = _g1_jac_madd(acc, table[window - 1])
            started = True
    return _g1_jac_to_affine(acc)


class G1FixedBase:
    """Precomputed 4-bit comb for repeated exponentiations of one base."""

    def __init__(self, base):
        self.tables = []
        row_base = base
        for _ in range(64):
            row = [row_base]
            for _ in range(14):
                row.append(g1_add(row[-1], row_base))
            self.tables.append(row)
            row_base = g1_add(row[-1], row_base)  # 16 * row_base

    def mul(self, k):
        k %= ORDER
        if k == 0:
            return None
        acc = (_ONE, _ONE, _ZERO)
        idx = 0
        while k:
            window = k & 0xF
            if window:
                acc = _g1_jac_madd(acc, self.tables[idx][window - 1])
            k >>= 4
            idx += 1
        return _g1_jac_to_affine(acc)


# ---------------------------------------------------------------------------
# G2: points on the twist y^2 = x^3 + 3/(9+i) over FQ2
# ---------------------------------------------------------------------------

B2 = f2_mul_scalar(f2_inv(XI), 3)


def g2_is_on_curve(pt):
    if pt is None:
        return True
    x, y = pt
    return f2_sqr(y) == f2_add(f2_mul(f2_sqr(x), x), B2)


def g2_neg(pt):
    if pt is None:
        return None
    return (pt[0], f2_neg(pt[1]))


def g2_add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if f2_is_zero(f2_add(y1, y2)):
            return None
        lam = f2_mul(f2_mul_scalar(f2_sqr(x1), 3), f2_inv(f2_dbl(y1)))
    else:
        lam = f2_mul(f2_sub(y2, y1), f2_inv(f2_sub(x2, x1)))
    x3 = f2_sub(f2_sub(f2_sqr(lam), x1), x2)
    return (x3, f2_sub(f2_mul(lam, f2_sub(x1, x3)), y1))


def g2_scalar_mul(pt, k):
    k %= ORDER
    if pt is None or k == 0:
        return None
    acc = None
    for bit in bin(k)[2:]:
        acc = g2_add(acc, acc)
        if bit == "1":
            acc = g2_add(acc, pt)
    return acc


def g2_in_subgroup(pt):
    # scalar multiplication reduces exponents mod the subgroup order, so the
    # membership test uses (q-1)*P == -P, which stays below the modulus
    if pt is None:
        return True
    if not g2_is_on_curve(pt):
        return False
    return g2_scalar_mul(pt, ORDER - 1) == g2_neg(pt)


def g2_frobenius(pt):
    if pt is None:
        return None
    x, y = pt
    return (f2_mul(f2_conj(x), TWIST_FROB_X), f2_mul(f2_conj(y), TWIST_FROB_Y))


class G2FixedBase:
    """Precomputed 4-bit comb for the G2 generator."""

    def __init__(self, base):
        self.tables = []
        row_base = base
        for _ in range(64):
            row = [row_base]
            for _ in range(14):
                row.append(g2_add(row[-1], row_base))
            self.tables.append(row)
            row_base = g2_add(row[-1], row_base)

    def mul(self, k):
        k %= ORDER
        if k == 0:
            return None
        acc = None
        idx = 0
        while k:
            window = k & 0xF
            if window:
                acc = g2_add(acc, self.tables[idx][window - 1])
            k >>= 4
            idx += 1
        return acc


# ---------------------------------------------------------------------------
# Optimal ate pairing with precomputable line coefficients
# ---------------------------------------------------------------------------


def _line_dbl(t):
    """Double T on the twist; return (lambda, lambda*x_T - y_T, new_T)."""
    x, y = t
    lam = f2_mul(f2_mul_scalar(f2_sqr(x), 3), f2_inv(f2_dbl(y)))
    c = f2_sub(f2_mul(lam, x), y)
    x3 = f2_sub(f2_sqr(lam), f2_dbl(x))
    y3 = f2_sub(f2_mul(lam, f2_sub(x, x3)), y)
    return lam, c, (x3, y3)


def _line_add(t, q):
    """Add Q to T; return (lambda, lambda*x_T - y_T, new_T)."""
    x1, y1 = t
    x2, y2 = q
    lam = f2_mul(f2_sub(y2, y1), f2_inv(f2_sub(x2, x1)))
    c = f2_sub(f2_mul(lam, x1), y1)
    x3 = f2_sub(f2_sub(f2_sqr(lam), x1), x2)
    y3 = f2_sub(f2_mul(lam, f2_sub(x1, x3)), y1)
    return lam, c, (x3, y3)


def prepare_g2(q_pt):
    """Run the ate Miller loop once on Q, recording line coefficients.

    The result can be reused for any number of pairings against varying G1
    points.  Returns None for the identity (pairs to 1 with anything).
    """
    if q_pt is None:
        return None
    lines = []
    t = q_pt
    for bit in _ATE_BITS:
        lam, c, t = _line_dbl(t)
        lines.append((lam, c))
        if bit == "1":
            lam, c, t = _line_add(t, q_pt)
            lines.append((lam, c))
    q1 = g2_frobenius(q_pt)
    lam, c, t = _line_add(t, q1)
    lines.append((lam, c))
    q2 = g2_neg(g2_frobenius(g2_frobenius(q_pt)))
    lam, c, _ = _line_add(t, q2)
    lines.append((lam, c))
    return lines


def _mul_by_line(f, a_fq, b_fq2, c_fq2):
    """Multiply f by the sparse FQ12 element a + b*w + c*v*w.

    a sits in the first FQ6 coefficient slot; b and c occupy the first two
    slots of the second FQ6 (w and w^3 = v*w).
    """
    f0, f1 = f
    # f0 * (a, 0, 0) and f1 * (a, 0, 0): scalar FQ multiplications
    f0a = f6_mul_scalar(f0, a_fq)
    f1a = f6_mul_scalar(f1, a_fq)
    # f1 * (b, c, 0) and f0 * (b, c, 0): sparse FQ6 products
    d0, d1, d2 = f1
    t00 = f2_mul(d0, b_fq2)
    t11 = f2_mul(d1, c_fq2)
    t21 = f2_mul(d2, c_fq2)
    t10 = f2_mul(d1, b_fq2)
    t20 = f2_mul(d2, b_fq2)
    f1bc = (f2_add(t00, f2_mul_xi(t21)), f2_add(f2_mul(d0, c_fq2), t10), f2_add(t11, t20))
    d0, d1, d2 = f0
    t00 = f2_mul(d0, b_fq2)
    t11 = f2_mul(d1, c_fq2)
    t21 = f2_mul(d2, c_fq2)
    t10 = f2_mul(d1, b_fq2)
    t20 = f2_mul(d2, b_fq2)
    f0bc = (f2_add(t00, f2_mul_xi(t21)), f2_add(f2_mul(d0, c_fq2), t10), f2_add(t11, t20))
    return (f6_add(f0a, f6_mul_by_v(f1bc)), f6_add(f1a, f0bc))


def miller_loop(pairs):
    """Product of ate Miller loops over [(P_affine, prepared_lines)].

    Pairs whose G1 point or prepared side is the identity are skipped.
    """
    live = [(pt, lines) for pt, lines in pairs if pt is not None and lines is not None]
    if not live:
        return F12_ONE
    f = F12_ONE
    idx = 0
    first = True
    for bit in _ATE_BITS:
        if not first:
            f = f12_sqr(f)
        first = False
        for pt, lines in live:
            lam, c = lines[idx]
            f = _mul_by_line(f, pt[1], f2_mul_scalar(lam, -pt[0] % P), c)
        idx += 1
        if bit == "1":
            for pt, lines in live:
                lam, c = lines[idx]
                f = _mul_by_line(f, pt[1], f2_mul_scalar(lam, -pt[0] % P), c)
            idx += 1
    for _ in range(2):
        for pt, lines in live:
            lam, c = lines[idx]
            f = _mul_by_line(f, pt[1], f2_mul_scalar(lam, -pt[0] % P), c)
        idx += 1
    return f


def final_exponentiation(f):
    """Map a Miller loop output to the unique coset representative in GT."""
    # easy part: f^((p^6 - 1)(p^2 + 1))
    t = f12_mul(f12_conj(f), f12_inv(f))
    f = f12_mul(f12_frob(f12_frob(t)), t)
    # hard part: f^((p^4 - p^2 + 1)/q) via the standard BN addition chain
    fp = f12_frob(f)
    fp2 = f12_frob(fp)
    fp3 = f12_frob(fp2)
    fu = f12_cyc_exp_u(f)
    fu2 = f12_cyc_exp_u(fu)
    fu3 = f12_cyc_exp_u(fu2)
    y0 = f12_mul(f12_mul(fp, fp2), fp3)
    y1 = f12_conj(f)
    y2 = f12_frob(f12_frob(fu2))
    y3 = f12_conj(f12_frob(fu))
    y4 = f12_conj(f12_mul(fu, f12_frob(fu2)))
    y5 = f12_conj(fu2)
    y6 = f12_conj(f12_mul(fu3, f12_frob(fu3)))
    t0 = f12_mul(f12_mul(f12_csqr(y6), y4), y5)
    t1 = f12_mul(f12_mul(y3, y5), t0)
    t0 = f12_mul(t0, y2)
    t1 = f12_mul(f12_csqr(t1), t0)
    t1 = f12_csqr(t1)
    t0 = f12_mul(t1, y1)
    t1 = f12_mul(t1, y0)
    t0 = f12_csqr(t0)
    return f12_mul(t0, t1)


def pairing(p_pt, q_prepared):
    if p_pt is None or q_prepared is None:
        return F12_ONE
    return final_exponentiation(miller_loop([(p_pt, q_prepared)]))


def multi_pairing(pairs):
    """prod e(P_i, Q_i) with one shared Miller accumulator and final exp."""
    live = [(pt, lines) for pt, lines in pairs if pt is not None and lines is not None]
    if not live:
        return F12_ONE
    return final_exponentiation(miller_loop(live))


# ---------------------------------------------------------------------------
# Square roots and canonical encodings
# ---------------------------------------------------------------------------


def fq_sqrt(a):
    """Square root mod p (p = 3 mod 4), or None if a is a non-residue."""
    a %= P
    r = powmod(a, (P + 1) >> 2, P)
    return r if r * r % P == a else None


def g1_encode(pt) -> bytes:
    if pt is None:
        return b"\x80" + b"\x00" * 31
    x, y = pt
    data = bytearray(int(x).to_bytes(32, "big"))
    if y > P - y:
        data[0] |= 0x40
    return bytes(data)


def g1_decode(data: bytes):
    if len(data) != 32:
        raise DecodeError("G1 encoding must be 32 bytes")
    flags = data[0] & 0xC0
    if flags & 0x80:
        if data != b"\x80" + b"\x00" * 31:
            raise DecodeError("malformed G1 identity encoding")
        return None
    x = mpz(int.from_bytes(bytes([data[0] & 0x3F]) + data[1:], "big"))
    if x >= P:
        raise DecodeError("G1 x-coordinate out of range")
    y = fq_sqrt((x * x * x + B) % P)
    if y is None:
        raise DecodeError("G1 x-coordinate not on the curve")
    if (y > P - y) != bool(flags & 0x40):
        y = (P - y) % P
    return (x, y)


def _f2_is_larger(x) -> bool:
    # lexicographic on (imaginary, real) against the negation
    neg = f2_neg(x)
    return (int(x[1]), int(x[0])) > (int(neg[1]), int(neg[0]))


def g2_encode(pt) -> bytes:
    if pt is None:
        return b"\x80" + b"\x00" * 63
    (x0, x1), y = pt
    data = bytearray(int(x1).to_bytes(32, "big") + int(x0).to_bytes(32, "big"))
    if _f2_is_larger(y):
        data[0] |= 0x40
    return bytes(data)


def g2_decode(data: bytes, check_subgroup: bool = True):
    if len(data) != 64:
        raise DecodeError("G2 encoding must be 64 bytes")
    flags = data[0] & 0xC0
    if flags & 0x80:
        if data != b"\x80" + b"\x00" * 63:
            raise DecodeError("malformed G2 identity encoding")
        return None
    x1 = mpz(int.from_bytes(bytes([data[0] & 0x3F]) + data[1:32], "big"))
    x0 = mpz(int.from_bytes(data[32:], "big"))
    if x0 >= P or x1 >= P:
        raise DecodeError("G2 x-coordinate out of range")
    x = (x0, x1)
    y = f2_sqrt(f2_add(f2_mul(f2_sqr(x), x), B2))
    if y is None:
        raise DecodeError("G2 x-coordinate not on the twist")
    if _f2_is_larger(y) != bool(flags & 0x40):
        y = f2_neg(y)
    pt = (x, y)
    if check_subgroup and not g2_in_subgroup(pt):
        raise DecodeError("G2 point outside the order-q subgroup")
    return pt


def gt_encode(f) -> bytes:
    out = bytearray()
    for c6 in f:
        for c2 in c6:
            for c in c2:
                out += int(c).to_bytes(32, "big")
    return bytes(out)


def gt_decode(data: bytes):
    if len(data) != 384:
        raise DecodeError("GT encoding must be 384 bytes")
    vals = [mpz(int.from_bytes(data[i : i + 32], "big")) for i in range(0, 384, 32)]
    if any(v >= P for v in vals):
        raise DecodeError("GT coefficient out of range")
    return (
        ((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5])),
        ((vals[6], vals[7]), (vals[8], vals[9]), (vals[10], vals[11])),
    )


# ---------------------------------------------------------------------------
# Hash to G1: expand_message_xmd(SHA-256) + Fouque-Tibouchi map
# ---------------------------------------------------------------------------

_SQRT_M3 = fq_sqrt(P - 3)
_FT_C1 = (_SQRT_M3 - 1) * invert(2, P) % P  # (-1 + sqrt(-3)) / 2


class _DegenerateInput(Exception):
    pass


def expand_message_xmd(msg: bytes, dst: bytes, length: int) -> bytes:
    if len(dst) > 255:
        raise ValueError("DST too long")
    ell = (length + 31) // 32
    if ell > 255:
        raise ValueError("requested too many bytes")
    dst_prime = dst + bytes([len(dst)])
    b0 = hashlib.sha256(b"\x00" * 64 + msg + length.to_bytes(2, "big") + b"\x00" + dst_prime).digest()
    blocks = [hashlib.sha256(b0 + b"\x01" + dst_prime).digest()]
    for i in range(2, ell + 1):
        prev = blocks[-1]
        mixed = bytes(a ^ b for a, b in zip(b0, prev))
        blocks.append(hashlib.sha256(mixed + bytes([i]) + dst_prime).digest())
    return b"".join(blocks)[:length]


def _map_to_curve_ft(t):
    """Fouque-Tibouchi encoding for BN curves; raises on the measure-zero
    degenerate inputs, which the caller retries with a tweaked hash."""
    t %= P
    if t == 0:
        raise _DegenerateInput
    denom = (1 + B + t * t) % P
    if denom == 0:
        raise _DegenerateInput
    w = _SQRT_M3 * t % P * invert(denom, P) % P
    chi_t = powmod(t, (P - 1) >> 1, P)
    x1 = (_FT_C1 - t * w) % P
    x2 = (-1 - x1) % P
    x3 = (1 + invert(w * w % P, P)) % P
    for x in (x1, x2, x3):
        rhs = (x * x * x + B) % P
        y = fq_sqrt(rhs)
        if y is not None:
            if chi_t != 1:
                y = (P - y) % P
            return (x, y)
    raise AssertionError("Fouque-Tibouchi map found no curve point")


def hash_to_g1(message: bytes, dst: bytes):
    """Deterministic, never-identity hash onto the curve (G1 cofactor is 1)."""
    suffix = b""
    while True:
        raw = expand_message_xmd(message + suffix, dst, 96)
        try:
            p0 = _map_to_curve_ft(mpz(int.from_bytes(raw[:48], "big")))
            p1 = _map_to_curve_ft(mpz(int.from_bytes(raw[48:], "big")))
        except _DegenerateInput:
            suffix = b"\x00" if not suffix else bytes(1 + len(suffix))
            continue
        pt = g1_add(p0, p1)
        if pt is not None:
            return pt
        suffix = b"\x00" if not suffix else bytes(1 + len(suffix))

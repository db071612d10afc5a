"""Exact Wigner 3j/6j symbols and associated Legendre functions.

Symbols are evaluated with the Racah single-sum formulas.  The square-root
prefactor is assembled from prime-exponent vectors of factorials, so every
symbol comes back in the canonical form ``coef * sqrt(radicand)`` with a
rational ``coef`` and a square-free integer ``radicand``.  Floating point
Racah sums are useless once spins reach a few dozen (the alternating sum
cancels every digit), which is why nothing here touches floats until the
very end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np


class WignerInputError(ValueError):
    """Raised for malformed angular-momentum arguments."""


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer stored as twice its value."""

    twice: int

    @classmethod
    def of(cls, x) -> "HalfInt":
        if isinstance(x, HalfInt):
            return x
        if isinstance(x, (int, np.integer)):
            return cls(2 * int(x))
        if isinstance(x, Rational):
            t = Fraction(x) * 2
        else:
            t = Fraction(float(x)) * 2
        if t.denominator != 1:
            raise WignerInputError(f"{x!r} is not an integer or half-integer")
        return cls(int(t))

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def __float__(self) -> float:
        return self.twice / 2

    def __repr__(self) -> str:
        if self.is_integer:
            return f"HalfInt({self.twice // 2})"
        return f"HalfInt({self.twice}/2)"


def _twice(x) -> int:
    return HalfInt.of(x).twice


def triangle(j1, j2, j3) -> bool:
    """True iff (j1, j2, j3) may couple: |j1-j2| <= j3 <= j1+j2, integer sum."""
    a, b, c = _twice(j1), _twice(j2), _twice(j3)
    if min(a, b, c) < 0 or (a + b + c) % 2:
        return False
    return abs(a - b) <= c <= a + b


# ---------------------------------------------------------------------------
# square roots of rationals


@dataclass(frozen=True)
class SqrtRational:
    """Exact number ``coef * sqrt(radicand)``; radicand square-free, >= 1.

    Zero is represented as ``coef = 0, radicand = 1``.
    """

    coef: Fraction
    radicand: int = 1

    def __post_init__(self):
        if self.radicand < 1:
            raise ValueError("radicand must be a positive square-free integer")
        if self.coef == 0 and self.radicand != 1:
            object.__setattr__(self, "radicand", 1)

    @classmethod
    def zero(cls) -> "SqrtRational":
        return cls(Fraction(0), 1)

    @classmethod
    def from_square(cls, sign: int, square: Fraction) -> "SqrtRational":
        """Build ``sign * sqrt(square)`` in canonical form (slow path, tests)."""
        square = Fraction(square)
        if square < 0:
            raise ValueError("square must be non-negative")
        if sign == 0 or square == 0:
            return cls.zero()
        num, den = square.numerator, square.denominator
        # sqrt(n/d) = sqrt(n*d)/d
        r, s = _split_square(num * den)
        return cls(Fraction(sign * r, den), s)

    @property
    def square(self) -> Fraction:
        return self.coef * self.coef * self.radicand

    @property
    def sign(self) -> int:
        return (self.coef > 0) - (self.coef < 0)

    def __float__(self) -> float:
        if self.coef == 0:
            return 0.0
        if self.radicand == 1:
            return float(self.coef)
        # 64 extra bits of the root, then one correctly rounded division
        k = 64 + max(0, self.radicand.bit_length() // 2)
        root = Fraction(math.isqrt(self.radicand << (2 * k)), 1 << k)
        return float(self.coef * root)

    def __neg__(self) -> "SqrtRational":
        return SqrtRational(-self.coef, self.radicand)

    def __mul__(self, other):
        if isinstance(other, SqrtRational):
            g = math.gcd(self.radicand, other.radicand)
            s = (self.radicand // g) * (other.radicand // g)
            return SqrtRational(self.coef * other.coef * g, s)
        if isinstance(other, (int, Fraction)):
            return SqrtRational(self.coef * other, self.radicand)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, SqrtRational):
            return self.coef == other.coef and self.radicand == other.radicand
        if isinstance(other, (int, Fraction)):
            return self.radicand == 1 and self.coef == other
        return NotImplemented

    def __hash__(self):
        return hash((self.coef, self.radicand))

    def __repr__(self) -> str:
        if self.radicand == 1:
            return f"SqrtRational({self.coef})"
        return f"SqrtRational({self.coef} * sqrt({self.radicand}))"


def _split_square(n: int) -> tuple[int, int]:
    """n = r**2 * s with s square-free, by trial division (small n only)."""
    r, s, p = 1, 1, 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            r *= p
        if n % p == 0:
            n //= p
            s *= p
        p += 1
    return r, s * n


# ---------------------------------------------------------------------------
# factorials as prime-exponent vectors


class _FactorialTable:
    """Prime-exponent vectors of n! for n up to a growing limit."""

    def __init__(self):
        self.limit = -1
        self.primes = np.zeros(0, dtype=np.int64)
        self.table = np.zeros((0, 0), dtype=np.int64)
        self._ints: list[int] = []
        self.grow(64)

    def grow(self, n: int) -> None:
        if n <= self.limit:
            return
        limit = max(n, 2 * self.limit)
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        primes = np.flatnonzero(sieve).astype(np.int64)
        table = np.zeros((limit + 1, len(primes)), dtype=np.int64)
        for i, p in enumerate(primes):
            pk = p
            while pk <= limit:
                table[:, i] += np.arange(limit + 1) // pk
                pk *= p
        self.limit, self.primes, self.table = limit, primes, table
        self._ints = [math.factorial(k) for k in range(limit + 1)]

    def exponents(self, n: int) -> np.ndarray:
        if n < 0:
            raise WignerInputError("negative factorial argument")
        self.grow(n)
        return self.table[n]

    def factorial(self, n: int) -> int:
        self.grow(n)
        return self._ints[n]

    def sqrt_of(self, exps: np.ndarray) -> tuple[Fraction, int]:
        """sqrt(prod p**e) as (rational part, square-free radicand)."""
        half, odd = np.divmod(exps, 2)
        num = den = 1
        for p, e in zip(self.primes[half > 0], half[half > 0]):
            num *= int(p) ** int(e)
        for p, e in zip(self.primes[half < 0], half[half < 0]):
            den *= int(p) ** int(-e)
        rad = 1
        for p in self.primes[odd == 1]:
            rad *= int(p)
        return Fraction(num, den), rad


_FACT = _FactorialTable()


def _fexp(*args: int) -> np.ndarray:
    _FACT.grow(max(args))
    return _FACT.table[list(args)].sum(axis=0)


# ---------------------------------------------------------------------------
# 3j


def _check_pair(tj: int, tm: int) -> None:
    if tj < 0:
        raise WignerInputError("angular momentum must be non-negative")
    if (tj - tm) % 2:
        raise WignerInputError("j - m must be an integer")


def _canonical_3j(t):
    """Reduce a 3j key under the 72-element symmetry group (partially).

    Returns (key, sign) where ``sign`` multiplies the symbol at ``key``.
    Only column permutations and the global m-flip are used, which is all the
    caches need.
    """
    tj1, tj2, tj3, tm1, tm2, tm3 = t
    odd = ((tj1 + tj2 + tj3) // 2) % 2
    cols = [(tj1, tm1), (tj2, tm2), (tj3, tm3)]
    best, best_sign = None, 1
    perms = (
        ((0, 1, 2), 0), ((1, 2, 0), 0), ((2, 0, 1), 0),
        ((1, 0, 2), 1), ((0, 2, 1), 1), ((2, 1, 0), 1),
    )
    for flip in (False, True):
        for perm, parity in perms:
            c = [cols[i] for i in perm]
            if flip:
                c = [(j, -m) for j, m in c]
            key = (c[0][0], c[1][0], c[2][0], c[0][1], c[1][1], c[2][1])
            sign = -1 if odd and (parity ^ flip) else 1
            if best is None or key < best:
                best, best_sign = key, sign
    return best, best_sign


def three_j(j1, j2, j3, m1, m2, m3) -> SqrtRational:
    """Wigner 3j symbol, exactly.

    Arguments are integers, half-integers (``Fraction(1, 2)``, ``0.5``) or
    :class:`HalfInt`.  Selection-rule violations give an exact zero;
    arguments with ``j - m`` non-integral raise :class:`WignerInputError`.
    """
    t = tuple(_twice(x) for x in (j1, j2, j3, m1, m2, m3))
    for tj, tm in zip(t[:3], t[3:]):
        _check_pair(tj, tm)
    return _three_j_twice(*t)


def _three_j_twice(tj1, tj2, tj3, tm1, tm2, tm3) -> SqrtRational:
    if tm1 + tm2 + tm3 != 0:
        return SqrtRational.zero()
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return SqrtRational.zero()
    if not (abs(tj1 - tj2) <= tj3 <= tj1 + tj2) or (tj1 + tj2 + tj3) % 2:
        return SqrtRational.zero()
    key, sign = _canonical_3j((tj1, tj2, tj3, tm1, tm2, tm3))
    val = _three_j_cached(*key)
    return val if sign == 1 else -val


@lru_cache(maxsize=None)
def _three_j_cached(tj1, tj2, tj3, tm1, tm2, tm3) -> SqrtRational:
    # all quantities below are integers
    j1pj2mj3 = (tj1 + tj2 - tj3) // 2
    j1mj2pj3 = (tj1 - tj2 + tj3) // 2
    mj1pj2pj3 = (-tj1 + tj2 + tj3) // 2
    jsum1 = (tj1 + tj2 + tj3) // 2 + 1
    j1pm1, j1mm1 = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    j2pm2, j2mm2 = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    j3pm3, j3mm3 = (tj3 + tm3) // 2, (tj3 - tm3) // 2

    # k! (j3-j2+m1+k)! (j3-j1-m2+k)! (j1+j2-j3-k)! (j1-m1-k)! (j2+m2-k)!
    a1 = (tj3 - tj2 + tm1) // 2
    a2 = (tj3 - tj1 - tm2) // 2
    kmin = max(0, -a1, -a2)
    kmax = min(j1pj2mj3, j1mm1, j2pm2)
    if kmin > kmax:
        return SqrtRational.zero()

    _FACT.grow(jsum1)
    f = _FACT.factorial
    # exact integer sum over a common denominator
    c1, c2, c3 = kmin, a1 + kmin, a2 + kmin
    c4, c5, c6 = j1pj2mj3 - kmin, j1mm1 - kmin, j2pm2 - kmin
    term = Fraction((-1) ** kmin, f(c1) * f(c2) * f(c3) * f(c4) * f(c5) * f(c6))
    total = term
    for _ in range(kmin + 1, kmax + 1):
        # ratio term(k+1)/term(k)
        term = term * Fraction(-c4 * c5 * c6, (c1 + 1) * (c2 + 1) * (c3 + 1))
        c1, c2, c3, c4, c5, c6 = c1 + 1, c2 + 1, c3 + 1, c4 - 1, c5 - 1, c6 - 1
        total += term
    if total == 0:
        return SqrtRational.zero()

    exps = (
        _fexp(j1pj2mj3, j1mj2pj3, mj1pj2pj3)
        - _FACT.exponents(jsum1)
        + _fexp(j1pm1, j1mm1, j2pm2, j2mm2, j3pm3, j3mm3)
    )
    rat, rad = _FACT.sqrt_of(exps)
    phase = (tj1 - tj2 - tm3) // 2
    sign = -1 if phase % 2 else 1
    return SqrtRational(sign * total * rat, rad)


def three_j_float(j1, j2, j3, m1, m2, m3) -> float:
    return float(three_j(j1, j2, j3, m1, m2, m3))


# ---------------------------------------------------------------------------
# 6j


def _delta_exps(ta: int, tb: int, tc: int) -> np.ndarray:
    return _fexp((ta + tb - tc) // 2, (ta - tb + tc) // 2, (-ta + tb + tc) // 2) - _FACT.exponents(
        (ta + tb + tc) // 2 + 1
    )


def six_j(j1, j2, j3, j4, j5, j6) -> SqrtRational:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}, exactly."""
    t = tuple(_twice(x) for x in (j1, j2, j3, j4, j5, j6))
    if min(t) < 0:
        raise WignerInputError("angular momentum must be non-negative")
    return _six_j_twice(*t)


def _six_j_twice(a, b, c, d, e, f) -> SqrtRational:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    for x, y, z in triads:
        if (x + y + z) % 2 or not (abs(x - y) <= z <= x + y):
            return SqrtRational.zero()
    # canonical column order (the symbol is invariant under column permutations
    # and under swapping upper/lower entries in two columns)
    cols = sorted([(a, d), (b, e), (c, f)])
    variants = []
    for i, j in ((0, 1), (0, 2), (1, 2), (None, None)):
        cc = [list(x) for x in cols]
        if i is not None:
            cc[i].reverse()
            cc[j].reverse()
        variants.append(tuple(sorted(tuple(x) for x in cc)))
    key = min(variants)
    return _six_j_cached(key[0][0], key[1][0], key[2][0], key[0][1], key[1][1], key[2][1])


@lru_cache(maxsize=None)
def _six_j_cached(a, b, c, d, e, f) -> SqrtRational:
    s1 = (a + b + c) // 2
    s2 = (a + e + f) // 2
    s3 = (d + b + f) // 2
    s4 = (d + e + c) // 2
    b1 = (a + b + d + e) // 2
    b2 = (b + c + e + f) // 2
    b3 = (c + a + f + d) // 2
    tmin = max(s1, s2, s3, s4)
    tmax = min(b1, b2, b3)
    if tmin > tmax:
        return SqrtRational.zero()
    _FACT.grow(tmax + 1)
    fac = _FACT.factorial
    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        num = fac(t + 1)
        den = fac(t - s1) * fac(t - s2) * fac(t - s3) * fac(t - s4) * fac(b1 - t) * fac(b2 - t) * fac(b3 - t)
        total += Fraction(-num if t % 2 else num, den)
    if total == 0:
        return SqrtRational.zero()
    exps = _delta_exps(a, b, c) + _delta_exps(a, e, f) + _delta_exps(d, b, f) + _delta_exps(d, e, c)
    rat, rad = _FACT.sqrt_of(exps)
    return SqrtRational(total * rat, rad)


def six_j_float(j1, j2, j3, j4, j5, j6) -> float:
    return float(six_j(j1, j2, j3, j4, j5, j6))


def clear_caches() -> None:
    _three_j_cached.cache_clear()
    _six_j_cached.cache_clear()


# ---------------------------------------------------------------------------
# associated Legendre functions


def assoc_legendre(l: int, m: int, x):
    """P_l^m(x) with the Condon-Shortley phase, for 0 <= m <= l.

    Uses the stable upward recurrence in l starting from P_m^m.  ``x`` may be
    a scalar or an array.
    """
    if not (0 <= m <= l):
        raise ValueError("need 0 <= m <= l; normalise negative m in the caller")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("|x| must not exceed 1")
    s = np.sqrt((1.0 - x) * (1.0 + x))
    pmm = np.ones_like(x)
    fact = 1.0
    for _ in range(m):
        pmm = -pmm * fact * s
        fact += 2.0
    if l == m:
        return pmm[()] if pmm.ndim == 0 else pmm
    pmmp1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pmmp1[()] if pmmp1.ndim == 0 else pmmp1
    for ll in range(m + 2, l + 1):
        pll = (x * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pmmp1 = pmmp1, pll
    return pmmp1[()] if pmmp1.ndim == 0 else pmmp1

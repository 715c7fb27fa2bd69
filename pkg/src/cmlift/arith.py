"""Exact elementary number theory used throughout the package.

Everything here works on Python integers and :class:`fractions.Fraction`,
so results are exact for arbitrarily large inputs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n), defined for every pair of integers."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    v = (n & -n).bit_length() - 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
        n >>= v
    # Jacobi symbol (a/n) for odd positive n
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_squarefree(m: int) -> bool:
    m = abs(m)
    if m == 0:
        return False
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        if m % d == 0:
            m //= d
        d += 1
    return True


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def _check_discriminant(D: int) -> None:
    if D >= 0 or D % 4 not in (0, 1):
        raise ValueError(f"{D} is not a negative discriminant")


def is_fundamental(D: int) -> bool:
    _check_discriminant(D)
    if D % 4 == 1:
        return is_squarefree(D)
    m = D // 4
    return m % 4 in (2, 3) and is_squarefree(m)


def disc_decompose(d: int) -> tuple[int, int]:
    """Split a negative discriminant as ``d = D0 * f**2`` with ``D0`` fundamental."""
    _check_discriminant(d)
    f = 1
    rest = d
    k = 2
    while k * k <= -rest:
        while rest % (k * k) == 0 and (rest // (k * k)) % 4 in (0, 1):
            rest //= k * k
            f *= k
        k += 1
    return rest, f


def valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _reduced_form_weights(limit: int) -> np.ndarray:
    """Sum of weights of reduced forms, indexed by -disc, scaled by 6."""
    acc = np.zeros(limit + 1, dtype=np.int64)
    a = 1
    while 3 * a * a <= limit:
        for b in range(-a + 1, a + 1):
            # c >= a, and c > a when b < 0
            c0 = a if b >= 0 else a + 1
            cmax = (limit + b * b) // (4 * a)
            if cmax < c0:
                continue
            cs = np.arange(c0, cmax + 1, dtype=np.int64)
            ns = 4 * a * cs - b * b
            w = np.full(cs.shape, 6, dtype=np.int64)
            if cs[0] == a:
                if b == 0:
                    w[0] = 3
                elif b == a:
                    w[0] = 2
            np.add.at(acc, ns, w)
        a += 1
    return acc


@lru_cache(maxsize=8)
def _hurwitz_table6(limit: int) -> np.ndarray:
    table = _reduced_form_weights(limit)
    table.setflags(write=False)
    return table


class HurwitzTable:
    """Write-once table of Hurwitz class numbers H(n), 0 < n <= limit."""

    def __init__(self, limit: int):
        self.limit = limit
        self._six = _hurwitz_table6(limit)

    def __call__(self, n: int) -> Fraction:
        if n <= 0 or n % 4 in (1, 2):
            raise ValueError(f"H({n}) undefined: need n > 0 and n = 0,3 mod 4")
        if n > self.limit:
            raise ValueError(f"H({n}) beyond table limit {self.limit}")
        return Fraction(int(self._six[n]), 6)


_DEFAULT_TABLE_LIMIT = 1 << 12


def hurwitz(n: int) -> Fraction:
    """Hurwitz class number H(n) for discriminant -n, by reduced-form counting."""
    if n <= 0 or n % 4 in (1, 2):
        raise ValueError(f"H({n}) undefined: need n > 0 and n = 0,3 mod 4")
    if n <= _DEFAULT_TABLE_LIMIT:
        return HurwitzTable(_DEFAULT_TABLE_LIMIT)(n)
    return _hurwitz_single(n)


def _hurwitz_single(n: int) -> Fraction:
    total = Fraction(0)
    a = 1
    while 3 * a * a <= n:
        for b in range(-a + 1, a + 1):
            num = b * b + n
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if a == c and b == 0:
                total += Fraction(1, 2)
            elif a == b == c:
                total += Fraction(1, 3)
            else:
                total += 1
        a += 1
    return total


def hurwitz_table(limit: int) -> HurwitzTable:
    return HurwitzTable(limit)


def sigma0(n: int) -> int:
    count = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            count += 1 if d * d == n else 2
        d += 1
    return count


def divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]

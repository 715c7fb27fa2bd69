"""Eisenstein and cuspidal parts of Gross theta series, Shimura lifts and
twisted central L-values.

Coefficients of half-integral weight series are exact ``Fraction`` values.
L-values are floats that always travel with an explicit error bound built
from Deligne's estimate |a(n)| <= sigma0(n) sqrt(n).
"""

from __future__ import annotations

import json
import math
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .arith import HurwitzTable, hurwitz, is_fundamental, kronecker

# chunk size for deterministic partial sums
_CHUNK = 4096


class InsufficientCoefficients(ValueError):
    """Not enough coefficients for the requested computation."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class LValueVanishes(ArithmeticError):
    pass


@dataclass(frozen=True)
class RationalSeries:
    """Exact coefficients c(0), ..., c(limit)."""

    coeffs: tuple
    p: Optional[int] = None

    @property
    def limit(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Fraction:
        if n < 0 or n > self.limit:
            raise IndexError(f"index {n} outside 0..{self.limit}")
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def scale(self, lam) -> "RationalSeries":
        lam = Fraction(lam)
        return RationalSeries(tuple(c * lam for c in self.coeffs), self.p)

    def first_nonzero(self, coprime_to: Optional[int] = None) -> Optional[int]:
        for n, c in enumerate(self.coeffs):
            if n and c and (coprime_to is None or math.gcd(n, coprime_to) == 1):
                return n
        return None

    def normalized(self) -> "RationalSeries":
        """Scaled so that the first nonzero coefficient (n >= 1) is 1."""
        n = self.first_nonzero()
        if n is None:
            raise ValueError("series is identically zero")
        return self.scale(1 / self.coeffs[n])

    def to_csv(self) -> str:
        return "\n".join(f"{n},{c.numerator},{c.denominator}" for n, c in enumerate(self.coeffs))

    @classmethod
    def from_csv(cls, text: str, p: Optional[int] = None) -> "RationalSeries":
        rows = [line.split(",") for line in text.split("\n") if line.strip()]
        coeffs = [Fraction(0)] * len(rows)
        for n, num, den in rows:
            coeffs[int(n)] = Fraction(int(num), int(den))
        return cls(tuple(coeffs), p)

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "coeffs": [str(c) for c in self.coeffs]})

    @classmethod
    def from_json(cls, text: str) -> "RationalSeries":
        d = json.loads(text)
        return cls(tuple(Fraction(c) for c in d["coeffs"]), d.get("p"))


def _p_conductor_exponent(d: int, p: int) -> int:
    e = 0
    while d % (p * p) == 0 and (d // (p * p)) % 4 in (0, 1):
        d //= p * p
        e += 1
    return e


def eisenstein_coefficient(p: int, d: int, table: Optional[HurwitzTable] = None) -> Fraction:
    """Coefficient of q^|d| in the Eisenstein part of a Gross theta series.

    The constant term is 1.  For d < 0 write d = d' p^(2e) where p^e is the
    p-part of the conductor of d; the coefficient is
    24/(p-1) * (1 - (d'/p))/2 * H(|d'|), so it only depends on d'.
    """
    if d == 0:
        return Fraction(1)
    if d > 0 or d % 4 not in (0, 1):
        raise ValueError(f"{d} is not a negative discriminant")
    d = d // p ** (2 * _p_conductor_exponent(d, p))
    chi = kronecker(d, p)
    if chi == 1:
        return Fraction(0)
    n = -d
    if table is not None and n <= table.limit:
        h = table(n)
    else:
        h = hurwitz(n)
    return Fraction(24, p - 1) * Fraction(1 - chi, 2) * h


def eisenstein_series(p: int, C: int) -> RationalSeries:
    table = HurwitzTable(C)
    coeffs = [Fraction(0)] * (C + 1)
    coeffs[0] = Fraction(1)
    for n in range(3, C + 1):
        if n % 4 in (0, 3):
            coeffs[n] = eisenstein_coefficient(p, -n, table)
    return RationalSeries(tuple(coeffs), p)


def cusp_part(theta, p: int, C: Optional[int] = None) -> RationalSeries:
    """theta - Eisenstein part, on indices n = 0, 3 mod 4 (zero elsewhere)."""
    values = theta.coeffs if hasattr(theta, "coeffs") else theta
    C = len(values) - 1 if C is None else C
    if C > len(values) - 1:
        raise InsufficientCoefficients(f"theta known to {len(values) - 1}, need {C}", C)
    eis = eisenstein_series(p, C).coeffs
    coeffs = [Fraction(0)] * (C + 1)
    for n in range(C + 1):
        if n % 4 in (0, 3):
            coeffs[n] = int(values[n]) - eis[n]
    return RationalSeries(tuple(coeffs), p)


def proportionality(g1: RationalSeries, g2: RationalSeries) -> Optional[Fraction]:
    """lambda with g1 = lambda * g2 on the common range, or None."""
    n = min(g1.limit, g2.limit)
    k = g2.first_nonzero()
    if k is None or k > n:
        return None
    lam = g1[k] / g2[k]
    if all(g1[i] == lam * g2[i] for i in range(n + 1)):
        return lam
    return None


def _check_lift_index(t: int) -> None:
    if t <= 0:
        raise ValueError("t must be positive")
    if t % 4 not in (0, 3) or not is_fundamental(-t):
        raise ValueError(f"-{t} must be a fundamental discriminant")


def shimura_lift(g: RationalSeries, t: int, n_max: int) -> RationalSeries:
    """Coefficients a(n) = sum_{d | n} (-t/d) g(t (n/d)^2) for 1 <= n <= n_max.

    When ``g.p`` is set the character is taken modulo the level, so divisors
    d sharing a factor with p are skipped.
    """
    _check_lift_index(t)
    need = t * n_max * n_max
    if g.limit < need:
        raise InsufficientCoefficients(f"lift to {n_max} needs g up to {need}", need)
    out = [Fraction(0)] * (n_max + 1)
    chi = [0] + [kronecker(-t, d) for d in range(1, n_max + 1)]
    if g.p is not None:
        for d in range(g.p, n_max + 1, g.p):
            chi[d] = 0
    for d in range(1, n_max + 1):
        if chi[d] == 0:
            continue
        for n in range(d, n_max + 1, d):
            k = n // d
            out[n] += chi[d] * g[t * k * k]
    return RationalSeries(tuple(out), g.p)


def _sigma0_table(n: int) -> np.ndarray:
    s = np.zeros(n + 1, dtype=np.int64)
    for d in range(1, n + 1):
        s[d::d] += 1
    return s


@dataclass(frozen=True)
class NewformCoefficients:
    """a(1..C) of a normalized weight 2 newform; ``values[0]`` is a(1)."""

    level: int
    values: tuple
    source: str = "ingested-file"

    def __post_init__(self):
        if not self.values or self.values[0] != 1:
            raise ValueError("newform coefficients must start with a(1) = 1")
        a = np.array(self.values, dtype=object)
        n = np.arange(1, len(a) + 1, dtype=object)
        s = _sigma0_table(len(a))[1:].astype(object)
        bad = np.flatnonzero(a * a > s * s * n)
        if len(bad):
            k = int(bad[0]) + 1
            raise ValueError(f"a({k}) = {self.values[k - 1]} violates the Deligne bound")

    @property
    def limit(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> int:
        if n < 1 or n > len(self.values):
            raise IndexError(f"a({n}) not available")
        return self.values[n - 1]

    def to_text(self) -> str:
        return "".join(f"{v}\n" for v in self.values)

    @classmethod
    def from_text(cls, text: str, level: int) -> "NewformCoefficients":
        vals = tuple(int(line) for line in text.split("\n") if line.strip())
        return cls(level, vals, "ingested-file")

    @classmethod
    def load(cls, path, level: int) -> "NewformCoefficients":
        return cls.from_text(Path(path).read_text(), level)


def _euler_product(n_max: int, step: int = 1) -> list[tuple[int, int]]:
    """Sparse terms of prod (1 - q^(step k)) up to q^n_max (pentagonal numbers)."""
    terms = [(0, 1)]
    k = 1
    while True:
        e1 = step * k * (3 * k - 1) // 2
        if e1 > n_max:
            break
        sign = -1 if k % 2 else 1
        terms.append((e1, sign))
        e2 = step * k * (3 * k + 1) // 2
        if e2 <= n_max:
            terms.append((e2, sign))
        k += 1
    return terms


def _times_sparse(dense: np.ndarray, sparse) -> np.ndarray:
    out = np.zeros_like(dense)
    n = len(dense)
    for e, s in sparse:
        out[e:] += s * dense[: n - e]
    return out


def eta_product_level11(n_max: int) -> NewformCoefficients:
    """q prod (1 - q^n)^2 (1 - q^11n)^2, coefficients a(1..n_max)."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    L = n_max  # exponents 0..n_max-1 of the product, shifted by q
    dense = np.zeros(L, dtype=np.int64)
    dense[0] = 1
    for step in (1, 1, 11, 11):
        dense = _times_sparse(dense, _euler_product(L - 1, step))
    return NewformCoefficients(11, tuple(int(v) for v in dense), "eta-product")


@dataclass(frozen=True)
class LValue:
    value: float
    error_bound: float
    cutoff: int
    D: int
    m: float
    p: int

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "cutoff": self.cutoff,
            "D": self.D,
            "m": self.m,
            "p": self.p,
        }


def tail_bound(X: int, a: float) -> float:
    """Upper bound for sum_{n > X} 2 sigma0(n) sqrt(n) exp(-a n).

    This dominates the tail of the L-series, whose terms are at most
    2 sigma0(n) n^(-1/2) exp(-a n).  With sigma0(n) <= 2 sqrt(n) each term
    is at most f(n) = 4 n exp(-a n); f is unimodal so the sum is at most
    int_X^inf f + max_{t >= X} f.
    """
    integral = 4.0 * math.exp(-a * X) * (X / a + 1.0 / (a * a))
    t = max(float(X), 1.0 / a)
    return integral + 4.0 * t * math.exp(-a * t)


def required_cutoff(a: float, epsilon: float) -> int:
    """Least X >= 1 with tail_bound(X, a) < epsilon."""
    hi = 1
    while tail_bound(hi, a) >= epsilon:
        hi *= 2
    lo = hi // 2  # tail_bound(lo) >= epsilon unless lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(mid, a) < epsilon:
            hi = mid
        else:
            lo = mid
    return hi


def twisted_L_value(
    coeffs: NewformCoefficients,
    D: int,
    m: float,
    p: int,
    epsilon: float,
    cutoff: Optional[int] = None,
) -> LValue:
    """sum_{n <= X} 2 (a(n)/n) (D/n) exp(-2 pi n / (m sqrt p)) with a rigorous tail.

    This is the central value of the twist of the newform by (D/.) when
    the twisted form has level m^2 p and root number +1.

    X is the least cutoff whose Deligne tail estimate is below epsilon,
    unless ``cutoff`` is given explicitly.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if m <= 0:
        raise ValueError("m must be positive")
    a = 2 * math.pi / (m * math.sqrt(p))
    X = required_cutoff(a, epsilon) if cutoff is None else int(cutoff)
    if X > coeffs.limit:
        raise InsufficientCoefficients(
            f"tolerance {epsilon} needs a(n) for n <= {X}, only {coeffs.limit} available", X
        )
    chunk_sums = []
    abs_total = 0.0
    for lo in range(1, X + 1, _CHUNK):
        hi = min(X, lo + _CHUNK - 1)
        ns = np.arange(lo, hi + 1)
        chi = np.array([kronecker(D, int(n)) for n in ns], dtype=np.float64)
        an = np.array(coeffs.values[lo - 1:hi], dtype=np.float64)
        terms = 2.0 * an * chi * np.exp(-a * ns) / ns
        chunk_sums.append(math.fsum(terms))
        abs_total += float(np.abs(terms).sum())
    value = math.fsum(chunk_sums)
    # float rounding in exp and products, bounded generously
    rounding = 8 * X * sys.float_info.epsilon * abs_total
    return LValue(value, tail_bound(X, a) + rounding, X, D, m, p)


@dataclass(frozen=True)
class Estimate:
    value: float
    lower: float
    upper: float

    def overlaps(self, other: "Estimate", rel_slack: float = 0.0) -> bool:
        slack = rel_slack * max(abs(self.value), abs(other.value))
        return self.lower - slack <= other.upper and other.lower - slack <= self.upper

    def to_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper}


def _quotient_estimate(num: Fraction, L: LValue, scale: float) -> Estimate:
    """num / (L * scale) as an interval; num >= 0, scale > 0."""
    if num == 0:
        return Estimate(0.0, 0.0, 0.0)
    if L.lower <= 0:
        raise LValueVanishes(
            f"L-value {L.value} is not distinguishable from 0 at error {L.error_bound}"
        )
    x = float(num)
    return Estimate(
        float(x / (L.value * scale)), float(x / (L.upper * scale)), float(x / (L.lower * scale))
    )


def compute_c(g: RationalSeries, p: int, coeffs: NewformCoefficients, epsilon: float) -> tuple[int, Estimate]:
    """(m, c) with m the least index coprime to p where g(m) != 0 and
    c = g(m)^2 / (L(G, -m, 1) sqrt(m))."""
    m = g.first_nonzero(coprime_to=p)
    if m is None:
        raise ValueError("g vanishes on every index coprime to p")
    if m % 4 not in (0, 3) or not is_fundamental(-m):
        warnings.warn(f"-{m} is not a fundamental discriminant", stacklevel=2)
    L = twisted_L_value(coeffs, -m, m, p, epsilon)
    return m, _quotient_estimate(g[m] ** 2, L, math.sqrt(m))


def kohnen_zagier_ratio(
    g: RationalSeries, coeffs: NewformCoefficients, D: int, p: int, epsilon: float
) -> Estimate:
    """g(|D|)^2 / (sqrt|D| L(G, D, 1)), independent of D up to error."""
    if D >= 0 or D % 4 not in (0, 1) or not is_fundamental(D):
        raise ValueError(f"{D} is not a negative fundamental discriminant")
    if kronecker(D, p) != -1:
        raise ValueError(f"need ({D}/{p}) = -1")
    n = -D
    if n > g.limit:
        raise InsufficientCoefficients(f"g known to {g.limit}, need {n}", n)
    if g[n] == 0:
        return Estimate(0.0, 0.0, 0.0)
    L = twisted_L_value(coeffs, D, n, p, epsilon)
    return _quotient_estimate(g[n] ** 2, L, math.sqrt(n))


__all__ = [
    "RationalSeries",
    "NewformCoefficients",
    "LValue",
    "Estimate",
    "InsufficientCoefficients",
    "LValueVanishes",
    "eisenstein_coefficient",
    "eisenstein_series",
    "cusp_part",
    "proportionality",
    "shimura_lift",
    "eta_product_level11",
    "twisted_L_value",
    "tail_bound",
    "compute_c",
    "kohnen_zagier_ratio",
]

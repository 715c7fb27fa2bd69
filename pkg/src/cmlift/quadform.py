"""Positive definite ternary quadratic forms.

A form is stored as the sextuple ``[a, b, c, d, e, f]`` meaning
``a x^2 + b y^2 + c z^2 + d xy + e xz + f yz``.  Lattice points are found
with Fincke-Pohst style bounds computed in floating point (padded), and
every candidate is accepted or rejected with exact integer arithmetic.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

# Exact-integer budget for intermediate values (bits).
EXACT_BITS = 127
# Above this the vectorised int64 kernels are not safe.
_INT64_SAFE = 1 << 62


class EnumerationOverflow(ArithmeticError):
    """An intermediate value would exceed the exact-integer budget."""


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class TernaryForm:
    a: int
    b: int
    c: int
    d: int
    e: int
    f: int

    def __post_init__(self):
        g = self.gram2()
        m1 = g[0][0]
        m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0]
        if m1 <= 0 or m2 <= 0 or _det3(g) <= 0:
            raise NotPositiveDefinite(f"{self.coeffs} is not positive definite")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[int]) -> "TernaryForm":
        if len(coeffs) != 6:
            raise ValueError("a ternary form needs six coefficients")
        return cls(*(int(x) for x in coeffs))

    @classmethod
    def parse(cls, text: str) -> "TernaryForm":
        """Parse ``[a,b,c,d,e,f]`` (brackets and spaces optional)."""
        parts = [t for t in re.split(r"[\s,\[\]]+", text.strip()) if t]
        return cls.from_coeffs([int(t) for t in parts])

    @property
    def coeffs(self) -> tuple[int, int, int, int, int, int]:
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    def __str__(self):
        return "[" + ",".join(str(x) for x in self.coeffs) + "]"

    def gram2(self) -> list[list[int]]:
        """Doubled Gram matrix 2G (integer entries)."""
        a, b, c, d, e, f = self.coeffs
        return [[2 * a, d, e], [d, 2 * b, f], [e, f, 2 * c]]

    def gram(self) -> list[list[Fraction]]:
        return [[Fraction(x, 2) for x in row] for row in self.gram2()]

    def __call__(self, x: int, y: int, z: int) -> int:
        a, b, c, d, e, f = self.coeffs
        return a * x * x + b * y * y + c * z * z + d * x * y + e * x * z + f * y * z

    def expand(self) -> "TernaryForm":
        return self


@dataclass(frozen=True)
class ConstrainedTernaryForm:
    """A ternary form restricted to vectors whose third coordinate is
    congruent to the second modulo 2."""

    base: TernaryForm

    def expand(self) -> TernaryForm:
        # z = y + 2w
        a, b, c, d, e, f = self.base.coeffs
        return TernaryForm(a, b + c + f, 4 * c, d + e, 2 * e, 4 * c + 2 * f)

    @property
    def coeffs(self):
        return self.base.coeffs

    def __str__(self):
        return f"{self.base} with z = y (mod 2)"


AnyForm = Union[TernaryForm, ConstrainedTernaryForm]


def _det3(m) -> int:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def gram_determinant(form: AnyForm) -> Fraction:
    """Determinant of the half-integral Gram matrix."""
    return Fraction(_det3(form.expand().gram2()), 8)


def _as_form(form: AnyForm) -> TernaryForm:
    return form.expand()


class _Bounds:
    """Fincke-Pohst bounds for the coordinate order x, y, z (z innermost).

    Q(x,y,z) = c (z + (e x + f y)/(2c))^2 + Q2(x, y)
    Q2(x,y)  = A (y + k x)^2 + m x^2
    """

    def __init__(self, form: TernaryForm):
        a, b, c, d, e, f = (float(v) for v in form.coeffs)
        self.form = form
        # binary Schur complement after eliminating z
        A = b - f * f / (4 * c)
        B = d - e * f / (2 * c)
        C = a - e * e / (4 * c)
        self.A = A
        self.k = B / (2 * A)
        self.m = C - B * B / (4 * A)
        self.c = c

    def x_range(self, n: float) -> range:
        r = math.sqrt(max(n, 0.0) / self.m) * (1 + 1e-9) + 1e-9
        xm = math.floor(r)
        return range(-xm, xm + 1)

    def y_range(self, n: float, x: int) -> range:
        rest = n - self.m * x * x
        if rest < -1e-9 * max(1.0, n):
            return range(0)
        r = math.sqrt(max(rest, 0.0) / self.A) * (1 + 1e-9) + 1e-6
        centre = -self.k * x
        return range(math.ceil(centre - r), math.floor(centre + r) + 1)


def _check_budget(form: TernaryForm, n: int) -> bool:
    """True when the int64 kernels are safe for values up to n."""
    big = max(abs(v) for v in form.coeffs)
    bound = 16 * n * big * big + 16
    if bound.bit_length() > EXACT_BITS:
        raise EnumerationOverflow(f"values near {n} exceed the {EXACT_BITS}-bit budget")
    return bound < _INT64_SAFE


def _z_solutions(form: TernaryForm, n: int, x: int, ys: np.ndarray) -> np.ndarray:
    """Number of integer z with Q(x, y, z) = n for each y in ys (int64 path)."""
    a, b, c, d, e, f = form.coeffs
    lin = e * x + f * ys
    const = a * x * x + b * ys * ys + d * x * ys - n
    disc = lin * lin - 4 * c * const
    ok = disc >= 0
    s = np.zeros_like(disc)
    s[ok] = np.rint(np.sqrt(disc[ok].astype(np.float64))).astype(np.int64)
    # correct rounding of the float square root
    s = np.where(s * s > disc, s - 1, s)
    s = np.where((s + 1) * (s + 1) <= disc, s + 1, s)
    ok &= s * s == disc
    twoc = 2 * c
    r1 = ok & ((-lin + s) % twoc == 0)
    r2 = ok & (s > 0) & ((-lin - s) % twoc == 0)
    return r1.astype(np.int64) + r2.astype(np.int64)


def _rows(form: TernaryForm, n: int) -> Iterator[tuple[int, np.ndarray]]:
    bd = _Bounds(form)
    for x in bd.x_range(n):
        yr = bd.y_range(n, x)
        if len(yr):
            yield x, np.arange(yr.start, yr.stop, dtype=np.int64)


def _count_exact_python(form: TernaryForm, n: int, stop_at_first: bool) -> int:
    a, b, c, d, e, f = form.coeffs
    bd = _Bounds(form)
    total = 0
    for x in bd.x_range(n):
        for y in bd.y_range(n, x):
            lin = e * x + f * y
            const = a * x * x + b * y * y + d * x * y - n
            disc = lin * lin - 4 * c * const
            if disc < 0:
                continue
            s = math.isqrt(disc)
            if s * s != disc:
                continue
            for num in {-lin + s, -lin - s}:
                if num % (2 * c) == 0:
                    total += 1
                    if stop_at_first:
                        return total
    return total


def _parity_filter(form: AnyForm):
    return isinstance(form, ConstrainedTernaryForm)


def enumerate_representations(form: AnyForm, n: int) -> int:
    """Exact number of integer vectors v with Q(v) = n (constraint honoured)."""
    if n < 0:
        return 0
    if n == 0:
        return 1
    tf = _as_form(form)
    if not _check_budget(tf, n):
        return _count_exact_python(tf, n, False)
    return int(sum(int(_z_solutions(tf, n, x, ys).sum()) for x, ys in _rows(tf, n)))


def is_represented(form: AnyForm, n: int) -> bool:
    """True when Q(v) = n has a solution; stops at the first one found."""
    if n == 0:
        return True
    if n < 0:
        return False
    tf = _as_form(form)
    if not _check_budget(tf, n):
        return _count_exact_python(tf, n, True) > 0
    for x, ys in _rows(tf, n):
        if _z_solutions(tf, n, x, ys).any():
            return True
    return False


@dataclass(frozen=True)
class ThetaSeries:
    form: AnyForm
    limit: int
    coeffs: np.ndarray

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def tolist(self) -> list[int]:
        return [int(v) for v in self.coeffs]

    def to_csv(self) -> str:
        return "\n".join(f"{n},{int(v)}" for n, v in enumerate(self.coeffs))

    def to_json(self) -> str:
        return json.dumps(self.tolist())


def _theta_rows(form: TernaryForm, C: int, xs: Sequence[int]) -> np.ndarray:
    a, b, c, d, e, f = form.coeffs
    bd = _Bounds(form)
    hist = np.zeros(C + 1, dtype=np.int64)
    for x in xs:
        yr = bd.y_range(C, x)
        for y in yr:
            # z range from completing the square in z
            rest = C - (a * x * x + b * y * y + d * x * y) + (e * x + f * y) ** 2 / (4 * c)
            if rest < 0:
                continue
            centre = -(e * x + f * y) / (2 * c)
            r = math.sqrt(rest / c) + 1e-6
            zs = np.arange(math.ceil(centre - r), math.floor(centre + r) + 1, dtype=np.int64)
            if not len(zs):
                continue
            vals = a * x * x + b * y * y + d * x * y + (e * x + f * y) * zs + c * zs * zs
            vals = vals[(vals >= 0) & (vals <= C)]
            hist += np.bincount(vals, minlength=C + 1)
    return hist


def theta_series(form: AnyForm, C: int, workers: int = 1) -> ThetaSeries:
    """Coefficients a(0..C) from one sweep over all vectors with Q(v) <= C."""
    if C < 1:
        raise ValueError("C must be positive")
    tf = _as_form(form)
    if not _check_budget(tf, C):
        raise EnumerationOverflow(f"theta sweep to {C} exceeds the int64 kernel")
    xs = list(_Bounds(tf).x_range(C))
    if workers <= 1:
        hist = _theta_rows(tf, C, xs)
    else:
        chunks = [xs[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ch: _theta_rows(tf, C, ch), chunks))
        hist = np.sum(parts, axis=0)
    if hist.max(initial=0) >= np.iinfo(np.int64).max // 2:
        raise EnumerationOverflow("theta coefficient overflow")
    hist.setflags(write=False)
    return ThetaSeries(form, C, hist)


def forms_agree(f1: AnyForm, f2: AnyForm, C: int) -> bool:
    """Weak equivalence: theta series agree up to index C."""
    return bool(np.array_equal(theta_series(f1, C).coeffs, theta_series(f2, C).coeffs))

"""Definite quaternion algebras ramified at p, Ibukiyama's maximal orders
R(q, r) and R'(q, r'), and the Gross lattices they carry.

The algebra has basis 1, alpha, beta, alpha*beta with alpha^2 = -p,
beta^2 = -q and alpha*beta = -beta*alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .arith import is_prime, kronecker
from .quadform import (
    ConstrainedTernaryForm,
    TernaryForm,
    forms_agree,
    gram_determinant,
)

TYPE_I = "I"
TYPE_II = "II"


class NoSolution(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuaternionElement:
    p: int
    q: int
    coords: tuple[Fraction, Fraction, Fraction, Fraction]

    @classmethod
    def make(cls, p, q, coords) -> "QuaternionElement":
        return cls(p, q, tuple(Fraction(c) for c in coords))

    def __add__(self, other):
        return QuaternionElement(self.p, self.q, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        return QuaternionElement(self.p, self.q, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def scale(self, k) -> "QuaternionElement":
        return QuaternionElement(self.p, self.q, tuple(k * a for a in self.coords))

    def __mul__(self, other):
        p, q = self.p, self.q
        a0, a1, a2, a3 = self.coords
        b0, b1, b2, b3 = other.coords
        # i = alpha, j = beta, k = alpha*beta:
        # i^2=-p, j^2=-q, k^2=-pq, ij=k, ji=-k, ik=-pj, ki=pj, jk=qi, kj=-qi
        c0 = a0 * b0 - p * a1 * b1 - q * a2 * b2 - p * q * a3 * b3
        c1 = a0 * b1 + a1 * b0 + q * (a2 * b3 - a3 * b2)
        c2 = a0 * b2 + a2 * b0 - p * (a1 * b3 - a3 * b1)
        c3 = a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1
        return QuaternionElement(p, q, (c0, c1, c2, c3))

    def conj(self):
        x0, x1, x2, x3 = self.coords
        return QuaternionElement(self.p, self.q, (x0, -x1, -x2, -x3))

    def nrd(self) -> Fraction:
        x0, x1, x2, x3 = self.coords
        return x0 * x0 + self.p * x1 * x1 + self.q * x2 * x2 + self.p * self.q * x3 * x3

    def trace(self) -> Fraction:
        return 2 * self.coords[0]


def bilinear(u: QuaternionElement, v: QuaternionElement) -> Fraction:
    """Polar form of nrd: nrd(u+v) - nrd(u) - nrd(v)."""
    return (u + v).nrd() - u.nrd() - v.nrd()


def solve_rational(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve x * rows = rhs (x a row vector) exactly; rows must be invertible."""
    n = len(rows)
    # transpose so that columns are basis vectors
    m = [[Fraction(rows[j][i]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular basis")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                k = m[r][col]
                m[r] = [a - k * b for a, b in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


@dataclass(frozen=True)
class IbukiyamaOrder:
    p: int
    q: int
    r: int
    order_type: str
    basis: tuple[QuaternionElement, ...]

    @property
    def norm_form(self) -> list[list[Fraction]]:
        """Gram matrix of nrd on the basis (so nrd(sum x_i b_i) = x^T G x)."""
        b = self.basis
        return [[bilinear(b[i], b[j]) / 2 if i != j else b[i].nrd() for j in range(4)] for i in range(4)]

    def coordinates(self, x: QuaternionElement) -> list[Fraction]:
        return solve_rational([b.coords for b in self.basis], x.coords)

    def basis_matrix(self) -> list[list[Fraction]]:
        return [list(b.coords) for b in self.basis]

    def to_dict(self) -> dict:
        gf = gross_form(self)
        plain = gf.base if isinstance(gf, ConstrainedTernaryForm) else gf
        return {
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "type": self.order_type,
            "basis": [[str(c) for c in b.coords] for b in self.basis],
            "gross_form": list(plain.coeffs),
            "parity": isinstance(gf, ConstrainedTernaryForm),
        }


def find_q(p: int, cap: int = 10**6) -> int:
    """Smallest prime q = 3 mod 8 with (-q/p) = -1."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    for q in range(3, cap + 1, 8):
        if is_prime(q) and kronecker(-q, p) == -1:
            return q
    raise NoSolution(f"no suitable q <= {cap} for p = {p}")


def find_r(q: int, p: int, modulus_factor: int = 1) -> int:
    """Smallest r >= 0 with r^2 + p = 0 mod (modulus_factor * q)."""
    if modulus_factor not in (1, 4):
        raise ValueError("modulus_factor must be 1 or 4")
    if modulus_factor == 4 and p % 4 != 3:
        raise NoSolution("type II orders need p = 3 mod 4")
    mod = modulus_factor * q
    for r in range(mod):
        if (r * r + p) % mod == 0:
            return r
    raise NoSolution(f"r^2 + {p} = 0 mod {mod} has no solution")


def _order_basis(p, q, r, order_type):
    E = lambda *c: QuaternionElement.make(p, q, c)  # noqa: E731
    h = Fraction(1, 2)
    if order_type == TYPE_I:
        return (E(1, 0, 0, 0), E(h, 0, h, 0), E(0, h, 0, h), E(0, 0, Fraction(r, q), Fraction(1, q)))
    if order_type == TYPE_II:
        return (E(1, 0, 0, 0), E(h, h, 0, 0), E(0, 0, 1, 0), E(0, 0, Fraction(r, 2 * q), Fraction(1, 2 * q)))
    raise ValueError(f"unknown order type {order_type!r}")


def check_ring_closure(order: IbukiyamaOrder) -> None:
    for u in order.basis:
        for v in order.basis:
            coords = order.coordinates(u * v)
            if any(c.denominator != 1 for c in coords):
                raise ValueError(f"basis product leaves the lattice: {coords}")


def build_order(p: int, q: int, r: int, order_type: str) -> IbukiyamaOrder:
    if not (is_prime(p) and is_prime(q)):
        raise ValueError("p and q must be prime")
    if q % 8 != 3 or kronecker(-q, p) != -1:
        raise ValueError(f"q = {q} does not satisfy q = 3 mod 8 and (-q/p) = -1")
    if order_type == TYPE_I:
        if (r * r + p) % q:
            raise ValueError(f"r^2 + p must vanish mod q (r={r})")
    elif order_type == TYPE_II:
        if p % 4 != 3:
            raise ValueError("type II orders need p = 3 mod 4")
        if (r * r + p) % (4 * q):
            raise ValueError(f"r'^2 + p must vanish mod 4q (r'={r})")
    else:
        raise ValueError(f"unknown order type {order_type!r}")
    order = IbukiyamaOrder(p, q, r, order_type, _order_basis(p, q, r, order_type))
    check_ring_closure(order)
    return order


def minimal_order(p: int, order_type: str) -> IbukiyamaOrder:
    q = find_q(p)
    r = find_r(q, p, 1 if order_type == TYPE_I else 4)
    return build_order(p, q, r, order_type)


def gross_form(order: IbukiyamaOrder):
    """Closed-form ternary form on the Gross lattice of an Ibukiyama order."""
    p, q, r = order.p, order.q, order.r
    if order.order_type == TYPE_I:
        form = ConstrainedTernaryForm(TernaryForm(q, (r * r + p) // q, p, 2 * r, 0, 0))
    else:
        form = TernaryForm(p, 4 * q, (r * r + p) // q, 0, 0, 4 * r)
    assert gram_determinant(form) == 4 * p * p
    return form


# --- integer lattice helpers -------------------------------------------------


def _hnf_rows(rows: list[list[int]]) -> list[list[int]]:
    """Row-style Hermite normal form (upper triangular, nonzero rows only)."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0])
    out = []
    col = 0
    while rows and col < ncols:
        nz = [r for r in rows if r[col] != 0]
        zero = [r for r in rows if r[col] == 0]
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            rest = []
            for r in nz[1:]:
                k = r[col] // piv[col]
                r = [a - k * b for a, b in zip(r, piv)]
                (rest if r[col] != 0 else zero).append(r)
            nz = [piv] + rest
        if nz:
            piv = nz[0]
            if piv[col] < 0:
                piv = [-a for a in piv]
            out.append(piv)
        rows = [r for r in zero if any(r)]
        col += 1
    return out


def _lll_gram(gram: list[list[Fraction]], dim: int) -> list[list[int]]:
    """LLL (delta = 3/4) driven by a Gram matrix; returns integer
    coefficient rows of the reduced basis in terms of the original one."""
    B = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]

    def ip(u, v):
        return sum(u[a] * gram[a][b] * v[b] for a in range(dim) for b in range(dim))

    def gso():
        mu = [[Fraction(0)] * dim for _ in range(dim)]
        bstar = [Fraction(0)] * dim
        for i in range(dim):
            for j in range(i):
                s = ip(B[i], B[j]) - sum(mu[j][k] * mu[i][k] * bstar[k] for k in range(j))
                mu[i][j] = s / bstar[j]
            bstar[i] = ip(B[i], B[i]) - sum(mu[i][k] ** 2 * bstar[k] for k in range(i))
        return mu, bstar

    i = 1
    while i < dim:
        for j in range(i - 1, -1, -1):
            mu, _ = gso()
            k = round(mu[i][j])
            if k:
                B[i] = [a - k * b for a, b in zip(B[i], B[j])]
        mu, bstar = gso()
        if bstar[i] < (Fraction(3, 4) - mu[i][i - 1] ** 2) * bstar[i - 1]:
            B[i], B[i - 1] = B[i - 1], B[i]
            i = max(i - 1, 1)
        else:
            i += 1
    return B


def gross_lattice_generic(order: IbukiyamaOrder) -> TernaryForm:
    """Norm form on (Z + 2R) with trace zero, computed from the order basis."""
    gens = [order.basis[0]] + [b.scale(2) for b in order.basis]
    den = math.lcm(*(c.denominator for g in gens for c in g.coords))
    rows = [[int(c * den) for c in g.coords] for g in gens]
    hnf = _hnf_rows(rows)
    if len(hnf) != 4 or hnf[0][0] == 0:
        raise AssertionError("Z + 2R does not have rank 4")
    # every later HNF row has zero first coordinate, i.e. trace zero
    tz = [
        QuaternionElement.make(order.p, order.q, [Fraction(c, den) for c in row])
        for row in hnf[1:]
    ]
    if any(v.coords[0] != 0 for v in tz):
        raise AssertionError("trace-zero basis has nonzero trace")
    gram = [[bilinear(u, v) / 2 if u is not v else u.nrd() for v in tz] for u in tz]
    coeffs = _lll_gram(gram, 3)
    red = [
        sum((tz[k].scale(coeffs[i][k]) for k in range(3)), QuaternionElement.make(order.p, order.q, (0, 0, 0, 0)))
        for i in range(3)
    ]
    n = [v.nrd() for v in red]
    cross = [bilinear(red[0], red[1]), bilinear(red[0], red[2]), bilinear(red[1], red[2])]
    vals = n + cross
    if any(v.denominator != 1 for v in vals):
        raise AssertionError("Gross lattice norm form is not integral")
    return TernaryForm(*(int(v) for v in vals))


def count_vectors_of_norm(gram: list[list[Fraction]], target: int) -> int:
    """Count integer x with x^T G x = target (Fincke-Pohst, exact acceptance)."""
    bound = target
    n = len(gram)
    g = [[float(v) for v in row] for row in gram]
    # Cholesky-type decomposition: Q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2
    qm = [row[:] for row in g]
    for i in range(n):
        for j in range(i + 1, n):
            qm[j][i] = qm[i][j]
            qm[i][j] = qm[i][j] / qm[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                qm[k][l] -= qm[k][i] * qm[i][l]
    exact_gram = gram
    count = 0
    x = [0] * n

    def rec(i, remaining):
        nonlocal count
        centre = -sum(qm[i][j] * x[j] for j in range(i + 1, n))
        r = math.sqrt(max(remaining, 0.0) / qm[i][i]) + 1e-9
        for xi in range(math.ceil(centre - r), math.floor(centre + r) + 1):
            x[i] = xi
            used = qm[i][i] * (xi - centre) ** 2
            if i == 0:
                val = sum(exact_gram[a][b] * x[a] * x[b] for a in range(n) for b in range(n))
                if val == target:
                    count += 1
            else:
                rec(i - 1, remaining - used + 1e-9)
        x[i] = 0

    rec(n - 1, float(bound) + 1e-9)
    return count


def count_units(order: IbukiyamaOrder) -> int:
    """Number of elements of reduced norm 1 in the order."""
    return count_vectors_of_norm(order.norm_form, 1)


def measures(w_list: Sequence[int]) -> tuple[list[Fraction], Fraction]:
    if not w_list:
        raise ValueError("need at least one unit count")
    total = sum(Fraction(1, w) for w in w_list)
    mu = [Fraction(1, w) / total for w in w_list]
    return mu, min(mu)


def find_order_for_form(p: int, target, C: int = 1000, q_cap: int = 2000):
    """Search Ibukiyama parameters (q, r, type) whose Gross form is
    theta-equivalent to ``target`` up to C.  Returns the order or None."""
    types = [TYPE_I, TYPE_II] if p % 4 == 3 else [TYPE_I]
    det = gram_determinant(target)
    if det != 4 * p * p:
        return None
    for q in range(3, q_cap + 1, 8):
        if not (is_prime(q) and kronecker(-q, p) == -1):
            continue
        for t in types:
            mod = q if t == TYPE_I else 4 * q
            for r in range(mod):
                if (r * r + p) % mod:
                    continue
                order = build_order(p, q, r, t)
                if forms_agree(gross_form(order), target, C):
                    return order
    return None

"""Exact exception sets for Gross forms of curves defined over F_p.

The Gross form of an Ibukiyama order splits as a binary "section" plus
``p * z^2``.  Values of the binary section up to M are precomputed as
bitsets; the set T_{N,M} of n <= N of the shape ``section value + p z^2``
(with the parity coupling for type I orders) is then assembled, and every
eligible n outside T_{N,M} is checked directly before it is reported.
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .arith import is_fundamental, kronecker
from .quadform import ConstrainedTernaryForm, TernaryForm, forms_agree, is_represented, theta_series
from .quatorders import TYPE_I, TYPE_II, IbukiyamaOrder, gross_form

ALL_ELIGIBLE = "all-eligible"
P_DIVISIBLE = "p-divisible-only"
FILTERS = (ALL_ELIGIBLE, P_DIVISIBLE)

DEFAULT_MEMORY_BUDGET = 1 << 31  # bytes for section bitsets
DEFAULT_SEGMENT = 1 << 22


class SieveMemoryError(MemoryError):
    pass


class MismatchedPrime(ValueError):
    pass


class MissingForms(ValueError):
    pass


def eligible(n: int, p: int) -> bool:
    """n = 0,3 mod 4, p^2 does not divide n, and (-n/p) != 1."""
    return n >= 1 and n % 4 in (0, 3) and n % (p * p) != 0 and kronecker(-n, p) != 1


def _residue_table(p: int) -> np.ndarray:
    return np.array([kronecker(-r, p) != 1 for r in range(p)], dtype=bool)


def eligible_mask(lo: int, hi: int, p: int, table: Optional[np.ndarray] = None) -> np.ndarray:
    """Vectorised :func:`eligible` over lo <= n < hi."""
    if table is None:
        table = _residue_table(p)
    n = np.arange(lo, hi, dtype=np.int64)
    m4 = n % 4
    mask = ((m4 == 0) | (m4 == 3)) & (n % (p * p) != 0) & table[n % p] & (n >= 1)
    return mask


@dataclass(frozen=True)
class SectionSpec:
    """Binary section A u^2 + H u v + B v^2 and the p*w^2 term it is paired with."""

    p: int
    q: int
    r: int
    order_type: str
    A: int
    H: int
    B: int

    @classmethod
    def from_order(cls, order: IbukiyamaOrder) -> "SectionSpec":
        p, q, r = order.p, order.q, order.r
        if order.order_type == TYPE_I:
            return cls(p, q, r, TYPE_I, q, 2 * r, (r * r + p) // q)
        return cls(p, q, r, TYPE_II, 4 * q, 4 * r, (r * r + p) // q)

    @property
    def key(self) -> tuple:
        return (self.p, self.q, self.r, self.order_type)


@dataclass
class BinarySectionSets:
    spec: SectionSpec
    M: int
    SE: Optional[np.ndarray] = None
    SO: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None

    def for_parity(self, w: int) -> np.ndarray:
        if self.spec.order_type == TYPE_II:
            return self.S
        return self.SE if w % 2 == 0 else self.SO

    def save(self, path) -> None:
        """Length-prefixed bitset file: magic, JSON header, then (nbits, packed bits) per set."""
        header = json.dumps({"key": list(self.spec.key), "M": self.M}).encode()
        arrays = [self.S] if self.spec.order_type == TYPE_II else [self.SE, self.SO]
        with open(path, "wb") as fh:
            fh.write(b"CMLKSEC1")
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for arr in arrays:
                fh.write(struct.pack("<Q", len(arr)))
                fh.write(np.packbits(arr).tobytes())

    @classmethod
    def load(cls, path, spec: SectionSpec) -> "BinarySectionSets":
        data = Path(path).read_bytes()
        buf = io.BytesIO(data)
        if buf.read(8) != b"CMLKSEC1":
            raise ValueError(f"{path}: not a section cache file")
        (hlen,) = struct.unpack("<I", buf.read(4))
        header = json.loads(buf.read(hlen))
        if tuple(header["key"]) != spec.key:
            raise ValueError(f"{path}: cached sections belong to {header['key']}")
        arrays = []
        while True:
            raw = buf.read(8)
            if not raw:
                break
            (nbits,) = struct.unpack("<Q", raw)
            packed = np.frombuffer(buf.read((nbits + 7) // 8), dtype=np.uint8)
            arrays.append(np.unpackbits(packed, count=nbits).astype(bool))
        M = header["M"]
        if spec.order_type == TYPE_II:
            return cls(spec, M, S=arrays[0])
        return cls(spec, M, SE=arrays[0], SO=arrays[1])


def _section_values(spec: SectionSpec, M: int):
    """Yield (values, v) arrays for u >= 0, with u = 0 restricted to v >= 0."""
    A, H, B = spec.A, spec.H, spec.B
    delta = 4 * A * B - H * H  # 16p (type II) or 4p (type I)
    umax = math.isqrt(4 * B * M // delta) + 1
    for u in range(umax + 1):
        disc = 4 * B * M - delta * u * u
        if disc < 0:
            break
        s = math.isqrt(disc) + 1
        lo = (-H * u - s) // (2 * B)
        hi = (-H * u + s) // (2 * B) + 1
        if u == 0:
            lo = 0
        v = np.arange(lo, hi + 1, dtype=np.int64)
        vals = A * u * u + H * u * v + B * v * v
        keep = (vals >= 0) & (vals <= M)
        yield vals[keep], v[keep]


def precompute_sections(
    order_or_spec, M: int, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> BinarySectionSets:
    spec = order_or_spec if isinstance(order_or_spec, SectionSpec) else SectionSpec.from_order(order_or_spec)
    if M < 0:
        raise ValueError("M must be nonnegative")
    nsets = 1 if spec.order_type == TYPE_II else 2
    if nsets * (M + 1) > memory_budget:
        raise SieveMemoryError(f"M = {M} needs {nsets * (M + 1)} bytes, budget {memory_budget}")
    if spec.order_type == TYPE_II:
        S = np.zeros(M + 1, dtype=bool)
        if M >= 1:
            for vals, _ in _section_values(spec, M):
                S[vals] = True
        return BinarySectionSets(spec, M, S=S)
    SE = np.zeros(M + 1, dtype=bool)
    SO = np.zeros(M + 1, dtype=bool)
    if M >= 1:
        for vals, v in _section_values(spec, M):
            odd = (v % 2).astype(bool)
            SE[vals[~odd]] = True
            SO[vals[odd]] = True
    return BinarySectionSets(spec, M, SE=SE, SO=SO)


def _assemble_segment(sections: BinarySectionSets, lo: int, hi: int) -> np.ndarray:
    """Membership in T_{N,M} for lo <= n < hi."""
    p, M = sections.spec.p, sections.M
    T = np.zeros(hi - lo, dtype=bool)
    wmin = math.isqrt(max(0, lo - M - 1) // p)
    wmax = math.isqrt((hi - 1) // p)
    for w in range(wmin, wmax + 1):
        base = p * w * w
        start = max(lo, base)
        end = min(hi, base + M + 1)
        if start >= end:
            continue
        S = sections.for_parity(w)
        T[start - lo:end - lo] |= S[start - base:end - base]
    return T


def _unreached(spec: SectionSpec, cand: np.ndarray, memory_budget: int) -> np.ndarray:
    """Members of ``cand`` with no representation section + p w^2 at all.

    Uses section sets up to max(cand), i.e. membership in T_N.  Falls back to
    returning ``cand`` unchanged when those sets do not fit in memory.
    """
    top = int(cand.max())
    try:
        full = precompute_sections(spec, top, memory_budget)
    except SieveMemoryError:
        return cand
    p = spec.p
    left = np.sort(cand)
    w = 0
    while len(left) and p * w * w <= int(left[-1]):
        idx = left - p * w * w
        ok = idx >= 0
        hit = np.zeros(len(left), dtype=bool)
        hit[ok] = full.for_parity(w)[idx[ok]]
        left = left[~hit]
        w += 1
    return left


@dataclass
class ExceptionReport:
    p: int
    form: list[int]
    parity: bool
    N: int
    M: int
    exceptions: list[int]
    filter: str = ALL_ELIGIBLE
    q: Optional[int] = None
    r: Optional[int] = None
    order_type: Optional[str] = None
    method: str = "sieve"
    timestamp: Optional[str] = None
    version: str = __version__

    def ternary_form(self):
        base = TernaryForm.from_coeffs(self.form)
        return ConstrainedTernaryForm(base) if self.parity else base

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_text(self) -> str:
        return "".join(f"{n}\n" for n in self.exceptions)

    @classmethod
    def from_dict(cls, d: dict) -> "ExceptionReport":
        return cls(**d)


def _stamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def compute_exceptions(
    order: IbukiyamaOrder,
    N: int,
    M: int,
    filter: str = ALL_ELIGIBLE,
    *,
    sections: Optional[BinarySectionSets] = None,
    workers: int = 1,
    segment: int = DEFAULT_SEGMENT,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    stamp: bool = False,
) -> ExceptionReport:
    """Eligible n <= N (p^2 not dividing n) that the Gross form of ``order``
    does not represent.  Exact for every M; M only trades memory for speed."""
    if not (N >= M >= 1):
        raise ValueError("need N >= M >= 1")
    if filter not in FILTERS:
        raise ValueError(f"filter must be one of {FILTERS}")
    if sections is None:
        sections = precompute_sections(order, M, memory_budget)
    elif sections.M != M or sections.spec != SectionSpec.from_order(order):
        raise ValueError("precomputed sections do not match the order and M")
    p = order.p
    form = gross_form(order)
    table = _residue_table(p)

    def run(bounds):
        lo, hi = bounds
        mask = eligible_mask(lo, hi, p, table)
        if filter == P_DIVISIBLE:
            mask &= np.arange(lo, hi, dtype=np.int64) % p == 0
        mask &= ~_assemble_segment(sections, lo, hi)
        return np.flatnonzero(mask) + lo

    ranges = [(lo, min(lo + segment, N + 1)) for lo in range(1, N + 1, segment)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, ranges))
    else:
        parts = [run(rg) for rg in ranges]
    stragglers = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    # n <= M outside T_{N,M} cannot be represented; larger ones may still be
    # reached through a section value above M
    pending = stragglers[stragglers > M]
    if len(pending):
        pending = _unreached(sections.spec, pending, memory_budget)
    stragglers = np.concatenate([stragglers[stragglers <= M], pending])
    # every reported value passes the direct test
    exceptions = sorted(int(n) for n in stragglers if not is_represented(form, int(n)))
    base = form.base if isinstance(form, ConstrainedTernaryForm) else form
    return ExceptionReport(
        p=p,
        form=list(base.coeffs),
        parity=isinstance(form, ConstrainedTernaryForm),
        N=N,
        M=M,
        exceptions=exceptions,
        filter=filter,
        q=order.q,
        r=order.r,
        order_type=order.order_type,
        timestamp=_stamp() if stamp else None,
    )


def exceptions_by_enumeration(form, p: int, N: int, filter: str = ALL_ELIGIBLE, stamp: bool = False) -> ExceptionReport:
    """Same output contract for an arbitrary Gross form (e.g. a curve over
    F_{p^2}), from a full theta sweep to N."""
    if filter not in FILTERS:
        raise ValueError(f"filter must be one of {FILTERS}")
    theta = theta_series(form, N).coeffs
    mask = eligible_mask(0, N + 1, p) & (theta == 0)
    if filter == P_DIVISIBLE:
        mask &= np.arange(N + 1) % p == 0
    base = form.base if isinstance(form, ConstrainedTernaryForm) else form
    return ExceptionReport(
        p=p,
        form=list(base.coeffs),
        parity=isinstance(form, ConstrainedTernaryForm),
        N=N,
        M=0,
        exceptions=[int(n) for n in np.flatnonzero(mask)],
        filter=filter,
        method="enumeration",
        timestamp=_stamp() if stamp else None,
    )


@dataclass
class EpReport:
    p: int
    reports: list[ExceptionReport]
    Ep: list[int]
    N: int
    declared_missing: list[list[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "N": self.N,
            "Ep": self.Ep,
            "count": len(self.Ep),
            "max": max(self.Ep) if self.Ep else None,
            "declared_missing": self.declared_missing,
            "reports": [r.to_dict() for r in self.reports],
        }


def aggregate_Ep(
    reports: Sequence[ExceptionReport],
    p: int,
    expected_forms: Optional[Iterable] = None,
    declared_missing: Sequence = (),
) -> EpReport:
    """Union of per-form exceptions, restricted to fundamental -|D| with
    (-|D|/p) != 1 and |D| below the smallest scanned bound."""
    reports = list(reports)
    if any(r.p != p for r in reports):
        raise MismatchedPrime(f"reports for several primes: {sorted({r.p for r in reports})}")
    declared = [list(f.coeffs if hasattr(f, "coeffs") else f) for f in declared_missing]
    if expected_forms is not None:
        missing = []
        for f in expected_forms:
            if not any(forms_agree(f, r.ternary_form(), 300) for r in reports):
                coeffs = list(f.coeffs)
                if coeffs not in declared:
                    missing.append(coeffs)
        if missing:
            raise MissingForms(f"no report for forms {missing}; declare them to proceed")
    if not reports:
        return EpReport(p, [], [], 0, declared)
    N = min(r.N for r in reports)
    union = set()
    for r in reports:
        union.update(n for n in r.exceptions if n <= N)
    Ep = sorted(n for n in union if n % 4 in (0, 3) and is_fundamental(-n) and kronecker(-n, p) != 1)
    return EpReport(p, reports, Ep, N, declared)

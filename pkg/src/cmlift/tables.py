"""Bundled reference tables: Gross forms with good bounds, published exception
lists and the sets E_p for small p."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Optional

from .quadform import TernaryForm, gram_determinant


@lru_cache(maxsize=1)
def load_tables() -> dict:
    text = resources.files("cmlift").joinpath("data/appendix_tables.json").read_text()
    return json.loads(text)


def _valid(p: int, coeffs) -> bool:
    # one printed row carries a typo and is not positive definite of det 4p^2
    try:
        return gram_determinant(TernaryForm.from_coeffs(coeffs)) == 4 * p * p
    except ValueError:
        return False


def form_rows(p: Optional[int] = None, field: Optional[str] = None) -> list[dict]:
    """Rows {p, field, coeffs, D0, D1, valid}; ``field`` is "p" or "p2"."""
    rows = []
    for row in load_tables()["forms"]:
        if (p is None or row["p"] == p) and (field is None or row["field"] == field):
            rows.append(dict(row, valid=_valid(row["p"], row["coeffs"])))
    return rows


def fp_forms(p: int) -> list[TernaryForm]:
    """Gross forms of the supersingular curves defined over F_p."""
    return [TernaryForm.from_coeffs(r["coeffs"]) for r in form_rows(p, "p") if r["valid"]]


def exception_rows(p: Optional[int] = None) -> list[dict]:
    return [r for r in load_tables()["exceptions"] if p is None or r["p"] == p]


def published_exceptions(p: int, coeffs) -> Optional[list[int]]:
    """Printed exception list for one form, or None when only a count is printed."""
    coeffs = list(coeffs)
    for r in exception_rows(p):
        if r["coeffs"] == coeffs:
            return r.get("exceptions")
    return None


def good_bound(p: int) -> Optional[int]:
    for r in load_tables()["good_bounds_p"]:
        if r["p"] == p:
            return r["Dp"]
    return None


def ep_set(p: int) -> Optional[dict]:
    """{"count", "max"} and, when printed in full, "set"."""
    return load_tables()["ep_sets"].get(str(p))

"""Command line interface.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
computation fails (the error is written to stderr as JSON).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__, tables
from .modforms import (
    InsufficientCoefficients,
    LValueVanishes,
    NewformCoefficients,
    RationalSeries,
    compute_c,
    cusp_part,
    eisenstein_coefficient,
    eisenstein_series,
    eta_product_level11,
    kohnen_zagier_ratio,
    shimura_lift,
    twisted_L_value,
)
from .quadform import (
    ConstrainedTernaryForm,
    EnumerationOverflow,
    NotPositiveDefinite,
    TernaryForm,
    gram_determinant,
    theta_series,
)
from .quatorders import (
    TYPE_I,
    TYPE_II,
    NoSolution,
    build_order,
    count_units,
    find_order_for_form,
    gross_form,
    gross_lattice_generic,
    measures,
    minimal_order,
)
from .sieve import (
    ALL_ELIGIBLE,
    FILTERS,
    BinarySectionSets,
    ExceptionReport,
    MismatchedPrime,
    MissingForms,
    SectionSpec,
    SieveMemoryError,
    aggregate_Ep,
    compute_exceptions,
    exceptions_by_enumeration,
    precompute_sections,
)

INT64_MAX = (1 << 63) - 1

COMPUTATION_ERRORS = (
    EnumerationOverflow,
    NoSolution,
    InsufficientCoefficients,
    LValueVanishes,
    SieveMemoryError,
    MissingForms,
    MismatchedPrime,
    ArithmeticError,
    MemoryError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _parse_form(text: str) -> TernaryForm:
    try:
        return TernaryForm.parse(text)
    except NotPositiveDefinite as exc:
        raise UsageError(str(exc))
    except ValueError:
        raise UsageError(f"cannot parse form {text!r}; expected a,b,c,d,e,f")


def _bound(name: str, value: Optional[int], low: int = 1) -> None:
    if value is None:
        return
    if value < low or value > INT64_MAX:
        raise UsageError(f"--{name} must lie in [{low}, 2^63 - 1]")


def _order_from_args(args):
    order_type = args.type
    if args.q is not None or args.r is not None:
        if args.q is None or args.r is None:
            raise UsageError("--q and --r must be given together")
        return build_order(args.p, args.q, args.r, order_type)
    return minimal_order(args.p, order_type)


def _form_from_args(args):
    """A Gross form from --form, --gross-json, or the order options."""
    if getattr(args, "gross_json", None):
        d = json.loads(Path(args.gross_json).read_text())
        base = TernaryForm.from_coeffs(d["gross_form"])
        return ConstrainedTernaryForm(base) if d.get("parity") else base
    if getattr(args, "form", None):
        base = _parse_form(args.form)
        return ConstrainedTernaryForm(base) if getattr(args, "parity", False) else base
    if args.p is None:
        raise UsageError("give --form or --p")
    return gross_form(_order_from_args(args))


def _cache_dir(args) -> Optional[Path]:
    d = args.cache_dir or os.environ.get("CMLK_CACHE_DIR")
    return Path(d) if d else None


def _sections(order, M: int, cache: Optional[Path]) -> BinarySectionSets:
    spec = SectionSpec.from_order(order)
    if cache is None:
        return precompute_sections(spec, M)
    cache.mkdir(parents=True, exist_ok=True)
    path = cache / f"sections_p{spec.p}_q{spec.q}_r{spec.r}_{spec.order_type}_M{M}.bin"
    if path.exists():
        return BinarySectionSets.load(path, spec)
    sections = precompute_sections(spec, M)
    tmp = path.with_suffix(".tmp")
    sections.save(tmp)
    tmp.replace(path)
    return sections


def _newform(args) -> NewformCoefficients:
    if args.coeffs:
        return NewformCoefficients.load(args.coeffs, args.p)
    if args.p != 11:
        raise UsageError("--coeffs is required unless p = 11")
    return eta_product_level11(args.n_max)


def _cusp_from_args(args) -> RationalSeries:
    if getattr(args, "series", None):
        return RationalSeries.from_csv(Path(args.series).read_text(), args.p)
    form = _form_from_args(args)
    return cusp_part(theta_series(form, args.C, args.workers), args.p)


# subcommands


def cmd_gross(args):
    order = _order_from_args(args)
    d = order.to_dict()
    form = gross_form(order)
    d["expanded_form"] = list(form.expand().coeffs)
    d["determinant"] = int(gram_determinant(form))
    if args.generic:
        d["generic_form"] = list(gross_lattice_generic(order).coeffs)
    _emit(args, _dump(d))


def cmd_theta(args):
    form = _form_from_args(args)
    theta = theta_series(form, args.limit, args.workers)
    _emit(args, theta.to_json() if args.format == "json" else theta.to_csv())


def _report_for(args, order=None, form=None) -> ExceptionReport:
    if order is not None:
        sections = _sections(order, args.M, _cache_dir(args))
        return compute_exceptions(order, args.N, args.M, args.filter, sections=sections, workers=args.workers)
    return exceptions_by_enumeration(form, args.p, args.N, args.filter)


def _check_NM(args):
    if args.N is None or args.M is None:
        raise UsageError("--N and --M are required")
    _bound("N", args.N)
    _bound("M", args.M)
    if args.M > args.N:
        raise UsageError("need N >= M >= 1")


def cmd_exceptions(args):
    _check_NM(args)
    if args.form:
        form = _parse_form(args.form)
        if args.p is None:
            raise UsageError("--p is required with --form")
        order = find_order_for_form(args.p, form)
        report = _report_for(args, order, form)
    else:
        if args.p is None:
            raise UsageError("give --p (with --type, --q, --r) or --form")
        report = _report_for(args, _order_from_args(args))
    _emit(args, report.to_text() if args.text else _dump(report.to_dict()))


def cmd_ep(args):
    declared = [TernaryForm.parse(f) for f in args.declare_missing]
    expected = tables.fp_forms(args.p)
    if args.reports:
        reports = [ExceptionReport.from_dict(json.loads(Path(f).read_text())) for f in args.reports]
    else:
        _check_NM(args)
        reports = []
        for form in expected:
            if any(f.coeffs == form.coeffs for f in declared):
                continue
            order = find_order_for_form(args.p, form)
            if order is None:
                raise NoSolution(f"no Ibukiyama order found for {form}; use --declare-missing")
            reports.append(_report_for(args, order))
    ep = aggregate_Ep(reports, args.p, expected, declared)
    _emit(args, _dump(ep.to_dict()))


def cmd_eisenstein(args):
    if args.d is not None:
        c = eisenstein_coefficient(args.p, args.d)
        _emit(args, _dump({"p": args.p, "d": args.d, "coefficient": str(c)}))
    else:
        _bound("limit", args.limit)
        _emit(args, eisenstein_series(args.p, args.limit).to_csv())


def cmd_cusp(args):
    _bound("C", args.C)
    _emit(args, _cusp_from_args(args).to_csv())


def cmd_shimura(args):
    if args.C is None:
        args.C = args.t * args.n_max * args.n_max
    g = _cusp_from_args(args)
    if args.normalize:
        g = g.normalized()
    lift = shimura_lift(g, args.t, args.n_max)
    _emit(args, lift.to_csv())


def cmd_lvalue(args):
    if args.epsilon <= 0:
        raise UsageError("--epsilon must be positive")
    L = twisted_L_value(_newform(args), args.D, args.m, args.p, args.epsilon, args.cutoff)
    _emit(args, _dump(L.to_dict()))


def cmd_c_const(args):
    if args.epsilon <= 0:
        raise UsageError("--epsilon must be positive")
    g = _cusp_from_args(args)
    coeffs = _newform(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m, c = compute_c(g, args.p, coeffs, args.epsilon)
    out = {"p": args.p, "m": m, "g_m": str(g[m]), "m_fundamental": not caught, "c": c.to_dict()}
    if args.D:
        out["kohnen_zagier"] = {
            str(D): kohnen_zagier_ratio(g, coeffs, D, args.p, args.epsilon).to_dict() for D in args.D
        }
    _emit(args, _dump(out))


def cmd_units(args):
    rows = []
    for form in tables.fp_forms(args.p):
        order = find_order_for_form(args.p, form)
        if order is None:
            raise NoSolution(f"no Ibukiyama order found for {form}")
        rows.append({"form": list(form.coeffs), "q": order.q, "r": order.r, "type": order.order_type,
                     "units": count_units(order)})
    mu, mu_p = measures([r["units"] for r in rows])
    for r, m in zip(rows, mu):
        r["mu"] = str(m)
    mass = sum(Fraction(1, r["units"]) for r in rows)
    _emit(args, _dump({
        "p": args.p,
        "curves": rows,
        "mass": str(mass),
        "expected_mass": str(Fraction(args.p - 1, 24)),
        "mu_p": str(mu_p),
    }))


def cmd_tables(args):
    data = tables.load_tables()
    if args.p is not None:
        data = {
            "version": data["version"],
            "forms": tables.form_rows(args.p),
            "exceptions": tables.exception_rows(args.p),
            "good_bound": tables.good_bound(args.p),
            "ep_set": tables.ep_set(args.p),
        }
    _emit(args, _dump(data))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmlift", description="Gross forms, theta series and CM-lift exception sets.")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--cache-dir", help="section cache (default $CMLK_CACHE_DIR)")

    order_opts = _Parser(add_help=False)
    order_opts.add_argument("--p", type=int)
    order_opts.add_argument("--type", choices=[TYPE_I, TYPE_II], default=TYPE_I)
    order_opts.add_argument("--q", type=int)
    order_opts.add_argument("--r", type=int)

    form_opts = _Parser(add_help=False)
    form_opts.add_argument("--form", help="a,b,c,d,e,f")
    form_opts.add_argument("--parity", action="store_true", help="restrict to z = y mod 2")
    form_opts.add_argument("--gross-json", help="output of the gross subcommand")

    newform_opts = _Parser(add_help=False)
    newform_opts.add_argument("--coeffs", help="newform coefficient file, one integer per line")
    newform_opts.add_argument("--n-max", type=int, default=20000, help="eta-product length (p = 11)")
    newform_opts.add_argument("--epsilon", type=float, default=1e-10)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gross", parents=[common, order_opts], help="Gross form of an Ibukiyama order")
    s.add_argument("--generic", action="store_true", help="also reduce the lattice generically")
    s.set_defaults(func=cmd_gross)

    s = sub.add_parser("theta", parents=[common, order_opts, form_opts], help="theta series coefficients")
    s.add_argument("--limit", type=int, required=True)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_theta)

    s = sub.add_parser("exceptions", parents=[common, order_opts], help="exact exception set of one form")
    s.add_argument("--form", help="Gross form; its order is searched for")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--filter", choices=FILTERS, default=ALL_ELIGIBLE)
    s.add_argument("--text", action="store_true", help="one integer per line")
    s.set_defaults(func=cmd_exceptions)

    s = sub.add_parser("ep", parents=[common], help="aggregate the F_p forms into E_p")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--filter", choices=FILTERS, default=ALL_ELIGIBLE)
    s.add_argument("--reports", nargs="*", default=[], help="ExceptionReport JSON files")
    s.add_argument("--declare-missing", nargs="*", default=[], metavar="FORM")
    s.set_defaults(func=cmd_ep)

    s = sub.add_parser("eisenstein", parents=[common], help="Eisenstein coefficients")
    s.add_argument("--p", type=int, required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--d", type=int, help="single discriminant")
    g.add_argument("--limit", type=int, help="CSV series up to this index")
    s.set_defaults(func=cmd_eisenstein)

    s = sub.add_parser("cusp", parents=[common, order_opts, form_opts], help="cuspidal part as CSV")
    s.add_argument("--C", type=int, required=True)
    s.set_defaults(func=cmd_cusp)

    s = sub.add_parser("shimura", parents=[common, order_opts, form_opts], help="Shimura lift as CSV")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--C", type=int, help="theta length when computing g (default t n_max^2)")
    s.add_argument("--series", help="cusp CSV to lift instead of computing it")
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(func=cmd_shimura)

    s = sub.add_parser("lvalue", parents=[common, newform_opts], help="twisted central L-value")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--m", type=float, required=True)
    s.add_argument("--cutoff", type=int)
    s.set_defaults(func=cmd_lvalue)

    s = sub.add_parser("c-const", parents=[common, order_opts, form_opts, newform_opts], help="constant c")
    s.add_argument("--C", type=int, default=2000)
    s.add_argument("--series", help="cusp CSV instead of computing it")
    s.add_argument("--D", type=int, nargs="*", default=[], help="also report Kohnen-Zagier ratios")
    s.set_defaults(func=cmd_c_const)

    s = sub.add_parser("units", parents=[common], help="unit counts and measures of the F_p curves")
    s.add_argument("--p", type=int, required=True)
    s.set_defaults(func=cmd_units)

    s = sub.add_parser("tables", parents=[common], help="print the bundled reference tables")
    s.add_argument("--p", type=int)
    s.set_defaults(func=cmd_tables)
    return parser


def _fail(kind: str, exc: Exception, code: int) -> int:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    required = getattr(exc, "required", None)
    if required is not None:
        payload["required_n_max"] = required
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be at least 1")
        args.func(args)
    except (UsageError, FileNotFoundError) as exc:
        return _fail("usage", exc, 1)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except COMPUTATION_ERRORS as exc:
        return _fail("computation", exc, 2)
    except (ValueError, OSError) as exc:
        return _fail("computation", exc, 2)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

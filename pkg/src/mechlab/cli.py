"""``mechlab`` command-line interface.

Exit codes: 0 success, 2 bad input, 3 size or solver limit, 1 anything else.
Errors are written to stderr as ``{"error": {"kind": ..., "detail": ...}}``.
"""
import argparse
import csv
import io
import json
import sys

from . import dist as _dist
from . import eranalytics, harness, mcestimate, myerson, optmech
from ._numbers import fmt, parse_number, to_fraction
from .dist import ProductDist
from .errors import InputError, LimitError, MechlabError

COMMANDS = ["rev", "srev", "brev", "solve", "report", "verify", "er-constants",
            "er-growth", "limit", "menu"]


# ---------------------------------------------------------------- input

def _read_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path or 'stdin'}: {exc}") from None


def _coerce(d, mode):
    if mode is None:
        return d
    if mode == "float":
        return d.to_float()
    if d.exact:
        return d
    v, q = d.as_arrays()
    return _dist.make_dist([to_fraction(float(x)) for x in v],
                           [to_fraction(float(x)) for x in q], exact=True)


def _load_product(path, mode):
    p = _dist.product_from_dict(_read_json(path))
    return ProductDist(tuple(_coerce(d, mode) for d in p.items))


def _parse_ks(text):
    if text is None:
        raise InputError("--k is required for this command")
    try:
        ks = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--k expects comma-separated integers, got {text!r}") from None
    return ks


def _parse_menu(obj):
    entries = obj.get("menu", obj) if isinstance(obj, dict) else obj
    if not isinstance(entries, list):
        raise InputError("menu must be a list of {alloc, price} entries")
    menu = []
    for e in entries:
        try:
            if isinstance(e, dict):
                alloc, price = e["alloc"], e["price"]
            else:
                alloc, price = e
            menu.append((tuple(parse_number(a) for a in alloc), parse_number(price)))
        except (KeyError, TypeError, ValueError, ZeroDivisionError):
            raise InputError(f"bad menu entry {e!r}") from None
    return menu


# ---------------------------------------------------------------- output

class Table:
    def __init__(self, columns, rows):
        self.columns = columns
        self.rows = rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return fmt(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if v is None or isinstance(v, (bool, str, int)):
        return v
    return fmt(v)


def render(result, fmt_name):
    if isinstance(result, Table):
        if fmt_name == "json":
            return json.dumps([dict(zip(result.columns, (_jsonable(c) for c in r)))
                               for r in result.rows], indent=2) + "\n"
        if fmt_name == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\r\n")
            w.writerow(result.columns)
            for r in result.rows:
                w.writerow([_cell(c) for c in r])
            return buf.getvalue()
        return _text_table(result.columns, [[_cell(c) for c in r] for r in result.rows])
    if fmt_name == "json":
        return json.dumps(_jsonable(result), indent=2) + "\n"
    flat = [(k, v) for k, v in result.items() if not isinstance(v, (list, dict))]
    if fmt_name == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow([k for k, _ in flat])
        w.writerow([_cell(v) for _, v in flat])
        return buf.getvalue()
    width = max((len(k) for k, _ in flat), default=0)
    return "".join(f"{k.ljust(width)}  {_cell(v)}\n" for k, v in flat)


def _is_numeric(s):
    try:
        to_fraction(s)
        return True
    except (ValueError, ZeroDivisionError, TypeError):
        return False


def _text_table(columns, rows):
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(columns)]
    numeric = [all(_is_numeric(r[i]) for r in rows if r[i]) and rows for i in range(len(columns))]

    def line(cells):
        return "  ".join(c.rjust(w) if num else c.ljust(w)
                         for c, w, num in zip(cells, widths, numeric)).rstrip() + "\n"
    return line(columns) + "".join(line(r) for r in rows)


# ---------------------------------------------------------------- commands

def _single(args):
    p = _load_product(args.input[0] if args.input else None, args.mode)
    if p.k != 1:
        raise InputError("rev takes a single distribution")
    return p.items[0]


def cmd_rev(args):
    r = myerson.rev1(_single(args))
    return {"revenue": r.revenue, "price": r.chosen_price,
            "optimal_prices": list(r.optimal_prices)}


def _product(args):
    return _load_product(args.input[0] if args.input else None, args.mode)


def cmd_srev(args):
    p = _product(args)
    return {"srev": myerson.srev(p),
            "prices": [myerson.rev1(d).chosen_price for d in p.items]}


def cmd_brev(args):
    r = myerson.brev(_product(args))
    return {"revenue": r.revenue, "price": r.chosen_price,
            "optimal_prices": list(r.optimal_prices)}


def cmd_solve(args):
    p = _product(args)
    exact = None if args.mode is None else args.mode == "exact"
    sol = optmech.solve_optimal(p, exact=exact, max_types=args.max_types)
    out = sol.to_dict()
    out["passes"] = sol.residuals.passes(0 if sol.mode == "exact" else args.tol)
    return out


def _reports(args):
    paths = args.input or [None]
    out = []
    for path in paths:
        p = _load_product(path, args.mode)
        name = "stdin" if path in (None, "-") else path
        exact = None if args.mode is None else args.mode == "exact"
        out.append(harness.report(p, name, exact=exact, max_types=args.max_types))
    return out


def cmd_report(args):
    reports = _reports(args)
    if args.format == "json":
        return [r.to_dict() for r in reports]
    return Table(harness.CSV_COLUMNS, [[r.row()[c] for c in harness.CSV_COLUMNS]
                                       for r in reports])


def cmd_verify(args):
    rows = []
    for r in _reports(args):
        for c in r.checks:
            rows.append([r.name, c.name, c.applicable, c.passed, c.slack, c.statement])
    return Table(["instance", "check", "applicable", "passed", "slack", "statement"], rows)


def cmd_er_constants(args):
    c = eranalytics.solve_constants(args.tol)
    out = c.to_dict()
    price, rev = eranalytics.brev_er2_via_price_sweep()
    out["sweep_price"] = price
    out["sweep_revenue"] = rev
    return out


def cmd_er_growth(args):
    cfg = mcestimate.McConfig(seed=args.seed, samples=args.samples)
    rows = mcestimate.growth_table(_parse_ks(args.k), cfg)
    return Table(["k", "estimate", "stderr", "normalized"], [list(r) for r in rows])


def cmd_limit(args):
    d = _single(args)
    rows = harness.limit_check(d, _parse_ks(args.k))
    return Table(["k", "brev_over_k", "expectation"], [list(r) for r in rows])


def cmd_menu(args):
    p = _product(args)
    if args.menu:
        menu = _parse_menu(_read_json(args.menu))
        return {"revenue": optmech.menu_revenue(p, menu, max_types=args.max_types)}
    value, menu = optmech.best_deterministic(p, max_types=args.max_types)
    return {"revenue": value,
            "menu": [{"alloc": list(a), "price": s} for a, s in menu]}


HANDLERS = {
    "rev": cmd_rev, "srev": cmd_srev, "brev": cmd_brev, "solve": cmd_solve,
    "report": cmd_report, "verify": cmd_verify, "er-constants": cmd_er_constants,
    "er-growth": cmd_er_growth, "limit": cmd_limit, "menu": cmd_menu,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    ap = _Parser(prog="mechlab", description=(
        "Separate, bundle, and optimal revenue for one additive buyer."))
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--input", "-i", action="append",
                    help="distribution JSON (repeat for report/verify; '-' is stdin)")
    ap.add_argument("--output", "-o", help="write the result here instead of stdout")
    ap.add_argument("--format", "-f", choices=["json", "csv", "text"], default=None)
    ap.add_argument("--mode", choices=["exact", "float"], default=None,
                    help="arithmetic; defaults to the input's own representation")
    ap.add_argument("--tol", type=float, default=None,
                    help="float tolerance (default 1e-9; 1e-12 for er-constants)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-types", type=int, default=None)
    ap.add_argument("--k", help="comma-separated item counts (er-growth, limit)")
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--menu", help="menu JSON for the menu command")
    return ap


DEFAULT_FORMAT = {"report": "csv", "verify": "text", "er-growth": "csv", "limit": "csv"}


def _error(kind, detail, code):
    sys.stderr.write(json.dumps({"error": {"kind": kind, "detail": detail}}) + "\n")
    return code


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except InputError as exc:
        return _error("UsageError", str(exc), 2)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.format is None:
        args.format = DEFAULT_FORMAT.get(args.command, "json")
    if args.tol is None:
        args.tol = 1e-12 if args.command == "er-constants" else 1e-9
    try:
        if not args.tol > 0:
            raise InputError("--tol must be positive")
        if args.max_types is not None and args.max_types < 1:
            raise InputError("--max-types must be at least 1")
        result = HANDLERS[args.command](args)
        text = render(result, args.format)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except InputError as exc:
        return _error(exc.kind, str(exc), 2)
    except LimitError as exc:
        return _error(exc.kind, str(exc), 3)
    except MechlabError as exc:
        return _error(exc.kind, str(exc), 1)
    except OSError as exc:
        return _error("IOError", str(exc), 2)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        return _error("Internal", f"{type(exc).__name__}: {exc}", 1)


if __name__ == "__main__":
    sys.exit(main())

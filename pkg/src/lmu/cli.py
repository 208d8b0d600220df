"""Command-line front end: ``lmu <command> ...``.

Exit status: 0 success, 1 usage error, 2 parse error, 3 validation error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from lmu import direct, modal, pctl, qe
from lmu.errors import InvariantViolation, ParseError, ValidationError
from lmu.pnts import parse_pnts
from lmu.terms import parse_term, to_text

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION, EXIT_INVARIANT = range(5)


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(q: Fraction) -> str:
    return str(Fraction(q))


def fmt_approx(q: Fraction, digits: int) -> str:
    with localcontext() as ctx:
        ctx.prec = digits + 20
        d = Decimal(q.numerator) / Decimal(q.denominator)
        return str(d.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN))


def parse_point(spec: str) -> dict:
    """``x=1/3,y=0`` into a mapping; blanks are ignored."""
    out = {}
    for part in filter(None, (p.strip() for p in spec.split(","))):
        name, eq, val = part.partition("=")
        name, val = name.strip(), val.strip()
        if not eq or not name or not val:
            raise UsageError(f"bad assignment {part!r}; expected name=rational")
        try:
            q = Fraction(val)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad rational {val!r} for {name!r}") from None
        if name in out:
            raise UsageError(f"{name!r} assigned twice")
        out[name] = q
    return out


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _print_value(q: Fraction, args, out):
    print(fmt(q), file=out)
    if args.approx is not None:
        print(f"approx: {fmt_approx(q, args.approx)}", file=out)


def _value(t, backend):
    return direct.value(t) if backend == "direct" else qe.value_via_qe(t)


def cmd_value(args, out):
    t = parse_term(_read(args.termfile))
    if t.fv:
        raise UsageError(f"term has free variables {sorted(t.fv)}; use 'eval --at'")
    _print_value(_value(t, args.backend), args, out)


def _context(t, point):
    missing = sorted(t.fv - set(point))
    if missing:
        raise UsageError(f"no value given for {', '.join(missing)}")
    for x, v in point.items():
        if not 0 <= v <= 1:
            raise UsageError(f"value {v} for {x!r} outside [0,1]")
    return sorted(point)


def cmd_eval(args, out):
    t = parse_term(_read(args.termfile))
    point = parse_point(args.at or "")
    ctx = _context(t, point)
    if args.backend == "qe":
        v = qe.value_via_qe(t, ctx, point)
        _print_value(v, args, out)
        if args.piece:
            piece = next((c for c in qe.representing_system(t, ctx) if c.applies(point)), None)
            if piece is None:
                raise InvariantViolation("representing system has no piece at the point")
            print(piece, file=out)
        return
    piece = direct.evaluate(t, ctx, point)
    _print_value(piece.value(point), args, out)
    if args.piece:
        print(piece, file=out)


def cmd_system(args, out):
    t = parse_term(_read(args.termfile))
    ctx = args.vars.split(",") if args.vars else sorted(t.fv)
    for c in qe.representing_system(t, [x.strip() for x in ctx if x.strip()]):
        print(c, file=out)


def _model(args):
    m, rho = parse_pnts(_read(args.modelfile))
    if args.state not in m.states:
        raise ValidationError(f"unknown state {args.state!r}")
    return m, rho


def cmd_mc(args, out):
    m, rho = _model(args)
    f = modal.parse_modal(_read(args.formulafile))
    if f.fv:
        raise ValidationError(f"formula has free variables {sorted(f.fv)}")
    _print_value(modal.model_check(f, m, rho, args.state, args.backend), args, out)


def cmd_encode(args, out):
    print(modal.to_text(pctl.encode(pctl.parse_pctl(_read(args.pctlfile)))), file=out)


def cmd_pctl(args, out):
    m, rho = _model(args)
    f = pctl.parse_pctl(_read(args.pctlfile))
    print("true" if pctl.pctl_check(f, m, rho, args.state, args.backend) else "false", file=out)


def cmd_reduce(args, out):
    m, rho = _model(args)
    f = modal.parse_modal(_read(args.formulafile))
    if f.fv:
        raise ValidationError(f"formula has free variables {sorted(f.fv)}")
    print(to_text(modal.reduce(f, m, rho, args.state)), file=out)


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="lmu", description="Exact evaluation and model checking for the Lukasiewicz mu-calculus.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(sp, backend=True):
        if backend:
            sp.add_argument("--backend", choices=("direct", "qe"), default="direct")
        sp.add_argument("--approx", type=int, metavar="N", help="also print a decimal with N digits")

    sp = sub.add_parser("value", help="value of a closed term")
    sp.add_argument("termfile")
    common(sp)
    sp.set_defaults(func=cmd_value)

    sp = sub.add_parser("eval", help="value of a term at a point")
    sp.add_argument("termfile")
    sp.add_argument("--at", default="", help="comma-separated name=rational assignments")
    sp.add_argument("--piece", action="store_true", help="also print the linear piece used")
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("system", help="representing system of CLEs (quantifier elimination)")
    sp.add_argument("termfile")
    sp.add_argument("--vars", help="comma-separated context; defaults to the free variables")
    sp.set_defaults(func=cmd_system, approx=None)

    sp = sub.add_parser("mc", help="value of a modal formula at a state")
    sp.add_argument("modelfile")
    sp.add_argument("formulafile")
    sp.add_argument("--state", required=True)
    common(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("encode-pctl", help="print the modal encoding of a PCTL formula")
    sp.add_argument("pctlfile")
    sp.set_defaults(func=cmd_encode, approx=None)

    sp = sub.add_parser("pctl", help="decide a PCTL formula at a state")
    sp.add_argument("modelfile")
    sp.add_argument("pctlfile")
    sp.add_argument("--state", required=True)
    sp.add_argument("--backend", choices=("direct", "qe"), default="direct")
    sp.set_defaults(func=cmd_pctl, approx=None)

    sp = sub.add_parser("reduce", help="print the closed mu-term for a formula at a state")
    sp.add_argument("modelfile")
    sp.add_argument("formulafile")
    sp.add_argument("--state", required=True)
    sp.set_defaults(func=cmd_reduce, approx=None)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "approx", None) is not None and args.approx < 0:
            raise UsageError("--approx needs a non-negative digit count")
        args.func(args, out)
        return EXIT_OK
    except UsageError as e:
        print(f"usage error: {e}", file=err)
        return EXIT_USAGE
    except ParseError as e:
        print(f"parse error: {e}", file=err)
        return EXIT_PARSE
    except (ValidationError, ValueError) as e:
        print(f"validation error: {e}", file=err)
        return EXIT_VALIDATION
    except InvariantViolation as e:
        print(f"internal error: {e}", file=err)
        return EXIT_INVARIANT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line entry point: `cmik <verb> ...` or `python3 -m cmik <verb> ...`.

Exit codes: 0 success, 1 mathematical inconsistency or uncovered/ambiguous
cell, 2 usage error.
"""

import argparse
import json
import sys
from fractions import Fraction

from .arith import CMOrder
from .classify import (AmbiguousCell, UncoveredCell, admissible_images, identify,
                       predict_label, regen_tables, twist_set)
from .divpoly import division_polynomial, torsion_degree_bounds, verify_stated_factorizations
from .ecmodel import parse_weierstrass
from .frobverify import (DiscriminationError, InsufficientData, discriminate,
                         sample_frobenius_data, samples_to_csv)
from .modgroup import (admissible_groups, cartan_params, cm_label, level_of_definition,
                       named_subgroup, normalizer_group)
from .quadfield import QuadField, QuadInt

OK, INCONSISTENT, USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _emit(args, obj, text):
    if args.json:
        print(json.dumps(obj, indent=1, default=str))
    else:
        print(text)


def _field(args):
    return QuadField(args.field) if getattr(args, "field", None) else None


def _twist_value(text, base):
    """A rational d, or for a field base an element written in a."""
    if base is None:
        try:
            return Fraction(text)
        except ValueError:
            raise UsageError(f"not a rational number: {text!r}") from None
    import sympy
    a = sympy.Symbol("a")
    try:
        e = sympy.Poly(sympy.sympify(text.replace("^", "**"), locals={"a": a}), a)
    except (sympy.SympifyError, sympy.PolynomialError):
        raise UsageError(f"not an element of {base}: {text!r}") from None
    # reduce modulo the minimal polynomial of a
    _, b, c = base.minpoly
    e = e.rem(sympy.Poly(a ** 2 + b * a + c, a))
    co = e.all_coeffs()
    y, x = (co if len(co) == 2 else [0] + co)
    return QuadInt(base, Fraction(str(x)), Fraction(str(y)))


def _curve(args):
    base = _field(args)
    try:
        return parse_weierstrass(args.curve, base)
    except (ValueError, SyntaxError, TypeError) as e:
        raise UsageError(f"cannot parse curve: {e}") from None


def _ambiguous(args, e):
    payload = dict(e.payload)
    payload.setdefault("status", "AMBIGUOUS" if isinstance(e, AmbiguousCell) else "UNCOVERED")
    payload["message"] = str(e)
    _emit(args, payload, f"{payload['status']}: {e}")
    return INCONSISTENT


# verbs ---------------------------------------------------------------------

def cmd_label(args):
    order = CMOrder.from_disc(args.disc)
    from .ecmodel import registry_lookup
    base = registry_lookup(order).base if order.class_number() == 2 else None
    twist = _twist_value(args.d, base)
    try:
        lab = predict_label(order, args.ell, twist)
    except UncoveredCell as e:
        return _ambiguous(args, e)
    _emit(args, {"disc": args.disc, "ell": args.ell, "twist": str(twist), "label": str(lab),
                 "group_id": lab.group_id}, str(lab))
    return OK


def cmd_identify(args):
    info = identify(_curve(args))
    lines = [f"disc {info['disc']}  twist {info['twist']}"]
    bad = False
    for ell, lab in info["labels"].items():
        if isinstance(lab, dict):
            bad = True
            lines.append(f"  l = {ell}: {lab.get('status')} {lab.get('candidates', '')}")
        else:
            lines.append(f"  l = {ell}: {lab}")
    lines.append(f"  other l: {info['generic']}")
    _emit(args, info, "\n".join(lines))
    return INCONSISTENT if bad else OK


def cmd_verify(args):
    curve = _curve(args)
    from .classify import _match_registry
    order, _ = _match_registry(curve)
    M = args.ell ** args.level
    cands = admissible_groups(order, args.ell, modulus=M)
    try:
        data = sample_frobenius_data(curve, args.ell, args.level, args.primes)
    except InsufficientData as e:
        raise UsageError(str(e)) from None
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            samples_to_csv(data, fh)
    try:
        res = discriminate(data, cands)
    except DiscriminationError as e:
        _emit(args, {"status": "INCONSISTENT", "message": str(e)}, f"INCONSISTENT: {e}")
        return INCONSISTENT
    out = res.to_json()
    out["labels"] = {gid: str(cm_label(H, order, args.ell)) for gid, H in cands
                     if gid in res.best}
    print(json.dumps(out, indent=1, default=str))
    return OK


def cmd_twistset(args):
    A = twist_set(args.disc, args.ell)
    _emit(args, {"disc": args.disc, "ell": args.ell, "twists": [a.to_json() for a in A]},
          "\n".join(str(a) for a in A))
    return OK


def cmd_group(args):
    order = CMOrder.from_disc(args.disc)
    params = cartan_params(order, args.mod)
    try:
        H = named_subgroup(args.name, params, args.gamma)
    except ValueError as e:
        raise UsageError(str(e)) from None
    N = normalizer_group(params)
    info = {"name": args.name if args.gamma is None else f"{args.name}+{args.gamma}",
            "modulus": args.mod, "order": len(H)}
    if H.elements <= N.elements:
        info["index"] = len(N) // len(H)
        info["level"] = level_of_definition(H, params)
        info["label"] = str(cm_label(H, order, params.ell))
    else:
        info["index"] = None
        info["note"] = "not contained in the normalizer"
    _emit(args, info, "  ".join(f"{k}: {v}" for k, v in info.items()))
    return OK


def cmd_divpoly(args):
    if args.check_identities:
        rep = verify_stated_factorizations()
        ok = all(r["status"] == "PASS" for r in rep)
        text = "\n".join(f"{r['status']}  {r['identity_id']}  ({r['method']})" for r in rep)
        _emit(args, rep, text)
        return OK if ok else INCONSISTENT
    if not args.curve or not args.n:
        raise UsageError("divpoly needs --check-identities or --curve with --n")
    curve = _curve(args)
    if args.bound:
        b = torsion_degree_bounds(curve, args.n, args.bound)
        _emit(args, {"n": args.n, "degree_bound": b}, str(b))
    else:
        P = division_polynomial(curve, args.n)
        _emit(args, {"n": args.n, "P": str(P)}, str(P))
    return OK


def cmd_regen(args):
    discs = set(args.disc) if args.disc else None
    rows = regen_tables(discs, write=args.write,
                        progress=lambda D, l: print(f"# {D} l={l}", file=sys.stderr))
    _emit(args, [r.to_json() for r in rows],
          "\n".join(f"{r.order.disc}\t{r.ell}\t{r.twist}\t{r.label}\t{r.provenance}"
                    for r in rows))
    return INCONSISTENT if any(r.provenance == "AMBIGUOUS" for r in rows) and args.strict else OK


def cmd_images(args):
    imgs = admissible_images(args.disc, args.ell)
    _emit(args, [d.to_json() for d in imgs],
          "\n".join(f"{d.group_id}\tindex {d.index}\t{d.label or '-'}"
                    f"{'' if d.realized else '  (not realized)'}" for d in imgs))
    return OK


def build_parser():
    p = argparse.ArgumentParser(prog="cmik", description="CM l-adic image toolkit")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        s.set_defaults(fn=fn)
        return s

    s = add("label", cmd_label, "label of a twist")
    s.add_argument("--disc", type=int, required=True)
    s.add_argument("--ell", type=int, required=True)
    s.add_argument("--d", default="1", help="twist parameter (rational, or an element in a)")

    for name, fn, h in (("identify", cmd_identify, "labels of a curve at all special primes"),
                        ("verify", cmd_verify, "Frobenius sampling verdict")):
        s = add(name, fn, h)
        s.add_argument("--curve", required=True)
        s.add_argument("--field", type=int)
        if name == "verify":
            s.add_argument("--ell", type=int, required=True)
            s.add_argument("--level", type=int, default=1)
            s.add_argument("--primes", type=int, default=10000)
            s.add_argument("--csv")

    s = add("twistset", cmd_twistset, "candidate twists A_alpha")
    s.add_argument("--disc", type=int, required=True)
    s.add_argument("--ell", type=int, required=True)

    s = add("group", cmd_group, "inspect a named subgroup")
    s.add_argument("--name", required=True)
    s.add_argument("--gamma")
    s.add_argument("--disc", type=int, required=True)
    s.add_argument("--mod", type=int, required=True)

    s = add("images", cmd_images, "admissible images for (disc, l)")
    s.add_argument("--disc", type=int, required=True)
    s.add_argument("--ell", type=int, required=True)

    s = add("divpoly", cmd_divpoly, "division polynomials and identity report")
    s.add_argument("--check-identities", action="store_true")
    s.add_argument("--curve")
    s.add_argument("--field", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--bound", type=int, help="torsion degree bound with this prime budget")

    s = add("regen-tables", cmd_regen, "rerun the sampling method for class number 2")
    s.add_argument("--disc", type=int, action="append")
    s.add_argument("--write", action="store_true")
    s.add_argument("--strict", action="store_true", help="exit 1 if any row is ambiguous")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except UncoveredCell as e:
        return _ambiguous(args, e)
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except (ArithmeticError, RuntimeError) as e:
        print(f"inconsistent: {e}", file=sys.stderr)
        return INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())

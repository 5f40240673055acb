"""Weierstrass models over Q and real quadratic fields, the registry of
chosen CM models, twist families and Hilbert class polynomials."""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy
from sympy.parsing.sympy_parser import (convert_xor, implicit_multiplication_application,
                                        parse_expr, standard_transformations)

from .arith import CMOrder, factorize, powerfree_part, reduced_forms
from .quadfield import QuadField, QuadInt, is_rational_square

__all__ = [
    "CurveModel", "TwistClass", "RegistryRow", "parse_weierstrass", "registry",
    "registry_lookup", "conjugate_model", "j_invariant", "quadratic_twist",
    "normalize_twist_parameter", "hilbert_class_polynomial", "ClassPolynomialError",
    "short_model", "poly_eval",
]

_X, _Y, _A = sympy.symbols("x y a")
_TRANSFORMS = standard_transformations + (implicit_multiplication_application, convert_xor)


def _elt(base, v):
    if base is None:
        return v if isinstance(v, Fraction) else Fraction(v)
    return v if isinstance(v, QuadInt) else QuadInt(base, v)


@dataclass(frozen=True, eq=False)
class CurveModel:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over Q (base None) or a
    QuadField."""

    base: object
    a1: object
    a2: object
    a3: object
    a4: object
    a6: object
    provenance: str = field(default="user", compare=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, _elt(self.base, getattr(self, name)))
        if self.discriminant() == 0:
            raise ValueError("singular Weierstrass model")

    @classmethod
    def short(cls, A, B, base=None, provenance="user"):
        return cls(base, 0, 0, 0, A, B, provenance)

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def b_invariants(self):
        a1, a2, a3, a4, a6 = self.ainvs
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants()
        return b2 * b2 - 24 * b4, -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6

    def discriminant(self):
        b2, b4, b6, b8 = self.b_invariants()
        return -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    def is_short(self):
        return not (self.a1 or self.a2 or self.a3)

    def short_coefficients(self):
        """(A, B) with this curve isomorphic to y^2 = x^3 + A x + B."""
        if self.is_short():
            return self.a4, self.a6
        c4, c6 = self.c_invariants()
        return -c4 / 48, -c6 / 864

    def __eq__(self, other):
        return (isinstance(other, CurveModel) and self.base == other.base
                and self.ainvs == other.ainvs)

    def __hash__(self):
        return hash((self.base, self.ainvs))

    def __str__(self):
        def term(c, mon):
            if not c:
                return ""
            s = str(c)
            if mon:
                s = mon if s == "1" else ("-" + mon if s == "-1" else f"({s})*{mon}")
            return s
        lhs = " + ".join(t for t in ("y^2", term(self.a1, "x*y"), term(self.a3, "y")) if t)
        rhs = " + ".join(t for t in ("x^3", term(self.a2, "x^2"), term(self.a4, "x"),
                                     term(self.a6, "")) if t)
        return f"{lhs} = {rhs}"


def j_invariant(curve):
    c4, _ = curve.c_invariants()
    return c4 * c4 * c4 / curve.discriminant()


def short_model(curve):
    A, B = curve.short_coefficients()
    return CurveModel.short(A, B, curve.base, curve.provenance)


def conjugate_model(curve):
    if curve.base is None:
        raise ValueError("model is defined over Q")
    return CurveModel(curve.base, *(c.conj() for c in curve.ainvs),
                      provenance=f"conjugate of {curve.provenance}")


def quadratic_twist(curve, alpha):
    """The twist alpha y^2 = x^3 + A x + B, returned as y^2 = x^3 + alpha^2 A x + alpha^3 B."""
    alpha = _elt(curve.base, alpha)
    if not alpha:
        raise ValueError("twist by 0")
    A, B = curve.short_coefficients()
    return CurveModel.short(alpha * alpha * A, alpha * alpha * alpha * B, curve.base,
                            provenance=f"twist of {curve.provenance} by {alpha}")


def _to_field(expr, base):
    expr = sympy.expand(expr)
    if base is None:
        if expr.free_symbols:
            raise ValueError(f"coefficient {expr} is not rational")
        return Fraction(str(sympy.Rational(expr)))
    _, b, c = base.minpoly
    rem = sympy.Poly(expr, _A).rem(sympy.Poly(_A**2 + b * _A + c, _A))
    coeffs = rem.all_coeffs()[::-1] + [0, 0]
    return QuadInt(base, Fraction(str(sympy.Rational(coeffs[0]))),
                   Fraction(str(sympy.Rational(coeffs[1]))))


def parse_weierstrass(text, base=None):
    """Parse a long or short Weierstrass equation in x, y (and a, the ring
    generator, when base is a QuadField)."""
    lhs, rhs = text.replace("**", "^").split("=")
    loc = {"x": _X, "y": _Y, "a": _A}
    expr = (parse_expr(lhs, local_dict=loc, transformations=_TRANSFORMS)
            - parse_expr(rhs, local_dict=loc, transformations=_TRANSFORMS))
    poly = sympy.Poly(sympy.expand(expr), _X, _Y)
    terms = dict(poly.terms())
    want = {(0, 2): 1, (3, 0): -1}
    for mon, c in want.items():
        if sympy.simplify(terms.pop(mon, 0) - c) != 0:
            raise ValueError(f"not a Weierstrass equation: {text}")
    get = lambda mon, sign: _to_field(sign * terms.pop(mon, 0), base)
    a1, a3 = get((1, 1), 1), get((0, 1), 1)
    a2, a4, a6 = get((2, 0), -1), get((1, 0), -1), get((0, 0), -1)
    if any(sympy.simplify(c) != 0 for c in terms.values()):
        raise ValueError(f"unexpected monomials in {text}")
    return CurveModel(base, a1, a2, a3, a4, a6, provenance="parsed")


# registry ------------------------------------------------------------------

@dataclass(frozen=True)
class RegistryRow:
    order: CMOrder
    field_m: object  # None for Q
    model: CurveModel
    j: object
    equation: str
    lmfdb_ref: str

    @property
    def base(self):
        return self.model.base


def _decode_pair(base, pair):
    if base is None:
        return Fraction(pair[0])
    return QuadInt.from_json(base, pair)


def _encode(v):
    if isinstance(v, QuadInt):
        return v.to_json()
    return [str(v), "0"]


@lru_cache(maxsize=None)
def _registry(root):
    from .data import load
    doc = load("registry.json")
    rows = {}
    for rec in doc["rows"]:
        base = None if rec["field_m"] == "Q" else QuadField(rec["field_m"])
        coeffs = [_decode_pair(base, rec[k]) for k in ("a1", "a2", "a3", "a4", "a6")]
        order = CMOrder(rec["delta_K"], rec["f"])
        model = CurveModel(base, *coeffs, provenance=f"registry {order.disc}")
        j = _decode_pair(base, rec["j"])
        rows[order.disc] = RegistryRow(order, None if base is None else base.m, model, j,
                                       rec["equation"], rec["lmfdb_ref"])
    return rows


def registry():
    """All registry rows keyed by discriminant Delta_K f^2."""
    from .data import data_dir
    return _registry(str(data_dir()))


def registry_lookup(order):
    if isinstance(order, int):
        order = CMOrder.from_disc(order)
    row = registry().get(order.disc)
    if row is None:
        raise KeyError(f"no registry model for discriminant {order.disc} (class number 1 or 2 only)")
    return row


def registry_record(order, base, model, equation, lmfdb_ref=""):
    """A JSON record for the registry file."""
    rec = {"delta_K": order.disc_K, "f": order.f,
           "field_m": "Q" if base is None else base.m,
           "minpoly": "x" if base is None else base.minpoly_str()}
    for name, v in zip(("a1", "a2", "a3", "a4", "a6"), model.ainvs):
        rec[name] = _encode(v)
    rec["j"] = _encode(j_invariant(model))
    rec["equation"] = equation
    rec["lmfdb_ref"] = lmfdb_ref
    return rec


# twist classes -------------------------------------------------------------

@dataclass(frozen=True)
class TwistClass:
    """Canonical twist parameter of a CM curve over Q relative to its family.

    family is "j1728" (y^2 = x^3 + d x, d fourth-power-free), "j0"
    (y^2 = x^3 + 16 d, d sixth-power-free), "disc8"
    (y^2 = x^3 - 4320 d^2 x + 96768 d^3), "disc16" (y^2 = x^3 - 11 d^2 x + 14 d^3)
    or "quadratic" (the twist of the registry model by square-free d).
    """

    family: str
    parameter: int
    tag: str
    disc: int = None

    def __str__(self):
        return f"{self.family}:{self.tag}"


def _rational_core(q, k):
    """Integer d, k-th-power-free, with q / d a k-th power in Q (sign kept)."""
    q = Fraction(q)
    n = q.numerator * q.denominator ** (k - 1)
    return powerfree_part(n, k)[0]


def _j1728_tag(d):
    if d in (1, -1, 2, -2, 4, -4, 8, -8):
        return str(d)
    sign = "-" if d < 0 else ""
    if is_rational_square(abs(d)):
        return sign + "t^2"
    if abs(d) % 2 == 0 and is_rational_square(abs(d) // 2):
        return sign + "2t^2"
    return "t"


def _is_cube(n):
    return powerfree_part(n, 3)[0] in (1, -1)


def j0_tag(d):
    """Box tag of y^2 = x^3 + 16 d (d sixth-power-free) for the prime 3."""
    if d in (1, -27, 81, -3, 9, -243):
        return str(d)
    if is_rational_square(d):
        return "t^2"
    if d % 3 == 0 and d < 0 and is_rational_square(-d // 3):
        return "-3t^2"
    if _is_cube(d):
        return "t^3"
    if d % 3 == 0 and _is_cube(d // 3):
        return "3t^3"
    if d % 9 == 0 and _is_cube(d // 9):
        return "9t^3"
    return "generic"


def _pm12_tag(d):
    return str(d) if d in (1, -1, 2, -2) else "t"


_FAMILY_J = {Fraction(1728): "j1728", Fraction(0): "j0", Fraction(8000): "disc8",
             Fraction(287496): "disc16"}


def normalize_twist_parameter(curve):
    """The twist class of a CM curve over Q."""
    if curve.base is not None:
        raise ValueError("twist classes are computed for curves over Q")
    j = j_invariant(curve)
    A, B = curve.short_coefficients()
    fam = _FAMILY_J.get(j)
    if fam == "j1728":
        d = _rational_core(A, 4)
        return TwistClass(fam, d, _j1728_tag(d), -4)
    if fam == "j0":
        d = _rational_core(B / 16, 6)
        return TwistClass(fam, d, j0_tag(d), -3)
    if fam == "disc8":
        d = _rational_core((B / 96768) / (A / -4320), 2)
        return TwistClass(fam, d, _pm12_tag(d), -8)
    if fam == "disc16":
        d = _rational_core((B / 14) / (A / -11), 2)
        return TwistClass(fam, d, _pm12_tag(d), -16)
    for disc, row in registry().items():
        if row.base is None and row.j == j:
            A0, B0 = row.model.short_coefficients()
            d = _rational_core((B / B0) / (A / A0), 2)
            return TwistClass("quadratic", d, "model" if d == 1 else str(d), disc)
    raise ValueError(f"j = {j} is not the j-invariant of a registry order over Q")


# Hilbert class polynomials -------------------------------------------------

class ClassPolynomialError(ArithmeticError):
    """Coefficients did not round cleanly to integers."""


def _j_of_tau(tau, terms):
    q = mpmath.exp(2j * mpmath.pi * tau)
    e4 = mpmath.mpf(1)
    eta = mpmath.mpf(1)  # prod (1 - q^n)^24
    qn = mpmath.mpc(1)
    for n in range(1, terms + 1):
        qn *= q
        sigma3 = sum(d**3 for d in range(1, n + 1) if n % d == 0)
        e4 += 240 * sigma3 * qn
        eta *= (1 - qn) ** 24
    return e4**3 / (q * eta)


def hilbert_class_polynomial(disc, bits=256, tol=1e-10):
    """Integer coefficients, constant term first, of the monic class polynomial."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"{disc} is not a negative discriminant")
    forms = reduced_forms(disc)
    with mpmath.workprec(bits):
        sq = mpmath.sqrt(mpmath.mpf(-disc))
        roots = []
        for a, b, _c in forms:
            tau = mpmath.mpc(-b, sq) / (2 * a)
            # |q| = exp(-pi sqrt|D| / a); keep terms until q^n is below 2^-bits
            decay = float(mpmath.pi * sq / a)
            terms = int(bits * 0.7 / decay) + 10
            roots.append(_j_of_tau(tau, terms))
        coeffs = [mpmath.mpc(1)]
        for r in roots:
            coeffs = [mpmath.mpc(0)] + coeffs
            for i in range(len(coeffs) - 1):
                coeffs[i] -= r * coeffs[i + 1]
        out, residual = [], 0.0
        for c in coeffs:
            n = int(mpmath.nint(c.real))
            residual = max(residual, float(abs(c - n)))
            out.append(n)
    if residual >= tol:
        raise ClassPolynomialError(f"rounding residual {residual:.3g} for disc {disc}")
    hilbert_class_polynomial.last_residual = residual
    return out


hilbert_class_polynomial.last_residual = None


def poly_eval(coeffs, x):
    """Horner evaluation; coeffs constant term first."""
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc

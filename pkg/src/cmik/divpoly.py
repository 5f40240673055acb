"""Exact division polynomials, checks of the stated factorization identities
for the j = 8000, 287496 and 0 families, and division-field degree bounds.

Convention: ``division_polynomial(E, N)`` returns psi_N for odd N and
psi_N / y for even N, on the short model y^2 = x^3 + A x + B.  With this
convention psi_4/(2 psi_2) is ``P_4 / 4`` and psi_8/(2 psi_4) is ``P_8 / (2 P_4)``.
"""

from fractions import Fraction
from math import lcm

import sympy
from sympy import ZZ
from sympy.polys import galoistools as gf

from .arith import is_prime
from .ecmodel import CurveModel
from .quadfield import QuadField, QuadInt

__all__ = ["RatPoly", "division_polynomial", "psi_quotient", "verify_stated_factorizations",
           "torsion_degree_bounds", "irreducible_mod_p_witness", "torsion_splitting_degree",
           "PrimeBudgetError"]


class RatPoly:
    """Dense polynomial in x with exact coefficients, constant term first."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = list(coeffs)
        while c and not c[-1]:
            c.pop()
        self.c = c

    @classmethod
    def x(cls, one=1):
        return cls([0 * one, one])

    @classmethod
    def const(cls, v):
        return cls([v])

    @property
    def degree(self):
        return len(self.c) - 1

    def lc(self):
        return self.c[-1]

    def __bool__(self):
        return bool(self.c)

    def __add__(self, other):
        if not isinstance(other, RatPoly):
            other = RatPoly([other])
        n = max(len(self.c), len(other.c))
        a = self.c + [0] * (n - len(self.c))
        b = other.c + [0] * (n - len(other.c))
        return RatPoly([u + v for u, v in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return RatPoly([-u for u in self.c])

    def __sub__(self, other):
        return self + (-other if isinstance(other, RatPoly) else RatPoly([-other]))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RatPoly):
            return RatPoly([u * other for u in self.c])
        if not self.c or not other.c:
            return RatPoly([])
        out = [0] * (len(self.c) + len(other.c) - 1)
        for i, u in enumerate(self.c):
            if not u:
                continue
            for j, v in enumerate(other.c):
                out[i + j] = out[i + j] + u * v
        return RatPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e):
        out = RatPoly([1])
        for _ in range(e):
            out = out * self
        return out

    def divmod(self, other):
        if not other:
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.c)
        q = [0] * max(len(rem) - len(other.c) + 1, 1)
        lead = other.lc()
        while len(rem) >= len(other.c) and any(rem):
            shift = len(rem) - len(other.c)
            coef = rem[-1] / lead
            q[shift] = coef
            for i, v in enumerate(other.c):
                rem[shift + i] = rem[shift + i] - coef * v
            rem.pop()
            while rem and not rem[-1]:
                rem.pop()
        return RatPoly(q), RatPoly(rem)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def exact_div(self, other):
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError("division is not exact")
        return q

    def __eq__(self, other):
        if not isinstance(other, RatPoly):
            other = RatPoly([other])
        return len(self.c) == len(other.c) and all(u == v for u, v in zip(self.c, other.c))

    def __hash__(self):
        return hash(tuple(self.c))

    def __call__(self, x):
        acc = 0 * x
        for u in reversed(self.c):
            acc = acc * x + u
        return acc

    def monic(self):
        return self * (1 / self.lc()) if not isinstance(self.lc(), QuadInt) else self * self.lc().inverse()

    def is_rational(self):
        return all(not isinstance(u, QuadInt) or u.is_rational() for u in self.c)

    def rational_coeffs(self):
        return [Fraction(u.x) if isinstance(u, QuadInt) else Fraction(u) for u in self.c]

    def integer_coeffs(self):
        """Coefficients scaled to coprime integers (constant term first)."""
        q = self.rational_coeffs()
        den = lcm(*(v.denominator for v in q)) if q else 1
        ints = [int(v * den) for v in q]
        g = 0
        for v in ints:
            g = sympy.igcd(g, v)
        return [v // g for v in ints] if g else ints

    def to_sympy(self, var):
        return sympy.Poly([sympy.Rational(v.numerator, v.denominator)
                           for v in reversed(self.rational_coeffs())], var)

    @classmethod
    def from_sympy(cls, poly):
        return cls([Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1]))
                    for v in reversed(poly.all_coeffs())])

    def __repr__(self):
        return f"RatPoly(deg {self.degree})"

    def __str__(self):
        terms = []
        for i in range(len(self.c) - 1, -1, -1):
            u = self.c[i]
            if not u:
                continue
            mon = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            s = str(u)
            if mon:
                s = mon if s == "1" else ("-" + mon if s == "-1" else f"({s})*{mon}")
            terms.append(s)
        return " + ".join(terms) or "0"


# division polynomials -------------------------------------------------------

def _psi_table(A, B, N):
    """P_n for n <= N with psi_n = P_n (n odd) and psi_n = y P_n (n even)."""
    one = A * 0 + 1
    x = RatPoly.x(one)
    f = x ** 3 + x * A + B
    P = {0: RatPoly([]), 1: RatPoly([one]), 2: RatPoly([2 * one])}
    P[3] = 3 * x ** 4 + 6 * A * x ** 2 + 12 * B * x - A * A
    P[4] = 4 * (x ** 6 + 5 * A * x ** 4 + 20 * B * x ** 3 - 5 * A * A * x ** 2
                - 4 * A * B * x - 8 * B * B - A ** 3)
    f2 = f * f

    def psi(n):
        if n in P:
            return P[n]
        m = n // 2
        if n % 2:
            # psi_{2m+1} = psi_{m+2} psi_m^3 - psi_{m-1} psi_{m+1}^3, with y^4 = f^2
            a, b = psi(m + 2) * psi(m) ** 3, psi(m - 1) * psi(m + 1) ** 3
            if m % 2 == 0:
                a = a * f2
            else:
                b = b * f2
            P[n] = a - b
        else:
            # 2y psi_{2m} = psi_m (psi_{m+2} psi_{m-1}^2 - psi_{m-2} psi_{m+1}^2); the
            # powers of y cancel to the same formula for either parity of m
            a, b = psi(m + 2) * psi(m - 1) ** 2, psi(m - 2) * psi(m + 1) ** 2
            P[n] = psi(m) * (a - b) * Fraction(1, 2)
        return P[n]

    for n in range(5, N + 1):
        psi(n)
    return P


def division_polynomial(curve, N):
    """psi_N (odd N) or psi_N / y (even N) for the short model of curve."""
    if not 2 <= N <= 12:
        raise ValueError("N must lie in 2..12")
    if curve.discriminant() == 0:
        raise ValueError("singular curve")
    A, B = curve.short_coefficients()
    return _psi_table(A, B, N)[N]


def psi_quotient(curve, N, M):
    """psi_N / (M' psi_M), normalized monic, for M | N (M' = N / M)."""
    if N % M:
        raise ValueError("M must divide N")
    PN, PM = division_polynomial(curve, N), division_polynomial(curve, M)
    if M == 1:
        q = PN
    else:
        q = PN.exact_div(PM)
    return q * (1 / q.lc()) if not isinstance(q.lc(), QuadInt) else q * q.lc().inverse()


# reduction mod p -------------------------------------------------------------

class PrimeBudgetError(ValueError):
    """No usable prime below the budget."""


def _mod_p(v, p, root=None):
    if isinstance(v, QuadInt):
        return v.reduce_mod(p, root)
    v = Fraction(v)
    if v.denominator % p == 0:
        raise ZeroDivisionError(f"denominator divisible by {p}")
    return v.numerator * pow(v.denominator, -1, p) % p


def _gf(poly, p, root=None):
    """A RatPoly as a galoistools list (leading coefficient first) over F_p."""
    return gf.gf_strip([_mod_p(v, p, root) for v in reversed(poly.c)])


def _gf_monic(g, p):
    return gf.gf_monic(g, p, ZZ)[1]


def _good_prime(curve, N, p):
    if p <= 3 or N % p == 0:
        return False
    A, B = curve.short_coefficients()
    disc = 4 * A ** 3 + 27 * B ** 2
    for v in (A, B, disc):
        v = Fraction(v)
        if v.denominator % p == 0:
            return False
    return Fraction(disc).numerator % p != 0


def torsion_splitting_degree(curve, N, p, root=None, kmax=256):
    """Smallest k with E[N] contained in E(F_{p^k}), i.e. the order of
    Frobenius at p in Gal(Q(E[N])/Q).

    The x-coordinates of E[N] - {O} are the roots of P_N (times the cubic for
    even N); all of them lie in F_q iff X^q = X modulo their radical, and the
    matching y-coordinates lie in F_q iff f(x)^((q-1)/2) = 1 at the non
    two-torsion roots.
    """
    A, B = curve.short_coefficients()
    f = gf.gf_strip([1, 0, _mod_p(A, p, root), _mod_p(B, p, root)])
    if N == 2:
        h, h1 = f, [1]
    else:
        P = gf.gf_sqf_part(_gf_monic(_gf(division_polynomial(curve, N), p, root), p), p, ZZ)
        P = _gf_monic(P, p)
        h1 = gf.gf_quo(P, gf.gf_gcd(P, f, p, ZZ), p, ZZ)
        h = gf.gf_sqf_part(gf.gf_mul(P, f, p, ZZ), p, ZZ) if N % 2 == 0 else P
    X = gf.gf_rem([1, 0], h, p, ZZ)
    cur = X
    f1 = gf.gf_rem(f, h1, p, ZZ) if len(h1) > 1 else []
    for k in range(1, kmax + 1):
        cur = gf.gf_pow_mod(cur, p, h, p, ZZ)
        if cur != X:
            continue
        if len(h1) <= 1 or gf.gf_pow_mod(f1, (p ** k - 1) // 2, h1, p, ZZ) == [1]:
            return k
    raise ArithmeticError(f"no splitting degree <= {kmax} at p = {p}")


def _cubic_splitting_degree(curve):
    A, B = curve.short_coefficients()
    x = sympy.Symbol("x")
    cubic = sympy.Poly(x ** 3 + sympy.Rational(A.numerator, A.denominator) * x
                       + sympy.Rational(B.numerator, B.denominator), x)
    degs = sorted(g.degree() for g, _ in cubic.factor_list()[1])
    if degs == [1, 1, 1]:
        return 1
    if 2 in degs:
        return 2
    disc = Fraction(-4 * A ** 3 - 27 * B ** 2)
    square = disc >= 0 and all(sympy.sqrt(v).is_integer for v in (disc.numerator, disc.denominator))
    return 3 if square else 6


def frobenius_orders(curve, N, primes):
    """{p: order of Frobenius at p on E[N]} for the good primes in primes."""
    return {p: torsion_splitting_degree(curve, N, p) for p in primes if _good_prime(curve, N, p)}


def torsion_degree_bounds(curve, N, prime_budget=1000, max_primes=48):
    """A proven lower bound (in fact a divisor) of [Q(E[N]):Q].

    Each Frobenius order divides the degree, as does phi(N); the bound is the
    lcm over the first ``max_primes`` good primes below ``prime_budget``.
    N = 2 is answered exactly from the cubic.
    """
    if curve.base is not None:
        raise ValueError("curve must be defined over Q")
    if not 2 <= N <= 9:
        raise ValueError("N must lie in 2..9")
    if N == 2:
        return _cubic_splitting_degree(curve)
    primes = [p for p in sympy.primerange(5, prime_budget) if _good_prime(curve, N, p)]
    if not primes:
        raise PrimeBudgetError(f"no good prime below {prime_budget}")
    orders = frobenius_orders(curve, N, primes[:max_primes])
    return lcm(int(sympy.totient(N)), *orders.values())


# stated identities -----------------------------------------------------------

def irreducible_mod_p_witness(poly, bound=2000):
    """A prime p (not dividing the leading coefficient or discriminant) with
    the integer-cleared poly irreducible mod p, or None."""
    ints = poly.integer_coeffs()
    x = sympy.Symbol("x")
    disc = int(sympy.discriminant(sympy.Poly(list(reversed(ints)), x)))
    for p in sympy.primerange(3, bound):
        if ints[-1] % p == 0 or disc % p == 0:
            continue
        g = gf.gf_from_int_poly(list(reversed(ints)), p)
        if gf.gf_irreducible_p(g, p, ZZ):
            return p
    return None


def _factor_degrees(poly):
    x = sympy.Symbol("x")
    return sorted(g.degree() for g, e in poly.to_sympy(x).factor_list()[1] for _ in range(e))


def _factor_degree_lcm(ints_desc, p):
    # distinct-degree factorization is enough: only the degrees matter
    g = _gf_monic(gf.gf_from_int_poly(ints_desc, p), p)
    return lcm(*(k for _, k in gf.gf_ddf_zassenhaus(g, p, ZZ)))


def _poly_from_desc(coeffs, one=1):
    return RatPoly([Fraction(c) * one for c in reversed(coeffs)])


def _entry(identity_id, ok, details, method):
    return {"identity_id": identity_id, "status": "PASS" if ok else "FAIL",
            "details": details, "method": method}


def _guard(identity_id, method, fn):
    try:
        ok, details = fn()
    except Exception as exc:  # failures are report entries, never exceptions
        return _entry(identity_id, False, f"{type(exc).__name__}: {exc}", method)
    return _entry(identity_id, ok, details, method)


# Printed polynomials, leading coefficient first.
F4_J8000 = [1, 0, 0, 0, 6, 0, 0, 0, 1]
F8_J8000 = [1, 16, 128, 672, 2544, 7200, 15352, 24272, 26904, 17312, -304, -11984, -9672,
            -2720, -3592, -7552, -2798, 6224, 6368, -672, -2224, 3360, 4952, -1072, -4600,
            -1120, 1776, 752, -264, -96, 24, 0, 1]
G4_J8000 = [1, -96, -288]
H4_J8000 = [1, 96, -12096, 801792, -19823616]
F4_J287496 = [1, 0, -4, 0, 8, 0, -4, 0, 1]
F8_J287496 = [1, 16, 120, 560, 1848, 4784, 11000, 25344, 59844, 133856, 260768, 419392, 534920,
              513536, 332032, 93856, -43548, -22112, 61056, 77728, 20768, -18304, 320, 21440,
              8240, -8256, -1888, 3584, 800, -1216, 320, 0, 8]


def _field_pattern_check(curve_for, twists, N, f_desc, extra_desc, prime_bound):
    """Compare the Frobenius order on E^d[N] with the lcm of the factor degrees
    of f_N and of the extra radical polynomial mod p, for every prime p not
    dividing the relevant discriminants."""
    x = sympy.Symbol("x")
    disc_f = int(sympy.discriminant(sympy.Poly(f_desc, x)))
    bad = []
    tested = 0
    for d in twists:
        E = curve_for(d)
        extra = extra_desc(d)
        disc_e = int(sympy.discriminant(sympy.Poly(extra, x)))
        for p in sympy.primerange(5, prime_bound):
            if disc_f % p == 0 or disc_e % p == 0 or not _good_prime(E, N, p):
                continue
            k = torsion_splitting_degree(E, N, p)
            want = lcm(_factor_degree_lcm(f_desc, p), _factor_degree_lcm(extra, p))
            tested += 1
            if k != want:
                bad.append((d, p, k, want))
    if bad:
        d, p, k, want = bad[0]
        return False, (f"{len(bad)} of {tested} (d, p) pairs disagree; first d={d}, p={p}: "
                       f"Frobenius order {k}, predicted {want}")
    return True, f"Frobenius orders match the field description at {tested} (d, p) pairs"


def _irreducible_check(poly):
    p = irreducible_mod_p_witness(poly)
    if p is not None:
        return True, f"irreducible mod {p}"
    degs = _factor_degrees(poly)
    return degs == [poly.degree], f"factor degrees over Q: {degs}"


def _j8000_curve(d):
    return CurveModel.short(-4320 * d * d, 96768 * d ** 3)


def _j287496_curve(d):
    return CurveModel.short(-11 * d * d, 14 * d ** 3)


def _j0_curve(d):
    return CurveModel.short(0, 16 * d)


def _f9_g9():
    """The monic factors of F_9 in z = x^3 / (64 d) at d = 1."""
    F9 = psi_quotient(_j0_curve(1), 9, 3)
    z = sympy.Symbol("z")
    G = sum(sympy.Rational(c.numerator, c.denominator) * 64 ** (i // 3) * z ** (i // 3)
            for i, c in enumerate(F9.rational_coeffs()) if c)
    facs = sorted((g for g, _ in sympy.Poly(G, z).factor_list()[1]), key=lambda g: g.degree())
    return [RatPoly.from_sympy(g.monic()) for g in facs]


def verify_stated_factorizations(prime_bound=600):
    """Check every printed factorization identity; returns a list of report
    entries {identity_id, status, details, method}."""
    Q2 = QuadField(2)
    s = Q2.a
    xq = RatPoly.x(Q2(1))
    xr = RatPoly.x(Fraction(1))
    report = []

    # y^2 = x^3 - 4320 x + 96768 ---------------------------------------------
    E8 = _j8000_curve(1)

    def cubic_q2(E):
        A, B = E.short_coefficients()
        return xq ** 3 + xq * Q2(A) + Q2(B)

    report.append(_guard("j8000.two_division", "exact_product_over_Q(sqrt2)", lambda: (
        cubic_q2(E8) == (xq - 48) * (xq + 24 - 36 * s) * (xq + 24 + 36 * s),
        "x^3-4320x+96768 = (x-48)(x+24-36*sqrt2)(x+24+36*sqrt2)")))

    def j8000_psi4():
        q = psi_quotient(E8, 4, 2)
        g4, h4 = _poly_from_desc(G4_J8000), _poly_from_desc(H4_J8000)
        if q != g4 * h4:
            return False, "psi_4/(2 psi_2) differs from g_4 h_4"
        ok_g, why_g = _irreducible_check(g4)
        ok_h, why_h = _irreducible_check(h4)
        return ok_g and ok_h, f"product exact; g_4 {why_g}; h_4 {why_h}"
    report.append(_guard("j8000.psi4_quotient", "exact_division", j8000_psi4))

    report.append(_guard("j8000.g4_roots", "exact_product_over_Q(sqrt2)", lambda: (
        _poly_from_desc(G4_J8000, Q2(1)) == (xq - 48 - 36 * s) * (xq - 48 + 36 * s),
        "g_4 = (x-48-36*sqrt2)(x-48+36*sqrt2)")))

    def j8000_psi8():
        q = psi_quotient(E8, 8, 4)
        r = q % psi_quotient(E8, 4, 2)
        degs = _factor_degrees(q)
        return degs == [8, 16] and q.degree == 24, f"degree {q.degree}, irreducible factor degrees {degs}"
    report.append(_guard("j8000.psi8_quotient", "sympy_factor", j8000_psi8))

    report.append(_guard("j8000.f4_field", "frobenius_pattern", lambda: _field_pattern_check(
        _j8000_curve, (1, -1, 2, 3), 4, F4_J8000, lambda d: [1, 0, 0, 0, -2 * d * d], prime_bound)))
    report.append(_guard("j8000.f8_field", "frobenius_pattern", lambda: _field_pattern_check(
        _j8000_curve, (1, -1), 8, F8_J8000, lambda d: [1, 0, -d], prime_bound)))

    # y^2 = x^3 - 11 x + 14 --------------------------------------------------
    E16 = _j287496_curve(1)
    report.append(_guard("j287496.two_division", "exact_product_over_Q(sqrt2)", lambda: (
        cubic_q2(E16) == (xq - 2) * (xq + 1 - 2 * s) * (xq + 1 + 2 * s),
        "x^3-11x+14 = (x-2)(x+1-2*sqrt2)(x+1+2*sqrt2)")))

    def j287496_psi4():
        q = psi_quotient(E16, 4, 2)
        g4, r = q.divmod((xr - 1) * (xr - 3))
        if r:
            return False, f"(x-1)(x-3) does not divide psi_4/(2 psi_2); remainder {r}"
        ok, why = _irreducible_check(g4)
        return ok and g4.degree == 4, f"remainder 0; g_4 = {g4} of degree {g4.degree}, {why}"
    report.append(_guard("j287496.psi4_quotient", "exact_division", j287496_psi4))

    def j287496_psi8():
        q = psi_quotient(E16, 8, 4)
        degs = _factor_degrees(q)
        return degs == [4, 4, 16], f"degree {q.degree}, irreducible factor degrees {degs}"
    report.append(_guard("j287496.psi8_quotient", "sympy_factor", j287496_psi8))

    report.append(_guard("j287496.f4_field", "frobenius_pattern", lambda: _field_pattern_check(
        _j287496_curve, (1, -1, 2, 3), 4, F4_J287496, lambda d: [1, 0, -d], prime_bound)))
    report.append(_guard("j287496.f8_field", "frobenius_pattern", lambda: _field_pattern_check(
        _j287496_curve, (1, -1), 8, F8_J287496, lambda d: [1, 0, -d], prime_bound)))

    # y^2 = x^3 + 16 d ---------------------------------------------------------
    def psi3():
        for d in (1, -1, 2, 3, -27):
            if division_polynomial(_j0_curve(d), 3) != 3 * xr * (xr ** 3 + 64 * d):
                return False, f"fails at d = {d}"
        return True, "psi_3 = 3x(x^3+64d) at 5 values of d (coefficients have degree <= 2 in d)"
    report.append(_guard("j0.psi3", "exact_comparison", psi3))

    def f9_factorization():
        f9, g9 = _f9_g9()
        if (f9.degree, g9.degree) != (3, 9):
            return False, f"factor degrees {f9.degree}, {g9.degree}"
        prod = f9 * g9
        for d in range(-6, 8):
            if d == 0:
                continue
            F9 = psi_quotient(_j0_curve(d), 9, 3)
            if F9.degree != 36:
                return False, f"F_9 has degree {F9.degree} at d = {d}"
            coeffs = F9.rational_coeffs()
            if any(c for i, c in enumerate(coeffs) if i % 3):
                return False, f"F_9 is not a polynomial in x^3 at d = {d}"
            Gz = RatPoly([coeffs[3 * k] * Fraction(64 * d) ** k for k in range(13)])
            if Gz != prod * (Fraction(2) ** 72 * Fraction(d) ** 12):
                return False, f"F_9(z) != 2^72 d^12 f_9 g_9 at d = {d}"
        ok_f, why_f = _irreducible_check(f9)
        ok_g, why_g = _irreducible_check(g9)
        return ok_f and ok_g, (f"degree 36; F_9(z) = 2^72 d^12 f_9(z) g_9(z) at 13 values of d; "
                               f"f_9 = {f9} {why_f}; g_9 {why_g}")
    report.append(_guard("j0.F9_factorization", "exact_comparison", f9_factorization))

    def f9_field():
        f9, _ = _f9_g9()
        ints = list(reversed(f9.integer_coeffs()))
        disc = int(sympy.discriminant(sympy.Poly(ints, sympy.Symbol("x"))))
        bad = []
        tested = 0
        for p in sympy.primerange(5, 4000):
            if disc % p == 0 or ints[0] % p == 0:
                continue
            k = next(k for k in (1, 3) if pow(p, k, 9) in (1, 8))
            tested += 1
            if _factor_degree_lcm(ints, p) != k:
                bad.append(p)
        square = disc > 0 and sympy.sqrt(disc).is_integer
        return (not bad and square,
                f"discriminant {sympy.factorint(disc)} {'is' if square else 'is not'} a square; "
                f"splitting pattern matches Q(zeta_9)^+ at {tested - len(bad)} of {tested} primes")
    report.append(_guard("j0.f9_splitting_field", "frobenius_pattern", f9_field))

    report.append(_guard("trivial.psi_self", "exact_comparison", lambda: (
        division_polynomial(E8, 5) == division_polynomial(E8, 5), "psi_5 = psi_5")))
    return report

"""Frobenius sampling and the necessary-condition tests built on it.

A curve with l-adic image G (mod l^n) has, at every good prime p != l,
(a_p mod l^n, p mod l^n) equal to (tr g, det g) for some g in G.  Candidates
whose class sets miss a sampled pair are ruled out; candidates with the same
class set are reported together, and for odd l dividing the discriminant the
character on a rational l-isogeny kernel separates them further.
"""

import csv
from fractions import Fraction
import io
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt

import numpy as np
import sympy
from sympy import ZZ
from sympy.polys import galoistools as gf

from .arith import legendre, sqrt_mod
from .divpoly import RatPoly, _gf, _mod_p, division_polynomial
from .ecmodel import hilbert_class_polynomial, poly_eval
from .modgroup import Subgroup, _cartan_elements, cartan_params, mat_reduce
from .quadfield import QuadInt

__all__ = ["FrobSample", "BadReduction", "InsufficientData", "DiscriminationError",
           "KernelPolynomialError", "trace_of_frobenius", "sample_frobenius_data",
           "class_set", "class_masses", "Verdict", "consistency_check", "Discrimination",
           "discriminate", "kernel_polynomials", "isogeny_character_values",
           "stable_line_characters", "isogeny_consistent", "samples_to_csv", "cm_line",
           "cm_kernel_polynomial", "velu_codomain_j", "local_isogeny_character_values",
           "COVERAGE_MASS", "MIN_SUPPORT_SAMPLES"]

COVERAGE_MASS = 0.05
MIN_SUPPORT_SAMPLES = 300
SMALL_PRIME_LIMIT = 10**4


class BadReduction(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class DiscriminationError(RuntimeError):
    """Every candidate was ruled out: the data or the candidate list is wrong."""


class KernelPolynomialError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FrobSample:
    p: int
    trace: int
    modulus: int
    root: int = None  # image of the field generator for curves over Q(sqrt m)

    @property
    def tr(self):
        return self.trace % self.modulus

    @property
    def det(self):
        return self.p % self.modulus

    def pair(self):
        return self.tr, self.det


# point counting ---------------------------------------------------------------

def _reduced_short(curve, p, root=None):
    if p < 5:
        raise BadReduction("primes below 5 are skipped")
    if curve.base is not None and root is None:
        roots = curve.base.roots_mod(p)
        if not roots:
            raise BadReduction(f"{p} is inert in {curve.base}; residue field is F_p^2")
        root = roots[0]
    A, B = curve.short_coefficients()
    try:
        a, b = _mod_p(A, p, root), _mod_p(B, p, root)
    except ZeroDivisionError:
        raise BadReduction(f"model is not integral at {p}") from None
    if (4 * a ** 3 + 27 * b * b) % p == 0:
        raise BadReduction(f"bad reduction at {p}")
    return a, b


def _trace_charsum(a, b, p):
    x = np.arange(p, dtype=np.int64)
    v = (x * x % p * x + a * x + b) % p
    qr = np.full(p, -1, dtype=np.int64)
    qr[x * x % p] = 1
    qr[0] = 0
    return -int(qr[v].sum())


def _ec_add(P, Q, a, p):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        s = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        s = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (s * s - x1 - x2) % p
    return x3, (s * (x1 - x3) - y1) % p


def _ec_mul(k, P, a, p):
    if k < 0:
        k, P = -k, (None if P is None else (P[0], -P[1] % p))
    R = None
    while k:
        if k & 1:
            R = _ec_add(R, P, a, p)
        P = _ec_add(P, P, a, p)
        k >>= 1
    return R


def _point_candidates(P, a, p, bound):
    """Every t with |t| <= bound and t*P = (p+1)*P, or None when P has
    order too small for the baby-step table to be unambiguous."""
    m = isqrt(2 * bound) + 1
    step = 2 * m + 1
    K = bound // step + 1
    baby, R = {}, None
    for j in range(m + 1):
        if R in baby:
            return None
        baby[R] = j
        if R is not None:
            baby[(R[0], -R[1] % p)] = -j
        R = _ec_add(R, P, a, p)
    target = _ec_mul(p + 1, P, a, p)
    G = _ec_mul(-step, P, a, p)
    cur = _ec_add(target, _ec_mul(step * K, P, a, p), a, p)
    out = set()
    for k in range(-K, K + 1):
        # cur = target - k*step*P
        j = baby.get(cur)
        if j is not None and abs(k * step + j) <= bound:
            out.add(k * step + j)
        cur = _ec_add(cur, G, a, p)
    return out


def _trace_bsgs(a, b, p):
    """Baby-step giant-step on points of E and of its quadratic twist
    (whose trace is -a_p), intersecting until one value is left."""
    bound = 2 * isqrt(p) + 2
    g = next(g for g in range(2, p) if legendre(g, p) == -1)
    curves = [(a, b, 1), (a * g * g % p, b * g ** 3 % p, -1)]
    alive = None
    x = [0, 0]
    for i in range(400):
        which = i % 2
        ca, cb, sign = curves[which]
        while True:
            x0 = x[which]
            x[which] += 1
            rhs = (x0 ** 3 + ca * x0 + cb) % p
            if rhs and legendre(rhs, p) == 1:
                break
            if x[which] > p:
                raise ArithmeticError(f"ran out of points at p = {p}")
        cand = _point_candidates((x0, sqrt_mod(rhs, p)), ca, p, bound)
        if cand is None:
            continue
        cand = {sign * t for t in cand}
        alive = cand if alive is None else alive & cand
        if len(alive) == 1:
            return next(iter(alive))
    raise ArithmeticError(f"point counting did not converge at p = {p}")


def trace_of_frobenius(curve, p, root=None, method=None):
    """a_p = p + 1 - #E(F_p) at a good prime p >= 5.

    For curves over Q(sqrt m), root picks the degree-one prime above p (the
    image of the field generator mod p); inert primes are refused.
    method is "charsum" or "bsgs"; by default the character sum is used up
    to 10^4.
    """
    a, b = _reduced_short(curve, p, root)
    if method is None:
        method = "charsum" if p <= SMALL_PRIME_LIMIT else "bsgs"
    if method == "charsum":
        return _trace_charsum(a, b, p)
    if method == "bsgs":
        return _trace_bsgs(a, b, p)
    raise ValueError(f"unknown method {method!r}")


def _prime_ideals(curve, p):
    """Roots naming the degree-one primes above p (None over Q)."""
    if curve.base is None:
        return [None]
    return curve.base.roots_mod(p)


def sample_frobenius_data(curve, ell, n, prime_budget, max_samples=None, min_samples=30):
    """FrobSample records at good primes 5 <= p <= prime_budget, p != ell.

    Over Q(sqrt m) each degree-one prime contributes one sample.
    """
    M = ell ** n
    out = []
    for p in sympy.primerange(5, prime_budget + 1):
        if p == ell:
            continue
        for r in _prime_ideals(curve, p):
            try:
                t = trace_of_frobenius(curve, p, r)
            except BadReduction:
                continue
            out.append(FrobSample(p, t, M, r))
        if max_samples is not None and len(out) >= max_samples:
            out = out[:max_samples]
            break
    if len(out) < min_samples:
        raise InsufficientData(f"only {len(out)} usable primes below {prime_budget}")
    return out


def samples_to_csv(samples, fh=None):
    """Write p, a_p, tr mod l^n, det mod l^n rows; returns the text if fh is None."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "a_p", "tr_mod", "det_mod"])
    for s in samples:
        w.writerow([s.p, s.trace, s.tr, s.det])
    return None if fh is not None else buf.getvalue()


# class sets -----------------------------------------------------------------

def class_masses(H):
    """{(trace, det): fraction of elements of H} at H's modulus."""
    M = H.modulus
    counts = {}
    for a, b, c, d in H.elements:
        key = ((a + d) % M, (a * d - b * c) % M)
        counts[key] = counts.get(key, 0) + 1
    total = len(H.elements)
    return {k: v / total for k, v in counts.items()}


def class_set(H):
    return frozenset(class_masses(H))


@dataclass
class Verdict:
    consistent: bool
    witness: FrobSample = None
    coverage: float = 0.0
    supported: bool = False
    n_samples: int = 0
    flags: list = field(default_factory=list)

    def to_json(self):
        return {"consistent": self.consistent,
                "witness": None if self.witness is None else
                {"p": self.witness.p, "a_p": self.witness.trace,
                 "tr": self.witness.tr, "det": self.witness.det},
                "coverage": round(self.coverage, 6), "supported": self.supported,
                "n_samples": self.n_samples, "flags": list(self.flags)}


def _check_modulus(data, H):
    for s in data:
        if s.modulus != H.modulus:
            raise ValueError(f"sample modulus {s.modulus} differs from candidate modulus {H.modulus}")


def consistency_check(data, candidate):
    """Is every sampled (trace, det) pair realized by the candidate?"""
    _check_modulus(data, candidate)
    masses = class_masses(candidate)
    if not data:
        return Verdict(True, coverage=0.0, supported=False, n_samples=0, flags=["empty"])
    for s in data:
        if s.pair() not in masses:
            return Verdict(False, witness=s, n_samples=len(data))
    seen = {s.pair() for s in data}
    heavy = [k for k, v in masses.items() if v >= COVERAGE_MASS]
    coverage = sum(k in seen for k in heavy) / len(heavy) if heavy else 1.0
    supported = coverage == 1.0 and len(data) >= MIN_SUPPORT_SAMPLES
    flags = [] if supported else ["undersampled"]
    return Verdict(True, coverage=coverage, supported=supported, n_samples=len(data), flags=flags)


@dataclass
class Discrimination:
    survivors: list
    eliminated: dict
    best: list
    ambiguous: list
    verdicts: dict

    @property
    def resolved(self):
        return len(self.best) == 1

    def to_json(self):
        return {"survivors": list(self.survivors),
                "eliminated": {k: v.to_json() for k, v in self.eliminated.items()},
                "best": list(self.best), "ambiguous": [list(x) for x in self.ambiguous]}


def _named(candidates):
    out = []
    for i, c in enumerate(candidates):
        if isinstance(c, Subgroup):
            out.append((c.name or f"H{i}", c))
        else:
            out.append(tuple(c))
    return out


def discriminate(data, candidates):
    """Rule out inconsistent candidates and report the smallest survivors.

    candidates is a list of (id, Subgroup) pairs (or bare Subgroups).  best
    holds the survivors whose class set is minimal among survivors; when
    several of them share a class set they are listed in ambiguous.
    """
    named = _named(candidates)
    verdicts, eliminated, survivors = {}, {}, []
    sets = {}
    for gid, H in named:
        v = consistency_check(data, H)
        verdicts[gid] = v
        if v.consistent:
            survivors.append(gid)
            sets[gid] = class_set(H)
        else:
            eliminated[gid] = v
    if not survivors:
        raise DiscriminationError("every candidate image was ruled out")
    minimal = [g for g in survivors if not any(sets[h] < sets[g] for h in survivors)]
    ambiguous = []
    groups = {}
    for g in minimal:
        groups.setdefault(sets[g], []).append(g)
    for members in groups.values():
        if len(members) > 1:
            ambiguous.append(tuple(members))
    if len(groups) > 1:
        ambiguous.append(tuple(minimal))
    return Discrimination(survivors, eliminated, minimal, ambiguous, verdicts)


# isogeny character -----------------------------------------------------------

def _field_domain(base):
    return sympy.QQ.algebraic_field(sympy.sqrt(base.m)) if base is not None else sympy.QQ


def _domain_coeff(v, K, base):
    """v as an element of the sympy domain K (QQ or QQ<sqrt m>)."""
    if base is None:
        return K(v.numerator, v.denominator)
    # x + y*a = (x + y*t/2) + (y*t/2) sqrt(m), with t the trace of a
    half = Fraction(base.trace_a, 2)
    r = v.y * half
    c0, c1 = v.x + r, v.y if base.trace_a == 0 else r
    q = sympy.QQ
    return K([q(c1.numerator, c1.denominator), q(c0.numerator, c0.denominator)])


def _from_sympy_coeff(expr, base):
    expr = sympy.expand(expr)
    if base is None:
        q = sympy.Rational(expr)
        return Fraction(int(q.p), int(q.q))
    s = sympy.sqrt(base.m)
    y2 = sympy.Rational(expr.coeff(s))          # coefficient of sqrt(m)
    x2 = sympy.Rational(sympy.expand(expr - y2 * s))
    # x + y*a with a = (1+s)/2 (m = 1 mod 4) or a = s
    y = 2 * y2 if base.m % 4 == 1 else y2
    x = x2 - y / 2 if base.m % 4 == 1 else x2
    return QuadInt(base, Fraction(int(x.p), int(x.q)), Fraction(int(y.p), int(y.q)))


def kernel_polynomials(curve, ell):
    """The monic factors of degree (l-1)/2 of the l-division polynomial over
    the field of definition: kernel polynomials of rational l-isogenies."""
    if ell % 2 == 0:
        raise ValueError("ell must be odd")
    x = sympy.Symbol("x")
    P = division_polynomial(curve, ell)
    K = _field_domain(curve.base)
    coeffs = [_domain_coeff(c, K, curve.base) for c in reversed(P.c)]
    facs = sympy.Poly.from_list(coeffs, x, domain=K).factor_list()[1]
    out = []
    for g, _ in facs:
        if g.degree() != (ell - 1) // 2:
            continue
        g = g.monic()
        out.append(RatPoly([_from_sympy_coeff(c, curve.base)
                            for c in reversed(g.all_coeffs())]))
    if not out:
        raise KernelPolynomialError(f"no rational {ell}-isogeny found")
    return out


class _ResidueField:
    """F_p[X]/(g) for an irreducible g, elements as galoistools lists."""

    def __init__(self, g, p):
        self.g, self.p = g, p

    def red(self, u):
        return gf.gf_rem(u, self.g, self.p, ZZ)

    def mul(self, u, v):
        return self.red(gf.gf_mul(u, v, self.p, ZZ))

    def add(self, u, v):
        return gf.gf_add(u, v, self.p, ZZ)

    def sub(self, u, v):
        return gf.gf_sub(u, v, self.p, ZZ)

    def inv(self, u):
        s, _, h = gf.gf_gcdex(u, self.g, self.p, ZZ)
        if h != [1]:
            raise ZeroDivisionError("not invertible")
        return s

    def const(self, c):
        return gf.gf_strip([c % self.p])

    def pow(self, u, e):
        return gf.gf_pow_mod(u, e, self.g, self.p, ZZ)


def _character_at(kappa, A, B, p, root, ell):
    """lambda(p) for the kernel with polynomial kappa at the prime (p, root)."""
    k = _gf(kappa, p, root)
    k = gf.gf_monic(k, p, ZZ)[1]
    g = gf.gf_factor(k, p, ZZ)[1][0][0]
    F = _ResidueField(g, p)
    X = F.red([1, 0])
    a, b = F.const(A), F.const(B)
    fX = F.add(F.add(F.mul(F.mul(X, X), X), F.mul(a, X)), b)
    # points are (u, v*Y) with Y^2 = f(X); Frobenius sends Y to f(X)^((p-1)/2) Y
    target_u = F.pow(X, p)
    target_v = F.pow(fX, (p - 1) // 2)
    P = (X, F.const(1))
    cur = P
    for m in range(1, (ell - 1) // 2 + 1):
        if m > 1:
            u1, v1 = cur
            u2, v2 = P
            if m == 2:
                # tangent slope (3u^2 + A) / (2 v f(X)), as a multiple of Y
                num = F.add(F.mul(F.const(3), F.mul(u1, u1)), a)
                sig = F.mul(num, F.inv(F.mul(F.const(2), F.mul(v1, fX))))
            else:
                sig = F.mul(F.sub(v2, v1), F.inv(F.sub(u2, u1)))
            u3 = F.sub(F.sub(F.mul(F.mul(sig, sig), fX), u1), u2)
            v3 = F.sub(F.mul(sig, F.sub(u1, u3)), v1)
            cur = (u3, v3)
        if cur[0] == target_u:
            if cur[1] == target_v:
                return m % ell
            if F.add(cur[1], target_v) == []:
                return (-m) % ell
    raise KernelPolynomialError(f"Frobenius at {p} does not preserve the kernel")


def velu_codomain_j(curve, kernel):
    """j-invariant of E / <kernel> (odd-degree kernel, Velu's formulas)."""
    A, B = curve.short_coefficients()
    d = kernel.degree
    c = kernel.c + [0] * 3
    e1, e2, e3 = -c[d - 1] if d >= 1 else 0, c[d - 2] if d >= 2 else 0, -c[d - 3] if d >= 3 else 0
    p1 = e1
    p2 = e1 * e1 - 2 * e2
    p3 = e1 ** 3 - 3 * e1 * e2 + 3 * e3
    t = 6 * p2 + 2 * A * d
    w = 10 * p3 + 6 * A * p1 + 4 * B * d
    A2, B2 = A - 5 * t, B - 7 * w
    return 6912 * A2 ** 3 / (4 * A2 ** 3 + 27 * B2 * B2)


@lru_cache(maxsize=None)
def _class_poly(disc):
    return hilbert_class_polynomial(disc)


def cm_kernel_polynomial(curve, ell, order):
    """The kernel polynomial of the O-stable l-isogeny: the one whose
    codomain keeps CM by O (or by the order of conductor f/l when l | f)."""
    discs = [order.disc]
    if order.f % ell == 0:
        discs.append(order.disc // ell ** 2)
    hits = []
    for k in kernel_polynomials(curve, ell):
        j2 = velu_codomain_j(curve, k)
        if any(poly_eval(_class_poly(D), j2) == 0 for D in discs):
            hits.append(k)
    if len(hits) != 1:
        raise KernelPolynomialError(f"{len(hits)} kernels keep the CM order")
    return hits[0]


def _checked_primes(primes):
    primes = list(primes)
    bad = [p for p in primes if not sympy.isprime(p)]
    if bad:
        raise ValueError(f"not prime: {bad[:5]}")
    return primes


def isogeny_character_values(curve, ell, primes, kernel=None, order=None):
    """[(p, lambda(p) mod ell)] for the good degree-one primes in primes.

    kernel defaults to the CM kernel when order is given, otherwise to the
    unique rational kernel polynomial.
    """
    if kernel is None:
        if order is not None:
            kernel = cm_kernel_polynomial(curve, ell, order)
        else:
            ks = kernel_polynomials(curve, ell)
            if len(ks) != 1:
                raise KernelPolynomialError(f"{len(ks)} rational {ell}-isogenies; choose a kernel")
            kernel = ks[0]
    out = []
    for p in _checked_primes(primes):
        if p == ell or p < 5:
            continue
        for r in _prime_ideals(curve, p):
            try:
                A, B = _reduced_short(curve, p, r)
                kp = _gf(kernel, p, r)
            except (BadReduction, ZeroDivisionError):
                continue
            if len(kp) - 1 != kernel.degree:
                continue
            out.append((p, _character_at(kernel, A, B, p, r, ell)))
    return out


# local route: the CM kernel modulo one prime --------------------------------
#
# At a prime of F inert in K the reduction is supersingular and Frobenius
# satisfies pi^2 = -p, so it has the two eigenvalues +-mu on E[l].  The x-
# coordinates of both eigenlines divide X^p psi_mu^2 - phi_mu; the sign of the
# y-coordinate separates the lines, and the CM line is the one whose Velu
# codomain is a root of the class polynomial.  Polynomials are numpy int64
# arrays, highest degree first, with coefficients reduced mod p < 2^20.

def _np_trim(u):
    nz = np.flatnonzero(u)
    return u[nz[0]:] if len(nz) else u[:0]


def _np_mul(u, v, p):
    if not len(u) or not len(v):
        return u[:0]
    if len(u) * p * p < 2 ** 62 and len(v) * p * p < 2 ** 62:
        return np.convolve(u, v) % p
    raise OverflowError("prime too large for int64 convolution")


def _np_add(u, v, p):
    n = max(len(u), len(v))
    out = np.zeros(n, dtype=np.int64)
    out[n - len(u):] += u
    out[n - len(v):] += v
    return _np_trim(out % p)


def _np_scale(u, c, p):
    return _np_trim(u * (c % p) % p)


def _np_rem(u, g, p):
    u = _np_trim(np.array(u, dtype=np.int64) % p)
    dg = len(g) - 1
    if len(u) <= dg:
        return u
    inv = pow(int(g[0]), -1, p)
    gm = g * inv % p
    u = u.copy()
    for i in range(len(u) - dg):
        c = u[i]
        if c:
            u[i:i + dg + 1] = (u[i:i + dg + 1] - c * gm) % p
    return _np_trim(u[len(u) - dg:])


def _np_mulmod(u, v, g, p):
    return _np_rem(_np_mul(u, v, p), g, p)


def _np_powmod(u, e, g, p):
    out, base = np.array([1], dtype=np.int64), _np_rem(u, g, p)
    while e:
        if e & 1:
            out = _np_mulmod(out, base, g, p)
        base = _np_mulmod(base, base, g, p)
        e >>= 1
    return out


def _np_gcd(u, v, p):
    u, v = _np_trim(u % p), _np_trim(v % p)
    while len(v):
        u, v = v, _np_rem(u, v, p)
    return u * pow(int(u[0]), -1, p) % p if len(u) else u


def _np_psi(A, B, p, need):
    """{n: P_n mod p} for the indices in need (and what they depend on), with
    psi_n = P_n for odd n and y P_n for even n."""
    a = lambda *c: np.array([x % p for x in c], dtype=np.int64)
    f = a(1, 0, A, B)
    f2 = _np_mul(f, f, p)
    P = {0: a(0)[:0], 1: a(1), 2: a(2), 3: a(3, 0, 6 * A, 12 * B, -A * A),
         4: a(4, 0, 20 * A, 80 * B, -20 * A * A, -16 * A * B, -32 * B * B - 4 * A ** 3)}
    inv2 = pow(2, -1, p)

    def get(n):
        if n in P:
            return P[n]
        m = n // 2
        if n % 2:
            t1 = _np_mul(get(m + 2), _np_mul(get(m), _np_mul(get(m), get(m), p), p), p)
            t2 = _np_mul(get(m - 1), _np_mul(get(m + 1), _np_mul(get(m + 1), get(m + 1), p), p), p)
            if m % 2 == 0:
                t1 = _np_mul(t1, f2, p)
            else:
                t2 = _np_mul(t2, f2, p)
            r = _np_add(t1, -t2, p)
        else:
            t1 = _np_mul(get(m + 2), _np_mul(get(m - 1), get(m - 1), p), p)
            t2 = _np_mul(get(m - 2), _np_mul(get(m + 1), get(m + 1), p), p)
            r = _np_scale(_np_mul(get(m), _np_add(t1, -t2, p), p), inv2, p)
        P[n] = r
        return r
    for n in need:
        if n >= 0:
            get(n)
    return P, f


def _np_velu_j(kernel, A, B, p):
    """j of E / <kernel> mod p, for a monic kernel polynomial of odd-degree isogeny."""
    d = len(kernel) - 1
    c = [int(x) for x in kernel] + [0, 0, 0]
    e1, e2, e3 = -c[1], c[2] if d >= 2 else 0, -c[3] if d >= 3 else 0
    p1, p2, p3 = e1, e1 * e1 - 2 * e2, e1 ** 3 - 3 * e1 * e2 + 3 * e3
    t = 6 * p2 + 2 * A * d
    w = 10 * p3 + 6 * A * p1 + 4 * B * d
    A2, B2 = (A - 5 * t) % p, (B - 7 * w) % p
    den = (4 * A2 ** 3 + 27 * B2 * B2) % p
    if den == 0:
        return None
    return 6912 * pow(A2, 3, p) * pow(den, -1, p) % p


def _local_cm_character(A, B, p, ell, class_polys):
    """lambda(p) on the CM line at a supersingular prime, or None when the
    CM line cannot be told apart from the other eigenline at this prime."""
    mus = [m for m in range(1, (ell + 1) // 2) if (m * m + p) % ell == 0]
    if not mus:
        raise KernelPolynomialError(f"-{p} is not a square mod {ell}")
    mu = mus[0]
    P, f = _np_psi(A, B, p, [ell, mu - 2, mu - 1, mu, mu + 1, mu + 2])
    g = P[ell] * pow(int(P[ell][0]), -1, p) % p
    pm = lambda n: P[n] if n >= 0 else np.array([p - 1], dtype=np.int64)  # P_{-1} = -1
    fm = lambda u, v: _np_mulmod(u, v, g, p)
    sq = fm(P[mu], P[mu])
    psi_sq = fm(sq, f) if mu % 2 == 0 else sq
    prod = fm(pm(mu + 1), pm(mu - 1))
    phi = _np_add(fm(np.array([1, 0], dtype=np.int64), psi_sq),
                  -(prod if mu % 2 == 0 else fm(prod, f)), p)
    xp = _np_powmod(np.array([1, 0], dtype=np.int64), p, g, p)
    h = _np_gcd(g, _np_add(fm(xp, psi_sq), -phi, p), p)
    if len(h) - 1 != ell - 1:
        raise KernelPolynomialError(f"eigenline polynomial has degree {len(h) - 1} at {p}")
    # y([mu]P) = y W(x): W = Q / (4 P_mu^3), times 1/f^2 for even mu
    hm = lambda u, v: _np_mulmod(u, v, h, p)
    Q = _np_add(hm(pm(mu + 2), hm(pm(mu - 1), pm(mu - 1))),
                -hm(pm(mu - 2), hm(pm(mu + 1), pm(mu + 1))), p)
    den = _np_scale(hm(P[mu], hm(P[mu], P[mu])), 4, p)
    if mu % 2 == 0:
        den = hm(den, hm(f, f))
    # S = f^((p-1)/2) / W = f^((p-1)/2) den / Q is +-1 on every root of h
    S = hm(_np_powmod(f, (p - 1) // 2, h, p), den)
    one = np.array([1], dtype=np.int64)
    h_plus = _np_gcd(h, _np_add(S, -hm(Q, one), p), p)
    h_minus = _np_gcd(h, _np_add(S, hm(Q, one), p), p)
    half = (ell - 1) // 2
    if len(h_plus) - 1 != half or len(h_minus) - 1 != half:
        raise KernelPolynomialError(f"eigenlines did not separate at {p}")
    hits = []
    for sign, k in ((1, h_plus), (-1, h_minus)):
        j2 = _np_velu_j(k, A, B, p)
        if j2 is not None and any(sum(int(c) * pow(j2, i, p) for i, c in enumerate(H)) % p == 0
                                  for H in class_polys):
            hits.append(sign)
    if len(hits) != 1:
        return None
    return hits[0] * mu % ell


def local_isogeny_character_values(curve, ell, order, primes):
    """[(p, lambda(p) mod ell)] on the CM line at degree-one primes of the
    field of definition that are inert in the CM field, computed modulo p."""
    discs = [order.disc] + ([order.disc // ell ** 2] if order.f % ell == 0 else [])
    polys = [_class_poly(D) for D in discs]
    out = []
    for p in _checked_primes(primes):
        if p == ell or p < 5 or legendre(order.disc_K % p, p) != -1:
            continue
        for r in _prime_ideals(curve, p):
            try:
                A, B = _reduced_short(curve, p, r)
            except (BadReduction, ZeroDivisionError):
                continue
            lam = _local_cm_character(A, B, p, ell, polys)
            if lam is not None:
                out.append((p, lam))
    return out


def _stable_lines(G, ell):
    lines = [(1, 0)] + [(t, 1) for t in range(ell)]
    out = []
    for v in lines:
        if all(((a * v[0] + b * v[1]) * v[1] - (c * v[0] + d * v[1]) * v[0]) % ell == 0
               for a, b, c, d in G):
            out.append(v)
    return out


def _eigen(g, v, ell):
    a, b, c, d = g
    w0, w1 = (a * v[0] + b * v[1]) % ell, (c * v[0] + d * v[1]) % ell
    return w0 * pow(v[0], -1, ell) % ell if v[0] % ell else w1 * pow(v[1], -1, ell) % ell


def stable_line_characters(H, ell):
    """For each line of F_l^2 stable under H mod l, the set of
    (eigenvalue on the line, det) pairs over H."""
    G = {mat_reduce(g, ell) for g in H.elements}
    return {v: frozenset((_eigen(g, v, ell), (g[0] * g[3] - g[1] * g[2]) % ell) for g in G)
            for v in _stable_lines(G, ell)}


def cm_line(order, ell):
    """The line of F_l^2 stable under the whole Cartan subgroup mod l (the
    kernel of the CM endomorphism when l divides the discriminant)."""
    params = cartan_params(order, ell)
    lines = _stable_lines(_cartan_elements(params), ell)
    if len(lines) != 1:
        raise ValueError(f"the Cartan subgroup mod {ell} has {len(lines)} stable lines")
    return lines[0]


def isogeny_consistent(lambda_data, H, order, ell):
    """True iff every observed (lambda(p), p) mod ell, computed on the CM
    kernel, is (eigenvalue on the CM line, det) for some element of H."""
    v = cm_line(order, ell)
    G = {mat_reduce(g, ell) for g in H.elements}
    real = {(_eigen(g, v, ell), (g[0] * g[3] - g[1] * g[2]) % ell) for g in G}
    return {(lam % ell, p % ell) for p, lam in lambda_data} <= real

"""Real quadratic fields Q(sqrt m) of class number one.

Elements are written x + y*a, where a is sqrt(m) when m = 2, 3 mod 4 and
(1 + sqrt(m))/2 when m = 1 mod 4.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import isqrt

from .arith import kronecker, powerfree_part

__all__ = ["QuadField", "QuadInt", "PrimeSplitting", "SearchExhausted",
           "fundamental_unit", "split_prime", "twist_candidates", "is_square",
           "is_rational_square"]


class SearchExhausted(RuntimeError):
    """No generator of the prime ideal was found inside the search box."""


@dataclass(frozen=True)
class QuadField:
    m: int

    def __post_init__(self):
        if self.m <= 1 or powerfree_part(self.m, 2)[0] != self.m:
            raise ValueError(f"m = {self.m} must be a square-free integer > 1")

    @property
    def trace_a(self):
        return 1 if self.m % 4 == 1 else 0

    @property
    def norm_a(self):
        return -(self.m - 1) // 4 if self.m % 4 == 1 else -self.m

    @property
    def disc(self):
        return self.m if self.m % 4 == 1 else 4 * self.m

    @property
    def minpoly(self):
        """Coefficients (1, b, c) of x^2 + b x + c, the minimal polynomial of a."""
        return (1, -self.trace_a, self.norm_a)

    def minpoly_str(self):
        if self.m % 4 == 1:
            return f"x^2-x-{(self.m - 1) // 4}"
        return f"x^2-{self.m}"

    @property
    def a(self):
        return QuadInt(self, 0, 1)

    def __call__(self, x, y=0):
        return QuadInt(self, x, y)

    def a_real(self):
        """The real value of a under the embedding with sqrt(m) > 0."""
        r = self.m ** 0.5
        return (1 + r) / 2 if self.m % 4 == 1 else r

    def roots_mod(self, p):
        """Roots of the minimal polynomial of a modulo the prime p."""
        _, b, c = self.minpoly
        return [r for r in range(p) if (r * r + b * r + c) % p == 0]

    def __str__(self):
        return f"Q(sqrt({self.m}))"


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


class QuadInt:
    """An element x + y*a of a real quadratic field, with rational x, y."""

    __slots__ = ("field", "x", "y")

    def __init__(self, field, x, y=0):
        self.field = field
        self.x = _frac(x)
        self.y = _frac(y)

    def _coerce(self, other):
        if isinstance(other, QuadInt):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadInt(self.field, other, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.field, self.x + o.x, self.y + o.y)

    __radd__ = __add__

    def __neg__(self):
        return QuadInt(self.field, -self.x, -self.y)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.field, self.x - o.x, self.y - o.y)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        t, n = self.field.trace_a, -self.field.norm_a  # a^2 = t a + n
        yy = self.y * o.y
        return QuadInt(self.field, self.x * o.x + n * yy,
                       self.x * o.y + self.y * o.x + t * yy)

    __rmul__ = __mul__

    def conj(self):
        return QuadInt(self.field, self.x + self.field.trace_a * self.y, -self.y)

    def norm(self):
        t, c = self.field.trace_a, self.field.norm_a
        return self.x * self.x + t * self.x * self.y + c * self.y * self.y

    def trace(self):
        return 2 * self.x + self.field.trace_a * self.y

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of 0")
        c = self.conj()
        return QuadInt(self.field, c.x / n, c.y / n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        out, base = QuadInt(self.field, 1), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.y == 0 and self.x == other
        if not isinstance(other, QuadInt):
            return NotImplemented
        return self.field == other.field and self.x == other.x and self.y == other.y

    def __hash__(self):
        if self.y == 0:
            return hash(self.x)
        return hash((self.field, self.x, self.y))

    def __bool__(self):
        return bool(self.x or self.y)

    def is_rational(self):
        return self.y == 0

    def is_integral(self):
        return self.x.denominator == 1 and self.y.denominator == 1

    def real(self):
        return float(self.x) + float(self.y) * self.field.a_real()

    def height(self):
        return max(abs(self.x), abs(self.y))

    def reduce_mod(self, p, root):
        """Image in F_p under a -> root (root a zero of the minimal polynomial)."""
        num = (self.x.numerator * self.y.denominator * 1
               + self.y.numerator * self.x.denominator * root)
        den = self.x.denominator * self.y.denominator
        if den % p == 0:
            raise ZeroDivisionError(f"denominator divisible by {p}")
        return num * pow(den, -1, p) % p

    def to_json(self):
        return [str(self.x), str(self.y)]

    @classmethod
    def from_json(cls, field, pair):
        return cls(field, Fraction(pair[0]), Fraction(pair[1]))

    def __str__(self):
        if self.y == 0:
            return str(self.x)
        ys = {1: "a", -1: "-a"}.get(self.y, f"{self.y}*a")
        if self.x == 0:
            return ys
        sign = "" if ys.startswith("-") else "+"
        return f"{self.x}{sign}{ys}"

    def __repr__(self):
        return f"QuadInt({self.field.m}: {self})"


def fundamental_unit(field):
    """The fundamental unit greater than 1, read off the continued fraction of a.

    a = (P + sqrt D)/Q is expanded with the usual integer recurrences; the
    first convergent p/q with p - q*conj(a) a unit gives the answer.
    """
    D = field.m
    P, Q = (1, 2) if D % 4 == 1 else (0, 1)
    r = isqrt(D)
    t = field.trace_a
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for _ in range(10000):
        ai = (P + r) // Q
        p_prev, p = ai * p_prev + p, p_prev
        q_prev, q = ai * q_prev + q, q_prev
        # p_prev/q_prev is now the newest convergent
        eps = QuadInt(field, p_prev - q_prev * t, q_prev)
        if abs(eps.norm()) == 1:
            return eps if eps.real() > 1 else eps.inverse()
        P = ai * Q - P
        Q = (D - P * P) // Q
    raise RuntimeError(f"no unit found for {field}")


@dataclass(frozen=True)
class PrimeSplitting:
    p: int
    kind: str  # "split", "inert" or "ramified"
    generator: QuadInt

    def ideal_generators(self):
        """One generator per prime ideal above p."""
        if self.kind == "split":
            return [self.generator, self.generator.conj()]
        return [self.generator]


def _generator_key(z):
    return (z.height(), abs(z.y), abs(z.x), z.real() < 0, z.x < 0)


def split_prime(p, field, bound=None):
    """Decomposition type of p and a generator of a prime ideal above it."""
    k = kronecker(field.disc, p)
    if k == -1:
        return PrimeSplitting(p, "inert", QuadInt(field, p))
    if bound is None:
        bound = 10 * isqrt(p) + 10
    best = None
    for y in range(-bound, bound + 1):
        for x in range(-bound, bound + 1):
            z = QuadInt(field, x, y)
            if abs(z.norm()) != p:
                continue
            if z.real() < 0:
                z = -z
            if best is None or _generator_key(z) < _generator_key(best):
                best = z
    if best is None:
        raise SearchExhausted(f"no element of norm +-{p} with coordinates up to {bound}")
    return PrimeSplitting(p, "split" if k == 1 else "ramified", best)


def is_rational_square(q):
    q = _frac(q)
    if q < 0:
        return False
    n, d = q.numerator, q.denominator
    return isqrt(n) ** 2 == n and isqrt(d) ** 2 == d


def _rational_sqrt(q):
    return Fraction(isqrt(q.numerator), isqrt(q.denominator))


def square_root(alpha):
    """A square root of alpha in its field, or None."""
    F = alpha.field
    if not alpha:
        return alpha
    N = alpha.norm()
    if not is_rational_square(N):
        return None
    n0 = _rational_sqrt(N)
    for n in (n0, -n0):
        T2 = alpha.trace() + 2 * n
        if T2 == 0:
            continue
        if not is_rational_square(T2):
            continue
        beta = (alpha + n) / _rational_sqrt(T2)
        if beta * beta == alpha:
            return beta
    if alpha.is_rational():
        if is_rational_square(alpha.x):
            return QuadInt(F, _rational_sqrt(alpha.x))
        if is_rational_square(alpha.x / F.m):
            s = QuadInt(F, -F.trace_a, 2) if F.m % 4 == 1 else F.a  # sqrt(m)
            return s * _rational_sqrt(alpha.x / F.m)
    return None


def is_square(alpha):
    """True iff alpha is a square in its field."""
    return square_root(alpha) is not None


def twist_candidates(field, primes):
    """The set {+-u^k0 pi_1^k1 ... pi_n^kn}, one pi per prime ideal above
    each listed prime, k_i in {0, 1}."""
    gens = [fundamental_unit(field)]
    for p in sorted(set(primes)):
        gens += split_prime(p, field).ideal_generators()
    out = []
    for signs in product((1, -1), *([(0, 1)] * len(gens))):
        z = QuadInt(field, signs[0])
        for g, e in zip(gens, signs[1:]):
            if e:
                z = z * g
        if not any(is_square(z / w) for w in out):
            out.append(z)
    return out

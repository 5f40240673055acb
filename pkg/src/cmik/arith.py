"""Integer arithmetic: factorization, power-free parts, Kronecker symbols,
square classes, discriminants and binary quadratic forms."""

from dataclasses import dataclass
from math import gcd, isqrt

from sympy import factorint, isprime

__all__ = [
    "Factorization", "CMOrder", "factorize", "powerfree_part", "kronecker",
    "legendre", "square_class_2adic", "valuation", "is_prime",
    "is_fundamental_discriminant", "reduced_forms", "class_number",
    "is_square", "is_kth_power", "sqrt_mod",
]

is_prime = isprime


@dataclass(frozen=True)
class Factorization:
    sign: int
    factors: tuple  # ((p, e), ...) with p increasing

    def value(self):
        out = self.sign
        for p, e in self.factors:
            out *= p**e
        return out

    def primes(self):
        return [p for p, _ in self.factors]


def factorize(n):
    """Complete factorization of a nonzero integer."""
    if n == 0:
        raise ValueError("cannot factor 0")
    sign = -1 if n < 0 else 1
    n = abs(n)
    if n == 1:
        return Factorization(sign, ())
    # sympy runs trial division, then Pollard rho / p-1 on what is left
    return Factorization(sign, tuple(sorted(factorint(n).items())))


def valuation(n, p):
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def powerfree_part(n, k):
    """Split n = core * cofactor**k with core k-th-power-free.

    The core keeps the sign of n and the cofactor is positive.
    """
    if n == 0:
        raise ValueError("powerfree_part of 0")
    if k not in (2, 3, 4, 6):
        raise ValueError("k must be one of 2, 3, 4, 6")
    fac = factorize(n)
    core, cof = fac.sign, 1
    for p, e in fac.factors:
        core *= p ** (e % k)
        cof *= p ** (e // k)
    return core, cof


def is_square(n):
    return n >= 0 and isqrt(n) ** 2 == n


def is_kth_power(n, k):
    """True when the integer n is a k-th power in Z."""
    if n == 0:
        return True
    core = powerfree_part(n, k)[0]
    return core == 1 or (core == -1 and k % 2 == 1)


def legendre(a, p):
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker(a, n):
    """Kronecker symbol (a/n)."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a/n) for odd positive n
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def square_class_2adic(u):
    if u % 2 == 0:
        raise ValueError("2-adic square class needs an odd unit")
    return {1: "s", 3: "ns3", 5: "ns5", 7: "ns7"}[u % 8]


def sqrt_mod(a, p):
    """A square root of a modulo an odd prime p, or None."""
    a %= p
    if a == 0:
        return 0
    if legendre(a, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while legendre(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def is_fundamental_discriminant(d):
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return powerfree_part(d, 2)[0] == d
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and powerfree_part(m, 2)[0] == m
    return False


@dataclass(frozen=True)
class CMOrder:
    """The imaginary quadratic order of conductor f in the field of
    fundamental discriminant disc_K."""

    disc_K: int
    f: int = 1

    def __post_init__(self):
        if self.disc_K >= 0 or not is_fundamental_discriminant(self.disc_K):
            raise ValueError(f"{self.disc_K} is not a negative fundamental discriminant")
        if self.f < 1:
            raise ValueError("conductor must be positive")

    @property
    def disc(self):
        return self.disc_K * self.f * self.f

    @classmethod
    def from_disc(cls, d):
        """Recover (disc_K, f) from a negative discriminant d = disc_K f^2."""
        if d >= 0 or d % 4 not in (0, 1):
            raise ValueError(f"{d} is not a negative discriminant")
        best = None
        for f in range(1, isqrt(-d) + 1):
            if d % (f * f) == 0 and is_fundamental_discriminant(d // (f * f)):
                best = f
        if best is None:
            raise ValueError(f"{d} is not a discriminant")
        return cls(d // (best * best), best)

    def class_number(self):
        return class_number(self.disc)

    def __str__(self):
        return f"O(disc_K={self.disc_K}, f={self.f})"


def reduced_forms(d):
    """Primitive reduced positive definite forms (a, b, c) of discriminant d."""
    if d >= 0 or d % 4 not in (0, 1):
        raise ValueError(f"{d} is not a negative discriminant")
    forms = []
    a = 1
    while 3 * a * a <= -d:
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if gcd(gcd(a, abs(b)), c) == 1:
                forms.append((a, b, c))
        a += 1
    return forms


def class_number(d):
    return len(reduced_forms(d))

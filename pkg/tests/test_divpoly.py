from fractions import Fraction

import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from cmik.divpoly import (RatPoly, division_polynomial, irreducible_mod_p_witness, psi_quotient,
                          torsion_degree_bounds, torsion_splitting_degree)
from cmik.ecmodel import CurveModel, parse_weierstrass, registry

X, Y = sympy.symbols("x y")


def sympy_psi(A, B, n):
    """Textbook recursion with y kept symbolic, then y^2 replaced by the cubic."""
    f = X ** 3 + A * X + B
    psi = {0: 0, 1: 1, 2: 2 * Y,
           3: 3 * X ** 4 + 6 * A * X ** 2 + 12 * B * X - A ** 2,
           4: 4 * Y * (X ** 6 + 5 * A * X ** 4 + 20 * B * X ** 3 - 5 * A ** 2 * X ** 2
                       - 4 * A * B * X - 8 * B ** 2 - A ** 3)}

    def red(e):
        e = sympy.expand(e)
        p = sympy.Poly(e, Y)
        out = 0
        for (k,), c in p.terms():
            out += c * f ** (k // 2) * Y ** (k % 2)
        return sympy.expand(out)

    for m in range(5, n + 1):
        k = m // 2
        if m % 2:
            v = psi[k + 2] * psi[k] ** 3 - psi[k - 1] * psi[k + 1] ** 3
        else:
            v = psi[k] * (psi[k + 2] * psi[k - 1] ** 2 - psi[k - 2] * psi[k + 1] ** 2) / (2 * Y)
        psi[m] = red(sympy.cancel(v))
    p = psi[n] if n % 2 else sympy.cancel(psi[n] / Y)
    return sympy.Poly(sympy.expand(p), X)


def as_sympy(P):
    return sympy.Poly(P.to_sympy(X), X)


@pytest.mark.parametrize("A,B", [(1, 0), (0, 16), (-4320, 96768), (-2, 3), (5, -7)])
@pytest.mark.parametrize("n", range(2, 9))
def test_matches_textbook_recursion(A, B, n):
    E = CurveModel.short(A, B)
    assert as_sympy(division_polynomial(E, n)) == sympy_psi(A, B, n)


def test_psi3_j0():
    d = 5
    P = division_polynomial(CurveModel.short(0, 16 * d), 3)
    assert as_sympy(P) == sympy.Poly(3 * X * (X ** 3 + 64 * d), X)


def test_psi4_quotient_disc8():
    E = registry()[-8].model
    q = as_sympy(psi_quotient(E, 4, 2))
    g = X ** 2 - 96 * X - 288
    h = X ** 4 + 96 * X ** 3 - 12096 * X ** 2 + 801792 * X - 19823616
    assert q == sympy.Poly(sympy.expand(g * h), X)


@pytest.mark.parametrize("n", range(2, 13))
def test_degree_formula(n):
    P = division_polynomial(CurveModel.short(-2, 3), n)
    assert P.degree == ((n * n - 1) // 2 if n % 2 else (n * n - 4) // 2)


def test_range_errors():
    E = CurveModel.short(1, 0)
    for n in (1, 13):
        with pytest.raises(ValueError):
            division_polynomial(E, n)
    with pytest.raises(ValueError):
        psi_quotient(E, 6, 4)
    with pytest.raises(ValueError):
        torsion_degree_bounds(E, 10)


coef = st.integers(-30, 30)


@settings(max_examples=25, deadline=None)
@given(coef, coef, st.sampled_from([(2, 4), (2, 6), (3, 6), (3, 9), (2, 8), (4, 8), (5, 10)]))
def test_divisibility(A, B, pair):
    assume(4 * A ** 3 + 27 * B ** 2 != 0)
    M, N = pair
    E = CurveModel.short(A, B)
    q, r = as_sympy(division_polynomial(E, N)).div(as_sympy(division_polynomial(E, M)))
    assert r.is_zero


def test_identity_report_all_pass(identity_report):
    assert len(identity_report) >= 15
    bad = {k: v["details"] for k, v in identity_report.items() if v["status"] != "PASS"}
    assert not bad


def test_identity_report_shape(identity_report):
    for k, v in identity_report.items():
        assert set(v) >= {"identity_id", "status", "details", "method"}
        assert v["identity_id"] == k


# torsion fields -----------------------------------------------------------------

def cubic_splitting_degree_mod_p(A, B, p):
    roots = sum(1 for x in range(p) if (x ** 3 + A * x + B) % p == 0)
    return {3: 1, 1: 2, 0: 3}[roots]


@pytest.mark.parametrize("A,B", [(1, 0), (0, 16), (-2, 3), (-4320, 96768)])
def test_two_torsion_frobenius_orders(A, B):
    E = CurveModel.short(A, B)
    disc = -16 * (4 * A ** 3 + 27 * B ** 2)
    for p in sympy.primerange(5, 120):
        if disc % p == 0:
            continue
        assert torsion_splitting_degree(E, 2, p) == cubic_splitting_degree_mod_p(A, B, p)


def test_torsion_bound_examples():
    E = parse_weierstrass("y^2 = x^3 + x")
    b8 = torsion_degree_bounds(E, 8)
    assert b8 == 4
    assert torsion_degree_bounds(E, 2) == 2
    E = parse_weierstrass("y^2 = x^3 + 16")
    assert torsion_degree_bounds(E, 2) == 6
    assert 2 % torsion_degree_bounds(E, 3) == 0


def test_bound_divides_larger_level():
    E = parse_weierstrass("y^2 = x^3 + x")
    assert torsion_degree_bounds(E, 8) % torsion_degree_bounds(E, 4) == 0


def test_irreducibility_witness():
    assert irreducible_mod_p_witness(RatPoly([1, 0, 1])) == 3
    assert irreducible_mod_p_witness(RatPoly([-2, 0, 1])) == 3
    assert irreducible_mod_p_witness(RatPoly([-1, 0, 1]), bound=200) is None

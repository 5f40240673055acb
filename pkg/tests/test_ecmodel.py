from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cmik.arith import CMOrder, class_number
from cmik.ecmodel import (CurveModel, conjugate_model, hilbert_class_polynomial,
                          normalize_twist_parameter, parse_weierstrass, poly_eval,
                          quadratic_twist, registry, j_invariant)
from cmik.quadfield import QuadField, QuadInt

# textbook class polynomials, constant term first
KNOWN_H = {
    -3: [0, 1],
    -4: [-1728, 1],
    -7: [3375, 1],
    -8: [-8000, 1],
    -11: [32768, 1],
    -163: [262537412640768000, 1],
    -15: [-121287375, 191025, 1],
    -20: [-681472000, -1264000, 1],
}


def test_registry_size_and_class_numbers():
    reg = registry()
    assert len(reg) == 42
    assert sum(1 for r in reg.values() if r.base is None) == 13
    for disc, row in reg.items():
        assert row.order.disc == disc
        assert class_number(disc) == (1 if row.base is None else 2)


def test_registry_examples():
    reg = registry()
    assert str(reg[-3].model) == "y^2 = x^3 + 16"
    row = reg[-64]
    assert row.base == QuadField(2)
    a = QuadInt(row.base, 0, 1)
    assert a * a == QuadInt(row.base, 2, 0)
    assert row.j == QuadInt(row.base, 41113158120, -29071392966)
    assert reg[-88].base == QuadField(2)


@pytest.mark.parametrize("disc", sorted(registry()))
def test_registry_models_have_stated_j(disc):
    row = registry()[disc]
    assert j_invariant(row.model) == row.j


def test_j_examples():
    assert j_invariant(parse_weierstrass("y^2 = x^3 + 16")) == 0
    assert j_invariant(parse_weierstrass("y^2 = x^3 + x")) == 1728
    assert j_invariant(parse_weierstrass("y^2 + y = x^3 - x^2 - 7x + 10")) == Fraction(-32768)


def test_conjugate_model():
    row = registry()[-15]
    K = row.base
    a = QuadInt(K, 0, 1)
    assert a.conj() == 1 - a
    conj = conjugate_model(row.model)
    assert conj.a3 == 1 - a
    assert conjugate_model(conj) == row.model
    assert j_invariant(conj) == row.j.conj()
    with pytest.raises(ValueError):
        conjugate_model(registry()[-3].model)


@pytest.mark.parametrize("disc", sorted(KNOWN_H))
def test_class_polynomial_matches_known(disc):
    assert hilbert_class_polynomial(disc) == KNOWN_H[disc]


@pytest.mark.parametrize("disc", sorted(registry()))
def test_registry_j_is_class_polynomial_root(disc):
    row = registry()[disc]
    H = hilbert_class_polynomial(disc)
    assert len(H) - 1 == class_number(disc)
    assert poly_eval(H, row.j) == 0


def test_class_polynomial_root_examples():
    K = QuadField(21)
    H = hilbert_class_polynomial(-147)
    # a = (1 + sqrt 21) / 2 for m = 21
    j = QuadInt(K, -21226536456192000, 7604567359488000)
    assert poly_eval(H, j) == 0
    j15 = QuadInt(QuadField(5), -52515, -85995)
    assert poly_eval(hilbert_class_polynomial(-15), j15) == 0


def test_twist_examples():
    E = parse_weierstrass("y^2 = x^3 + x")
    T = quadratic_twist(E, -1)
    assert (T.a4, T.a6) == (1, 0)
    T = quadratic_twist(parse_weierstrass("y^2 = x^3 + 16"), 2)
    assert T.a6 == 128
    with pytest.raises(ValueError):
        quadratic_twist(E, 0)


def test_twist_parameter_examples():
    assert normalize_twist_parameter(parse_weierstrass("y^2 = x^3 - 2x")).tag == "-2"
    assert normalize_twist_parameter(parse_weierstrass("y^2 = x^3 + 1296")).tag == "81"
    assert normalize_twist_parameter(parse_weierstrass("y^2 = x^3 + 9x")).tag == "t^2"
    tc = normalize_twist_parameter(parse_weierstrass("y^2 + y = x^3 - x^2 - 7x + 10"))
    assert (tc.family, tc.disc) == ("quadratic", -11)
    assert tc.tag == "model"


def test_singular_model_rejected():
    with pytest.raises(ValueError):
        parse_weierstrass("y^2 = x^3")


nonzero = st.integers(-40, 40).filter(bool)


@settings(max_examples=60, deadline=None)
@given(nonzero, nonzero)
def test_twists_compose(u, v):
    E = registry()[-7].model
    assert quadratic_twist(quadratic_twist(E, u), v) == quadratic_twist(E, u * v)


@settings(max_examples=60, deadline=None)
@given(nonzero, nonzero, st.sampled_from([-7, -8, -11, -19, -43]))
def test_twist_class_square_invariant(d, u, disc):
    E = registry()[disc].model
    T1 = normalize_twist_parameter(quadratic_twist(E, d))
    T2 = normalize_twist_parameter(quadratic_twist(E, d * u * u))
    assert T1.parameter == T2.parameter
    assert j_invariant(quadratic_twist(E, d)) == registry()[disc].j


@settings(max_examples=40, deadline=None)
@given(nonzero, nonzero)
def test_field_twist_keeps_j(x, y):
    row = registry()[-15]
    alpha = QuadInt(row.base, x, y)
    if alpha.norm() == 0:
        return
    assert j_invariant(quadratic_twist(row.model, alpha)) == row.j

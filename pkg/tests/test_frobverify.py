import io
from math import isqrt

import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from cmik.arith import CMOrder, legendre
from cmik.ecmodel import CurveModel, parse_weierstrass, quadratic_twist, registry
from cmik.frobverify import (FrobSample, DiscriminationError, InsufficientData, BadReduction,
                             consistency_check, discriminate, isogeny_character_values,
                             isogeny_consistent, local_isogeny_character_values,
                             sample_frobenius_data, samples_to_csv, trace_of_frobenius)
from cmik.modgroup import admissible_groups, cartan_params, named_subgroup


def brute_trace(A, B, p):
    sq = {x * x % p for x in range(p)}
    count = 1
    for x in range(p):
        v = (x ** 3 + A * x + B) % p
        count += 1 if v == 0 else (2 if v in sq else 0)
    return p + 1 - count


def test_trace_examples():
    assert trace_of_frobenius(parse_weierstrass("y^2 = x^3 + x"), 5) == 2
    assert trace_of_frobenius(parse_weierstrass("y^2 = x^3 - x"), 5) == -2
    assert brute_trace(1, 0, 5) == 2


def test_bad_primes_refused():
    E = parse_weierstrass("y^2 = x^3 + x")
    with pytest.raises(BadReduction):
        trace_of_frobenius(E, 3)
    with pytest.raises(ValueError):
        trace_of_frobenius(E, 13, method="magic")


coef = st.integers(-50, 50)
small_primes = st.sampled_from(list(sympy.primerange(5, 300)))


@settings(max_examples=80, deadline=None)
@given(coef, coef, small_primes)
def test_charsum_matches_brute_force(A, B, p):
    assume((4 * A ** 3 + 27 * B ** 2) % p)
    E = CurveModel.short(A, B)
    assert trace_of_frobenius(E, p, method="charsum") == brute_trace(A, B, p)


@settings(max_examples=40, deadline=None)
@given(coef, coef, st.sampled_from(list(sympy.primerange(50, 3000))))
def test_bsgs_matches_charsum(A, B, p):
    assume((4 * A ** 3 + 27 * B ** 2) % p)
    E = CurveModel.short(A, B)
    t = trace_of_frobenius(E, p, method="bsgs")
    assert t == trace_of_frobenius(E, p, method="charsum")
    assert abs(t) <= 2 * isqrt(p) + 1 and t * t <= 4 * p


@pytest.mark.parametrize("disc", [-4, -3, -7, -8, -11, -19, -43])
def test_trace_vanishes_at_inert_primes(disc):
    E = registry()[disc].model
    for s in sample_frobenius_data(E, 2, 1, 600):
        if legendre(CMOrder.from_disc(disc).disc_K % s.p, s.p) == -1:
            assert s.trace == 0


def test_samples_over_quadratic_field():
    E = registry()[-15].model
    data = sample_frobenius_data(E, 2, 2, 400)
    assert all(legendre(5, s.p) != -1 for s in data)
    assert all(s.root is not None for s in data)
    assert all(s.det == s.p % 4 for s in data)


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        sample_frobenius_data(parse_weierstrass("y^2 = x^3 + x"), 2, 3, 40)


def test_csv_export():
    data = sample_frobenius_data(parse_weierstrass("y^2 = x^3 + x"), 2, 3, 200)
    text = samples_to_csv(data)
    rows = text.strip().splitlines()
    assert rows[0].split(",")[0] == "p"
    assert len(rows) == len(data) + 1


@pytest.fixture(scope="module")
def j1728_data():
    return sample_frobenius_data(parse_weierstrass("y^2 = x^3 + x"), 2, 3, 3000)


def test_sampling_consistent_with_true_group(j1728_data):
    H = named_subgroup("G_4_1+c'-1", cartan_params(CMOrder(-4), 8))
    v = consistency_check(j1728_data, H)
    assert v.consistent and v.supported and v.coverage == 1.0


def test_sampling_rules_out_wrong_twist():
    data = sample_frobenius_data(parse_weierstrass("y^2 = x^3 - 2x"), 2, 3, 3000)
    H = named_subgroup("G_4_1+c'-1", cartan_params(CMOrder(-4), 8))
    v = consistency_check(data, H)
    assert not v.consistent
    assert v.to_json()["witness"]["p"] == v.witness.p


def test_empty_data_flagged():
    H = named_subgroup("G_4_1+c'-1", cartan_params(CMOrder(-4), 8))
    v = consistency_check([], H)
    assert v.consistent and not v.supported and "empty" in v.flags


def test_modulus_mismatch():
    H = named_subgroup("G_4_1+c'-1", cartan_params(CMOrder(-4), 8))
    with pytest.raises(ValueError):
        consistency_check([FrobSample(5, 2, 16)], H)


def test_discriminate_j1728(j1728_data):
    cands = admissible_groups(CMOrder(-4), 2, modulus=8)
    res = discriminate(j1728_data, cands)
    assert "G_4_1+c'-1" in res.best
    assert "N" in res.survivors and "N" not in res.best
    # c vs c' partners are invisible to (trace, det)
    assert not res.resolved and res.ambiguous


def test_discriminate_j0_three():
    data = sample_frobenius_data(parse_weierstrass("y^2 = x^3 + 16"), 3, 2, 3000)
    res = discriminate(data, admissible_groups(CMOrder(-3), 3, modulus=9))
    assert "G_6_1+c1" in res.best


def test_discriminate_all_ruled_out():
    data = [FrobSample(5, 1, 8)]
    H = named_subgroup("G_4_1+c'-1", cartan_params(CMOrder(-4), 8))
    with pytest.raises(DiscriminationError):
        discriminate(data, [("H", H)])


def test_discriminate_monotone(j1728_data):
    cands = admissible_groups(CMOrder(-4), 2, modulus=8)
    small = set(discriminate(j1728_data[:40], cands).survivors)
    large = set(discriminate(j1728_data, cands).survivors)
    assert large <= small


# isogeny character -------------------------------------------------------------

PRIMES = list(sympy.primerange(5, 400))


def test_isogeny_character_model_vs_twist():
    order = CMOrder(-7)
    E = registry()[-7].model
    squares = {1, 2, 4}
    lam = isogeny_character_values(E, 7, PRIMES, order=order)
    assert {l for _, l in lam} <= squares
    lam_t = isogeny_character_values(quadratic_twist(E, -7), 7, PRIMES, order=order)
    assert {l for _, l in lam_t} - squares


def test_isogeny_character_trace_relation():
    E = registry()[-7].model
    for p, lam in isogeny_character_values(E, 7, PRIMES, order=CMOrder(-7)):
        a = trace_of_frobenius(E, p)
        assert (lam + p * pow(lam, -1, 7) - a) % 7 == 0


def test_isogeny_consistency_with_groups():
    order = CMOrder(-7)
    E = registry()[-7].model
    lam = isogeny_character_values(E, 7, PRIMES, order=order)
    p7 = cartan_params(order, 7)
    assert isogeny_consistent(lam, named_subgroup("G_2_1+c1", p7), order, 7)
    lam_t = isogeny_character_values(quadratic_twist(E, -7), 7, PRIMES, order=order)
    assert not isogeny_consistent(lam_t, named_subgroup("G_2_1+c1", p7), order, 7)
    assert isogeny_consistent(lam_t, named_subgroup("G_2_1+c-1", p7), order, 7)


def test_non_prime_rejected():
    with pytest.raises(ValueError):
        isogeny_character_values(registry()[-7].model, 7, [5, 9], order=CMOrder(-7))


@pytest.mark.parametrize("disc,ell", [(-7, 7), (-147, 7), (-147, 3)])
def test_local_route_agrees_with_global(disc, ell):
    row = registry()[disc]
    order = row.order
    primes = list(sympy.primerange(5, 300))
    glob = {}
    for p, lam in isogeny_character_values(row.model, ell, primes, order=order):
        glob.setdefault(p, set()).add(lam)
    loc = local_isogeny_character_values(row.model, ell, order, primes)
    shared = [(p, lam) for p, lam in loc if p in glob]
    assert shared
    assert all(lam in glob[p] for p, lam in shared)

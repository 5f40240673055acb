import itertools

import pytest
import sympy

from cmik.arith import CMOrder, kronecker
from cmik.classify import (AmbiguousCell, ClassificationRow, UncoveredCell, admissible_images,
                           classification_rows, identify, matching_rows, predict_label,
                           run_method, special_primes, twist_set)
from cmik.data import load
from cmik.ecmodel import CurveModel, parse_weierstrass, quadratic_twist, registry
from cmik.frobverify import discriminate, sample_frobenius_data
from cmik.modgroup import admissible_groups, cm_label
from cmik.quadfield import QuadInt, is_square

REG = registry()
CN1 = sorted(D for D, r in REG.items() if r.base is None)
CN2 = sorted(D for D, r in REG.items() if r.base is not None)


def stored():
    return [ClassificationRow.from_json(r) for r in load("classification.json")["rows"]]


# admissible images -------------------------------------------------------------

def test_admissible_image_counts():
    assert len(admissible_images(-64, 2)) == 9
    im = admissible_images(-88, 2)
    assert len(im) == 5
    assert [d.realized for d in im] == [True, False, False, False, False]
    assert [d.group_id for d in admissible_images(-7, 13)] == ["N"]


@pytest.mark.parametrize("disc", [-4, -3, -8, -16, -64, -147, -27, -7])
def test_admissible_images_well_formed(disc):
    for ell in special_primes(disc):
        im = admissible_images(disc, ell)
        assert im[0].group_id == "N" and im[0].index == 1
        labels = [d.label for d in im if d.realized]
        assert len(labels) == len(set(labels))
        for d in im[1:]:
            assert d.index in (2, 3, 4, 6)


def test_admissible_images_errors():
    with pytest.raises(ValueError):
        admissible_images(-23, 2)
    with pytest.raises(ValueError):
        admissible_images(-4, 9)


@pytest.mark.parametrize("ell", list(sympy.primerange(5, 60)))
def test_j0_large_images(ell):
    n = len(admissible_images(-3, ell))
    assert n == (2 if ell % 9 in (2, 4, 5, 7) else 1)


# generic primes -----------------------------------------------------------------

GENERIC = [p for p in sympy.primerange(5, 400)][:50]


@pytest.mark.parametrize("ell", GENERIC)
def test_generic_prime_rule(ell):
    for D in CN1 + CN2:
        if D == -3 or D % ell == 0:
            continue
        c = "s" if kronecker(D, ell) == 1 else "ns"
        assert str(predict_label(D, ell)) == f"{ell}.0.{c}-1.1.1"
    c = "s" if ell % 3 == 1 else "ns"
    assert str(predict_label(-3, ell)).startswith(f"{ell}.0.{c}-")


@pytest.mark.parametrize("ell", [5, 7, 11, 13, 23, 29])
def test_j0_large_rule_against_sampling(ell):
    groups = admissible_groups(CMOrder(-3), ell)
    for e in range(3):
        data = sample_frobenius_data(CurveModel.short(0, 16 * ell ** e), ell, 1, 3000)
        best = discriminate(data, groups).best
        lab = predict_label(-3, ell, ell ** e)
        assert len(best) == 1
        assert (lab.index == 3) == (best[0] != "N")
        # cubes do not change the answer
        assert predict_label(-3, ell, ell ** e * 8) == lab


# worked examples ------------------------------------------------------------------

@pytest.mark.parametrize("disc,ell,d,label", [
    (-4, 2, -2, "2.2.ns7-16.4.4"),
    (-4, 2, 1, "2.2.ns7-4.4.2"),
    (-4, 2, 4, "2.2.ns7-4.4.1"),
    (-3, 2, 1, "2.0.ns5-1.1.1"),
    (-3, 2, 4, "2.0.ns5-2.3.1"),
    (-3, 3, 1, "3.1.ns-9.6.1"),
    (-3, 3, 81, "3.1.ns-27.6.1"),
    (-7, 7, 1, "7.1.ns-7.2.1"),
    (-7, 7, -7, "7.1.ns-7.2.2"),
    (-7, 7, 3, "7.1.ns-1.1.1"),
    (-27, 3, 1, "3.3.ns-3.2.1"),
    (-8, 2, 5, "2.3.ns7-1.1.1"),
])
def test_predict_label_examples(disc, ell, d, label):
    assert str(predict_label(disc, ell, d)) == label


def field_elt(disc, x, y):
    return QuadInt(REG[disc].base, x, y)


def test_predict_label_class_number_two():
    assert str(predict_label(-147, 7, field_elt(-147, -7, 0))) == "7.2.s-7.2.1"
    assert str(predict_label(-147, 7, 1)) == "7.2.s-7.2.2"
    assert str(predict_label(-147, 3, field_elt(-147, 2, -1))) == "3.1.ns-3.2.2"
    assert str(predict_label(-40, 5, 1)) == "5.1.ns-1.1.1"
    assert str(predict_label(-88, 2, 1)) == "2.3.ns5-1.1.1"


def test_predict_label_errors():
    with pytest.raises(ValueError):
        predict_label(-4, 8, 1)
    with pytest.raises(ValueError):
        predict_label(-147, 7, 0)
    amb = next(r for r in stored() if r.provenance == "AMBIGUOUS")
    with pytest.raises(AmbiguousCell) as ei:
        predict_label(amb.order, amb.ell, amb.twist)
    assert ei.value.payload["status"] == "AMBIGUOUS"
    assert len(ei.value.payload["candidates"]) >= 2


def rational_twists(ell):
    base = [1, 5, 7, 11, ell]
    out = set()
    for a, b, p, s in itertools.product(range(4), range(6), base, (1, -1)):
        out.add(s * 2 ** a * 3 ** b * p)
    out |= {s * t ** k for t in (2, 3, 5) for k in (2, 3) for s in (1, -1)}
    return sorted(out)


@pytest.mark.parametrize("disc", CN1)
def test_partition_class_number_one(disc):
    """Every twist lands in exactly one box; every specific box is reached."""
    for ell in special_primes(disc):
        rows = classification_rows(disc, ell)
        reached = set()
        for d in rational_twists(ell):
            hits, fall = matching_rows(disc, ell, d)
            assert len(hits) <= 1
            assert len(fall) == 1
            reached.add((hits or fall)[0])
        assert reached == set(rows), (disc, ell)


@pytest.mark.parametrize("disc", CN2)
def test_partition_class_number_two(disc):
    base = REG[disc].base
    for ell in special_primes(disc):
        rows = classification_rows(disc, ell)
        assert sum(1 for r in rows if r.twist is None) == 1
        for alpha in twist_set(disc, ell):
            hits, fall = matching_rows(disc, ell, alpha)
            assert len(hits) <= 1 and len(fall) == 1
        specific = [r.twist for r in rows if r.twist is not None]
        for u, v in itertools.combinations(specific, 2):
            assert not is_square(u / v)


def test_twist_set_sizes():
    A = twist_set(-147, 7)
    assert len(A) == 8
    for u, v in itertools.combinations(A, 2):
        assert not is_square(u / v)
    with pytest.raises(ValueError):
        twist_set(-4, 2)


# the data file --------------------------------------------------------------------

def test_data_file_provenances():
    rows = stored()
    assert {r.provenance for r in rows} <= {"TRANSCRIBED", "COMPUTED", "AMBIGUOUS"}
    assert all(r.ambiguous_with for r in rows if r.provenance == "AMBIGUOUS")
    assert all(not r.ambiguous_with for r in rows if r.provenance != "AMBIGUOUS")
    for r in rows:
        assert ClassificationRow.from_json(r.to_json()) == r


def test_rows_agree_with_group_labels():
    """Each stored label is the label computed from its group."""
    cache = {}
    for r in stored():
        key = (r.order.disc, r.ell)
        if key not in cache:
            cache[key] = dict(admissible_groups(r.order, r.ell))
        G = cache[key]
        if r.group_id in G:
            assert str(cm_label(G[r.group_id], r.order, r.ell)) == r.label, r
        else:
            assert r.group_id == "N" or r.provenance == "TRANSCRIBED"


def test_rows_use_admissible_ids():
    for r in stored():
        ids = {d.group_id for d in admissible_images(r.order, r.ell)}
        assert r.group_id in ids, r


# identification -------------------------------------------------------------------

def test_identify_rational():
    info = identify(parse_weierstrass("y^2 = x^3 + 1296"))
    assert info["disc"] == -3
    assert info["labels"][3] == "3.1.ns-27.6.1"
    assert info["labels"][2] == "2.0.ns5-1.1.1"


def test_identify_over_field():
    row = REG[-147]
    E = quadratic_twist(row.model, field_elt(-147, -7, 0))
    info = identify(E)
    assert info["disc"] == -147
    assert info["labels"][7] == "7.2.s-7.2.1"


def test_identify_rejects_non_cm():
    with pytest.raises(ValueError):
        identify(parse_weierstrass("y^2 = x^3 + 2x + 3"))


# the sampling method ---------------------------------------------------------------

def same_class(u, v):
    return is_square(u / v)


@pytest.mark.slow
@pytest.mark.parametrize("disc,ell", [(-147, 7), (-147, 3), (-88, 11)])
def test_run_method_reproduces_stored_rows(disc, ell):
    rows = run_method(disc, ell)
    ref = [r for r in classification_rows(disc, ell) if r.twist is not None]
    got = [r for r in rows if r.twist is not None]
    assert len(got) == len(ref)
    for r in ref:
        match = [g for g in got if same_class(g.twist, r.twist)]
        assert len(match) == 1 and match[0].label == r.label
    assert rows[-1].label.endswith("-1.1.1")


@pytest.mark.slow
def test_run_method_maximal_cell():
    rows = run_method(-15, 2)
    assert [r.group_id for r in rows] == ["N"]


@pytest.mark.slow
def test_run_method_ambiguous_cell():
    rows = run_method(-40, 2)
    amb = [r for r in rows if r.provenance == "AMBIGUOUS"]
    assert len(amb) == 4
    for r in amb:
        name, g = r.group_id.split("+")
        assert set(r.ambiguous_with) == {name + ("+c-1" if g == "c1" else "+c1")}

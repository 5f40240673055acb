"""Classification of CM l-adic images by twist.

Three sources feed the answers: hand-transcribed rows shipped in
data/classification.json (provenance TRANSCRIBED), rows computed by run_method and
stored in the same file (COMPUTED or AMBIGUOUS), and closed-form rules for the
cases where the answer depends only on congruences of l and on cube or square
classes of the twist parameter.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .arith import CMOrder, kronecker
from .ecmodel import (TwistClass, _is_cube, _j1728_tag, _pm12_tag, _rational_core,
                      j0_tag, j_invariant, normalize_twist_parameter, quadratic_twist,
                      registry, registry_lookup, conjugate_model)
from .frobverify import (InsufficientData, discriminate, isogeny_consistent,
                         local_isogeny_character_values, sample_frobenius_data)
from .modgroup import (CMLabel, _names_and_gammas, admissible_groups, cm_label,
                       group_context, label_prefix, working_modulus)
from .quadfield import QuadInt, is_square, twist_candidates

__all__ = ["ClassificationRow", "ImageDescriptor", "UncoveredCell", "AmbiguousCell",
           "admissible_images", "predict_label", "matching_rows", "classification_rows", "run_method",
           "regen_tables", "twist_set", "special_primes", "identify"]

PROVENANCES = ("TRANSCRIBED", "COMPUTED", "AMBIGUOUS")


class UncoveredCell(LookupError):
    """No stored row or rule covers the requested (order, l, twist)."""

    def __init__(self, msg, payload=None):
        super().__init__(msg)
        self.payload = payload or {}


class AmbiguousCell(UncoveredCell):
    """The covering row was left ambiguous by the sampling method."""


def _order(order):
    if isinstance(order, CMOrder):
        return order
    return CMOrder.from_disc(int(order))


# rows ----------------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationRow:
    """One cell: twists satisfying condition have image label."""

    order: CMOrder
    ell: int
    family: str
    condition: str
    label: str
    group_id: str
    provenance: str
    twist: object = None  # square-class representative (quadratic rows)
    ambiguous_with: tuple = ()
    source: str = ""

    def to_json(self):
        tw = self.twist
        if isinstance(tw, QuadInt):
            tw = tw.to_json()
        elif tw is not None:
            tw = [str(tw), "0"]
        out = {"disc": self.order.disc, "ell": self.ell, "family": self.family,
               "condition": self.condition, "twist": tw, "label": self.label,
               "group_id": self.group_id, "provenance": self.provenance,
               "source": self.source}
        if self.ambiguous_with:
            out["ambiguous_with"] = list(self.ambiguous_with)
        return out

    @classmethod
    def from_json(cls, rec):
        order = CMOrder.from_disc(rec["disc"])
        tw = rec.get("twist")
        if tw is not None:
            base = registry_lookup(order).base
            tw = QuadInt.from_json(base, tw) if base is not None else Fraction(tw[0])
        if rec["provenance"] not in PROVENANCES:
            raise ValueError(f"bad provenance {rec['provenance']!r}")
        return cls(order, rec["ell"], rec["family"], rec["condition"], rec["label"],
                   rec["group_id"], rec["provenance"], tw,
                   tuple(rec.get("ambiguous_with", ())), rec.get("source", ""))


def _stored():
    from .data import load
    doc = load("classification.json")
    out = {}
    for rec in doc["rows"]:
        row = ClassificationRow.from_json(rec)
        out.setdefault((row.order.disc, row.ell), []).append(row)
    return out


_STORED = None


def _stored_rows(order, ell):
    global _STORED
    if _STORED is None:
        _STORED = _stored()
    return _STORED.get((order.disc, ell), [])


def _reset_cache():
    global _STORED
    _STORED = None


# admissible images ---------------------------------------------------------

@dataclass(frozen=True)
class ImageDescriptor:
    """A candidate image allowed by the classification; realized is False when the
    named generators do not give a proper subgroup of the normalizer."""

    group_id: str
    index: int
    realized: bool
    label: str = None

    def to_json(self):
        return {"group_id": self.group_id, "index": self.index,
                "realized": self.realized, "label": self.label}


def _index_of(name):
    if name == "C3":
        return 3
    return int(name.split("_")[1])


def admissible_images(order, ell):
    """Every image the classification allows for (order, l), the maximal one first."""
    order = _order(order)
    if order.class_number() > 2:
        raise ValueError(f"class number {order.class_number()} is not supported")
    if not sympy.isprime(ell):
        raise ValueError(f"{ell} is not prime")
    names, gammas = _names_and_gammas(order, ell)
    out = [ImageDescriptor("N", 1, True, str(CMLabel.build(order, ell, 1, 1, 1)))]
    if not names:
        return out
    if group_context(order, ell) == "j0_large":
        # the index-3 group is unique; its label follows directly
        gid = f"{names[0]}+c1"
        out.append(ImageDescriptor(gid, 3, True, str(CMLabel.build(order, ell, ell, 3, 1))))
        return out
    groups = admissible_groups(order, ell)
    realized = {gid: H for gid, H in groups}
    seen = set(realized)
    for name in names:
        for g in gammas:
            gid = f"{name}+{g}"
            if gid in realized:
                out.append(ImageDescriptor(gid, _index_of(name), True,
                                           str(cm_label(realized[gid], order, ell))))
            elif not _is_duplicate(gid, realized, order, ell):
                out.append(ImageDescriptor(gid, _index_of(name), False))
            seen.add(gid)
    return out


def _is_duplicate(gid, realized, order, ell):
    """True when gid names a proper subgroup already listed under another id."""
    from .modgroup import canonical_key, cartan_params, named_subgroup, _normalizer_elements
    params = cartan_params(order, working_modulus(order, ell))
    name, g = gid.split("+")
    H = named_subgroup(name, params, g)
    if len(H.elements) == len(_normalizer_elements(params)) or not H.elements <= _normalizer_elements(params):
        return False
    k = canonical_key(H, params)
    return any(canonical_key(G, params) == k for G in realized.values())


# rule rows -----------------------------------------------------------------

def _j0_large_exponent(ell):
    """r in {1, 2} with twists l^r t^3 giving the index-3 image, or 0."""
    if ell % 3 == 1:
        r = ((ell - 1) // 3) % 3
    else:
        r = (-((ell + 1) // 3)) % 3
    return r


def _prefix(order, ell):
    nu, c = label_prefix(order, ell)
    return f"{ell}.{nu}.{c}-"


def _rule_rows(order, ell):
    """Rows produced by closed-form rules (no stored data needed)."""
    ctx = group_context(order, ell)
    pre = _prefix(order, ell)
    D = order.disc
    fam = _family(order)
    if ctx == "j0_large":
        r = _j0_large_exponent(ell)
        if r == 0:
            return [ClassificationRow(order, ell, fam, "t", pre + "1.1.1", "N", "TRANSCRIBED",
                                      source="rule:j0_large")]
        gid = admissible_images(order, ell)[1].group_id
        return [ClassificationRow(order, ell, fam, f"{ell}^{r}t^3", pre + f"{ell}.3.1", gid,
                                  "TRANSCRIBED", source="rule:j0_large"),
                ClassificationRow(order, ell, fam, "otherwise", pre + "1.1.1", "N", "TRANSCRIBED",
                                  source="rule:j0_large")]
    if ctx == "odd_divides" and order.class_number() == 1:
        return [ClassificationRow(order, ell, fam, "model", pre + f"{ell}.2.1", "G_2_1+c1",
                                  "TRANSCRIBED", Fraction(1), source="rule:odd_divides"),
                ClassificationRow(order, ell, fam, str(-ell), pre + f"{ell}.2.2", "G_2_1+c-1",
                                  "TRANSCRIBED", Fraction(-ell), source="rule:odd_divides"),
                ClassificationRow(order, ell, fam, "otherwise", pre + "1.1.1", "N", "TRANSCRIBED",
                                  source="rule:odd_divides")]
    if ctx == "maximal":
        return [ClassificationRow(order, ell, fam, "t", pre + "1.1.1", "N", "TRANSCRIBED",
                                  source="rule:maximal")]
    return []


def _family(order):
    return {-4: "j1728", -3: "j0", -8: "disc8", -16: "disc16"}.get(order.disc, "quadratic")


def classification_rows(order, ell):
    """All rows covering (order, l): stored rows first, else rule rows.

    Raises UncoveredCell when neither exists."""
    order = _order(order)
    rows = _stored_rows(order, ell)
    if rows:
        return list(rows)
    rows = _rule_rows(order, ell)
    if rows:
        return rows
    raise UncoveredCell(f"no rows for disc {order.disc}, l = {ell}",
                        {"disc": order.disc, "ell": ell, "status": "UNCOVERED"})


# prediction ----------------------------------------------------------------

_TAGGERS = {"j1728": (4, _j1728_tag), "j0": (6, j0_tag),
            "disc8": (2, _pm12_tag), "disc16": (2, _pm12_tag)}


def _rational_parameter(order, twist):
    """Canonical integer parameter of a twist over Q for the order's family."""
    if isinstance(twist, TwistClass):
        return twist.parameter
    fam = _family(order)
    k = _TAGGERS[fam][0] if fam in _TAGGERS else 2
    return _rational_core(Fraction(twist), k)


def _tag(order, ell, d):
    fam = _family(order)
    if fam == "j0" and ell == 2:
        return "4t^3" if _is_cube(2 * d) else "generic"
    if fam in _TAGGERS:
        return _TAGGERS[fam][1](d)
    return str(d)


def _row_matches(row, order, ell, d):
    """Whether the rational twist parameter d satisfies row.condition."""
    c = row.condition
    if c in ("t", "generic", "otherwise"):
        return None  # fallback row
    if c == "model":
        return d == 1
    if c.endswith("^3") and "^" in c[:-2]:  # l^r t^3
        r = int(c.split("^")[1][0])
        return _is_cube(d * ell ** (3 - r))
    return _tag(order, ell, d) == c


def _label_of(row):
    lab = CMLabel.parse(row.label)
    return CMLabel(lab.ell, lab.nu, lab.sqclass, lab.level, lab.index, lab.tiebreak,
                   group_id=row.group_id)


def _select(rows, matches, payload):
    hit = [r for r in rows if matches(r) is True]
    if not hit:
        hit = [r for r in rows if matches(r) is None]
    if len(hit) != 1:
        raise UncoveredCell(f"{len(hit)} rows match", payload)
    row = hit[0]
    if row.provenance == "AMBIGUOUS":
        raise AmbiguousCell("the sampling method could not separate "
                            + ", ".join((row.group_id,) + row.ambiguous_with),
                            dict(payload, status="AMBIGUOUS", candidates=[row.group_id, *row.ambiguous_with],
                                 labels=[row.label]))
    return row


def _matcher(order, ell, twist):
    if order.class_number() == 1:
        d = _rational_parameter(order, 1 if twist is None else twist)
        return lambda r: _row_matches(r, order, ell, d)
    base = registry_lookup(order).base
    alpha = QuadInt(base, twist) if not isinstance(twist, QuadInt) else twist
    if not alpha:
        raise ValueError("twist by 0")
    return lambda r: None if r.twist is None else is_square(alpha / r.twist)


def matching_rows(order, ell, twist=1):
    """(rows whose condition the twist satisfies, fallback rows)."""
    order = _order(order)
    rows = classification_rows(order, ell)
    m = _matcher(order, ell, twist)
    hits = [(r, m(r)) for r in rows]
    return [r for r, v in hits if v is True], [r for r, v in hits if v is None]


def predict_label(order, ell, twist=1):
    """The CM label of the twist of the family (or registry) model.

    twist is a rational family parameter, a TwistClass, or for orders of class
    number 2 an element of the field of definition.
    """
    order = _order(order)
    if not sympy.isprime(ell):
        raise ValueError(f"{ell} is not prime")
    rows = classification_rows(order, ell)
    payload = {"disc": order.disc, "ell": ell, "twist": str(twist)}
    return _label_of(_select(rows, _matcher(order, ell, twist), payload))


# method pipeline -----------------------------------------------------------

def _bad_primes(curve):
    """Rational primes below the primes of bad reduction of the model."""
    n = curve.discriminant()
    n = n.norm() if isinstance(n, QuadInt) else Fraction(n)
    ps = set(sympy.factorint(abs(n.numerator))) | set(sympy.factorint(n.denominator))
    return sorted(ps)


def twist_set(order, ell):
    """The candidate twists A_alpha for (order, l), one per square class."""
    order = _order(order)
    row = registry_lookup(order)
    if row.base is None:
        raise ValueError("twist sets are for orders of class number 2")
    primes = set(_bad_primes(row.model)) | {ell}
    return twist_candidates(row.base, primes)


def _sampling_exponent(order, ell):
    M, n = working_modulus(order, ell), 0
    while M > 1:
        M //= ell
        n += 1
    return n


def _classify_twist(curve, order, ell, groups, n, prime_budget, max_samples):
    data = sample_frobenius_data(curve, ell, n, prime_budget, max_samples=max_samples)
    res = discriminate(data, groups)
    best = list(res.best)
    if len(best) > 1 and order.disc % ell == 0 and ell != 2:
        lam = local_isogeny_character_values(curve, ell, order, list(sympy.primerange(5, 600)))
        G = dict(groups)
        best = [b for b in best if isogeny_consistent(lam, G[b], order, ell)] or best
    return best


def run_method(order, ell, prime_budget=6000, max_samples=500):
    """Classify every twist in the candidate set by Frobenius sampling.

    Returns one row per twist class with a non-maximal image, then a single
    fallback row for all other twists (whose image contains -Id and is the
    maximal one)."""
    order = _order(order)
    row = registry_lookup(order)
    if row.base is None:
        raise ValueError("run_method applies to orders of class number 2")
    pre = _prefix(order, ell)
    groups = admissible_groups(order, ell)
    fallback = ClassificationRow(order, ell, "quadratic", "otherwise", pre + "1.1.1", "N",
                                 "COMPUTED", source="method")
    if len(groups) == 1:
        return [fallback]
    G = dict(groups)
    n = _sampling_exponent(order, ell)
    out = []
    for alpha in twist_set(order, ell):
        curve = quadratic_twist(row.model, alpha)
        try:
            best = _classify_twist(curve, order, ell, groups, n, prime_budget, max_samples)
        except InsufficientData:
            best = _classify_twist(curve, order, ell, groups, n, 4 * prime_budget, max_samples)
        if best == ["N"]:
            continue
        gid = best[0]
        label = str(cm_label(G[gid], order, ell))
        if len(best) > 1:
            out.append(ClassificationRow(order, ell, "quadratic", "square class", label, gid,
                                         "AMBIGUOUS", alpha, tuple(best[1:]), "method"))
        else:
            out.append(ClassificationRow(order, ell, "quadratic", "square class", label, gid,
                                         "COMPUTED", alpha, (), "method"))
    return out + [fallback]


def special_primes(order):
    """Primes l where the image can be non-maximal: 2, 3 for j = 0, and l | disc."""
    order = _order(order)
    ps = {2} | set(sympy.factorint(abs(order.disc)))
    if order.disc == -3:
        ps.add(3)
    return sorted(ps)


def regen_tables(discs=None, write=False, progress=None, **kw):
    """Recompute the method rows for every class-number-2 (order, l) without a
    stored transcribed row, and optionally write them to the data file."""
    from .data import data_dir
    rows = []
    for D, reg in sorted(registry().items(), reverse=True):
        if reg.base is None or (discs is not None and D not in discs):
            continue
        order = reg.order
        for ell in special_primes(order):
            if group_context(order, ell) == "maximal":
                continue
            if any(r.provenance == "TRANSCRIBED" for r in _stored_rows(order, ell)):
                continue
            if progress:
                progress(D, ell)
            rows += run_method(order, ell, **kw)
    if write:
        path = data_dir() / "classification.json"
        doc = json.loads(path.read_text())
        keep = [r for r in doc["rows"] if r["provenance"] == "TRANSCRIBED"
                or (discs is not None and r["disc"] not in discs)]
        doc["rows"] = keep + [r.to_json() for r in rows]
        path.write_text(json.dumps(doc, indent=1) + "\n")
        _reset_cache()
    return rows


# identification ------------------------------------------------------------

def _match_registry(curve):
    """(order, alpha or rational d) for a CM curve over Q or Q(sqrt m)."""
    j = j_invariant(curve)
    if curve.base is None:
        tc = normalize_twist_parameter(curve)
        return CMOrder.from_disc(tc.disc), tc
    for D, row in registry().items():
        if row.base != curve.base:
            continue
        for ref, conj in ((row.model, False), (conjugate_model(row.model), True)):
            if j_invariant(ref) == j:
                A, B = curve.short_coefficients()
                A0, B0 = ref.short_coefficients()
                alpha = (B / B0) / (A / A0)
                return row.order, (alpha.conj() if conj else alpha)
    raise ValueError("j-invariant is not a CM j-invariant of class number 1 or 2")


def identify(curve):
    """Order, twist class and the label at every special prime."""
    order, twist = _match_registry(curve)
    out = {"disc": order.disc, "twist": str(twist), "labels": {}, "generic": _generic_rule(order)}
    for ell in special_primes(order):
        try:
            out["labels"][ell] = str(predict_label(order, ell, twist))
        except AmbiguousCell as e:
            out["labels"][ell] = e.payload
        except UncoveredCell as e:
            out["labels"][ell] = e.payload
    return out


def _generic_rule(order):
    if order.disc == -3:
        return ("l > 3: l.0.s-1.1.1 for l = 1 mod 3, l.0.ns-1.1.1 for l = 2 mod 3; "
                "index-3 image l.0.*-l.3.1 for twists l^r t^3 when l = 2, 4, 5, 7 mod 9")
    return (f"l not dividing {2 * order.disc}: l.0.s-1.1.1 if ({order.disc}/l) = 1, "
            "l.0.ns-1.1.1 otherwise")

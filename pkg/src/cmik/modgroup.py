"""Cartan subgroups, their normalizers and the named CM image subgroups of
GL(2, Z/l^k Z), with index, level of definition and CM labels.

Matrices are packed as 4-tuples (a, b, c, d) of residues for [[a, b], [c, d]].
"""

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

from .arith import (CMOrder, factorize, kronecker, legendre, sqrt_mod,
                    square_class_2adic, valuation)

__all__ = [
    "GL2Mod", "CartanParams", "Subgroup", "CMLabel", "cartan_params",
    "cartan_group", "normalizer_group", "close_generators", "named_subgroup",
    "join", "subgroup_index", "level_of_definition", "cm_label",
    "conjugate_equal", "canonical_key", "admissible_groups", "group_context",
    "working_modulus", "zeta3_matrix", "GAMMAS",
]

GAMMAS = ("c1", "c-1", "c'1", "c'-1")


def mat_mul(A, B, M):
    a, b, c, d = A
    e, f, g, h = B
    return ((a * e + b * g) % M, (a * f + b * h) % M,
            (c * e + d * g) % M, (c * f + d * h) % M)


def mat_det(A, M):
    return (A[0] * A[3] - A[1] * A[2]) % M


def mat_inv(A, M):
    di = pow(mat_det(A, M), -1, M)
    a, b, c, d = A
    return (d * di % M, -b * di % M, -c * di % M, a * di % M)


def mat_reduce(A, m):
    return tuple(x % m for x in A)


def _identity(M):
    return (1 % M, 0, 0, 1 % M)


@dataclass(frozen=True)
class GL2Mod:
    entries: tuple
    modulus: int

    def __post_init__(self):
        object.__setattr__(self, "entries", mat_reduce(tuple(self.entries), self.modulus))
        if len(self.entries) != 4:
            raise ValueError("a 2x2 matrix needs four entries")
        if _unit_gcd(self.det(), self.modulus) != 1:
            raise ValueError(f"{self.entries} is not invertible mod {self.modulus}")

    def det(self):
        return mat_det(self.entries, self.modulus)

    def __mul__(self, other):
        if self.modulus != other.modulus:
            raise ValueError("moduli differ")
        return GL2Mod(mat_mul(self.entries, other.entries, self.modulus), self.modulus)

    def inverse(self):
        return GL2Mod(mat_inv(self.entries, self.modulus), self.modulus)

    def reduce(self, m):
        if self.modulus % m:
            raise ValueError(f"{m} does not divide {self.modulus}")
        return GL2Mod(self.entries, m)

    def trace(self):
        return (self.entries[0] + self.entries[3]) % self.modulus


def _unit_gcd(x, M):
    return gcd(x, M)


def _prime_power(M):
    fac = factorize(M)
    if M < 2 or len(fac.factors) != 1:
        raise ValueError(f"{M} is not a prime power")
    return fac.factors[0]


@dataclass(frozen=True)
class CartanParams:
    delta: int
    phi: int
    order: CMOrder
    modulus: int
    ell: int
    k: int

    def c(self, a, b):
        """The Cartan matrix c_{delta,phi}(a, b)."""
        M = self.modulus
        return ((a + b * self.phi) % M, b % M, self.delta * b % M, a % M)

    def c_eps(self, eps):
        # diagonal (eps, -eps); the lower-left entry -eps*phi is what makes
        # c_eps normalize the Cartan group when phi != 0
        M = self.modulus
        return (eps % M, 0, -eps * self.phi % M, -eps % M)

    def c_prime(self, eps):
        M = self.modulus
        return (0, eps % M, eps % M, 0)

    def gamma(self, name):
        table = {"c1": self.c_eps(1), "c-1": self.c_eps(-1),
                 "c'1": self.c_prime(1), "c'-1": self.c_prime(-1)}
        if name not in table:
            raise ValueError(f"unknown gamma {name!r}")
        return table[name]

    def frac(self, num, den):
        return num * pow(den, -1, self.modulus) % self.modulus

    def at(self, modulus):
        return cartan_params(self.order, modulus)


def cartan_params(order, modulus):
    ell, k = _prime_power(modulus)
    D = order.disc
    if D % 4 == 0:
        delta, phi = (D // 4) % modulus, 0
    elif ell % 2:
        delta, phi = D * pow(4, -1, modulus) % modulus, 0
    else:
        delta, phi = ((order.disc_K - 1) // 4) * order.f**2 % modulus, order.f % modulus
    return CartanParams(delta, phi, order, modulus, ell, k)


class Subgroup:
    """A finite subgroup of GL(2, Z/MZ) given by generators, elements or both."""

    def __init__(self, modulus, generators=(), elements=None, name=None):
        self.modulus = modulus
        self._gens = None if generators is None else tuple(mat_reduce(g, modulus) for g in generators)
        self._elements = None if elements is None else frozenset(elements)
        self.name = name
        if self._gens is None and self._elements is None:
            raise ValueError("need generators or elements")

    @property
    def elements(self):
        if self._elements is None:
            self._elements = _closure(self._gens, self.modulus)
        return self._elements

    @property
    def generators(self):
        if self._gens is None:
            self._gens = _generating_set(self._elements, self.modulus)
        return self._gens

    def order(self):
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, A):
        if isinstance(A, GL2Mod):
            A = A.entries
        return mat_reduce(A, self.modulus) in self.elements

    def __eq__(self, other):
        return (isinstance(other, Subgroup) and self.modulus == other.modulus
                and self.elements == other.elements)

    def __hash__(self):
        return hash((self.modulus, self.elements))

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"<Subgroup{tag} mod {self.modulus}, order {self.order()}>"

    def sorted_elements(self):
        return sorted(self.elements)

    def issubset(self, other):
        return self.modulus == other.modulus and self.elements <= other.elements

    def reduce(self, m):
        if self.modulus % m:
            raise ValueError(f"{m} does not divide {self.modulus}")
        return Subgroup(m, elements={mat_reduce(x, m) for x in self.elements})

    def to_json(self):
        return {"modulus": self.modulus,
                "generators": [list(g) for g in self.generators]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return close_generators([tuple(g) for g in obj["generators"]], obj["modulus"])


def _closure(gens, M, start=None):
    one = _identity(M)
    seen = {one} if start is None else set(start) | {one}
    frontier = list(seen)
    gens = [g for g in gens if g != one]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mat_mul(x, g, M)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def _generating_set(elements, M):
    gens = []
    current = frozenset({_identity(M)})
    for x in sorted(elements):
        if x not in current:
            gens.append(x)
            current = _closure(gens, M, start=current)
            if len(current) == len(elements):
                break
    return tuple(gens)


def close_generators(gens, modulus=None, name=None):
    """The smallest subgroup containing gens (breadth-first closure)."""
    raw = []
    for g in gens:
        if isinstance(g, GL2Mod):
            if modulus is None:
                modulus = g.modulus
            elif g.modulus != modulus:
                raise ValueError("generators have mixed moduli")
            raw.append(g.entries)
        else:
            raw.append(tuple(g))
    if modulus is None:
        raise ValueError("modulus required")
    raw = [mat_reduce(g, modulus) for g in raw]
    for g in raw:
        if _unit_gcd(mat_det(g, modulus), modulus) != 1:
            raise ValueError(f"{g} is not invertible mod {modulus}")
    return Subgroup(modulus, generators=raw, name=name)


def join(H, *extra, name=None):
    """The subgroup generated by H and the extra matrices."""
    M = H.modulus
    extra = [mat_reduce(g, M) for g in extra]
    gens = list(H.generators) + extra
    els = _closure(gens, M, start=H.elements)
    return Subgroup(M, generators=gens, elements=els, name=name)


@lru_cache(maxsize=None)
def _cartan_elements(params):
    M = params.modulus
    out = set()
    for a in range(M):
        for b in range(M):
            A = params.c(a, b)
            if _unit_gcd(mat_det(A, M), M) == 1:
                out.add(A)
    return frozenset(out)


def cartan_group(params):
    return Subgroup(params.modulus, generators=None, elements=_cartan_elements(params), name="C")


@lru_cache(maxsize=None)
def _normalizer_elements(params):
    M = params.modulus
    c1 = params.c_eps(1)
    C = _cartan_elements(params)
    return frozenset(C | {mat_mul(c1, x, M) for x in C})


def normalizer_group(params):
    return Subgroup(params.modulus, generators=None, elements=_normalizer_elements(params), name="N")


def zeta3_matrix(params):
    """Image of a primitive cube root of unity for disc -3 with l = 3."""
    M = params.modulus
    f = params.frac
    return (f(-1, 2), 1, f(-3, 4), f(-1, 2))


def group_context(order, ell):
    """Which family of admissible images applies to (order, ell)."""
    D = order.disc
    if ell == 2:
        if D == -4:
            return "j1728"
        if D == -3:
            return "j0_2"
        if D % 16 == 0 or _index2_second_case(order):
            return "index2_2adic"
        return "maximal"
    if D == -3:
        return "j0_3" if ell == 3 else "j0_large"
    if D % ell == 0:
        return "odd_divides"
    return "maximal"


def _index2_second_case(order):
    dk, f = order.disc_K, order.f
    return (dk % 8 == 0 or (dk % 8 == 4 and f % 4 == 0)
            or (dk % 4 == 1 and f % 8 == 0))


def _index2_names(order):
    names = []
    if order.disc % 16 == 0:
        names += ["G_2_1", "G_2_2"]
    if _index2_second_case(order):
        names += ["G_2_3", "G_2_4"]
    return names


def _names_and_gammas(order, ell):
    ctx = group_context(order, ell)
    if ctx == "j1728":
        return ["G_2_1", "G_2_2", "G_4_1", "G_4_2", "G_4_3", "G_4_4"], list(GAMMAS)
    if ctx == "index2_2adic":
        return _index2_names(order), ["c1", "c-1"]
    if ctx == "j0_2":
        return ["C3"], ["c'1", "c'-1"]
    if ctx == "j0_3":
        return ["G_2_1", "G_3_1", "G_3_2", "G_3_3", "G_6_1", "G_6_2", "G_6_3"], ["c1", "c-1"]
    if ctx == "j0_large":
        names = {2: ["C3"], 5: ["C3"], 4: ["G_3_1"], 7: ["G_3_1"]}.get(ell % 9, [])
        return names, ["c1", "c-1"]
    if ctx == "odd_divides":
        return ["G_2_1"], ["c1", "c-1"]
    return [], []


def _hensel_sqrt(a, ell, k):
    r = sqrt_mod(a, ell)
    if r is None:
        return None
    M = ell
    for _ in range(1, k):
        M *= ell
        r = (r - (r * r - a) * pow(2 * r, -1, M)) % M
    return r % ell**k


def _base_group(name, params):
    """The Cartan-contained group called name in the context of params."""
    M = params.modulus
    ell = params.ell
    order = params.order
    ctx = group_context(order, ell)
    c = params.c
    C = _cartan_elements(params)
    I = lambda s: (s % M, 0, 0, s % M)

    if name == "C":
        return cartan_group(params)
    if ctx == "j1728":
        table = {
            "G_2_1": [I(-1), I(3), (1, 2, -2, 1)],
            "G_2_2": [I(-1), I(3), (2, 1, -1, 2)],
            "G_4_1": [I(5), (1, 2, -2, 1)],
            "G_4_2": [I(5), (-1, -2, 2, -1)],
            "G_4_3": [I(-3), (2, -1, 1, 2)],
            "G_4_4": [I(-3), (-2, 1, -1, -2)],
        }
        if name in table:
            return close_generators(table[name], M, name=name)
    elif ctx == "index2_2adic" and name in _index2_names(order):
        d = params.delta
        table = {
            "G_2_1": [I(5), (1, 1, d, 1)],
            "G_2_2": [I(5), (-1, -1, -d, -1)],
            "G_2_3": [I(3), (1, 1, d, 1)],
            "G_2_4": [I(3), (-1, -1, -d, -1)],
        }
        return close_generators(table[name], M, name=name)
    elif ctx == "j0_3":
        f = params.frac
        if name in ("G_2_1", "G_3_1", "G_6_1"):
            conds = {"G_2_1": lambda a, b: a % 3 == 1,
                     "G_3_1": lambda a, b: a % 3 != 0 and b % 3 == 0,
                     "G_6_1": lambda a, b: a % 3 == 1 and b % 3 == 0}[name]
            els = {c(a, b) for a in range(M) for b in range(M) if conds(a, b)}
            return Subgroup(M, generators=None, elements=els, name=name)
        twist = (f(-5, 4), f(1, 2), f(-3, 8), f(-5, 4))
        table = {
            "G_3_2": [I(2), c(1, 1)],
            "G_3_3": [I(2), twist],
            "G_6_2": [I(4), c(1, 1)],
            "G_6_3": [I(4), twist],
        }
        if name in table:
            return close_generators(table[name], M, name=name)
    elif ctx in ("j0_large", "j0_2") and name == "C3":
        els = {mat_mul(mat_mul(x, x, M), x, M) for x in C}
        return Subgroup(M, generators=None, elements=els, name=name)
    elif ctx == "j0_large" and name == "G_3_1":
        nu = _hensel_sqrt(params.delta, ell, params.k)
        if nu is None:
            raise ValueError(f"G_3_1 needs delta to be a square mod {ell}")
        units = [x for x in range(M) if x % ell]
        cubes = {pow(x, 3, M) for x in units}
        els = set()
        for a in units:
            for b in units:
                if a * pow(b, -1, M) % M in cubes:
                    s, t = nu * (a + b) % M, (a - b) % M
                    els.add((s, t, params.delta * t % M, s))
        return Subgroup(M, generators=None, elements=els, name=name)
    elif ctx == "odd_divides" and name == "G_2_1":
        squares = {x * x % M for x in range(M) if x % ell}
        d = params.delta
        els = {(s, b, d * b % M, s) for s in squares for b in range(M)}
        return Subgroup(M, generators=None, elements=els, name=name)
    raise ValueError(f"unknown group {name!r} for disc {order.disc}, ell {ell}")


def named_subgroup(name, params, gamma=None):
    """A named image group, optionally joined with gamma in GAMMAS.

    name is "N", "C", or a group id such as "G_4_1"; "G_4_1+c'-1" is
    accepted as shorthand for name "G_4_1" with gamma "c'-1".
    """
    if "+" in name:
        if gamma is not None:
            raise ValueError("gamma given twice")
        name, gamma = name.split("+", 1)
    M = params.modulus
    if name == "N":
        if gamma is not None:
            raise ValueError("N takes no gamma")
        return normalizer_group(params)
    ctx = group_context(params.order, params.ell)
    names, gammas = _names_and_gammas(params.order, params.ell)
    if name != "C" and name not in names:
        raise ValueError(f"unknown group {name!r} for disc {params.order.disc}, ell {params.ell}")
    if gamma is not None and gamma not in gammas:
        raise ValueError(f"gamma {gamma!r} not allowed here; choose from {gammas}")
    H = _base_group(name, params)
    if gamma is None:
        return H
    return join(H, params.gamma(gamma), name=f"{name}+{gamma}")


def subgroup_index(H, G):
    if H.modulus != G.modulus:
        raise ValueError("moduli differ")
    if not H.elements <= G.elements:
        raise ValueError("H is not contained in G")
    return len(G.elements) // len(H.elements)


def level_of_definition(H, params):
    """Smallest l^n (1 for n = 0) such that H is the full preimage of its
    reduction mod l^n inside the normalizer at H's modulus."""
    if params.modulus != H.modulus:
        params = params.at(H.modulus)
    N = _normalizer_elements(params)
    if not H.elements <= N:
        raise ValueError("H is not inside the normalizer")
    ell, k = params.ell, params.k
    target = len(N) // len(H.elements)
    if target == 1:
        return 1
    for n in range(1, k + 1):
        m = ell**n
        idx = len({mat_reduce(x, m) for x in N}) // len({mat_reduce(x, m) for x in H.elements})
        if idx == target:
            return m
    return ell**k


def _conj(A, g, ginv, M):
    return mat_mul(mat_mul(g, A, M), ginv, M)


def conjugate_equal(H1, H2, ambient):
    """True iff some element of ambient conjugates H1 onto H2."""
    if H1.modulus != H2.modulus or H1.order() != H2.order():
        return False
    M = H1.modulus
    E1, E2 = H1.elements, H2.elements
    if E1 == E2:
        return True
    for g in ambient.elements:
        gi = mat_inv(g, M)
        if all(_conj(x, g, gi, M) in E2 for x in E1):
            return True
    return False


def canonical_key(H, params):
    """A conjugacy invariant for subgroups of the normalizer: two subgroups
    have equal keys iff they are conjugate by an element of the normalizer."""
    if params.modulus != H.modulus:
        params = params.at(H.modulus)
    M = params.modulus
    C = _cartan_elements(params)
    c1 = params.c_eps(1)
    c1i = mat_inv(c1, M)
    if not H.elements <= _normalizer_elements(params):
        raise ValueError("H is not inside the normalizer")
    T = _bar_quotients(params)
    best = None
    for flip in (False, True):
        els = H.elements
        if flip:
            els = {_conj(x, c1, c1i, M) for x in els}
        HC = [x for x in els if x in C]
        rest = [x for x in els if x not in C]
        if rest:
            y = mat_mul(c1i, rest[0], M)
            HT = {mat_mul(h, t, M) for h in HC for t in T}
            rep = min(mat_mul(y, z, M) for z in HT)
        else:
            rep = None
        cand = (tuple(sorted(HC)), rep)
        if best is None or cand < best:
            best = cand
    return hashlib.sha256(repr(best).encode()).hexdigest()[:20]


@lru_cache(maxsize=None)
def _bar_quotients(params):
    """{ bar(c) c^-1 : c in C }, where bar is conjugation by c_1."""
    M = params.modulus
    c1 = params.c_eps(1)
    c1i = mat_inv(c1, M)
    return frozenset(mat_mul(_conj(x, c1, c1i, M), mat_inv(x, M), M)
                     for x in _cartan_elements(params))


def working_modulus(order, ell):
    """Modulus at which the candidate images of (order, ell) are compared."""
    ctx = group_context(order, ell)
    if ell == 2:
        return {"j1728": 32, "index2_2adic": 32, "j0_2": 8}.get(ctx, 2)
    if ell == 3:
        return {"j0_3": 27, "odd_divides": 9}.get(ctx, 3)
    return ell


_CANDIDATE_CACHE = {}


def admissible_groups(order, ell, modulus=None):
    """Distinct (up to normalizer conjugacy) candidate images for (order, ell),
    as a list of (group_id, Subgroup), the full normalizer first."""
    if modulus is None:
        modulus = working_modulus(order, ell)
    key = (order, ell, modulus)
    if key in _CANDIDATE_CACHE:
        return _CANDIDATE_CACHE[key]
    params = cartan_params(order, modulus)
    N = _normalizer_elements(params)
    ids, groups = {canonical_key(normalizer_group(params), params): "N"}, {}
    names, gammas = _names_and_gammas(order, ell)
    for name in names:
        for g in gammas:
            gid = f"{name}+{g}"
            H = named_subgroup(name, params, g)
            if not H.elements <= N:
                continue
            k = canonical_key(H, params)
            if k not in ids:
                ids[k], groups[k] = gid, H
            elif pinned_label(order, ell, gid) and not pinned_label(order, ell, ids[k]):
                # prefer the printed name for a group reachable several ways
                ids[k], groups[k] = gid, H
    out = [("N", normalizer_group(params))]
    out += [(ids[k], groups[k]) for k in groups]
    _CANDIDATE_CACHE[key] = out
    return out


@dataclass(frozen=True)
class CMLabel:
    ell: int
    nu: int
    sqclass: str
    level: int
    index: int
    tiebreak: int
    group_id: str = field(default=None, compare=False)
    calibrated: bool = field(default=True, compare=False)
    computed_level: int = field(default=None, compare=False)

    def __post_init__(self):
        if self.index == 1 and (self.level != 1 or self.tiebreak != 1):
            raise ValueError("index 1 forces level 1 and tiebreak 1")

    def __str__(self):
        return f"{self.ell}.{self.nu}.{self.sqclass}-{self.level}.{self.index}.{self.tiebreak}"

    @property
    def prefix(self):
        return f"{self.ell}.{self.nu}.{self.sqclass}-"

    @classmethod
    def parse(cls, text):
        head, tail = text.split("-", 1)
        ell, nu, c = head.split(".")
        n, i, t = tail.split(".")
        return cls(int(ell), int(nu), c, int(n), int(i), int(t))

    @classmethod
    def build(cls, order, ell, level, index, tiebreak, **kw):
        nu, c = label_prefix(order, ell)
        return cls(ell, nu, c, level, index, tiebreak, **kw)


def label_prefix(order, ell):
    D = order.disc
    nu = valuation(D, ell)
    u = D // ell**nu
    if ell == 2:
        c = square_class_2adic(u)
    else:
        c = "s" if legendre(u, ell) == 1 else "ns"
    return nu, c


def pinned_label(order, ell, group_id):
    """Printed (level, tiebreak) for group_id, or None."""
    from .data import label_pins
    table, rules = label_pins()
    hit = table.get((order.disc, ell, group_id))
    rule = rules.get(group_context(order, ell), {})
    if hit is None and group_id in rule:
        hit = (ell, rule[group_id])
    return hit


def cm_label(H, order, ell):
    """The CM label of a subgroup H of the normalizer for (order, ell)."""
    params = cartan_params(order, H.modulus)
    if params.ell != ell:
        raise ValueError("modulus is not a power of ell")
    N = _normalizer_elements(params)
    if not H.elements <= N:
        raise ValueError("H is not inside the normalizer")
    index = len(N) // len(H.elements)
    if index == 1:
        return CMLabel.build(order, ell, 1, 1, 1, group_id="N", computed_level=1)
    lit = level_of_definition(H, params)
    key = canonical_key(H, params)
    cands = admissible_groups(order, ell, H.modulus)
    gid = None
    for cid, G in cands:
        if canonical_key(G, params) == key:
            gid = cid
            break
    pin = pinned_label(order, ell, gid) if gid else None
    if pin is not None:
        level, t = pin
        return CMLabel.build(order, ell, level, index, t, group_id=gid,
                             calibrated=True, computed_level=lit)
    # uncalibrated: rank among candidates sharing (index, level) by key
    peers = []
    for cid, G in cands:
        if cid == "N":
            continue
        if len(N) // len(G.elements) == index and level_of_definition(G, params) == lit:
            peers.append(canonical_key(G, params))
    if key not in peers:
        peers.append(key)
    t = sorted(peers).index(key) + 1
    return CMLabel.build(order, ell, lit, index, t, group_id=gid,
                         calibrated=False, computed_level=lit)

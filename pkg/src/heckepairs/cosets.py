"""Double cosets HxH, the degree L(x), the modular function, and the
*-algebra spanned by double-coset characteristic functions.

Enumeration is generator-driven: the left cosets inside HxH are the orbit
of xH under left multiplication by the generators of H, with cosets held in
the canonical form produced by ``PairDescriptor.canon_coset``.  Coefficients
are exact rationals throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .arith import rat_from_str, rat_to_str, Mat2
from .errors import DescriptorMismatch, EnumerationBound
from .grouppair import GElem, PairDescriptor

DEFAULT_COSET_BOUND = 100000


@dataclass(frozen=True)
class DoubleCoset:
    """A double coset HxH: canonical representative, left-coset reps, key."""

    rep: GElem
    left_reps: tuple[GElem, ...]
    key: str

    @property
    def degree(self) -> int:
        """L(x): the number of left cosets yH inside HxH."""
        return len(self.left_reps)


class DoubleCosetCache:
    """Optional per-session memo: canonical coset rep -> double-coset key.

    Purely an optimization; every result must be identical with caching
    disabled.  Not synchronized: confine an instance to one thread, or
    guard it externally.
    """

    def __init__(self):
        self.key_by_coset: dict[GElem, str] = {}
        self.by_key: dict[str, DoubleCoset] = {}

    def store(self, dc: DoubleCoset) -> None:
        self.by_key[dc.key] = dc
        for rep in dc.left_reps:
            self.key_by_coset[rep] = dc.key


def left_coset_reps(x: GElem, bound: int = DEFAULT_COSET_BOUND,
                    cache: DoubleCosetCache | None = None) -> list[GElem]:
    """Canonical representatives of the left cosets yH covering HxH."""
    return list(double_coset(x, bound, cache).left_reps)


def double_coset(x: GElem, bound: int = DEFAULT_COSET_BOUND,
                 cache: DoubleCosetCache | None = None) -> DoubleCoset:
    pair = x.pair
    start = pair.canon_coset(x)
    if cache is not None and start in cache.key_by_coset:
        return cache.by_key[cache.key_by_coset[start]]
    gens = pair.h_generators()
    seen = {start}
    frontier = [start]
    while frontier:
        y = frontier.pop()
        for h in gens:
            z = pair.canon_coset(pair.mul(h, y))
            if z not in seen:
                if len(seen) >= bound:
                    raise EnumerationBound(
                        f"more than {bound} left cosets in H.{x}.H; "
                        "the pair may not be Hecke at this element, or raise the bound"
                    )
                seen.add(z)
                frontier.append(z)
    reps = tuple(sorted(seen, key=str))
    rep = min(reps, key=str)
    dc = DoubleCoset(rep, reps, str(rep))
    if cache is not None:
        cache.store(dc)
    return dc


def l_of(x: GElem, bound: int = DEFAULT_COSET_BOUND,
         cache: DoubleCosetCache | None = None) -> int:
    """L(x) = |HxH / H|."""
    return double_coset(x, bound, cache).degree


def delta(x: GElem, bound: int = DEFAULT_COSET_BOUND,
          cache: DoubleCosetCache | None = None) -> Fraction:
    """The modular function L(x) / L(x^-1), an exact rational."""
    num = l_of(x, bound, cache)
    den = l_of(x.pair.inv(x), bound, cache)
    return Fraction(num, den)


def canonical_key(x: GElem, bound: int = DEFAULT_COSET_BOUND,
                  cache: DoubleCosetCache | None = None) -> str:
    """Key shared by exactly the elements of HxH (lex-least left-coset rep)."""
    return double_coset(x, bound, cache).key


# ---------------------------------------------------------------------------
# the *-algebra


@dataclass
class HeckeElement:
    """Finite rational combination of double-coset characteristic functions.

    ``terms`` maps the canonical representative of each double coset in the
    support to its coefficient; zero coefficients are never stored.
    """

    pair: PairDescriptor
    terms: dict[GElem, Fraction] = field(default_factory=dict)

    @staticmethod
    def unit(pair: PairDescriptor) -> "HeckeElement":
        """The characteristic function of H, the identity of the algebra."""
        return HeckeElement.char_fn(pair.identity())

    @staticmethod
    def char_fn(x: GElem, coeff=1, bound: int = DEFAULT_COSET_BOUND,
                cache: DoubleCosetCache | None = None) -> "HeckeElement":
        dc = double_coset(x, bound, cache)
        coeff = Fraction(coeff)
        terms = {dc.rep: coeff} if coeff else {}
        return HeckeElement(x.pair, terms)

    def __add__(self, other: "HeckeElement") -> "HeckeElement":
        if self.pair != other.pair:
            raise DescriptorMismatch("mixing Hecke elements of different pairs")
        terms = dict(self.terms)
        for rep, c in other.terms.items():
            new = terms.get(rep, Fraction(0)) + c
            if new:
                terms[rep] = new
            else:
                terms.pop(rep, None)
        return HeckeElement(self.pair, terms)

    def scale(self, c) -> "HeckeElement":
        c = Fraction(c)
        if not c:
            return HeckeElement(self.pair, {})
        return HeckeElement(self.pair, {r: c * v for r, v in self.terms.items()})

    def __sub__(self, other: "HeckeElement") -> "HeckeElement":
        return self + other.scale(-1)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HeckeElement)
            and self.pair == other.pair
            and self.terms == other.terms
        )

    def support_keys(self) -> list[str]:
        return sorted(str(r) for r in self.terms)

    def to_json(self) -> dict:
        items = sorted(self.terms.items(), key=lambda kv: str(kv[0]))
        return {
            "terms": [
                {"rep": rep.to_json(), "coeff": rat_to_str(c)} for rep, c in items
            ]
        }

    @staticmethod
    def from_json(pair: PairDescriptor, data: dict,
                  bound: int = DEFAULT_COSET_BOUND,
                  cache: DoubleCosetCache | None = None) -> "HeckeElement":
        out = HeckeElement(pair, {})
        for item in data["terms"]:
            rep = parse_gelem_json(pair, item["rep"])
            out = out + HeckeElement.char_fn(
                rep, rat_from_str(item["coeff"]), bound, cache
            )
        return out


def parse_gelem_json(pair: PairDescriptor, data: dict) -> GElem:
    n = (rat_from_str(str(data["n"][0])), rat_from_str(str(data["n"][1])))
    q = data["q"]
    if isinstance(q, str):
        q = rat_from_str(q)
    else:
        q = Mat2.from_lists(q)
    return pair.element(n, q)


def convolve(f: HeckeElement, g: HeckeElement,
             bound: int = DEFAULT_COSET_BOUND,
             cache: DoubleCosetCache | None = None) -> HeckeElement:
    """Convolution product f*g.

    For support double cosets with left reps {y_i} and {b_j}, each product
    y_i b_j lies in exactly one left coset, and f*g evaluated on a coset is
    the weighted number of (i, j) pairs landing there.  The value must be
    constant across the left cosets of each output double coset; that is
    asserted rather than assumed.
    """
    if f.pair != g.pair:
        raise DescriptorMismatch("mixing Hecke elements of different pairs")
    pair = f.pair
    counts: dict[GElem, Fraction] = {}
    for ra, ca in f.terms.items():
        dca = double_coset(ra, bound, cache)
        for rb, cb in g.terms.items():
            dcb = double_coset(rb, bound, cache)
            w = ca * cb
            for yi in dca.left_reps:
                for bj in dcb.left_reps:
                    c = pair.canon_coset(pair.mul(yi, bj))
                    counts[c] = counts.get(c, Fraction(0)) + w
    by_coset: dict[str, list[Fraction]] = {}
    reps: dict[str, GElem] = {}
    for coset, value in counts.items():
        dc = double_coset(coset, bound, cache)
        by_coset.setdefault(dc.key, []).append(value)
        reps[dc.key] = dc.rep
    terms: dict[GElem, Fraction] = {}
    for key, values in by_coset.items():
        dc = double_coset(reps[key], bound, cache)
        assert len(values) == dc.degree and len(set(values)) == 1, \
            "convolution value not constant on a double coset"
        if values[0]:
            terms[reps[key]] = values[0]
    return HeckeElement(pair, terms)


def involution(f: HeckeElement, bound: int = DEFAULT_COSET_BOUND,
               cache: DoubleCosetCache | None = None) -> HeckeElement:
    """The *-involution: support moves to inverse cosets, weighted by the
    modular function so that the operation squares to the identity."""
    pair = f.pair
    terms: dict[GElem, Fraction] = {}
    for rep, c in f.terms.items():
        dc = double_coset(rep, bound, cache)
        dci = double_coset(pair.inv(rep), bound, cache)
        weight = Fraction(dc.degree, dci.degree)  # delta(rep)
        new = terms.get(dci.rep, Fraction(0)) + c * weight
        if new:
            terms[dci.rep] = new
        else:
            terms.pop(dci.rep, None)
    return HeckeElement(pair, terms)

"""Concrete computations for the worked matrix and number-theoretic families:
triangular-times-unimodular splittings of GL2 elements, real quadratic unit
groups modulo s, finite images of the integer unimodular group, and the
rational Heisenberg orbit computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd

from .arith import (
    Mat2,
    QuadInt,
    ResidueRing,
    check_discriminant,
    is_prime,
    pell_fundamental,
    val_p,
)
from .errors import BadDiscriminant, DetNotAllowed, InsufficientData, SizeCap
from .grouppair import _GL2_STANDARD_GENS, PairDescriptor

F = Fraction


# ---------------------------------------------------------------------------
# real quadratic units


def fundamental_unit(d: int) -> QuadInt:
    """Smallest unit > 1 of Z[sqrt(d)], by the continued-fraction search."""
    if d <= 1:
        raise BadDiscriminant(f"d = {d} must exceed 1")
    check_discriminant(d)
    m, n = pell_fundamental(d)
    return QuadInt(m, n, d)


def unit_order_mod(r0: QuadInt, s: int) -> int:
    """Multiplicative order of a unit in Z_s[sqrt(d)], by direct iteration.

    Minimality holds by construction: every smaller positive power is seen
    to differ from 1.
    """
    if s < 2:
        raise ValueError("modulus must be at least 2")
    if abs(r0.norm()) != 1:
        raise ValueError(f"{r0} is not a unit")
    one = QuadInt(1 % s, 0, r0.d)
    power = r0.reduce_mod(s)
    order = 1
    while power != one:
        power = (power * r0).reduce_mod(s)
        order += 1
    return order


@dataclass(frozen=True)
class QuadUnitData:
    """Unit-group data of Z_s[sqrt(d)]: the full unit group and the subgroup
    hit by the global units {+-r0^k}."""

    d: int
    r0: QuadInt
    s: int
    n_s: int
    unit_image: frozenset
    full_units: frozenset

    def __post_init__(self):
        assert abs(self.r0.norm()) == 1
        assert self.unit_image <= self.full_units


def quad_unit_data(d: int, s: int) -> QuadUnitData:
    r0 = fundamental_unit(d)
    n_s = unit_order_mod(r0, s)
    image = set()
    power = QuadInt(1 % s, 0, d)
    for _ in range(n_s):
        image.add((power.m, power.n))
        image.add(((-power.m) % s, (-power.n) % s))
        power = (power * r0).reduce_mod(s)
    full = set()
    for m in range(s):
        for n in range(s):
            if gcd((m * m - d * n * n) % s, s) == 1:
                full.add((m, n))
    return QuadUnitData(d, r0, s, n_s, frozenset(image), frozenset(full))


def unit_image_gap(d: int, s: int) -> dict:
    """Compare the image of the global units with the full unit group mod s.

    The report carries a witness unit outside the image whenever the
    inclusion is proper.
    """
    data = quad_unit_data(d, s)
    proper = data.unit_image < data.full_units
    witness = min(data.full_units - data.unit_image) if proper else None
    assert len(data.full_units) % len(data.unit_image) == 0
    return {
        "d": d,
        "modulus": s,
        "unit_order": data.n_s,
        "image_size": len(data.unit_image),
        "full_size": len(data.full_units),
        "proper": proper,
        "witness": witness,
        "data": data,
    }


# ---------------------------------------------------------------------------
# triangular * unimodular splittings


@dataclass(frozen=True)
class TriangularSplit:
    """Factorization g = t * k with t lower triangular and k unimodular in
    the relevant integrality sense."""

    t: Mat2
    k: Mat2


def _p_power_sign(x: F, p: int) -> int | None:
    """Sign of x when x = +-p^j, else None."""
    if x == 0:
        return None
    num, den = abs(x).numerator, abs(x).denominator
    while num % p == 0:
        num //= p
    while den % p == 0:
        den //= p
    if num == 1 and den == 1:
        return 1 if x > 0 else -1
    return None


def _in_z_inv_p(x: F, p: int) -> bool:
    den = x.denominator
    while den % p == 0:
        den //= p
    return den == 1


_ROT = Mat2.of(0, 1, -1, 0)  # order-4 rotation, det 1


def _split_lower(g: Mat2, p: int) -> TriangularSplit:
    # b = 0, so a and d are signed p-powers
    sa = _p_power_sign(g.a, p)
    sd = _p_power_sign(g.d, p)
    assert sa is not None and sd is not None
    t = Mat2(abs(g.a), F(0), sa * g.c, abs(g.d))
    k = Mat2.diag(sa, sd)
    return TriangularSplit(t, k)


def split_padic(g: Mat2, p: int) -> TriangularSplit:
    """Split g = t * k with t lower triangular with +-p-power diagonal and k
    of determinant +-1 whose entries all have p-valuation >= 0.

    Entries of g must lie in Z[1/p] and det(g) must be +-p^j.  The three
    cases follow the shape of g: second column entry zero; first entry zero;
    both nonzero (rotating first when the valuations are ordered the wrong
    way around).
    """
    if not is_prime(p):
        raise DetNotAllowed(f"p = {p} is not prime")
    for x in g.entries():
        if not _in_z_inv_p(x, p):
            raise DetNotAllowed(f"entry {x} is not in Z[1/{p}]")
    if _p_power_sign(g.det(), p) is None:
        raise DetNotAllowed(f"det {g.det()} is not a signed power of {p}")

    if g.b == 0:
        split = _split_lower(g, p)
    elif g.a == 0:
        inner = _split_lower(Mat2(g.b, F(0), g.d, -g.c), p)
        split = TriangularSplit(inner.t, inner.k * _ROT)
    else:
        m = val_p(g.a, p)
        n = val_p(g.b, p)
        if m < n:
            inner = split_padic(g * _ROT, p)
            split = TriangularSplit(inner.t, inner.k * _ROT.inv())
        else:
            pn = F(p) ** n
            v = g.b / pn
            t = Mat2(pn, F(0), g.d / v, g.a * g.d / pn - v * g.c)
            k = Mat2(g.a / pn, v, -1 / v, F(0))
            split = TriangularSplit(t, k)

    _certify_padic(g, split, p)
    return split


def _certify_padic(g: Mat2, split: TriangularSplit, p: int) -> None:
    t, k = split.t, split.k
    assert t * k == g, "reassembly failed"
    assert t.b == 0, "t is not lower triangular"
    assert _p_power_sign(t.a, p) is not None and _p_power_sign(t.d, p) is not None
    assert abs(k.det()) == 1, "k does not have determinant +-1"
    for x in k.entries():
        assert x == 0 or val_p(x, p) >= 0, f"k entry {x} has negative valuation"


def split_global(g: Mat2) -> TriangularSplit:
    """Split a nonsingular rational g as t * k with t lower triangular and
    k an integer matrix of determinant +-1, by one integral column
    reduction of the first row."""
    if g.det() == 0:
        raise DetNotAllowed("matrix is singular")
    if g.is_integral() and abs(g.det()) == 1:
        split = TriangularSplit(Mat2.identity(), g)
    elif g.b == 0:
        split = TriangularSplit(g, Mat2.identity())
    else:
        scale = F(g.a.denominator * g.b.denominator // gcd(
            g.a.denominator, g.b.denominator
        ))
        aa, bb = int(g.a * scale), int(g.b * scale)
        gg = gcd(aa, bb)
        # x*aa + y*bb = gg; U kills the top-right entry and has det 1
        x, y = _bezout(aa, bb)
        u = Mat2.of(x, -bb // gg, y, aa // gg)
        split = TriangularSplit(g * u, u.inv())
    t, k = split.t, split.k
    assert t * k == g
    assert t.b == 0 and t.a != 0 and t.d != 0
    assert k.is_integral() and abs(k.det()) == 1
    return split


def _bezout(a: int, b: int) -> tuple[int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        x0, y0 = -x0, -y0
    return x0, y0


# ---------------------------------------------------------------------------
# finite images of the integer unimodular group


def slpm_surjectivity(s: int, size_cap: int = 40) -> dict:
    """Compare the closure of the standard unimodular generators mod s with
    the exhaustive set of residue matrices of determinant +-1.

    The exhaustive side scans all s^4 matrices, so s is capped.
    """
    if s < 1:
        raise ValueError("modulus must be positive")
    if s > size_cap:
        raise SizeCap(f"s = {s} exceeds the exhaustive-scan cap {size_cap}")
    ring = ResidueRing(s)
    gens = []
    for g in _GL2_STANDARD_GENS:
        gens.append(ring.reduce_mat(g))
        gens.append(ring.reduce_mat(g.inv()))
    image = ring.close_under_mul(gens)
    if s == 1:
        target = 1
    else:
        ok = {1 % s, (s - 1) % s}
        target = sum(
            1
            for a in range(s) for b in range(s) for c in range(s) for d in range(s)
            if (a * d - b * c) % s in ok
        )
    return {
        "modulus": s,
        "image_size": len(image),
        "target_size": target,
        "match": len(image) == target,
        "contains_reflection": ring.reduce_mat(Mat2.diag(1, -1)) in image,
    }


# ---------------------------------------------------------------------------
# Heisenberg computations


def heis_conj_meet_index(n_param: int, scan_margin: int = 6) -> int:
    """Index of M meet xMx^-1 in M for the Heisenberg x with parameter 1/n.

    Computed directly from the group law: (0, b) survives conjugation by x
    exactly when b is a multiple of n; a membership scan certifies this on
    a window before the index is returned.
    """
    if n_param < 1:
        raise ValueError("parameter must be a positive integer")
    pair = PairDescriptor.heisenberg()
    x = pair.element((0, 0), F(1, n_param))
    xi = pair.inv(x)
    members = []
    for b in range(-scan_margin * n_param, scan_margin * n_param + 1):
        elem = pair.element((0, b), 0)
        if pair.in_h(pair.mul(pair.mul(xi, elem), x)):
            members.append(b)
    assert members == [b for b in range(-scan_margin * n_param,
                                        scan_margin * n_param + 1)
                       if b % n_param == 0]
    return n_param


class OmegaVerdict(Enum):
    """Answers for membership of a finitely-described point in the open
    orbit union.  NO_IMPOSSIBLE documents that finite residue data can
    never certify a negative answer; it is never returned."""

    YES = "yes"
    UNKNOWN = "unknown"
    NO_IMPOSSIBLE = "no-at-this-level-impossible"


@dataclass(frozen=True)
class HeisPoint:
    """Point (z, u) with z known only through residues z mod p^K, plus the
    fiber coordinate w (carried for orbit computations)."""

    z_data: tuple
    u: F
    w: F

    def __post_init__(self):
        for p, k, residue in self.z_data:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            if k < 1 or not (0 <= residue < p ** k):
                raise ValueError(f"residue data ({p},{k},{residue}) is not reduced")


def omega_membership(pt: HeisPoint) -> OmegaVerdict:
    """Decide membership in the orbit union {(z, u) : z_p = 0 => u_p integral}
    from finite residue data.

    YES needs, at every prime where u is non-integral, a nonzero residue of
    z.  A residue of zero leaves z_p = 0 undecidable, hence UNKNOWN; a
    negative certificate would need infinitely many residues, so NO is
    unreachable (see OmegaVerdict.NO_IMPOSSIBLE).
    """
    levels = {p: (k, residue) for p, k, residue in pt.z_data}
    for p in _denominator_primes(pt.u):
        if p not in levels:
            raise InsufficientData(f"no residue data for the prime {p}")
        _, residue = levels[p]
        if residue == 0:
            return OmegaVerdict.UNKNOWN
    return OmegaVerdict.YES


def _denominator_primes(u: F) -> list[int]:
    from .arith import prime_factors

    return prime_factors(u.denominator)


def heis_orbit(z: int, w: int, s: int) -> set:
    """Orbit {(z, w + r z mod s) : r in Z/s} of a residue pair under the
    integer translations; its size is s / gcd(z, s)."""
    if s < 1:
        raise ValueError("modulus must be positive")
    orbit = {(z % s, (w + r * z) % s) for r in range(s)}
    assert len(orbit) == s // gcd(z % s, s)  # gcd(0, s) = s covers z = 0
    return orbit

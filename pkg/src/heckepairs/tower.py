"""Finite quotient stages of the completion of H = M x| R.

A stage is cut out by a pair (coset family, envelope lattice): the family is
a finite, two-sided R-stable union of cosets tR in Q, the envelope is a
lattice F with M <= F that contains t^-1.M for every family rep.  The stage
groups are M / (M meet all t.M) and the quotient of R by the residues whose
conjugate by every rep moves the envelope into M; their semidirect product
is the finite shadow of the completed H.

Planar families only (the envelope representation is a lattice in Q^2).
Internally every stage computation runs in M-basis coordinates, where M
becomes Z^2 and all quotient arithmetic is on plain integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from .arith import (
    Lattice,
    Mat2,
    ResidueRing,
    lattice_index,
    lattice_intersect,
    lattice_sum,
    smith_invariants,
    transform_lattice,
)
from .errors import (
    ActionNotWellDefined,
    ConductorOverflow,
    EnumerationBound,
    FamilyConditionViolated,
    NotComparable,
    SizeCap,
)
from .grouppair import PLANAR, PairDescriptor, ResidueSubgroup, r_image_mod

DEFAULT_FAMILY_BOUND = 10000
DEFAULT_CONDUCTOR_CAP = 10 ** 6
DEFAULT_ORDER_CAP = 200000


def _require_planar(pair: PairDescriptor) -> None:
    if pair.family != PLANAR:
        raise FamilyConditionViolated(
            "tower stages are represented with planar lattices; "
            f"family {pair.family!r} is not supported here"
        )


def _primitive_int(m: Mat2) -> tuple[Mat2, int]:
    """Scale a nonzero rational matrix to a primitive integer matrix.

    Returns (matrix, |det|).  Scalar factors do not change conjugation, so
    all congruence conditions may be computed from this representative.
    """
    scale = m.denominator_lcm()
    ints = [int(x * scale) for x in m.entries()]
    g = gcd(gcd(abs(ints[0]), abs(ints[1])), gcd(abs(ints[2]), abs(ints[3])))
    ints = [x // g for x in ints]
    mat = Mat2.of(*ints)
    det = abs(mat.det())
    assert det != 0 and det.denominator == 1
    return mat, int(det)


@dataclass(frozen=True)
class CosetFamily:
    """Finite union of cosets tR in Q, stable under R on both sides.

    ``reps`` holds one canonical representative per coset; the identity
    coset is always present.
    """

    pair: PairDescriptor
    reps: tuple[Mat2, ...]

    def validate(self) -> None:
        pair = self.pair
        if pair._canon_q(Mat2.identity()) not in self.reps:
            raise FamilyConditionViolated("identity coset missing from the family")
        rep_set = set(self.reps)
        for g in pair.r_generators:
            for t in self.reps:
                if pair._canon_q(g * t) not in rep_set:
                    raise FamilyConditionViolated(
                        f"family is not left R-stable at generator {g}"
                    )
                if pair._canon_q(t * g) not in rep_set:
                    raise FamilyConditionViolated(
                        f"family is not right R-stable at generator {g}"
                    )


@dataclass(frozen=True)
class EnvelopeLattice:
    """Lattice F with M <= F, R-stable, absorbing the family's conjugates."""

    lattice: Lattice

    def validate(self, family: CosetFamily) -> None:
        pair = family.pair
        if not self.lattice.contains_lattice(pair.m_lattice):
            raise FamilyConditionViolated("envelope does not contain M")
        # finite index over M is automatic for two full-rank lattices
        for g in pair.r_generators:
            if transform_lattice(g, self.lattice) != self.lattice:
                raise FamilyConditionViolated(
                    f"envelope is not stable under the R generator {g}"
                )
        for t in family.reps:
            if not self.lattice.contains_lattice(
                transform_lattice(t.inv(), pair.m_lattice)
            ):
                raise FamilyConditionViolated(
                    f"envelope misses the conjugate of M by {t}^-1"
                )


def make_coset_family(pair: PairDescriptor, seed_qs,
                      bound: int = DEFAULT_FAMILY_BOUND) -> CosetFamily:
    """Smallest two-sided R-stable coset family covering the seeds and R."""
    _require_planar(pair)
    reps = {pair._canon_q(Mat2.identity())}
    gens = [g for r in pair.r_generators for g in (r, r.inv())]
    for q in seed_qs:
        if not pair.in_q(q):
            raise FamilyConditionViolated(f"seed {q} is not in Q")
        start = pair._canon_q(q)
        if start in reps:
            continue
        reps.add(start)
        frontier = [start]
        while frontier:
            t = frontier.pop()
            for g in gens:
                img = pair._canon_q(g * t)
                if img not in reps:
                    if len(reps) >= bound:
                        raise EnumerationBound(
                            f"coset family exceeded {bound} cosets"
                        )
                    reps.add(img)
                    frontier.append(img)
    family = CosetFamily(pair, tuple(sorted(reps, key=str)))
    family.validate()
    return family


def make_envelope(family: CosetFamily, extra: Lattice | None = None) -> EnvelopeLattice:
    """Sum of M with every rep-conjugate t^-1.M (and an optional extra
    lattice), closed under the R-action."""
    pair = family.pair
    f = pair.m_lattice
    for t in family.reps:
        f = lattice_sum(f, transform_lattice(t.inv(), pair.m_lattice))
    if extra is not None:
        f = lattice_sum(f, extra)
    # close under R: each pass only enlarges, and everything stays inside a
    # fixed (1/k)Z^2, so this terminates
    while True:
        grown = f
        for g in pair.r_generators:
            grown = lattice_sum(grown, transform_lattice(g, f))
        if grown == f:
            break
        f = grown
    env = EnvelopeLattice(f)
    env.validate(family)
    return env


def core_lattice(family: CosetFamily) -> Lattice:
    """Intersection of M with every rep-conjugate t.M (rep choice is
    irrelevant because R normalizes M)."""
    pair = family.pair
    lat = pair.m_lattice
    for t in family.reps:
        lat = lattice_intersect(lat, transform_lattice(t, pair.m_lattice))
    return lat


def _rel_coords(pair: PairDescriptor):
    """Matrices into and out of M-basis coordinates."""
    b = pair.m_lattice.basis()
    return b, b.inv()


def _rel_conditions(family: CosetFamily, envelope: EnvelopeLattice):
    """Stage membership conditions in M-coordinates.

    Returns (level, conditions) where each condition is (t_inv, [(v, t.v)])
    for a primitivized rep t and envelope generator v, all relative to the
    M basis; a residue r belongs to the stage core iff (t^-1 r t - 1)v is
    integral for every condition.
    """
    pair = family.pair
    b, bi = _rel_coords(pair)
    vs = [bi.apply(v) for v in envelope.lattice.vectors()]
    k = lcm(*(x.denominator for v in vs for x in v))
    dets = 1
    conds = []
    for t in family.reps:
        t_rel, d = _primitive_int(bi * t * b)
        dets = lcm(dets, d)
        conds.append((t_rel, t_rel.inv(), [(v, t_rel.apply(v)) for v in vs]))
    conds.sort(key=lambda c: c[0] != Mat2.identity())
    return k * dets, conds


def stage_level(family: CosetFamily, envelope: EnvelopeLattice) -> int:
    """Congruence level of the stage: the level forcing trivial action on
    the envelope modulo M, times the lcm of the rep determinants (which
    keeps every conjugated condition well defined on residue classes)."""
    level, _ = _rel_conditions(family, envelope)
    return level


def _is_integral_vec(v) -> bool:
    return v[0].denominator == 1 and v[1].denominator == 1


def _satisfies(residue, conditions) -> bool:
    lift = Mat2.of(*residue)
    for _, t_inv, pairs in conditions:
        for v, tv in pairs:
            moved = t_inv.apply(lift.apply(tv))
            if not _is_integral_vec((moved[0] - v[0], moved[1] - v[1])):
                return False
    return True


def core_residue_subgroup(
    family: CosetFamily,
    envelope: EnvelopeLattice,
    conductor_cap: int = DEFAULT_CONDUCTOR_CAP,
    closure_bound: int | None = None,
) -> ResidueSubgroup:
    """Residues of R (mod the stage level, in M-coordinates) whose conjugate
    by every rep moves each envelope generator by a vector of M."""
    pair = family.pair
    level, conditions = _rel_conditions(family, envelope)
    if level > conductor_cap:
        raise ConductorOverflow(f"stage level {level} exceeds cap {conductor_cap}")
    image = r_image_mod(pair, level, closure_bound)
    members = [r for r in image if _satisfies(r, conditions)]
    return ResidueSubgroup(level, frozenset(members))


def _int_hnf_triple(lat: Lattice) -> tuple[int, int, int]:
    a, c, d = lat.a, lat.c, lat.d
    assert a.denominator == c.denominator == d.denominator == 1
    return int(a), int(c), int(d)


class TowerStage:
    """Finite quotient stage (M / core) x| (R / residue core).

    Elements are pairs (m, r) with m an integer vector in M-coordinates
    reduced modulo the core lattice and r the canonical member of a coset of
    the residue core.
    """

    def __init__(self, family: CosetFamily, envelope: EnvelopeLattice,
                 m_core: Lattice, r_core: ResidueSubgroup, image: frozenset):
        pair = family.pair
        self.pair = pair
        self.family = family
        self.envelope = envelope
        self.m_core = m_core
        self.r_core = r_core
        self.level = r_core.level
        self.image = image
        self.m_index = lattice_index(pair.m_lattice, m_core)
        self.r_index = len(image) // len(r_core.elements)
        self.order = self.m_index * self.r_index

        b, bi = _rel_coords(pair)
        core_rel = Lattice.from_basis(bi * m_core.basis())
        self._core_rel = _int_hnf_triple(core_rel)
        self.m_invariants = smith_invariants(core_rel)
        self._b, self._bi = b, bi

        ring = ResidueRing(self.level)
        self._ring = ring
        core = sorted(r_core.elements)
        self.coset_key_of: dict = {}
        for r in sorted(image):
            if r in self.coset_key_of:
                continue
            members = sorted(ring.mat_mul(r, s) for s in core)
            key = members[0]
            for mr in members:
                self.coset_key_of[mr] = key
        self._sorted_rkeys = tuple(sorted(set(self.coset_key_of.values())))
        assert len(self._sorted_rkeys) == self.r_index

        self.m_elements = self._enumerate_m_quotient()
        assert len(self.m_elements) == self.m_index

    def _reduce(self, v: tuple[int, int]) -> tuple[int, int]:
        a, c, d = self._core_rel
        k = v[0] // a
        return (v[0] - k * a, (v[1] - k * c) % d)

    def _enumerate_m_quotient(self):
        seen = {(0, 0)}
        frontier = [(0, 0)]
        steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        while frontier:
            cur = frontier.pop()
            for v in steps:
                nxt = self._reduce((cur[0] + v[0], cur[1] + v[1]))
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return tuple(sorted(seen))

    # -- group structure ----------------------------------------------------

    def identity(self):
        return ((0, 0), self.coset_key_of[self._ring.identity_mat()])

    def elements(self):
        for m in self.m_elements:
            for rkey in self._sorted_rkeys:
                yield (m, rkey)

    def generators(self):
        """A generating set: the M basis vectors and the R generator cosets."""
        ident_r = self.coset_key_of[self._ring.identity_mat()]
        out = [(self._reduce((1, 0)), ident_r), (self._reduce((0, 1)), ident_r)]
        ring = self._ring
        b, bi = self._b, self._bi
        for g in self.pair.r_generators:
            res = ring.reduce_mat(bi * g * b)
            out.append(((0, 0), self.coset_key_of[res]))
        return out

    def act(self, rkey, mvec) -> tuple[int, int]:
        return self._reduce(
            (rkey[0] * mvec[0] + rkey[1] * mvec[1],
             rkey[2] * mvec[0] + rkey[3] * mvec[1])
        )

    def mul(self, x, y):
        (m1, r1), (m2, r2) = x, y
        am = self.act(r1, m2)
        m = self._reduce((m1[0] + am[0], m1[1] + am[1]))
        return (m, self.coset_key_of[self._ring.mat_mul(r1, r2)])

    def inv(self, x):
        m, r = x
        ri = self._ring.mat_inv(r)
        am = self.act(ri, (-m[0], -m[1]))
        return (am, self.coset_key_of[ri])

    def reduce_h_element(self, h):
        """Image of an element of H under the stage quotient map."""
        assert self.pair.in_h(h)
        coords = self._bi.apply(h.n)
        m = self._reduce((int(coords[0]), int(coords[1])))
        r = self.coset_key_of[self._ring.reduce_mat(self._bi * h.q * self._b)]
        return (m, r)

    def summary(self) -> dict:
        return {
            "cosets_in_family": len(self.family.reps),
            "m_invariants": list(self.m_invariants),
            "m_index": self.m_index,
            "r_index": self.r_index,
            "order": self.order,
            "level": self.level,
        }


def build_stage(family: CosetFamily, envelope: EnvelopeLattice,
                conductor_cap: int = DEFAULT_CONDUCTOR_CAP,
                order_cap: int = DEFAULT_ORDER_CAP) -> TowerStage:
    """Assemble and verify the finite stage for a validated (family, envelope)."""
    pair = family.pair
    _require_planar(pair)
    family.validate()
    envelope.validate(family)
    m_core = core_lattice(family)
    level, conditions = _rel_conditions(family, envelope)
    if level > conductor_cap:
        raise ConductorOverflow(f"stage level {level} exceeds cap {conductor_cap}")
    image = frozenset(r_image_mod(pair, level))
    members = frozenset(r for r in image if _satisfies(r, conditions))
    r_core = ResidueSubgroup(level, members)

    # the residue core must act trivially on M / core, else the semidirect
    # quotient would be ill-defined (a construction bug, not a user error)
    _, bi = _rel_coords(pair)
    core_rel = Lattice.from_basis(bi * m_core.basis())
    for residue in members:
        lift = Mat2.of(*residue)
        for v in ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))):
            moved = lift.apply(v)
            if not core_rel.contains((moved[0] - v[0], moved[1] - v[1])):
                raise ActionNotWellDefined(
                    f"residue {residue} moves {v} outside the core lattice"
                )

    m_index = lattice_index(pair.m_lattice, m_core)
    r_index = len(image) // len(members)
    if m_index * r_index > order_cap:
        raise SizeCap(
            f"stage too large: order {m_index * r_index} exceeds cap {order_cap}"
        )
    return TowerStage(family, envelope, m_core, r_core, image)


class ConnectingMap:
    """Reduction map between a finer and a coarser stage of the same pair."""

    def __init__(self, fine: TowerStage, coarse: TowerStage):
        if fine.pair != coarse.pair:
            raise NotComparable("stages belong to different pairs")
        if coarse.level == 0 or fine.level % coarse.level != 0:
            raise NotComparable(
                f"levels {fine.level} and {coarse.level} are not nested"
            )
        if not coarse.m_core.contains_lattice(fine.m_core):
            raise NotComparable("fine core lattice is not inside the coarse one")
        for r in fine.r_core.elements:
            if tuple(x % coarse.level for x in r) not in coarse.r_core.elements:
                raise NotComparable("fine residue core is not inside the coarse one")
        self.fine = fine
        self.coarse = coarse

    def apply(self, elem):
        m, rkey = elem
        cl = self.coarse.level
        cm = self.coarse._reduce(m)
        cr = self.coarse.coset_key_of[tuple(x % cl for x in rkey)]
        return (cm, cr)

    def verify(self) -> dict:
        """Homomorphism certificate: phi(g x) = phi(g) phi(x) for every
        generator g against every element x (the generators generate, so
        this pins down the whole map); surjectivity by image count."""
        fine, coarse = self.fine, self.coarse
        phi = {x: self.apply(x) for x in fine.elements()}
        hom_ok = True
        for g in fine.generators():
            pg = phi[g] if g in phi else self.apply(g)
            for x, px in phi.items():
                if phi[fine.mul(g, x)] != coarse.mul(pg, px):
                    hom_ok = False
                    break
            if not hom_ok:
                break
        img = set(phi.values())
        surjective = len(img) == coarse.order
        return {
            "homomorphism": hom_ok,
            "surjective": surjective,
            "kernel_size": fine.order // coarse.order if surjective else None,
            "order_ratio": fine.order // coarse.order,
        }


def verify_stage_invariants(family: CosetFamily, envelope: EnvelopeLattice,
                            stage: TowerStage | None = None) -> dict:
    """Normality and action-triviality certificates for a stage.

    At the stage's congruence level: the residue core is normal under the R
    generators; the core lattice is fixed by the R generators; every residue
    core element moves every M generator by a core-lattice vector.
    """
    if stage is None:
        stage = build_stage(family, envelope)
    pair = stage.pair
    ring = ResidueRing(stage.level)
    b, bi = _rel_coords(pair)
    gen_residues = [ring.reduce_mat(bi * g * b) for g in pair.r_generators]
    trivial_action = True
    for residue in stage.r_core.elements:
        for v in ((1, 0), (0, 1)):
            moved = (residue[0] * v[0] + residue[1] * v[1],
                     residue[2] * v[0] + residue[3] * v[1])
            if stage._reduce((moved[0] - v[0], moved[1] - v[1])) != (0, 0):
                trivial_action = False
    results = {
        "r_core_normal_in_r": stage.r_core.is_normal_under(gen_residues),
        "m_core_r_stable": all(
            transform_lattice(g, stage.m_core) == stage.m_core
            for g in pair.r_generators
        ),
        "r_core_acts_trivially_on_quotient": trivial_action,
    }
    results["verdict"] = "pass" if all(
        v for k, v in results.items() if k != "verdict"
    ) else "fail"
    return results

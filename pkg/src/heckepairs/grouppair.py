"""Pairs (G, H) = (N x| Q, M x| R) of semidirect products.

Two families are implemented:

* planar: N = K^2 for K = Q or Z[1/p], M a full lattice (default Z^2),
  Q a matrix group acting linearly (all of GL2 over K, or the invertible
  elements of a real quadratic field embedded as 2x2 matrices), and
  R = Q intersect GL(2, Z);
* heisenberg: N = Q/Z x Q, M = {0} x Z, Q the rational translations
  (1, q; 0, 1) acting through the second coordinate, R the integer ones.

Group elements are written n*q, so (n1, q1)(n2, q2) = (n1 + q1.n2, q1 q2)
with N additive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from .arith import (
    Lattice,
    Mat2,
    ResidueRing,
    check_discriminant,
    lattice_index,
    lattice_intersect,
    pell_fundamental,
    rat_from_str,
    rat_to_str,
    transform_lattice,
)
from .errors import (
    BadDiscriminant,
    ConductorOverflow,
    ConfigInvalid,
    DescriptorMismatch,
    EnumerationBound,
    NotInQ,
)

PLANAR = "planar"
HEISENBERG = "heisenberg"
FULL_GL2 = "full_gl2"
QUAD_TORUS = "quad_torus"
UNIPOTENT = "unipotent"

_GL2_STANDARD_GENS = (
    Mat2.of(1, 1, 0, 1),
    Mat2.of(1, 0, 1, 1),
    Mat2.diag(1, -1),
)


def _frac_mod1(x: Fraction) -> Fraction:
    return x % 1


@dataclass(frozen=True)
class GElem:
    """Element n*q of G; n_part is a pair of rationals in both families."""

    n: tuple[Fraction, Fraction]
    q: object  # Mat2 for planar, Fraction for heisenberg
    pair: "PairDescriptor"

    def __str__(self) -> str:
        n = f"({rat_to_str(self.n[0])},{rat_to_str(self.n[1])})"
        q = str(self.q) if isinstance(self.q, Mat2) else rat_to_str(self.q)
        return f"n={n};q={q}"

    def to_json(self) -> dict:
        q = self.q.to_lists() if isinstance(self.q, Mat2) else rat_to_str(self.q)
        return {"n": [rat_to_str(self.n[0]), rat_to_str(self.n[1])], "q": q}


class PairDescriptor:
    """Concrete (N x| Q, M x| R) family with explicit generator sets."""

    def __init__(
        self,
        family: str,
        base_ring: str = "Q",
        p: int | None = None,
        q_kind: str | None = None,
        d: int | None = None,
        m_lattice: Lattice | None = None,
        r_generators=None,
    ):
        if family not in (PLANAR, HEISENBERG):
            raise ConfigInvalid(f"unknown family {family!r}")
        if base_ring not in ("Q", "Z[1/p]"):
            raise ConfigInvalid(f"unknown base ring {base_ring!r}")
        if base_ring == "Z[1/p]":
            if p is None or p < 2:
                raise ConfigInvalid("base ring Z[1/p] needs a prime p")
            from .arith import is_prime

            if not is_prime(p):
                raise ConfigInvalid(f"p = {p} is not prime")
        self.family = family
        self.base_ring = base_ring
        self.p = p if base_ring == "Z[1/p]" else None
        self.d = None
        self.quad_unit: tuple[int, int] | None = None

        if family == HEISENBERG:
            self.q_kind = UNIPOTENT
            self.m_lattice = None
            gens = r_generators if r_generators is not None else [Fraction(1)]
            self.r_generators = tuple(Fraction(g) for g in gens)
            for g in self.r_generators:
                if g.denominator != 1:
                    raise ConfigInvalid(f"R generator {g} is not an integer")
        else:
            if q_kind not in (FULL_GL2, QUAD_TORUS):
                raise ConfigInvalid(f"planar family needs Q kind, got {q_kind!r}")
            self.q_kind = q_kind
            if q_kind == QUAD_TORUS:
                if d is None:
                    raise ConfigInvalid("quad torus needs the parameter d")
                check_discriminant(d)
                if d < 2:
                    raise BadDiscriminant(f"d = {d}: only real quadratic tori supported")
                self.d = d
                self.quad_unit = pell_fundamental(d)
            self.m_lattice = m_lattice if m_lattice is not None else Lattice.standard()
            if r_generators is not None:
                gens = tuple(r_generators)
            elif q_kind == FULL_GL2:
                gens = _GL2_STANDARD_GENS
            else:
                m0, n0 = self.quad_unit
                gens = (Mat2.scalar(-1), Mat2.of(m0, d * n0, n0, m0))
            self.r_generators = gens
            for g in self.r_generators:
                if not self.in_r(g):
                    raise ConfigInvalid(f"R generator {g} fails R membership")
                if transform_lattice(g, self.m_lattice) != self.m_lattice:
                    raise ConfigInvalid(f"R generator {g} does not normalize M")

    # -- identity, comparison ------------------------------------------------

    def _key(self):
        return (
            self.family,
            self.base_ring,
            self.p,
            self.q_kind,
            self.d,
            self.m_lattice,
            self.r_generators,
        )

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, PairDescriptor) and self._key() == other._key()

    def __hash__(self):
        # hashed on every GElem hash during coset enumeration
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = self.__dict__["_hash"] = hash(self._key())
        return cached

    def __repr__(self):
        ring = self.base_ring if self.p is None else f"Z[1/{self.p}]"
        return f"PairDescriptor({self.family}, {self.q_kind}, {ring})"

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def planar_gl2(p: int | None = None, m_lattice: Lattice | None = None) -> "PairDescriptor":
        ring = "Q" if p is None else "Z[1/p]"
        return PairDescriptor(PLANAR, ring, p, FULL_GL2, m_lattice=m_lattice)

    @staticmethod
    def quad_torus(d: int) -> "PairDescriptor":
        return PairDescriptor(PLANAR, "Q", None, QUAD_TORUS, d=d)

    @staticmethod
    def heisenberg() -> "PairDescriptor":
        return PairDescriptor(HEISENBERG)

    @staticmethod
    def from_config(cfg: dict) -> "PairDescriptor":
        try:
            family = cfg["family"]
            base_ring = cfg.get("base_ring", "Q")
            p = cfg.get("p")
            q_kind = cfg.get("Q_kind")
            d = cfg.get("d")
            m_lattice = None
            if cfg.get("M_basis") is not None:
                m_lattice = Lattice.from_basis(Mat2.from_lists(cfg["M_basis"]))
            r_generators = None
            if cfg.get("R_generators") is not None:
                if family == HEISENBERG:
                    r_generators = [rat_from_str(str(g)) for g in cfg["R_generators"]]
                else:
                    r_generators = [Mat2.from_lists(g) for g in cfg["R_generators"]]
            return PairDescriptor(family, base_ring, p, q_kind, d, m_lattice, r_generators)
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigInvalid(f"bad pair configuration: {exc}") from exc

    def to_config(self) -> dict:
        cfg = {"family": self.family, "base_ring": self.base_ring}
        if self.p is not None:
            cfg["p"] = self.p
        if self.family == PLANAR:
            cfg["Q_kind"] = self.q_kind
            if self.d is not None:
                cfg["d"] = self.d
            cfg["M_basis"] = self.m_lattice.basis().to_lists()
            cfg["R_generators"] = [g.to_lists() for g in self.r_generators]
        else:
            cfg["R_generators"] = [rat_to_str(g) for g in self.r_generators]
        return cfg

    # -- membership predicates -------------------------------------------------

    def in_ring(self, x: Fraction) -> bool:
        if self.base_ring == "Q":
            return True
        den = x.denominator
        while den % self.p == 0:
            den //= self.p
        return den == 1

    def _unit_in_ring(self, x: Fraction) -> bool:
        if x == 0:
            return False
        if self.base_ring == "Q":
            return True
        v = abs(x)
        num, den = v.numerator, v.denominator
        while num % self.p == 0:
            num //= self.p
        while den % self.p == 0:
            den //= self.p
        return num == 1 and den == 1

    def in_q(self, q) -> bool:
        if self.family == HEISENBERG:
            return isinstance(q, Fraction)
        if not isinstance(q, Mat2):
            return False
        if not all(self.in_ring(x) for x in q.entries()):
            return False
        if self.q_kind == QUAD_TORUS and not (q.a == q.d and q.b == self.d * q.c):
            return False
        return self._unit_in_ring(q.det())

    def in_r(self, q) -> bool:
        if self.family == HEISENBERG:
            return isinstance(q, Fraction) and q.denominator == 1
        return (
            isinstance(q, Mat2)
            and self.in_q(q)
            and q.is_integral()
            and abs(q.det()) == 1
        )

    def in_n(self, n: tuple[Fraction, Fraction]) -> bool:
        if self.family == HEISENBERG:
            return True
        return self.in_ring(n[0]) and self.in_ring(n[1])

    def in_m(self, n: tuple[Fraction, Fraction]) -> bool:
        if self.family == HEISENBERG:
            return _frac_mod1(n[0]) == 0 and n[1].denominator == 1
        return self.m_lattice.contains(n)

    def in_h(self, x: "GElem") -> bool:
        return self.in_m(x.n) and self.in_r(x.q)

    @property
    def has_central_scalars(self) -> bool:
        return self.family == PLANAR

    @property
    def q_is_abelian(self) -> bool:
        return self.q_kind in (QUAD_TORUS, UNIPOTENT)

    # -- group operations --------------------------------------------------------

    def element(self, n, q) -> GElem:
        n = (Fraction(n[0]), Fraction(n[1]))
        if self.family == HEISENBERG:
            q = Fraction(q)
            n = (_frac_mod1(n[0]), n[1])
        if not self.in_q(q):
            raise NotInQ(f"{q} is not in Q for {self!r}")
        if not self.in_n(n):
            raise NotInQ(f"{n} is not in N for {self!r}")
        return GElem(n, q, self)

    def identity(self) -> GElem:
        q = Fraction(0) if self.family == HEISENBERG else Mat2.identity()
        return GElem((Fraction(0), Fraction(0)), q, self)

    def q_act(self, q, n: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
        """Action of Q on N (conjugation inside G, written additively)."""
        if self.family == HEISENBERG:
            return (_frac_mod1(n[0] + q * n[1]), n[1])
        return q.apply(n)

    def _check_same(self, x: GElem, y: GElem) -> None:
        if x.pair != y.pair:
            raise DescriptorMismatch("elements belong to different descriptors")

    def mul(self, x: GElem, y: GElem) -> GElem:
        self._check_same(x, y)
        ax = self.q_act(x.q, y.n)
        n = (x.n[0] + ax[0], x.n[1] + ax[1])
        if self.family == HEISENBERG:
            return GElem((_frac_mod1(n[0]), n[1]), x.q + y.q, self)
        return GElem(n, x.q * y.q, self)

    def inv(self, x: GElem) -> GElem:
        if self.family == HEISENBERG:
            qi = -x.q
            m = self.q_act(qi, (-x.n[0], -x.n[1]))
            return GElem((_frac_mod1(m[0]), m[1]), qi, self)
        qi = x.q.inv()
        if not self.in_q(qi):
            raise NotInQ(f"inverse of {x.q} left Q")
        m = qi.apply((-x.n[0], -x.n[1]))
        return GElem(m, qi, self)

    def conj_in_h(self, x: GElem, h: GElem) -> bool:
        """h in xHx^-1, tested directly on the group law."""
        return self.in_h(self.mul(self.mul(self.inv(x), h), x))

    def h_generators(self) -> list[GElem]:
        """Generators of H = M x| R together with their inverses."""
        out = []
        if self.family == HEISENBERG:
            vecs = [(Fraction(0), Fraction(1))]
            qs = list(self.r_generators)
            qid = Fraction(0)
        else:
            vecs = self.m_lattice.vectors()
            qs = list(self.r_generators)
            qid = Mat2.identity()
        for v in vecs:
            out.append(GElem(v, qid, self))
            out.append(GElem((-v[0], -v[1]), qid, self))
        for g in qs:
            out.append(GElem((Fraction(0), Fraction(0)), g, self))
            out.append(self.inv(out[-1]))
        return out

    # -- canonical coset representatives ----------------------------------------

    def _canon_q(self, q):
        """Canonical representative of the coset qR."""
        if self.family == HEISENBERG:
            return _frac_mod1(q)
        if self.q_kind == FULL_GL2:
            # R = Q meet GL(2,Z), so qR <-> the column span of q
            return Lattice.from_basis(q).basis()
        return self._quad_canon_q(q)

    def _quad_canon_q(self, q: Mat2) -> Mat2:
        """Normalize a + b*sqrt(d) by the unit group {+-u^k}.

        The representative is the one with positive real embedding whose
        square lies in [|norm|, |norm| * u^2); comparisons are exact sign
        computations in the quadratic field.
        """
        d = self.d
        m0, n0 = self.quad_unit

        def qmul(x, y):
            return (x[0] * y[0] + d * x[1] * y[1], x[0] * y[1] + x[1] * y[0])

        def sign_real(x):
            a, b = x
            if a == 0 and b == 0:
                return 0
            if a >= 0 and b >= 0:
                return 1
            if a <= 0 and b <= 0:
                return -1
            t = a * a - d * b * b
            s = 1 if t > 0 else -1
            return s if a > 0 else -s

        alpha = (q.a, q.c)
        if sign_real(alpha) < 0:
            alpha = (-alpha[0], -alpha[1])
        norm = abs(alpha[0] * alpha[0] - d * alpha[1] * alpha[1])
        unit = (Fraction(m0), Fraction(n0))
        unit_norm = m0 * m0 - d * n0 * n0
        unit_inv = (Fraction(m0), Fraction(-n0))
        if unit_norm == -1:
            unit_inv = (Fraction(-m0), Fraction(n0))
        upper = qmul((norm, Fraction(0)), qmul(unit, unit))

        def minus(x, y):
            return (x[0] - y[0], x[1] - y[1])

        beta = alpha
        sq = qmul(beta, beta)
        while sign_real(minus(sq, (norm, Fraction(0)))) < 0:
            beta = qmul(beta, unit)
            sq = qmul(beta, beta)
        while sign_real(minus(sq, upper)) >= 0:
            beta = qmul(beta, unit_inv)
            sq = qmul(beta, beta)
        return Mat2(beta[0], d * beta[1], beta[1], beta[0])

    def canon_coset(self, x: GElem) -> GElem:
        """Canonical element of the left coset xH; equal cosets map to equal
        results, so this doubles as the hashable coset key."""
        if self.family == HEISENBERG:
            a, u = x.n
            b = -(u // 1)
            ustar = u + b
            astar = _frac_mod1(a + x.q * b)
            return GElem((astar, ustar), _frac_mod1(x.q), self)
        qstar = self._canon_q(x.q)
        mlat = transform_lattice(qstar, self.m_lattice)
        return GElem(mlat.reduce_vector(x.n), qstar, self)


# ---------------------------------------------------------------------------
# stabilizer subgroups at congruence level


@dataclass(frozen=True)
class ResidueSubgroup:
    """Subset of the image of R in GL(2, Z/level), certified to be a subgroup.

    Matrices are stored in M-basis coordinates, so membership conditions of
    the form (r - 1)n in M become integrality conditions mod level.
    """

    level: int
    elements: frozenset

    def __post_init__(self):
        ring = ResidueRing(self.level)
        if ring.identity_mat() not in self.elements:
            raise ValueError("residue subgroup must contain the identity")
        for x in self.elements:
            if ring.mat_inv(x) not in self.elements:
                raise ValueError(f"residue subgroup not closed under inverse at {x}")
            for y in self.elements:
                if ring.mat_mul(x, y) not in self.elements:
                    raise ValueError("residue subgroup not closed under product")

    def __len__(self):
        return len(self.elements)

    def is_normal_under(self, gens) -> bool:
        ring = ResidueRing(self.level)
        for g in gens:
            gi = ring.mat_inv(g)
            for x in self.elements:
                if ring.mat_mul(ring.mat_mul(g, x), gi) not in self.elements:
                    return False
        return True


@dataclass(frozen=True)
class StabDescriptor:
    """Product form M' * S of a stabilizer subgroup of H: a lattice part and
    an R-part cut out at a congruence level."""

    m_lattice: Lattice
    r_condition: ResidueSubgroup


# ---------------------------------------------------------------------------
# index computations


def _m_coords(pair: PairDescriptor, n) -> tuple[Fraction, Fraction]:
    return pair.m_lattice.basis().inv().apply(n)


def _conj_gens_mod(pair: PairDescriptor, s: int, include_inverses: bool = True):
    """R generators conjugated into M-basis coordinates, reduced mod s."""
    ring = ResidueRing(s)
    b = pair.m_lattice.basis()
    bi = b.inv()
    out = []
    for g in pair.r_generators:
        gm = bi * g * b
        out.append(ring.reduce_mat(gm))
        if include_inverses:
            out.append(ring.reduce_mat(gm.inv()))
    return out


def r_image_mod(pair: PairDescriptor, s: int, bound: int | None = None) -> set:
    """Image of R in GL(2, Z/s) (in M-basis coordinates), by closure."""
    ring = ResidueRing(s)
    return ring.close_under_mul(_conj_gens_mod(pair, s), bound)


def m_cap_conj(pair: PairDescriptor, q: Mat2) -> Lattice:
    """The lattice M meet q.M (planar families)."""
    if pair.family != PLANAR:
        raise ValueError("m_cap_conj is defined for planar families only")
    return lattice_intersect(pair.m_lattice, transform_lattice(q, pair.m_lattice))


def index_m_cap_conj(pair: PairDescriptor, q) -> int:
    """[M : M meet qMq^-1]."""
    if pair.family == HEISENBERG:
        return Fraction(q).denominator
    return lattice_index(pair.m_lattice, m_cap_conj(pair, q))


def index_r_cap_conj(pair: PairDescriptor, q, bound: int = 100000) -> int:
    """[R : R meet qRq^-1], as the orbit size of the coset qR under R.

    For the matrix families the coset qR is the column span of q, so the
    orbit is enumerated on canonical lattices; abelian Q gives 1 directly.
    """
    if not pair.in_q(q):
        raise NotInQ(f"{q} is not in Q")
    if pair.q_is_abelian:
        return 1
    start = Lattice.from_basis(q)
    seen = {start}
    frontier = [start]
    gens = [g for r in pair.r_generators for g in (r, r.inv())]
    while frontier:
        cur = frontier.pop()
        for g in gens:
            img = transform_lattice(g, cur)
            if img not in seen:
                if len(seen) >= bound:
                    raise EnumerationBound(f"orbit of {q} exceeded {bound}")
                seen.add(img)
                frontier.append(img)
    return len(seen)


def index_r_cap_conj_residue(pair: PairDescriptor, q, conductor_cap: int = 1000) -> int:
    """[R : R_q] recovered at congruence level s = |det| of the integralized q.

    Independent of the orbit method: counts |image of R mod s| divided by the
    number of residues whose conjugate by q stays integral.
    """
    if pair.q_is_abelian:
        return 1
    scale = q.denominator_lcm()
    qi = Mat2(q.a * scale, q.b * scale, q.c * scale, q.d * scale)
    s = abs(qi.det())
    assert s.denominator == 1
    s = int(s)
    if s == 1:
        return 1
    if s > conductor_cap:
        raise ConductorOverflow(f"conductor {s} exceeds cap {conductor_cap}")
    image = r_image_mod(pair, s)
    qinv = qi.inv()
    member = 0
    for r in image:
        lift = Mat2.of(*r)
        if (qinv * lift * qi).is_integral():
            member += 1
    assert len(image) % member == 0
    return len(image) // member


def _coset_stab_level(pair: PairDescriptor, n) -> tuple[int, tuple[Fraction, Fraction]]:
    c = _m_coords(pair, n)
    s = lcm(c[0].denominator, c[1].denominator)
    return s, c


def index_r_coset_stab(pair: PairDescriptor, n) -> int:
    """[R : stabilizer of n + M], the size of the R-orbit of n + M in N/M."""
    if pair.family == HEISENBERG:
        return Fraction(n[1]).denominator
    s, c = _coset_stab_level(pair, n)
    if s == 1:
        return 1
    v = (int(c[0] * s) % s, int(c[1] * s) % s)
    gens = _conj_gens_mod(pair, s)
    ring = ResidueRing(s)
    orbit = {v}
    frontier = [v]
    while frontier:
        cur = frontier.pop()
        for g in gens:
            w = ring.vec_apply(g, cur)
            if w not in orbit:
                orbit.add(w)
                frontier.append(w)
    return len(orbit)


def in_r_coset_stab(pair: PairDescriptor, n, r) -> bool:
    """r n r^-1 in nM, i.e. r.n - n in M (r must already lie in R)."""
    if pair.family == HEISENBERG:
        return (r * n[1]).denominator == 1
    rn = pair.q_act(r, n)
    return pair.m_lattice.contains((rn[0] - n[0], rn[1] - n[1]))


def in_r_cap_conj(pair: PairDescriptor, q, r) -> bool:
    """r in R meet qRq^-1."""
    if not pair.in_r(r):
        return False
    if pair.q_is_abelian:
        return True
    return pair.in_r(q.inv() * r * q)


def stab_descriptor_n(pair: PairDescriptor, n) -> StabDescriptor:
    """Product form of H_n = M * (stabilizer of n + M in R) at its level."""
    if pair.family != PLANAR:
        raise ValueError("stab descriptors are available for planar families")
    s, c = _coset_stab_level(pair, n)
    image = r_image_mod(pair, max(s, 1))
    ring = ResidueRing(max(s, 1))
    sc = (c[0] * s, c[1] * s)
    members = set()
    for r in image:
        # (r - 1) c = 0 mod s in M-coordinates
        w = ring.vec_apply(r, (int(sc[0]) % s, int(sc[1]) % s)) if s > 1 else (0, 0)
        if s == 1 or w == (int(sc[0]) % s, int(sc[1]) % s):
            members.add(r)
    return StabDescriptor(pair.m_lattice, ResidueSubgroup(max(s, 1), frozenset(members)))


def stab_descriptor_q(pair: PairDescriptor, q: Mat2,
                      conductor_cap: int = 1000) -> StabDescriptor:
    """Product form of H_q = (M meet qMq^-1) * (R meet qRq^-1), with the
    R-part cut out at level |det| of the integralized q."""
    if pair.family != PLANAR:
        raise ValueError("stab descriptors are available for planar families")
    scale = q.denominator_lcm()
    qi = Mat2(q.a * scale, q.b * scale, q.c * scale, q.d * scale)
    b = pair.m_lattice.basis()
    bi = b.inv()
    # residues live in M-coordinates, so the level absorbs the base change
    s = int(abs(qi.det())) * b.denominator_lcm() * bi.denominator_lcm()
    if s > conductor_cap:
        raise ConductorOverflow(f"conductor {s} exceeds cap {conductor_cap}")
    image = r_image_mod(pair, s)
    if pair.q_is_abelian or s == 1:
        members = frozenset(image)
    else:
        qinv = qi.inv()
        members = frozenset(
            r for r in image
            if (qinv * (b * Mat2.of(*r) * bi) * qi).is_integral()
        )
    return StabDescriptor(m_cap_conj(pair, q), ResidueSubgroup(s, members))


# ---------------------------------------------------------------------------
# verification reports


def _check(name, law, inputs, outputs, verdict) -> dict:
    return {
        "name": name,
        "law": law,
        "inputs": inputs,
        "outputs": outputs,
        "verdict": verdict,
    }


def hecke_indices_report(pair: PairDescriptor, q_samples, n_samples,
                         coset_bound: int = 100000,
                         conductor_cap: int = 1000) -> dict:
    """Finiteness of [M:M_q], [R:R_q] and [R:R_(n,M)] on the given samples.

    All three families of indices finite is the sampled form of the Hecke
    condition for (G, H).
    """
    checks = []
    for q in q_samples:
        qs = str(q) if isinstance(q, Mat2) else rat_to_str(Fraction(q))
        try:
            im = index_m_cap_conj(pair, q)
            ir = index_r_cap_conj(pair, q, bound=coset_bound)
            out = {"index_m": im, "index_r": ir}
            verdict = "pass"
            if pair.family == PLANAR and pair.q_kind == FULL_GL2:
                try:
                    out["index_r_residue"] = index_r_cap_conj_residue(
                        pair, q, conductor_cap
                    )
                    if out["index_r_residue"] != ir:
                        verdict = "fail"
                except ConductorOverflow:
                    pass
            checks.append(
                _check("hecke_index_q", "[M:M_q] and [R:R_q] finite",
                       {"q": qs}, out, verdict)
            )
        except (EnumerationBound, ConductorOverflow) as exc:
            checks.append(
                _check("hecke_index_q", "[M:M_q] and [R:R_q] finite",
                       {"q": qs}, {"error": str(exc)}, "inconclusive")
            )
    for n in n_samples:
        nv = (Fraction(n[0]), Fraction(n[1]))
        ns = f"({rat_to_str(nv[0])},{rat_to_str(nv[1])})"
        idx = index_r_coset_stab(pair, nv)
        checks.append(
            _check("hecke_index_n", "[R:R_(n,M)] finite",
                   {"n": ns}, {"index": idx}, "pass")
        )
    verdicts = {c["verdict"] for c in checks}
    overall = "fail" if "fail" in verdicts else (
        "inconclusive" if "inconclusive" in verdicts else "pass")
    return {"checks": checks, "verdict": overall}


def reduced_stage_report(pair: PairDescriptor, stage, level: int | None = None,
                         threshold: int = 2, prev: dict | None = None) -> dict:
    """Finite-stage evidence for reducedness.

    Computes the intersection of M meet qMq^-1 over the stage and the kernel
    surrogate of the R-action at a congruence level.  The verdict is only
    "certified" when the indices clear the threshold and strictly grow
    relative to the previous (coarser) stage report.
    """
    if pair.family == HEISENBERG:
        m_index = 1
        for q in stage:
            m_index = lcm(m_index, Fraction(q).denominator)
        s = level if level is not None else max(m_index, 2)
        trivial = [rat_to_str(g) for g in pair.r_generators if g % s == 0 and g != 0]
        r_index = s
        m_shape = f"{m_index}Z"
    else:
        lat = pair.m_lattice
        s = 1
        for q in stage:
            lat = lattice_intersect(lat, transform_lattice(q, pair.m_lattice))
            scale = q.denominator_lcm()
            det = abs((Mat2(q.a * scale, q.b * scale, q.c * scale, q.d * scale)).det())
            s = lcm(s, int(det))
        m_index = lattice_index(pair.m_lattice, lat)
        if level is not None:
            s = level
        s = max(s, 1)
        ring = ResidueRing(s)
        ident = ring.identity_mat()
        trivial = []
        for g in pair.r_generators:
            gm = ring.reduce_mat(pair.m_lattice.basis().inv() * g * pair.m_lattice.basis())
            if gm == ident and g != Mat2.identity():
                trivial.append(str(g))
        if s == 1:
            r_index = 1
        else:
            image = r_image_mod(pair, s)
            # kernel surrogate: residues acting trivially on (1/s)M / M
            kernel = [r for r in image if r == ident]
            r_index = len(image) // len(kernel)
        m_shape = str(lat)

    growing = prev is None or (
        m_index >= prev["m_index"]
        and r_index >= prev["r_index"]
        and (m_index > prev["m_index"] or r_index > prev["r_index"])
    )
    certified = (
        m_index >= threshold
        and r_index >= threshold
        and not trivial
        and growing
        and (prev is None or prev["verdict"] in ("certified", "inconclusive"))
    )
    return {
        "m_lattice": m_shape,
        "m_index": m_index,
        "r_index": r_index,
        "level": s,
        "kernel_witnesses": trivial,
        "verdict": "certified" if certified else "inconclusive",
    }


def stabilizer_identities_report(pair: PairDescriptor, x_samples, h_samples) -> dict:
    """Check the product forms of the stabilizer subgroups on samples.

    For x = q n and h = m r in H this compares direct conjugation tests
    against the lattice/congruence descriptions:
      * h in H_n        <->  m in M       and r n r^-1 in nM
      * h in H_q        <->  m in M_q     and r in R_q
      * h in H_x meet H_q <-> m in M_q    and q^-1 r q in stab of n + M
    and, over the whole sample, membership in the intersection of all
    H_x meet H_q against the corresponding product of intersections.
    """
    checks = []
    ident = pair.identity()
    inter_lhs_all = {}
    inter_rhs_all = {}
    for h in h_samples:
        if not pair.in_h(h):
            checks.append(_check("stab_sample", "h in H", {"h": str(h)},
                                 {}, "fail"))
            continue
        m_part, r_part = h.n, h.q
        lhs_all = True
        rhs_all = True
        for x in x_samples:
            q = x.q
            qinv = -q if pair.family == HEISENBERG else q.inv()
            n = pair.q_act(qinv, x.n)  # x = q.n with this n
            n_elem = pair.element(n, Fraction(0) if pair.family == HEISENBERG else Mat2.identity())
            q_elem = GElem((Fraction(0), Fraction(0)), q, pair)

            # identity for H_n
            lhs_n = pair.in_h(h) and pair.conj_in_h(n_elem, h)
            rhs_n = pair.in_m(m_part) and pair.in_r(r_part) and \
                in_r_coset_stab(pair, n, r_part)
            # identity for H_q
            lhs_q = pair.in_h(h) and pair.conj_in_h(q_elem, h)
            if pair.family == HEISENBERG:
                rhs_q = pair.in_m(m_part) and (q * m_part[1]).denominator == 1 \
                    and pair.in_r(r_part)
            else:
                rhs_q = m_cap_conj(pair, q).contains(m_part) and \
                    in_r_cap_conj(pair, q, r_part)
            # identity for H_x meet H_q
            lhs_xq = lhs_q and pair.conj_in_h(x, h)
            if pair.family == HEISENBERG:
                rhs_xq = rhs_q and (r_part * n[1]).denominator == 1
            else:
                conj = q.inv() * r_part * q
                rhs_xq = m_cap_conj(pair, q).contains(m_part) and \
                    pair.in_r(conj) and in_r_coset_stab(pair, n, conj)
            lhs_all = lhs_all and lhs_xq
            rhs_all = rhs_all and rhs_xq
            ok = (lhs_n == rhs_n) and (lhs_q == rhs_q) and (lhs_xq == rhs_xq)
            checks.append(_check(
                "stab_identity",
                "H_n = M R_(n,M); H_q = M_q R_q; H_qn meet H_q = M_q (q R_(n,M) q^-1 meet R)",
                {"h": str(h), "x": str(x)},
                {"h_in_H_n": [lhs_n, rhs_n], "h_in_H_q": [lhs_q, rhs_q],
                 "h_in_H_x_and_H_q": [lhs_xq, rhs_xq]},
                "pass" if ok else "fail",
            ))
        inter_lhs_all[str(h)] = lhs_all
        inter_rhs_all[str(h)] = rhs_all
    for key in inter_lhs_all:
        ok = inter_lhs_all[key] == inter_rhs_all[key]
        checks.append(_check(
            "stab_intersection",
            "intersection over samples of H_x meet H_q equals the product of the parts",
            {"h": key},
            {"membership": [inter_lhs_all[key], inter_rhs_all[key]]},
            "pass" if ok else "fail",
        ))
    verdicts = {c["verdict"] for c in checks}
    return {"checks": checks,
            "verdict": "fail" if "fail" in verdicts else "pass"}


def downward_directed_report(pair: PairDescriptor, q_samples) -> dict:
    """For each pair of conjugates of M, exhibit a scalar conjugate inside both.

    Requires the descriptor to contain the central scalars (planar families).
    """
    if not pair.has_central_scalars:
        raise ValueError("descriptor has no central scalars")
    checks = []
    for i, q1 in enumerate(q_samples):
        for q2 in q_samples[i:]:
            lam1 = q1.inv().denominator_lcm()
            lam2 = q2.inv().denominator_lcm()
            lam = lcm(lam1, lam2)
            witness = Mat2.scalar(lam)
            target = lattice_intersect(
                transform_lattice(q1, pair.m_lattice),
                transform_lattice(q2, pair.m_lattice),
            )
            ok = target.contains_lattice(transform_lattice(witness, pair.m_lattice))
            checks.append(_check(
                "downward_directed",
                "scalar k with kM inside q1 M meet q2 M",
                {"q1": str(q1), "q2": str(q2)},
                {"witness": str(witness), "contained": ok},
                "pass" if ok else "fail",
            ))
    verdicts = {c["verdict"] for c in checks}
    return {"checks": checks,
            "verdict": "fail" if "fail" in verdicts else "pass"}

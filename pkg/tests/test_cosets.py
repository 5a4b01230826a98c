import random
from fractions import Fraction

import pytest

from heckepairs.arith import Mat2
from heckepairs.cosets import (
    DoubleCosetCache,
    HeckeElement,
    canonical_key,
    convolve,
    delta,
    double_coset,
    involution,
    l_of,
    left_coset_reps,
)
from heckepairs.errors import EnumerationBound
from heckepairs.grouppair import (
    PairDescriptor,
    index_m_cap_conj,
    index_r_cap_conj,
    index_r_coset_stab,
)

F = Fraction


@pytest.fixture(scope="module")
def gl2(request):
    return PairDescriptor.planar_gl2(p=2)


@pytest.fixture(scope="module")
def gl2_q():
    return PairDescriptor.planar_gl2()


@pytest.fixture(scope="module")
def heis():
    return PairDescriptor.heisenberg()


@pytest.fixture(scope="module")
def quad2():
    return PairDescriptor.quad_torus(2)


def random_h(pair, rng):
    h = pair.identity()
    gens = pair.h_generators()
    for _ in range(rng.randint(0, 6)):
        h = pair.mul(h, rng.choice(gens))
    return h


# ---------------------------------------------------------------------------
# left cosets, L, delta


def test_left_reps_in_h(gl2):
    x = gl2.element((1, 1), Mat2.of(1, 1, 0, 1))
    reps = left_coset_reps(x)
    assert reps == [gl2.canon_coset(gl2.identity())]


def test_left_reps_diag2(gl2):
    x = gl2.element((0, 0), Mat2.diag(2, 1))
    reps = left_coset_reps(x)
    assert len(reps) == 6  # [M:M_q][R:R_q] = 2 * 3


def test_left_reps_pure_n(gl2):
    x = gl2.element((F(1, 2), 0), Mat2.identity())
    assert len(left_coset_reps(x)) == 3  # [R:R_(n,M)] = 3


@pytest.mark.parametrize("p", [2, 3, 5])
def test_l_value_two_methods(p):
    pair = PairDescriptor.planar_gl2(p=p)
    q = Mat2.diag(p, 1)
    x = pair.element((0, 0), q)
    by_bfs = l_of(x)
    by_indices = index_m_cap_conj(pair, q) * index_r_cap_conj(pair, q)
    assert by_bfs == by_indices == p * (p + 1)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_l_pure_n_two_methods(p):
    pair = PairDescriptor.planar_gl2(p=p)
    n = (F(1, p), F(0))
    x = pair.element(n, Mat2.identity())
    assert l_of(x) == index_r_coset_stab(pair, n) == p * p - 1


def test_l_heisenberg(heis):
    for m in (1, 2, 5, 6):
        x = heis.element((0, F(1, m)), 0)
        assert l_of(x) == m
    for n in (1, 3, 4):
        x = heis.element((0, 0), F(1, n))
        assert l_of(x) == n == index_m_cap_conj(heis, F(1, n))


def test_l_quad_torus(quad2):
    # pure q in the torus: L = [M : M_q] since Q is abelian
    q = Mat2.of(3, 2 * 1, 1, 3)  # 3 + sqrt(2), norm 7
    x = quad2.element((0, 0), q)
    assert l_of(x) == index_m_cap_conj(quad2, q) == 7


def test_delta_examples(gl2):
    assert delta(gl2.identity()) == 1
    for p in (2, 3, 5):
        pair = PairDescriptor.planar_gl2(p=p)
        x = pair.element((0, 0), Mat2.diag(p, 1))
        assert delta(x) == p
        assert l_of(pair.inv(x)) == p + 1


def test_delta_multiplicative_inverse(gl2):
    rng = random.Random(3)
    for _ in range(10):
        h1, h2 = random_h(gl2, rng), random_h(gl2, rng)
        x = gl2.mul(h1, gl2.mul(gl2.element((F(1, 2), 0), Mat2.diag(2, 1)), h2))
        assert delta(x) * delta(gl2.inv(x)) == 1


def test_delta_constant_on_left_reps(gl2):
    x = gl2.element((F(1, 2), 0), Mat2.diag(2, 1))
    d = delta(x)
    for rep in left_coset_reps(x):
        assert delta(rep) == d


def test_enumeration_bound(gl2):
    x = gl2.element((0, 0), Mat2.diag(4, 1))
    with pytest.raises(EnumerationBound):
        l_of(x, bound=3)


# ---------------------------------------------------------------------------
# canonical keys


def test_key_of_h_elements(gl2):
    ident_key = canonical_key(gl2.identity())
    h = gl2.element((3, -2), Mat2.of(1, 0, 1, 1))
    assert canonical_key(h) == ident_key


def test_key_stable_under_rewriting(gl2):
    rng = random.Random(5)
    x = gl2.element((F(1, 2), 0), Mat2.diag(2, 1))
    key = canonical_key(x)
    for _ in range(100):
        y = gl2.mul(random_h(gl2, rng), gl2.mul(x, random_h(gl2, rng)))
        assert canonical_key(y) == key


def test_key_merges_equivalent_diagonals(gl2):
    x = gl2.element((0, 0), Mat2.diag(2, 1))
    y = gl2.element((0, 0), Mat2.diag(1, 2))
    assert canonical_key(x) == canonical_key(y)
    # explicit witness: permutation matrices lie in R
    w = Mat2.of(0, 1, 1, 0)
    assert gl2.in_r(w)
    assert w * Mat2.diag(2, 1) * w == Mat2.diag(1, 2)


def test_key_separates_distinct_cosets(gl2):
    assert canonical_key(gl2.element((0, 0), Mat2.diag(2, 1))) != \
        canonical_key(gl2.element((0, 0), Mat2.diag(4, 1)))
    assert canonical_key(gl2.element((F(1, 2), 0), Mat2.identity())) != \
        canonical_key(gl2.identity())


def test_key_heisenberg_rewriting(heis):
    rng = random.Random(7)
    x = heis.element((F(1, 2), F(1, 3)), F(5, 6))
    key = canonical_key(x)
    for _ in range(100):
        y = heis.mul(random_h(heis, rng), heis.mul(x, random_h(heis, rng)))
        assert canonical_key(y) == key


def test_key_quad_rewriting(quad2):
    rng = random.Random(9)
    x = quad2.element((F(1, 3), 0), Mat2.of(3, 2, 1, 3))
    key = canonical_key(x)
    for _ in range(60):
        y = quad2.mul(random_h(quad2, rng), quad2.mul(x, random_h(quad2, rng)))
        assert canonical_key(y) == key


# ---------------------------------------------------------------------------
# convolution and involution


def brute_convolve_coeff(pair, dca, dcb, target_rep, bound, cache):
    """Independent evaluation of (chi_a * chi_b)(x): count left reps y_i of
    HaH with y_i^-1 x inside HbH, membership tested against the coset list."""
    forms_b = set(dcb.left_reps)
    count = 0
    for yi in dca.left_reps:
        z = pair.mul(pair.inv(yi), target_rep)
        if pair.canon_coset(z) in forms_b:
            count += 1
    return count


def test_unit_is_identity(gl2):
    cache = DoubleCosetCache()
    unit = HeckeElement.unit(gl2)
    f = HeckeElement.char_fn(gl2.element((0, 0), Mat2.diag(2, 1)), cache=cache) + \
        HeckeElement.char_fn(gl2.element((F(1, 2), 0), Mat2.identity()), F(3, 7),
                             cache=cache)
    assert convolve(unit, f, cache=cache) == f
    assert convolve(f, unit, cache=cache) == f


def test_convolve_against_bruteforce(gl2):
    cache = DoubleCosetCache()
    a = gl2.element((0, 0), Mat2.diag(2, 1))
    f = HeckeElement.char_fn(a, cache=cache)
    prod = convolve(f, f, cache=cache)
    dca = double_coset(a, cache=cache)
    assert prod.terms  # nonempty support
    total = 0
    for rep, coeff in prod.terms.items():
        expected = brute_convolve_coeff(gl2, dca, dca, rep, 100000, cache)
        assert coeff == expected
        total += coeff * double_coset(rep, cache=cache).degree
    # mass check: sum over left cosets of (f*f) equals L(a)^2
    assert total == dca.degree ** 2


def test_convolve_heisenberg_bruteforce(heis):
    cache = DoubleCosetCache()
    a = heis.element((0, F(1, 2)), F(1, 3))
    b = heis.element((F(1, 2), 0), F(1, 2))
    fa = HeckeElement.char_fn(a, cache=cache)
    fb = HeckeElement.char_fn(b, cache=cache)
    prod = convolve(fa, fb, cache=cache)
    dca, dcb = double_coset(a, cache=cache), double_coset(b, cache=cache)
    for rep, coeff in prod.terms.items():
        assert coeff == brute_convolve_coeff(heis, dca, dcb, rep, 100000, cache)


def test_involution_examples(gl2):
    cache = DoubleCosetCache()
    unit = HeckeElement.unit(gl2)
    assert involution(unit, cache=cache) == unit
    x = gl2.element((0, 0), Mat2.diag(2, 1))
    f = HeckeElement.char_fn(x, cache=cache)
    fi = involution(f, cache=cache)
    (rep, coeff), = fi.terms.items()
    assert coeff == 2  # delta(x)
    assert canonical_key(rep, cache=cache) == canonical_key(gl2.inv(x), cache=cache)


def sample_elements(pair, rng, cache, pool):
    out = []
    for _ in range(8):
        support = rng.sample(pool, rng.randint(1, 3))
        f = HeckeElement(pair, {})
        for x in support:
            f = f + HeckeElement.char_fn(
                x, Fraction(rng.randint(-4, 4), rng.randint(1, 3)), cache=cache
            )
        out.append(f)
    return out


@pytest.mark.parametrize("family", ["gl2", "heis"])
def test_star_algebra_axioms(family, request):
    pair = request.getfixturevalue(family)
    cache = DoubleCosetCache()
    rng = random.Random(11)
    if family == "gl2":
        pool = [
            pair.identity(),
            pair.element((0, 0), Mat2.diag(2, 1)),
            pair.element((F(1, 2), 0), Mat2.identity()),
            pair.element((F(1, 2), F(1, 2)), Mat2.diag(2, 1)),
            pair.element((0, 0), Mat2.scalar(2)),
        ]
    else:
        pool = [
            pair.identity(),
            pair.element((0, F(1, 2)), 0),
            pair.element((0, 0), F(1, 3)),
            pair.element((F(1, 2), F(1, 2)), F(1, 2)),
        ]
    elems = sample_elements(pair, rng, cache, pool)
    unit = HeckeElement.unit(pair)
    for i, f in enumerate(elems):
        g = elems[(i + 3) % len(elems)]
        h = elems[(i + 5) % len(elems)]
        assert convolve(convolve(f, g, cache=cache), h, cache=cache) == \
            convolve(f, convolve(g, h, cache=cache), cache=cache)
        assert involution(involution(f, cache=cache), cache=cache) == f
        assert convolve(unit, f, cache=cache) == f
        assert convolve(f, unit, cache=cache) == f
        assert involution(convolve(f, g, cache=cache), cache=cache) == \
            convolve(involution(g, cache=cache), involution(f, cache=cache),
                     cache=cache)


def test_convolution_bilinear(gl2):
    cache = DoubleCosetCache()
    a = HeckeElement.char_fn(gl2.element((0, 0), Mat2.diag(2, 1)), cache=cache)
    b = HeckeElement.char_fn(gl2.element((F(1, 2), 0), Mat2.identity()), cache=cache)
    c = HeckeElement.char_fn(gl2.element((0, 0), Mat2.scalar(2)), cache=cache)
    lhs = convolve(a + b.scale(F(2, 3)), c, cache=cache)
    rhs = convolve(a, c, cache=cache) + convolve(b, c, cache=cache).scale(F(2, 3))
    assert lhs == rhs


def test_cache_does_not_change_results(gl2):
    cache = DoubleCosetCache()
    x = gl2.element((F(1, 2), 0), Mat2.diag(2, 1))
    assert l_of(x) == l_of(x, cache=cache)
    assert canonical_key(x) == canonical_key(x, cache=cache)
    f = HeckeElement.char_fn(x)
    g = HeckeElement.char_fn(gl2.element((0, 0), Mat2.diag(2, 1)))
    assert convolve(f, g) == convolve(f, g, cache=cache)
    assert involution(f) == involution(f, cache=cache)


def test_hecke_element_json_round_trip(gl2):
    cache = DoubleCosetCache()
    f = HeckeElement.char_fn(gl2.element((0, 0), Mat2.diag(2, 1)), F(5, 3),
                             cache=cache) + \
        HeckeElement.char_fn(gl2.element((F(1, 2), 0), Mat2.identity()), -2,
                             cache=cache)
    data = f.to_json()
    assert HeckeElement.from_json(gl2, data, cache=cache) == f

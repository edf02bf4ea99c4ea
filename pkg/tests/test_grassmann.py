"""Exact Grassmann algebra: signs, calculus, series, serialization."""

from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superhaar.grassmann import (
    GaussianRational,
    GrassmannElement,
    MAX_GENERATORS,
    berezin,
    exp_series,
    from_json,
    inverse_series,
    log_series,
    merge_sign,
    nilpotent_series,
    sqrt_series,
    to_json,
)


def blade_list(blade):
    return [i for i in range(1, 25) if blade >> (i - 1) & 1]


def interleave_sign(a, b):
    """Reference sign: bubble-count the concatenated generator lists."""
    seq = blade_list(a) + blade_list(b)
    swaps = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            swaps += seq[i] > seq[j]
    return -1 if swaps % 2 else 1


def test_merge_sign_exhaustive_small():
    for n in range(5):
        for a in range(1 << n):
            for b in range(1 << n):
                if a & b:
                    continue
                assert merge_sign(a, b) == interleave_sign(a, b)


# -- strategies ------------------------------------------------------------

rationals = st.fractions(
    min_value=-4, max_value=4, max_denominator=4
)

gaussians = st.builds(GaussianRational, rationals, rationals)


@st.composite
def elements(draw, n=None, max_terms=5):
    if n is None:
        n = draw(st.integers(min_value=1, max_value=5))
    blades = st.integers(min_value=0, max_value=(1 << n) - 1)
    terms = draw(
        st.dictionaries(blades, gaussians, min_size=0, max_size=max_terms)
    )
    return GrassmannElement(n, terms)


@st.composite
def element_pairs(draw, count=2):
    n = draw(st.integers(min_value=1, max_value=5))
    return tuple(draw(elements(n=n)) for _ in range(count))


# -- ring laws -------------------------------------------------------------


@given(element_pairs(count=3))
def test_associative_and_distributive(fs):
    f, g, h = fs
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) * h == f * h + g * h


@given(element_pairs(count=2))
def test_supercommutativity_on_homogeneous_parts(fs):
    f, g = fs
    n = f.n
    for bf, cf in f.terms.items():
        for bg, cg in g.terms.items():
            x = GrassmannElement(n, {bf: cf})
            y = GrassmannElement(n, {bg: cg})
            sign = (-1) ** (bf.bit_count() * bg.bit_count())
            assert x * y == (y * x).scale(sign)


def test_generators_anticommute_and_square_to_zero():
    n = 4
    for i in range(1, n + 1):
        gi = GrassmannElement.generator(n, i)
        assert (gi * gi).is_zero()
        for j in range(1, n + 1):
            gj = GrassmannElement.generator(n, j)
            assert gi * gj == -(gj * gi) or i == j


@given(elements())
def test_power_matches_repeated_product(f):
    assert f**0 == GrassmannElement.one(f.n)
    assert f**1 == f
    assert f**2 == f * f
    assert f**3 == f * f * f


# -- derivatives -----------------------------------------------------------


@given(element_pairs(count=2))
def test_leibniz_left_derivative(fs):
    f, g = fs
    n = f.n
    # split f by parity so the graded rule applies termwise
    for i in range(1, n + 1):
        even = GrassmannElement(
            n, {b: c for b, c in f.terms.items() if b.bit_count() % 2 == 0}
        )
        odd = f - even
        lhs = (f * g).partial(i)
        rhs = (
            f.partial(i) * g
            + even * g.partial(i)
            - odd * g.partial(i)
        )
        assert lhs == rhs


@given(elements())
def test_partials_anticommute(f):
    n = f.n
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            lhs = f.partial(i).partial(j)
            rhs = f.partial(j).partial(i)
            assert lhs == (-rhs if i != j else rhs)
            if i == j:
                assert lhs.is_zero()


def test_partial_small_cases():
    n = 3
    g1, g2, g3 = (GrassmannElement.generator(n, i) for i in (1, 2, 3))
    f = g1 * g2 * g3
    assert f.partial(1) == g2 * g3
    assert f.partial(2) == -(g1 * g3)
    assert f.partial(3) == g1 * g2
    assert GrassmannElement.one(n).partial(2).is_zero()


# -- Berezin ---------------------------------------------------------------


def test_berezin_is_signed_top_coefficient():
    n = 3
    top = GrassmannElement.generator(n, 1)
    for i in (2, 3):
        top = top * GrassmannElement.generator(n, i)
    # descending order normalizes the top blade to +1
    assert berezin(top, [3, 2, 1]) == GaussianRational(1)
    for order in permutations(range(1, n + 1)):
        val = berezin(top, list(order))
        # the composed derivative must reproduce the oracle sign
        g = top
        for i in reversed(order):
            g = g.partial(i)
        assert val == g.body()
        assert val in (GaussianRational(1), GaussianRational(-1))


def test_berezin_kills_lower_blades():
    n = 2
    f = GrassmannElement(
        n, {0: 5, 1: GaussianRational(2), 2: GaussianRational(3)}
    )
    assert berezin(f, [2, 1]) == GaussianRational(0)


def test_berezin_rejects_non_permutations():
    f = GrassmannElement.one(2)
    with pytest.raises(ValueError):
        berezin(f, [1, 1])
    with pytest.raises(ValueError):
        berezin(f, [1])


# -- nilpotent series ------------------------------------------------------


@st.composite
def even_body_one(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    blades = st.integers(min_value=1, max_value=(1 << n) - 1).filter(
        lambda b: b.bit_count() % 2 == 0
    )
    soul = draw(st.dictionaries(blades, gaussians, max_size=4))
    terms = dict(soul)
    terms[0] = GaussianRational(1)
    return GrassmannElement(n, terms)


@given(even_body_one())
def test_sqrt_squares_back(f):
    r = sqrt_series(f)
    assert r * r == f


@given(even_body_one())
def test_inverse_multiplies_to_one(f):
    assert inverse_series(f) * f == GrassmannElement.one(f.n)


@given(even_body_one())
def test_log_exp_round_trip(f):
    assert exp_series(log_series(f)) == f


@given(even_body_one())
def test_exp_log_round_trip(f):
    assert log_series(exp_series(f.soul())) == f.soul()


def test_series_on_float_ring():
    n = 2
    f = GrassmannElement(n, {0: 2.0 + 0j, 3: 0.5 + 0.25j})
    r = sqrt_series(f)
    assert (r * r - f).max_abs() < 1e-12
    assert (inverse_series(f) * f - GrassmannElement.one(n)).max_abs() < 1e-12


def test_series_rejections():
    odd = GrassmannElement.generator(2, 1)
    with pytest.raises(ValueError):
        nilpotent_series(odd, "sqrt")
    with pytest.raises(ValueError):
        nilpotent_series(GrassmannElement.one(2), "frobnicate")
    # exact sqrt requires a perfect-square body
    f = GrassmannElement(2, {0: GaussianRational(2), 3: GaussianRational(1)})
    with pytest.raises(ValueError):
        sqrt_series(f)
    with pytest.raises(ValueError):
        inverse_series(GrassmannElement.zero(2))


# -- conjugations ----------------------------------------------------------


@given(element_pairs(count=2))
def test_first_kind_conjugation_is_a_homomorphism(fs):
    f, g = fs
    assert (f * g).conjugate() == f.conjugate() * g.conjugate()
    assert f.conjugate().conjugate() == f


def test_first_kind_fixes_generators():
    n = 2
    f = GrassmannElement(n, {1: GaussianRational(0, 1)})
    c = f.conjugate()
    assert c == GrassmannElement(n, {1: GaussianRational(0, -1)})


PAIRS4 = ((1, 2), (3, 4))


@given(element_pairs(count=2))
def test_second_kind_multiplicative(fs):
    f, g = fs
    if f.n % 2:
        pairs = tuple((2 * k + 1, 2 * k + 2) for k in range((f.n + 1) // 2))
        f = GrassmannElement(f.n + 1, f.terms)
        g = GrassmannElement(g.n + 1, g.terms)
    else:
        pairs = tuple((2 * k + 1, 2 * k + 2) for k in range(f.n // 2))
    lhs = (f * g).conjugate_second_kind(pairs)
    rhs = f.conjugate_second_kind(pairs) * g.conjugate_second_kind(pairs)
    assert lhs == rhs


def test_second_kind_square_negates_generators():
    n = 4
    for i in range(1, n + 1):
        g = GrassmannElement.generator(n, i)
        twice = g.conjugate_second_kind(PAIRS4).conjugate_second_kind(PAIRS4)
        assert twice == -g


def test_second_kind_needs_full_pairing():
    f = GrassmannElement.generator(4, 1)
    with pytest.raises(ValueError):
        f.conjugate_second_kind(((1, 2),))
    with pytest.raises(ValueError):
        f.conjugate_second_kind(((1, 2), (2, 3), (3, 4)))


# -- structure helpers -----------------------------------------------------


def test_body_soul_degree_parity():
    n = 3
    f = GrassmannElement(n, {0: 7, 3: GaussianRational(1), 7: GaussianRational(2)})
    assert f.body() == GaussianRational(7)
    assert f.soul() == f - 7
    assert f.degree() == 3
    assert f.parity() == "mixed"
    assert GrassmannElement.zero(n).parity() == "even"
    assert GrassmannElement.generator(n, 2).parity() == "odd"


def test_immutability_and_algebra_mixing():
    f = GrassmannElement.one(2)
    with pytest.raises(AttributeError):
        f.n = 3
    with pytest.raises(ValueError):
        f + GrassmannElement.one(3)
    with pytest.raises(ValueError):
        f ** -1


def test_generator_count_cap():
    GrassmannElement.zero(MAX_GENERATORS)
    with pytest.raises(ValueError):
        GrassmannElement.zero(MAX_GENERATORS + 1)
    with pytest.raises(ValueError):
        GrassmannElement(2, {4: 1})


# -- serialization ---------------------------------------------------------


@given(elements())
def test_json_round_trip_exact(f):
    assert from_json(to_json(f)) == f


def test_json_round_trip_is_bit_exact():
    f = GrassmannElement(
        3,
        {5: GaussianRational(Fraction(10**30, 7), Fraction(-3, 10**20))},
    )
    g = from_json(to_json(f))
    c = g.terms[5]
    assert c.re == Fraction(10**30, 7) and c.im == Fraction(-3, 10**20)


def test_json_float_ring():
    f = GrassmannElement(2, {3: 0.125 - 2.5j})
    assert from_json(to_json(f)) == f


# -- GaussianRational ------------------------------------------------------


@given(gaussians, gaussians)
def test_gaussian_rational_matches_fraction_arithmetic(a, b):
    s = a + b
    assert (s.re, s.im) == (a.re + b.re, a.im + b.im)
    d = a - b
    assert (d.re, d.im) == (a.re - b.re, a.im - b.im)
    p = a * b
    assert (p.re, p.im) == (
        a.re * b.re - a.im * b.im,
        a.re * b.im + a.im * b.re,
    )
    if not b.is_zero():
        assert (a / b) * b == a


def test_gaussian_rational_sqrt():
    assert GaussianRational(Fraction(9, 4)).sqrt() == GaussianRational(
        Fraction(3, 2)
    )
    with pytest.raises(ValueError):
        GaussianRational(2).sqrt()
    with pytest.raises(ValueError):
        GaussianRational(-1).sqrt()
    with pytest.raises(ValueError):
        GaussianRational(0, 1).sqrt()


def test_gaussian_rational_mixing_demotes_to_complex():
    a = GaussianRational(Fraction(1, 2), 1)
    assert a + 0.5 == 1.0 + 1.0j
    assert isinstance(a * 2.0, complex)
    assert a * 2 == GaussianRational(1, 2)
    assert 3 - a == GaussianRational(Fraction(5, 2), -1)

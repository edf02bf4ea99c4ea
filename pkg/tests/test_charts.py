"""Chart embeddings: relations, antipode, inversion, translation."""

import numpy as np
import pytest

from superhaar.charts import (
    DecompositionError,
    SuperPoint,
    antipode,
    check_defining_relations,
    classical_block_matrix,
    decompose,
    embed,
    generator_point,
    left_translate,
    random_point,
)
from superhaar.grassmann import GaussianRational, GrassmannElement
from superhaar.groups import osp, rational_point, sample, u, uosp
from superhaar.supermatrix import SuperMatrix

ALL_SPECS = [osp(1, 1), osp(2, 1), u(1, 1), u(2, 1), uosp(1, 1)]
SMALL_SPECS = [osp(1, 1), u(1, 1), uosp(1, 1)]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_defining_relations_hold_exactly_at_generator_points(spec):
    rng = np.random.default_rng(1)
    p = generator_point(spec, rational_point(spec, rng))
    resid = check_defining_relations(spec, embed(p), pairs=p.pairs)
    assert resid, "no relations reported"
    assert all(v == 0.0 for v in resid.values()), resid


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_defining_relations_hold_at_generic_points(spec):
    rng = np.random.default_rng(2)
    for _ in range(2):
        p = random_point(spec, rng)
        resid = check_defining_relations(spec, embed(p), pairs=p.pairs)
        assert all(v == 0.0 for v in resid.values()), resid


def test_relations_fail_off_the_chart():
    spec = osp(1, 1)
    rng = np.random.default_rng(3)
    xm = embed(random_point(spec, rng))
    rows = [list(r) for r in xm.rows]
    rows[0][0] = rows[0][0] + GaussianRational(1, 0)
    bad = SuperMatrix(xm.k, xm.l, xm.n, rows)
    resid = check_defining_relations(spec, bad)
    assert max(resid.values()) > 0.5


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_antipode_inverts_under_the_group_product(spec):
    rng = np.random.default_rng(4)
    p = random_point(spec, rng)
    xm = embed(p)
    ident = SuperMatrix.identity(spec.even_size, spec.odd_size, xm.n)
    inv = antipode(spec, xm)
    assert (inv.group_product(xm) - ident).max_abs() == 0.0
    assert (xm.group_product(inv) - ident).max_abs() == 0.0


def test_antipode_needs_the_graded_product():
    spec = osp(1, 1)
    rng = np.random.default_rng(5)
    xm = embed(random_point(spec, rng))
    ident = SuperMatrix.identity(1, 2, xm.n)
    inv = antipode(spec, xm)
    # the plain matrix product does not invert: the parity signs matter
    assert (inv @ xm - ident).max_abs() > 0.0


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=str)
def test_decompose_inverts_embed(spec):
    rng = np.random.default_rng(6)
    p = random_point(spec, rng)
    q = decompose(spec, embed(p), pairs=p.pairs)
    assert (embed(q) - embed(p)).max_abs() == 0.0
    # coordinates round-trip, not just the embedded matrix
    for a, b in ((p.x, q.x), (p.y, q.y), (p.theta, q.theta)):
        for ra, rb in zip(a, b):
            for ea, eb in zip(ra, rb):
                assert ea == eb


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=str)
def test_group_law_round_trip(spec):
    rng = np.random.default_rng(7)
    ng = spec.n_grassmann
    p1 = random_point(spec, rng, n=2 * ng, offset=0)
    p2 = random_point(spec, rng, n=2 * ng, offset=ng)
    prod = embed(p1).group_product(embed(p2))
    # products of embedded points stay on the chart
    resid = check_defining_relations(spec, prod, pairs=p1.pairs)
    assert all(v == 0.0 for v in resid.values()), resid
    q = decompose(spec, prod, pairs=p1.pairs)
    assert (embed(q) - prod).max_abs() == 0.0


def test_decompose_rejects_relation_violations():
    spec = osp(1, 1)
    rng = np.random.default_rng(8)
    xm = embed(random_point(spec, rng))
    rows = [list(r) for r in xm.rows]
    rows[0][0] = rows[0][0] + GaussianRational(1, 2)
    with pytest.raises(DecompositionError):
        decompose(spec, SuperMatrix(xm.k, xm.l, xm.n, rows))


def test_decompose_tolerance_gates_small_corruption():
    spec = u(1, 1)
    rng = np.random.default_rng(9)
    xm = embed(random_point(spec, rng)).to_float()
    rows = [list(r) for r in xm.rows]
    rows[0][1] = rows[0][1] + GrassmannElement(xm.n, {1: 1e-6 + 0j})
    bad = SuperMatrix(xm.k, xm.l, xm.n, rows)
    with pytest.raises(DecompositionError):
        decompose(spec, bad)  # default tol 1e-10
    q = decompose(spec, bad, tol=1e-3)
    assert (embed(q) - bad).max_abs() < 1e-5


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=str)
def test_left_translation_commutes_with_embedding(spec):
    rng = np.random.default_rng(10)
    p = random_point(spec, rng)
    g = rational_point(spec, rng)
    lhs = embed(left_translate(g, p))
    rhs = classical_block_matrix(spec, g, p.n) @ embed(p)
    assert (lhs - rhs).max_abs() == 0.0


def test_left_translation_float_classical_pair():
    spec = osp(2, 1)
    rng = np.random.default_rng(11)
    p = random_point(spec, rng, exact=False)
    g = sample(spec, seed=123)[0]
    lhs = embed(left_translate(g, p))
    rhs = classical_block_matrix(spec, g, p.n) @ embed(p)
    assert (lhs - rhs).max_abs() < 1e-12


def test_generator_point_theta_holds_bare_generators():
    spec = osp(1, 1)
    rng = np.random.default_rng(12)
    p = generator_point(spec, rational_point(spec, rng))
    assert p.theta[0][0] == GrassmannElement.generator(2, 1)
    assert p.theta[1][0] == GrassmannElement.generator(2, 2)


def test_generator_window_offsets():
    spec = osp(1, 1)
    rng = np.random.default_rng(13)
    p = generator_point(spec, rational_point(spec, rng), n=4, offset=2)
    assert p.theta[0][0] == GrassmannElement.generator(4, 3)
    with pytest.raises(ValueError):
        generator_point(spec, rational_point(spec, rng), n=3, offset=2)


def test_classical_round_trip_and_soul_detection():
    spec = u(1, 1)
    rng = np.random.default_rng(14)
    cp = rational_point(spec, rng)
    p = generator_point(spec, cp)
    back = p.classical()
    assert back.x == cp.x and back.y == cp.y
    souled = SuperPoint(
        spec,
        ((p.x[0][0] + GrassmannElement(p.n, {3: 1}),),),
        p.y,
        p.theta,
        p.pairs,
    )
    with pytest.raises(ValueError):
        souled.classical()


def test_uosp_theta_lower_half_is_conjugate_tied():
    spec = uosp(1, 1)
    rng = np.random.default_rng(15)
    p = random_point(spec, rng)
    top = p.theta[0][0]
    bottom = p.theta[1][0]
    assert bottom == -top.conjugate_second_kind(p.pairs)

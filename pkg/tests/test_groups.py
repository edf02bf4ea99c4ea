"""Group specs, Haar samplers, exact classical points, membership."""

import numpy as np
import pytest

from superhaar.grassmann import GR_ONE, GaussianRational
from superhaar.groups import (
    CHUNK,
    ClassicalPoint,
    GroupSpec,
    check_membership_algebra,
    exact_u1_moment,
    haar_orthogonal_batch,
    haar_symplectic_batch,
    haar_unitary_batch,
    osp,
    osp_generator_matrix,
    philox_stream,
    rational_orthogonal,
    rational_point,
    rational_symplectic,
    rational_unitary,
    sample,
    sample_classical_batch,
    u,
    uosp,
)
from superhaar.supermatrix import symplectic_int

SPECS = [osp(2, 1), u(2, 1), uosp(1, 1)]


# -- spec plumbing -----------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec("sl", (1, 1))
    with pytest.raises(ValueError):
        osp(0, 1)
    with pytest.raises(ValueError):
        u(1, -2)


def test_spec_shapes_and_labels():
    s = osp(3, 2)
    assert (s.even_size, s.odd_size, s.size) == (3, 4, 7)
    assert s.n_grassmann == 12
    assert str(s) == "osp:m=3,n=2"
    assert u(2, 3).odd_size == 3
    assert uosp(2, 1).label() == "uosp:m=2,n=1"
    assert s.parity(3) == 0 and s.parity(4) == 1


def test_generator_index_maps_cover_everything_once():
    s = osp(2, 2)
    seen = {s.theta_index(j, k) for j in range(1, 5) for k in range(1, 3)}
    assert seen == set(range(1, s.n_grassmann + 1))
    s = u(2, 2)
    seen = set()
    for i in range(1, 3):
        for j in range(1, 3):
            seen.update(s.psi_indices(i, j))
    assert seen == set(range(1, s.n_grassmann + 1))
    s = uosp(2, 1)
    pairs = s.conjugation_pairs()
    flat = {i for ab in pairs for i in ab}
    assert flat == set(range(1, s.n_grassmann + 1))
    with pytest.raises(ValueError):
        osp(2, 1).theta_index(3, 1)
    with pytest.raises(ValueError):
        u(1, 1).theta_index(1, 1)


def test_berezin_order_is_descending():
    s = osp(1, 1)
    assert s.berezin_order() == [2, 1]
    assert osp(2, 2).berezin_order() == list(range(8, 0, -1))


def test_odd_coordinates_shapes():
    for spec in SPECS:
        mat = spec.odd_coordinates()
        rows = spec.odd_size if spec.family != "u" else spec.dims[1]
        assert len(mat) == rows
        assert len(mat[0]) == spec.even_size
    # uosp lower half is minus the second-kind conjugate of the upper half
    spec = uosp(2, 1)
    mat = spec.odd_coordinates()
    pairs = spec.conjugation_pairs()
    n = spec.dims[1]
    for j in range(n):
        for k in range(spec.even_size):
            assert mat[n + j][k] == -mat[j][k].conjugate_second_kind(pairs)


# -- float samplers ------------------------------------------------------------


def unitarity_residual(batch):
    ident = np.eye(batch.shape[-1])
    return np.abs(np.einsum("sji,sjk->sik", batch.conj(), batch) - ident).max()


def test_haar_samplers_land_on_the_groups():
    rng = np.random.default_rng(0)
    un = haar_unitary_batch(rng, 3, 64)
    assert unitarity_residual(un) < 1e-12
    ort = haar_orthogonal_batch(rng, 3, 64)
    assert ort.dtype.kind == "f"
    assert unitarity_residual(ort.astype(complex)) < 1e-12
    sp = haar_symplectic_batch(rng, 2, 64)
    assert unitarity_residual(sp) < 1e-12
    jm = np.asarray(symplectic_int(2), dtype=float)
    resid = np.einsum("sji,jk,skl->sil", sp, jm, sp) - jm
    assert np.abs(resid).max() < 1e-12


def moment_estimate(values):
    est = values.mean()
    stderr = values.std(ddof=1) / np.sqrt(len(values))
    return est, stderr


@pytest.mark.parametrize(
    "maker,dim,expected",
    [
        (haar_unitary_batch, 3, 1 / 3),
        (haar_orthogonal_batch, 4, 1 / 4),
        (haar_symplectic_batch, 2, 1 / 4),
    ],
)
def test_second_moment_of_an_entry(maker, dim, expected):
    # E |x_11|^2 = 1/size for each of the three compact families
    rng = np.random.default_rng(7)
    batch = maker(rng, dim, 20000)
    vals = np.abs(batch[:, 0, 0]) ** 2
    est, stderr = moment_estimate(vals)
    assert abs(est - expected) < 4 * stderr


def test_unitary_first_moment_vanishes():
    rng = np.random.default_rng(11)
    batch = haar_unitary_batch(rng, 2, 20000)
    est, stderr = moment_estimate(batch[:, 0, 0].real)
    assert abs(est) < 4 * stderr + 1e-12


# -- deterministic chunking ------------------------------------------------------


def test_philox_stream_is_reproducible():
    a = philox_stream(42, 3).standard_normal(8)
    b = philox_stream(42, 3).standard_normal(8)
    assert np.array_equal(a, b)
    c = philox_stream(42, 4).standard_normal(8)
    assert not np.array_equal(a, c)


def test_sample_batches_are_prefix_stable():
    spec = osp(2, 1)
    x5, y5 = sample_classical_batch(spec, 9, 5)
    x90, y90 = sample_classical_batch(spec, 9, 90)
    assert np.array_equal(x5, x90[:5])
    assert np.array_equal(y5, y90[:5])


def test_sample_batches_chunk_deterministically():
    spec = u(1, 1)
    n_extra = 7
    xa, ya = sample_classical_batch(spec, 3, CHUNK + n_extra)
    xb, yb = sample_classical_batch(spec, 3, n_extra, chunk_start=1)
    assert np.array_equal(xa[CHUNK:], xb)
    assert np.array_equal(ya[CHUNK:], yb)


def test_sample_returns_points():
    pts = sample(osp(1, 1), seed=0, count=3)
    assert len(pts) == 3
    assert isinstance(pts[0], ClassicalPoint)
    assert not pts[0].is_exact()
    assert pts[0].x.shape == (1, 1)
    assert pts[0].y.shape == (2, 2)


# -- exact classical points --------------------------------------------------------


def exact_dagger(mat):
    size = len(mat)
    return [[mat[j][i].conjugate() for j in range(size)] for i in range(size)]


def exact_mul(a, b):
    size = len(a)
    return [
        [
            sum((a[i][t] * b[t][j] for t in range(size)), GaussianRational(0))
            for j in range(size)
        ]
        for i in range(size)
    ]


def assert_exact_identity(mat):
    for i, row in enumerate(mat):
        for j, c in enumerate(row):
            assert c == GaussianRational(1 if i == j else 0)


def test_rational_orthogonal_is_exactly_orthogonal():
    rng = np.random.default_rng(1)
    for m in (1, 2, 3):
        x = rational_orthogonal(rng, m)
        assert all(c.im == 0 for row in x for c in row)
        assert_exact_identity(exact_mul(exact_dagger(x), x))


def test_rational_unitary_is_exactly_unitary():
    rng = np.random.default_rng(2)
    for p in (1, 2, 3):
        x = rational_unitary(rng, p)
        assert_exact_identity(exact_mul(exact_dagger(x), x))


def test_rational_symplectic_is_exactly_unitary_symplectic():
    rng = np.random.default_rng(3)
    for n in (1, 2):
        y = rational_symplectic(rng, n)
        assert_exact_identity(exact_mul(exact_dagger(y), y))
        jm = [
            [GaussianRational(v) for v in row] for row in symplectic_int(n)
        ]
        yt = [list(row) for row in zip(*y)]
        assert exact_mul(exact_mul(yt, jm), y) == jm


def test_rational_point_shapes():
    rng = np.random.default_rng(4)
    for spec in SPECS:
        pt = rational_point(spec, rng)
        assert pt.is_exact()
        (fx, dx), (fy, dy) = spec.classical_factors()
        assert len(pt.x) == dx
        assert len(pt.y) == (dy if fy == "unitary" else 2 * dy)


# -- torus moments and membership ----------------------------------------------------


def test_exact_u1_moment_is_kronecker():
    assert exact_u1_moment(0, 0) == 1
    assert exact_u1_moment(3, 3) == 1
    assert exact_u1_moment(2, 1) == 0
    assert exact_u1_moment(0, 4) == 0


def test_osp_generator_matrices_live_in_the_algebra():
    spec = osp(2, 1)
    size = spec.size
    seen_nonzero = False
    for i in range(1, size + 1):
        for j in range(1, size + 1):
            k = osp_generator_matrix(spec, i, j)
            assert check_membership_algebra(spec, k)
            seen_nonzero = seen_nonzero or np.abs(k).max() > 0
    assert seen_nonzero
    with pytest.raises(ValueError):
        osp_generator_matrix(u(1, 1), 1, 1)


def test_membership_rejects_off_algebra_matrices():
    spec = osp(2, 1)
    assert not check_membership_algebra(spec, np.eye(spec.size))
    k = osp_generator_matrix(spec, 1, 3)
    bad = k.copy()
    bad[0, 0] += 1e-3
    assert not check_membership_algebra(spec, bad)
    assert not check_membership_algebra(spec, np.zeros((2, 2)))


def test_membership_unitary_family():
    spec = u(1, 1)
    # antihermitian even blocks with the coupled odd blocks
    mat = np.array([[1j, 0.5 + 0.25j], [-1j * (0.5 - 0.25j), 2j]])
    assert check_membership_algebra(spec, mat)
    mat2 = mat.copy()
    mat2[1, 0] = 1.0
    assert not check_membership_algebra(spec, mat2)

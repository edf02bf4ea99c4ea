"""Dense batched kernels against the sparse exact algebra."""

import numpy as np
import pytest

from superhaar import _kernels
from superhaar.grassmann import GrassmannElement


def random_dense(rng, batch, n):
    shape = (batch, 1 << n)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def dense_to_elem(vec, n):
    return GrassmannElement(n, {b: complex(vec[b]) for b in range(1 << n)})


def test_pair_table_counts_disjoint_blade_pairs():
    for n in range(5):
        table = _kernels.pair_table(n)
        # each generator is in the left blade, the right blade, or neither
        assert table.shape == (3**n, 4)
    with pytest.raises(ValueError):
        _kernels.pair_table(17)


def test_pair_table_signs_match_merge_sign():
    from superhaar.grassmann import merge_sign

    for ba, bb, ob, sg in _kernels.pair_table(4):
        assert ob == ba | bb and not (ba & bb)
        assert sg == merge_sign(int(ba), int(bb))


def test_batch_mul_matches_sparse_products():
    rng = np.random.default_rng(0)
    n = 4
    table = _kernels.pair_table(n)
    a = random_dense(rng, 8, n)
    b = random_dense(rng, 8, n)
    out = _kernels.batch_mul(a, b, table)
    for s in range(8):
        want = dense_to_elem(a[s], n) * dense_to_elem(b[s], n)
        got = dense_to_elem(out[s], n)
        assert (got - want).max_abs() < 1e-12


def test_backends_agree():
    rng = np.random.default_rng(1)
    n = 5
    table = _kernels.pair_table(n)
    a = random_dense(rng, 16, n)
    b = random_dense(rng, 16, n)
    via_numpy = _kernels._mul_numpy(a, b, table)
    via_dispatch = _kernels.batch_mul(
        np.ascontiguousarray(a), np.ascontiguousarray(b), table
    )
    assert np.abs(via_numpy - via_dispatch).max() < 1e-12
    if _kernels.BACKEND == "numba":
        via_numba = _kernels._mul_numba(
            np.ascontiguousarray(a), np.ascontiguousarray(b), table
        )
        assert np.abs(via_numpy - via_numba).max() < 1e-12


def test_batch_mul_broadcasts_single_row():
    rng = np.random.default_rng(2)
    n = 3
    table = _kernels.pair_table(n)
    a = random_dense(rng, 6, n)
    b = random_dense(rng, 1, n)
    out = _kernels.batch_mul(a, b, table)
    full = _kernels.batch_mul(a, np.repeat(b, 6, axis=0), table)
    assert np.abs(out - full).max() < 1e-12


def test_conversions_and_coefficient_picks():
    n = 3
    f = GrassmannElement(n, {0: 2 + 1j, 5: -0.5 + 0j, 7: 3 + 0j})
    vec = _kernels.to_dense(f)
    assert vec.shape == (8,)
    assert vec[0] == 2 + 1j and vec[5] == -0.5 and vec[7] == 3
    assert _kernels.body_coeff(vec) == 2 + 1j
    assert _kernels.top_coeff(vec) == 3

    mat = [[f, GrassmannElement.one(n)]]
    arr = _kernels.gmat_dense(mat)
    assert arr.shape == (1, 2, 8)
    assert arr[0, 0, 5] == -0.5 and arr[0, 1, 0] == 1


def test_batch_conj_conjugates_coefficients_only():
    rng = np.random.default_rng(3)
    n = 3
    a = random_dense(rng, 4, n)
    out = _kernels.batch_conj(a)
    for s in range(4):
        want = dense_to_elem(a[s], n).conjugate()
        assert (dense_to_elem(out[s], n) - want).max_abs() < 1e-15

"""Batched Grassmann coefficient kernels for the sampling integrator.

A batch of Grassmann elements is a complex array of shape
``(samples, 2**n)``: one dense coefficient vector per sample, indexed
by generator bitmask.  A product reduces to a fixed sparse table of
disjoint blade pairs (3**n rows), so the hot loop is table driven and
identical for every sample.

The table loop runs through numba when available; set
``SUPERHAAR_BACKEND=numpy`` to force the pure-numpy path, or
``SUPERHAAR_BACKEND=numba`` to insist on the compiled one.
"""

import os
from functools import lru_cache

import numpy as np

from .grassmann import merge_sign


def _pick_backend():
    choice = os.environ.get("SUPERHAAR_BACKEND", "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        import numba  # noqa: F401  fail loudly if requested but absent

        return "numba"
    if choice:
        raise ValueError(f"SUPERHAAR_BACKEND={choice!r}, expected numba or numpy")
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


BACKEND = _pick_backend()


@lru_cache(maxsize=None)
def pair_table(n):
    """All disjoint blade pairs as an int64 array (left, right, out, sign)."""
    if n < 0 or n > 16:
        raise ValueError("dense kernels support 0 <= n <= 16 generators")
    rows = []
    for ba in range(1 << n):
        rest = ((1 << n) - 1) & ~ba
        bb = rest
        while True:  # enumerate submasks of the complement, including 0
            rows.append((ba, bb, ba | bb, merge_sign(ba, bb)))
            if bb == 0:
                break
            bb = (bb - 1) & rest
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


def _mul_numpy(a, b, table):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.complex128)
    for ba, bb, ob, sg in table:
        out[..., ob] += sg * (a[..., ba] * b[..., bb])
    return out


def _build_numba_kernel():
    """Compile the table loop.  Raises ImportError when numba is absent."""
    import numba

    @numba.njit(cache=True)
    def _mul_numba_impl(a, b, table):  # pragma: no cover - compiled
        s, c = a.shape
        out = np.zeros((s, c), dtype=np.complex128)
        for r in range(table.shape[0]):
            ba = table[r, 0]
            bb = table[r, 1]
            ob = table[r, 2]
            sg = table[r, 3]
            for i in range(s):
                out[i, ob] += sg * a[i, ba] * b[i, bb]
        return out

    return _mul_numba_impl


_mul_numba = _build_numba_kernel() if BACKEND == "numba" else None


def batch_mul(a, b, table):
    """Pointwise Grassmann product of two coefficient batches."""
    if BACKEND == "numba" and a.ndim == 2 and a.shape == b.shape:
        return _mul_numba(
            np.ascontiguousarray(a), np.ascontiguousarray(b), table
        )
    return _mul_numpy(a, b, table)


def batch_conj(batch):
    """First-kind conjugate: coefficients conjugated, generators fixed."""
    return np.conj(batch)


def to_dense(elem):
    """GrassmannElement -> dense complex coefficient vector (2**n,)."""
    out = np.zeros(1 << elem.n, dtype=np.complex128)
    for blade, c in elem.terms.items():
        out[blade] = complex(c)
    return out


def gmat_dense(mat):
    """Nested-list Grassmann matrix -> array (rows, cols, 2**n)."""
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    n = mat[0][0].n
    out = np.zeros((rows, cols, 1 << n), dtype=np.complex128)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = to_dense(mat[i][j])
    return out


def body_coeff(batch):
    return batch[..., 0]


def top_coeff(batch):
    """Coefficient of the full blade: the raw fermionic integral."""
    return batch[..., -1]

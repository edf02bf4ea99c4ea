"""Group families, generator bookkeeping and classical Haar sampling.

A :class:`GroupSpec` names one supergroup: the orthosymplectic family
``osp(m|2n)``, the unitary family ``u(p|q)``, or the unitary
orthosymplectic family ``uosp(m|2n)``.  It centralizes everything the
other modules need to agree on: how many Grassmann generators exist,
which generator index encodes which odd matrix entry, the canonical
Berezin ordering, and which compact classical groups carry the Haar
measure.

Sampling is chunked: chunk ``c`` of a run with seed ``s`` always comes
from the Philox stream keyed ``(s, c)``, so results are reproducible
regardless of how many samples are requested at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grassmann import GR_ONE, GaussianRational, GrassmannElement
from .supermatrix import symplectic_int

CHUNK = 4096

FAMILIES = ("osp", "u", "uosp")


@dataclass(frozen=True)
class GroupSpec:
    """One member of a supergroup family.

    ``dims`` is ``(m, n)`` for the orthosymplectic families (odd block
    size ``2n``) and ``(p, q)`` for the unitary family.
    """

    family: str
    dims: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        a, b = self.dims
        if a < 1 or b < 1:
            raise ValueError("both dimensions must be at least 1")
        object.__setattr__(self, "dims", (int(a), int(b)))

    # -- shape -------------------------------------------------------------
    @property
    def even_size(self):
        return self.dims[0]

    @property
    def odd_size(self):
        a, b = self.dims
        return b if self.family == "u" else 2 * b

    @property
    def size(self):
        return self.even_size + self.odd_size

    def parity(self, a):
        """Parity of a 1-based row/column index of the defining matrix."""
        return 0 if a <= self.even_size else 1

    @property
    def n_grassmann(self):
        a, b = self.dims
        return 2 * a * b

    def label(self):
        a, b = self.dims
        if self.family == "u":
            return f"u:p={a},q={b}"
        return f"{self.family}:m={a},n={b}"

    def __str__(self):
        return self.label()

    # -- generator index maps (all 1-based) ---------------------------------
    def theta_index(self, j, k):
        """Generator number of the real odd entry at row j, column k."""
        if self.family != "osp":
            raise ValueError("theta_index is for the osp family")
        m, n = self.dims
        if not (1 <= j <= 2 * n and 1 <= k <= m):
            raise ValueError("theta index out of range")
        return (j - 1) * m + (k - 1) + 1

    def psi_indices(self, i, j):
        """Generator numbers (real part, imaginary part) of psi[i, j]."""
        if self.family != "u":
            raise ValueError("psi_indices is for the u family")
        p, q = self.dims
        if not (1 <= i <= q and 1 <= j <= p):
            raise ValueError("psi index out of range")
        base = 2 * ((i - 1) * p + (j - 1))
        return base + 1, base + 2

    def alpha_indices(self, j, k):
        """Generator numbers (alpha, conjugate alpha) at row j, column k."""
        if self.family != "uosp":
            raise ValueError("alpha_indices is for the uosp family")
        m, n = self.dims
        if not (1 <= j <= n and 1 <= k <= m):
            raise ValueError("alpha index out of range")
        base = 2 * ((j - 1) * m + (k - 1))
        return base + 1, base + 2

    def conjugation_pairs(self):
        """Second-kind conjugation pairs, or None for real generators."""
        if self.family != "uosp":
            return None
        m, n = self.dims
        return tuple(
            self.alpha_indices(j, k)
            for j in range(1, n + 1)
            for k in range(1, m + 1)
        )

    def berezin_order(self):
        """Canonical full-integral derivative ordering (descending)."""
        return list(range(self.n_grassmann, 0, -1))

    # -- odd coordinate matrices -------------------------------------------
    def odd_coordinates(self):
        """The odd coordinate matrix with generator entries, as a gmat.

        osp: the real 2n x m matrix.  u: the complex q x p matrix built
        from generator pairs.  uosp: the 2n x m matrix whose lower half is
        minus the conjugate of the upper half.
        """
        ng = self.n_grassmann
        gen = lambda i: GrassmannElement.generator(ng, i)
        if self.family == "osp":
            m, n = self.dims
            return [
                [gen(self.theta_index(j, k)) for k in range(1, m + 1)]
                for j in range(1, 2 * n + 1)
            ]
        if self.family == "u":
            p, q = self.dims
            i_unit = GaussianRational(0, 1)
            out = []
            for i in range(1, q + 1):
                row = []
                for j in range(1, p + 1):
                    re, im = self.psi_indices(i, j)
                    row.append(gen(re) + gen(im).scale(i_unit))
                out.append(row)
            return out
        m, n = self.dims
        top = [
            [gen(self.alpha_indices(j, k)[0]) for k in range(1, m + 1)]
            for j in range(1, n + 1)
        ]
        bottom = [
            [-gen(self.alpha_indices(j, k)[1]) for k in range(1, m + 1)]
            for j in range(1, n + 1)
        ]
        return top + bottom

    # -- classical factors ---------------------------------------------------
    def classical_factors(self):
        """Kinds and sizes of the two classical Haar factors."""
        a, b = self.dims
        if self.family == "u":
            return ("unitary", a), ("unitary", b)
        return ("orthogonal", a), ("symplectic", b)


def osp(m, n):
    return GroupSpec("osp", (m, n))


def u(p, q):
    return GroupSpec("u", (p, q))


def uosp(m, n):
    return GroupSpec("uosp", (m, n))


# ---------------------------------------------------------------------------
# Haar sampling


def philox_stream(seed, chunk):
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, chunk & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


def haar_unitary_batch(rng, p, count):
    """Haar-distributed U(p) matrices, shape (count, p, p) complex."""
    z = rng.standard_normal((count, p, p)) + 1j * rng.standard_normal((count, p, p))
    q, r = np.linalg.qr(z)
    d = np.einsum("sii->si", r).copy()
    d /= np.abs(d)
    return q * d[:, None, :]


def haar_orthogonal_batch(rng, m, count):
    """Haar-distributed O(m) matrices, shape (count, m, m) real."""
    z = rng.standard_normal((count, m, m))
    q, r = np.linalg.qr(z)
    d = np.sign(np.einsum("sii->si", r))
    d[d == 0] = 1.0
    return q * d[:, None, :]


def haar_symplectic_batch(rng, n, count):
    """Haar-distributed USp(2n) matrices, shape (count, 2n, 2n) complex.

    Columns come in quaternionic pairs: column ``n + k`` is
    ``-J conj(column k)``, which keeps ``z^T J z = J`` exact up to
    rounding while unitarity comes from Gram-Schmidt (two passes).
    """
    size = 2 * n
    jmat = np.asarray(symplectic_int(n), dtype=float)
    out = np.zeros((count, size, size), dtype=complex)
    for k in range(n):
        v = rng.standard_normal((count, size)) + 1j * rng.standard_normal(
            (count, size)
        )
        for _ in range(2):
            for c in range(k):
                for col in (c, n + c):
                    prev = out[:, :, col]
                    ip = np.einsum("si,si->s", prev.conj(), v)
                    v = v - prev * ip[:, None]
        v /= np.linalg.norm(v, axis=1)[:, None]
        out[:, :, k] = v
        out[:, :, n + k] = -np.einsum("ij,sj->si", jmat, v.conj())
    return out


_FACTOR_SAMPLERS = {
    "unitary": haar_unitary_batch,
    "orthogonal": haar_orthogonal_batch,
    "symplectic": haar_symplectic_batch,
}


def sample_classical_batch(spec, seed, count, chunk_start=0):
    """(x_batch, y_batch) of Haar samples, deterministically chunked.

    Chunk ``c`` always reproduces the same matrices for a given seed, so
    two runs sharing a seed share their randomness sample for sample.
    """
    (fx, dx), (fy, dy) = spec.classical_factors()
    xs, ys = [], []
    done = 0
    chunk = chunk_start
    while done < count:
        take = min(CHUNK, count - done)
        rng = philox_stream(seed, chunk)
        # draw the full chunk so partial requests agree with full ones
        x_full = _FACTOR_SAMPLERS[fx](rng, dx, CHUNK)
        y_full = _FACTOR_SAMPLERS[fy](rng, dy, CHUNK)
        xs.append(x_full[:take])
        ys.append(y_full[:take])
        done += take
        chunk += 1
    return np.concatenate(xs), np.concatenate(ys)


@dataclass(frozen=True)
class ClassicalPoint:
    """One classical pair (x, y): numpy arrays or exact nested tuples."""

    x: object
    y: object

    def is_exact(self):
        return not isinstance(self.x, np.ndarray)


def sample(spec, seed, count=1):
    """Haar-sample classical points (float path)."""
    xb, yb = sample_classical_batch(spec, seed, count)
    return [ClassicalPoint(xb[i], yb[i]) for i in range(count)]


# ---------------------------------------------------------------------------
# exact classical points

_PYTH = ((3, 4, 5), (5, 12, 13), (8, 15, 17), (20, 21, 29))
# quadruples w^2 + x^2 + y^2 + z^2 = r^2 for rational SU(2) blocks
_QUADS = ((1, 2, 2, 4, 5), (2, 3, 6, 0, 7), (1, 4, 8, 0, 9), (2, 4, 5, 6, 9))

_GR_ZERO = GaussianRational(0)


def _exact_identity(size):
    return [
        [GR_ONE if i == j else _GR_ZERO for j in range(size)] for i in range(size)
    ]


def _exact_mul(a, b):
    size = len(a)
    return [
        [
            sum((a[i][t] * b[t][j] for t in range(size)), _GR_ZERO)
            for j in range(size)
        ]
        for i in range(size)
    ]


def _givens(size, i, j, c, s):
    g = _exact_identity(size)
    g[i][i] = GaussianRational(c)
    g[j][j] = GaussianRational(c)
    g[i][j] = GaussianRational(-s)
    g[j][i] = GaussianRational(s)
    return g


def rational_orthogonal(rng, m, steps=4):
    """Random-ish exact O(m) element from Pythagorean rotations and signs."""
    out = _exact_identity(m)
    if m == 1:
        out[0][0] = GaussianRational(int(rng.integers(0, 2)) * 2 - 1)
        return out
    for _ in range(steps):
        i, j = sorted(rng.choice(m, size=2, replace=False).tolist())
        a, b, r = _PYTH[int(rng.integers(0, len(_PYTH)))]
        c, s = Fraction(a, r), Fraction(b, r)
        if rng.integers(0, 2):
            s = -s
        out = _exact_mul(out, _givens(m, i, j, c, s))
    flip = _exact_identity(m)
    for i in range(m):
        if rng.integers(0, 2):
            flip[i][i] = GaussianRational(-1)
    return _exact_mul(out, flip)


def _rational_phase(rng):
    a, b, r = _PYTH[int(rng.integers(0, len(_PYTH)))]
    z = GaussianRational(Fraction(a, r), Fraction(b, r))
    if rng.integers(0, 2):
        z = z.conjugate()
    if rng.integers(0, 2):
        z = -z
    return z


def rational_unitary(rng, p, steps=4):
    """Exact U(p) element: Pythagorean rotations times exact phases."""
    out = _exact_identity(p)
    for i in range(p):
        out[i][i] = _rational_phase(rng)
    if p == 1:
        return out
    for _ in range(steps):
        i, j = sorted(rng.choice(p, size=2, replace=False).tolist())
        a, b, r = _PYTH[int(rng.integers(0, len(_PYTH)))]
        out = _exact_mul(out, _givens(p, i, j, Fraction(a, r), Fraction(b, r)))
        phases = _exact_identity(p)
        phases[j][j] = _rational_phase(rng)
        out = _exact_mul(out, phases)
    return out


def rational_symplectic(rng, n, steps=4):
    """Exact USp(2n) element from rational quaternion blocks."""
    size = 2 * n
    out = _exact_identity(size)
    for _ in range(steps):
        k = int(rng.integers(0, n))
        w, x, y, z, r = _QUADS[int(rng.integers(0, len(_QUADS)))]
        sign = 1 if rng.integers(0, 2) else -1
        a = GaussianRational(Fraction(w, r), Fraction(sign * x, r))
        b = GaussianRational(Fraction(y, r), Fraction(z, r))
        g = _exact_identity(size)
        g[k][k] = a
        g[k][n + k] = b
        g[n + k][k] = -b.conjugate()
        g[n + k][n + k] = a.conjugate()
        out = _exact_mul(out, g)
        if n > 1:
            k, l = sorted(rng.choice(n, size=2, replace=False).tolist())
            a2, b2, r2 = _PYTH[int(rng.integers(0, len(_PYTH)))]
            c, s = Fraction(a2, r2), Fraction(b2, r2)
            g = _givens(size, k, l, c, s)
            g2 = _givens(size, n + k, n + l, c, s)
            out = _exact_mul(out, _exact_mul(g, g2))
    return out


def rational_point(spec, rng):
    """An exact classical point of the spec's classical pair."""
    (fx, dx), (fy, dy) = spec.classical_factors()
    make = {
        "orthogonal": lambda d: rational_orthogonal(rng, d),
        "unitary": lambda d: rational_unitary(rng, d),
        "symplectic": lambda d: rational_symplectic(rng, d),
    }
    x = make[fx](dx)
    y = make[fy](dy)
    return ClassicalPoint(
        tuple(tuple(r) for r in x), tuple(tuple(r) for r in y)
    )


# ---------------------------------------------------------------------------
# exact torus moments and algebra membership


def exact_u1_moment(a, b):
    """Integral of x^a conj(x)^b over U(1): 1 if a == b else 0."""
    return 1 if a == b else 0


def osp_generator_matrix(spec, i, j):
    """Numeric matrix of the orthosymplectic basis derivation K(i, j).

    Column alpha holds ``g[alpha, j] e_i - (-1)^(p_i p_j) g[alpha, i] e_j``
    where ``g = diag(I_m, J)``; indices are 1-based.
    """
    if spec.family not in ("osp", "uosp"):
        raise ValueError("generator matrices are defined for the osp families")
    m, n = spec.dims
    size = spec.size
    g = np.eye(size)
    g[m:, m:] = np.asarray(symplectic_int(n), dtype=float)
    sign = -1.0 if spec.parity(i) * spec.parity(j) else 1.0
    out = np.zeros((size, size))
    for alpha in range(1, size + 1):
        out[i - 1, alpha - 1] += g[alpha - 1, j - 1]
        out[j - 1, alpha - 1] -= sign * g[alpha - 1, i - 1]
    return out


def check_membership_algebra(spec, mat, tol=1e-12):
    """Whether a numeric matrix lies in the spec's matrix superalgebra.

    osp: real matrices with ``st(X) g + g X = 0`` (graded transpose,
    ``g = diag(I_m, J)``).  u: antihermitian diagonal blocks with
    ``X[odd, even] = -i X[even, odd]^dagger``.  uosp: both conditions.
    """
    mat = np.asarray(mat, dtype=complex)
    k = spec.even_size
    size = spec.size
    if mat.shape != (size, size):
        return False

    def graded_condition():
        m, n = spec.dims
        g = np.eye(size, dtype=complex)
        g[k:, k:] = np.asarray(symplectic_int(n), dtype=complex)
        st = np.empty_like(mat)
        for i in range(size):
            pi = spec.parity(i + 1)
            for j in range(size):
                s = -1 if pi * (pi + spec.parity(j + 1)) % 2 else 1
                st[j, i] = s * mat[i, j]
        return np.max(np.abs(st @ g + g @ mat))

    def unitary_condition():
        tl, tr = mat[:k, :k], mat[:k, k:]
        bl, br = mat[k:, :k], mat[k:, k:]
        r = max(
            np.max(np.abs(tl + tl.conj().T)),
            np.max(np.abs(br + br.conj().T)),
            np.max(np.abs(bl + 1j * tr.conj().T)),
        )
        return r

    if spec.family == "osp":
        return (
            np.max(np.abs(mat.imag)) <= tol and graded_condition() <= tol
        )
    if spec.family == "u":
        return unitary_condition() <= tol
    return graded_condition() <= tol and unitary_condition() <= tol

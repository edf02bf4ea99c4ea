"""Block matrices over a shared Grassmann algebra.

A :class:`SuperMatrix` has ``k`` even rows/columns followed by ``l`` odd
ones, and entries in a single Grassmann algebra on ``n`` generators.  The
diagonal blocks must hold even elements and the off-diagonal blocks odd
ones.

Plain nested-list matrices of :class:`~superhaar.grassmann.GrassmannElement`
("gmats") are used for intermediate blocks such as the square-root factors,
which are not parity-graded objects on their own.  Entry products are taken
in left-to-right entry order throughout; the *group* composition of two
supermatrices needs extra parity signs and lives in :meth:`group_product`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .grassmann import (
    GR_ONE,
    GaussianRational,
    GrassmannElement,
    _binom_half,
    exp_series,
)

# ---------------------------------------------------------------------------
# plain matrices of Grassmann elements


def gmat_zero(rows, cols, n):
    z = GrassmannElement.zero(n)
    return [[z for _ in range(cols)] for _ in range(rows)]


def gmat_identity(size, n):
    out = gmat_zero(size, size, n)
    one = GrassmannElement.one(n)
    for i in range(size):
        out[i][i] = one
    return out


def gmat_from_scalars(mat, n):
    """Lift a matrix of plain numbers into Grassmann scalars."""
    return [[GrassmannElement.scalar(n, c) for c in row] for row in mat]


def gmat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def gmat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def gmat_neg(a):
    return [[-x for x in row] for row in a]


def gmat_scale(a, c):
    return [[x.scale(c) for x in row] for row in a]


def gmat_mul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    if len(a[0]) != inner:
        raise ValueError("incompatible shapes in gmat_mul")
    n = a[0][0].n
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = GrassmannElement.zero(n)
            for t in range(inner):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def gmat_transpose(a):
    return [list(col) for col in zip(*a)]


def gmat_conj(a):
    return [[x.conjugate() for x in row] for row in a]


def gmat_conj2(a, pairs):
    pairs = tuple(pairs)
    return [[x.conjugate_second_kind(pairs) for x in row] for row in a]


def gmat_trace(a):
    n = a[0][0].n
    acc = GrassmannElement.zero(n)
    for i in range(len(a)):
        acc = acc + a[i][i]
    return acc


def gmat_max_abs(a):
    return max((x.max_abs() for row in a for x in row), default=0.0)


def gmat_to_float(a):
    return [[x.to_float() for x in row] for row in a]


def _coeff_zero(c):
    if isinstance(c, complex):
        return c == 0
    return c.is_zero() if hasattr(c, "is_zero") else c == 0


def _is_soul_only(a):
    return all(_coeff_zero(x.body()) for row in a for x in row)


def _body_is_identity(a):
    for i, row in enumerate(a):
        for j, x in enumerate(row):
            b = x.terms.get(0)
            if i == j:
                if b is None or b != 1:
                    return False
            elif b is not None and not _coeff_zero(b):
                return False
    return True


def sqrt_block(m):
    """Square root of ``identity + nilpotent`` via the binomial series.

    Every entry's body must match the identity matrix; the series in the
    nilpotent remainder terminates, so the result is exact over the exact
    ring and satisfies ``sqrt_block(m) @ sqrt_block(m) == m``.
    """
    size = len(m)
    n = m[0][0].n
    ident = gmat_identity(size, n)
    z = gmat_sub(m, ident)
    if not _is_soul_only(z):
        raise ValueError("sqrt_block needs every entry body equal to the identity")
    out = gmat_zero(size, size, n)
    power = ident
    k = 0
    while any(not x.is_zero() for row in power for x in row):
        out = gmat_add(out, gmat_scale(power, GaussianRational(_binom_half(k))))
        power = gmat_mul(power, z)
        k += 1
        if k > 2 * n + 2:  # nilpotency guarantees termination well before this
            raise RuntimeError("sqrt_block series failed to terminate")
    return out


def neumann_inverse(m):
    """Inverse of a matrix whose entry bodies form the identity."""
    size = len(m)
    n = m[0][0].n
    ident = gmat_identity(size, n)
    z = gmat_sub(ident, m)
    if not _is_soul_only(z):
        raise ValueError("neumann_inverse needs every entry body equal to the identity")
    out = ident
    power = z
    k = 0
    while any(not x.is_zero() for row in power for x in row):
        out = gmat_add(out, power)
        power = gmat_mul(power, z)
        k += 1
        if k > 2 * n + 2:
            raise RuntimeError("neumann_inverse series failed to terminate")
    return out


def _coeff_det_inv(mat):
    """Determinant and inverse of a small matrix over the coefficient ring."""
    size = len(mat)
    a = [list(row) for row in mat]
    inv = [[GR_ONE if i == j else GaussianRational(0) for j in range(size)]
           for i in range(size)]
    if any(isinstance(c, complex) for row in a for c in row):
        inv = [[complex(i == j) for j in range(size)] for i in range(size)]
    det = inv[0][0] * 1  # one in the right ring
    for col in range(size):
        piv = next(
            (r for r in range(col, size) if not _coeff_zero(a[r][col])), None
        )
        if piv is None:
            raise ValueError("singular body matrix")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            inv[col], inv[piv] = inv[piv], inv[col]
            det = -det
        p = a[col][col]
        det = det * p
        for r in range(size):
            if r == col:
                continue
            f = a[r][col] / p
            if _coeff_zero(f):
                continue
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    for r in range(size):
        p = a[r][r]
        inv[r] = [x / p for x in inv[r]]
    return det, inv


def det_even(m):
    """Determinant of a square matrix of even elements.

    Factors out the (invertible) body and evaluates ``exp(trace(log))`` on
    the remaining identity-plus-nilpotent part, where the series
    terminates.  Exact over the exact ring.
    """
    size = len(m)
    n = m[0][0].n
    for row in m:
        for x in row:
            if not x.is_even():
                raise ValueError("det_even needs even entries")
    bodies = [[x.body() for x in row] for row in m]
    if _body_is_identity(m):
        det0 = GR_ONE
        u = m
    else:
        det0, binv = _coeff_det_inv(bodies)
        u = gmat_mul(gmat_from_scalars(binv, n), m)
    ident = gmat_identity(size, n)
    z = gmat_sub(u, ident)
    # trace of log(I + z), series in the nilpotent z
    tr = GrassmannElement.zero(n)
    power = z
    k = 1
    while any(not x.is_zero() for row in power for x in row):
        q = Fraction((-1) ** (k + 1), k)
        tr = tr + gmat_trace(power).map_coeff(
            lambda c, q=q: c * GaussianRational(q) if not isinstance(c, complex)
            else c * float(q)
        )
        power = gmat_mul(power, z)
        k += 1
        if k > 2 * n + 2:
            raise RuntimeError("det_even series failed to terminate")
    return exp_series(tr).scale(det0)


# ---------------------------------------------------------------------------
# square-root factor pairs for the charts

def standard_symplectic(n_pairs, n_gens):
    """The 2n x 2n block matrix [[0, I], [-I, 0]] as a gmat."""
    size = 2 * n_pairs
    out = gmat_zero(size, size, n_gens)
    one = GrassmannElement.one(n_gens)
    for i in range(n_pairs):
        out[i][n_pairs + i] = one
        out[n_pairs + i][i] = -one
    return out


def symplectic_int(n_pairs):
    size = 2 * n_pairs
    out = [[0] * size for _ in range(size)]
    for i in range(n_pairs):
        out[i][n_pairs + i] = 1
        out[n_pairs + i][i] = -1
    return out


@lru_cache(maxsize=None)
def _orthosymplectic_ab_cached(theta_key):
    theta = [list(row) for row in theta_key]
    two_n, m = len(theta), len(theta[0])
    if two_n % 2:
        raise ValueError("theta must have an even number of rows")
    n_gens = theta[0][0].n
    jmat = standard_symplectic(two_n // 2, n_gens)
    theta_hat = gmat_mul(gmat_transpose(theta), jmat)  # m x 2n
    a = sqrt_block(gmat_sub(gmat_identity(m, n_gens), gmat_mul(theta_hat, theta)))
    b = sqrt_block(gmat_sub(gmat_identity(two_n, n_gens), gmat_mul(theta, theta_hat)))
    return theta_hat, a, b


def orthosymplectic_ab(theta):
    """Square-root factors for the orthosymplectic-style charts.

    Given the odd ``2n x m`` coordinate matrix, returns
    ``(theta_hat, A, B)`` with ``theta_hat = theta^T J``,
    ``A = sqrt(I_m - theta_hat theta)`` and
    ``B = sqrt(I_2n - theta theta_hat)``.  Cached per ``theta``.
    """
    key = tuple(tuple(row) for row in theta)
    return _orthosymplectic_ab_cached(key)


@lru_cache(maxsize=None)
def _unitary_ab_cached(psi_key):
    psi = [list(row) for row in psi_key]
    q, p = len(psi), len(psi[0])
    n_gens = psi[0][0].n
    psi_dag = gmat_conj(gmat_transpose(psi))  # p x q
    i_unit = GaussianRational(0, 1)
    a = sqrt_block(
        gmat_sub(gmat_identity(p, n_gens), gmat_scale(gmat_mul(psi_dag, psi), i_unit))
    )
    b = sqrt_block(
        gmat_sub(gmat_identity(q, n_gens), gmat_scale(gmat_mul(psi, psi_dag), i_unit))
    )
    return psi_dag, a, b


def unitary_ab(psi):
    """Square-root factors for the unitary-style charts.

    Given the odd ``q x p`` coordinate matrix, returns
    ``(psi_dagger, A, B)`` with ``A = sqrt(I_p - i psi^dag psi)`` and
    ``B = sqrt(I_q - i psi psi^dag)``.  Cached per ``psi``.
    """
    key = tuple(tuple(row) for row in psi)
    return _unitary_ab_cached(key)


def check_properties_AB(theta):
    """Residuals of the two square-root factor identities.

    For the orthosymplectic factors: ``B^T J - J B`` and
    ``theta_hat B - A theta_hat`` both vanish.  Returns max-abs residuals.
    """
    theta_hat, a, b = orthosymplectic_ab(theta)
    two_n = len(theta)
    n_gens = theta[0][0].n
    jmat = standard_symplectic(two_n // 2, n_gens)
    r1 = gmat_sub(gmat_mul(gmat_transpose(b), jmat), gmat_mul(jmat, b))
    r2 = gmat_sub(gmat_mul(theta_hat, b), gmat_mul(a, theta_hat))
    return {
        "transpose-intertwines-J": gmat_max_abs(r1),
        "factor-exchange": gmat_max_abs(r2),
    }


# ---------------------------------------------------------------------------
# graded matrices


class SuperMatrix:
    """(k+l) x (k+l) matrix over a Grassmann algebra, graded (even, odd)."""

    __slots__ = ("k", "l", "n", "rows")

    def __init__(self, k, l, n, entries, validate=True):
        size = k + l
        if len(entries) != size or any(len(r) != size for r in entries):
            raise ValueError(f"expected a {size}x{size} entry grid")
        rows = tuple(tuple(r) for r in entries)
        if validate:
            for i in range(size):
                for j in range(size):
                    x = rows[i][j]
                    if x.n != n:
                        raise ValueError("entry from a different Grassmann algebra")
                    want = (i >= k) ^ (j >= k)
                    if x.is_zero():
                        continue
                    if want and not x.is_odd():
                        raise ValueError(f"entry ({i},{j}) must be odd")
                    if not want and not x.is_even():
                        raise ValueError(f"entry ({i},{j}) must be even")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("SuperMatrix is immutable")

    @property
    def size(self):
        return self.k + self.l

    def parity(self, i):
        """0 for the first k indices, 1 for the rest (0-based)."""
        return 0 if i < self.k else 1

    @classmethod
    def identity(cls, k, l, n):
        return cls(k, l, n, gmat_identity(k + l, n), validate=False)

    @classmethod
    def from_blocks(cls, k, l, n, tl, tr, bl, br, validate=True):
        entries = [list(tl[i]) + list(tr[i]) for i in range(k)]
        entries += [list(bl[i]) + list(br[i]) for i in range(l)]
        return cls(k, l, n, entries, validate=validate)

    def block(self, row_odd, col_odd):
        """One of the four parity blocks, as a gmat."""
        r0, r1 = (self.k, self.size) if row_odd else (0, self.k)
        c0, c1 = (self.k, self.size) if col_odd else (0, self.k)
        return [list(self.rows[i][c0:c1]) for i in range(r0, r1)]

    def _like(self, entries, validate=False):
        return SuperMatrix(self.k, self.l, self.n, entries, validate=validate)

    def _check_compatible(self, other):
        if (self.k, self.l, self.n) != (other.k, other.l, other.n):
            raise ValueError("mismatched supermatrix shapes")

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(gmat_add(self.rows, other.rows))

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(gmat_sub(self.rows, other.rows))

    def __neg__(self):
        return self._like(gmat_neg(self.rows))

    def matmul(self, other):
        """Plain entrywise matrix product, no parity signs."""
        self._check_compatible(other)
        return self._like(gmat_mul(self.rows, other.rows))

    __matmul__ = matmul

    def group_product(self, other):
        """Composition as group elements.

        Entry ``(i, j)`` of the result is
        ``sum_t (-1)**((p_i+p_t)(p_t+p_j)) self[i,t] other[t,j]``;
        the parity signs make this the pullback of entry functions along
        the product map, which is what preserves the defining relations.
        """
        self._check_compatible(other)
        size = self.size
        out = []
        for i in range(size):
            pi = self.parity(i)
            row = []
            for j in range(size):
                pj = self.parity(j)
                acc = GrassmannElement.zero(self.n)
                for t in range(size):
                    pt = self.parity(t)
                    term = self.rows[i][t] * other.rows[t][j]
                    if (pi + pt) * (pt + pj) % 2:
                        term = -term
                    acc = acc + term
                row.append(acc)
            out.append(row)
        return self._like(out)

    def supertranspose(self):
        """Graded transpose: entry (j, i) picks up (-1)^(p_i (p_i + p_j))."""
        size = self.size
        out = [[None] * size for _ in range(size)]
        for i in range(size):
            pi = self.parity(i)
            for j in range(size):
                x = self.rows[i][j]
                if pi * (pi + self.parity(j)) % 2:
                    x = -x
                out[j][i] = x
        return self._like(out)

    def conjugate(self):
        return self._like(gmat_conj(self.rows))

    def conjugate_second_kind(self, pairs):
        return self._like(gmat_conj2(self.rows, pairs))

    def superadjoint(self, pairs=None):
        """Graded adjoint: entry (a, b) is ``i^(p_a+p_b) conj(self[b, a])``.

        ``pairs`` selects second-kind conjugation of the underlying
        generators; by default coefficients are conjugated and generators
        held fixed.
        """
        size = self.size
        i_unit = GaussianRational(0, 1)
        out = [[None] * size for _ in range(size)]
        for a in range(size):
            pa = self.parity(a)
            for b in range(size):
                x = self.rows[b][a]
                x = (
                    x.conjugate()
                    if pairs is None
                    else x.conjugate_second_kind(pairs)
                )
                if (pa + self.parity(b)) % 2:
                    x = x.scale(i_unit)
                out[a][b] = x
        return self._like(out)

    def dagger(self, pairs=None):
        """Plain conjugate transpose (no parity factors)."""
        rows = gmat_transpose(
            gmat_conj(self.rows) if pairs is None else gmat_conj2(self.rows, pairs)
        )
        return self._like(rows)

    def scale(self, c):
        return self._like(gmat_scale(self.rows, c))

    def max_abs(self):
        return gmat_max_abs(self.rows)

    def to_float(self):
        return self._like(gmat_to_float(self.rows))

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return (
            (self.k, self.l, self.n) == (other.k, other.l, other.n)
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.k, self.l, self.n, self.rows))

    def __repr__(self):
        return f"SuperMatrix(k={self.k}, l={self.l}, n={self.n})"


# ---------------------------------------------------------------------------
# serialization

def supermatrix_to_json(x: SuperMatrix) -> dict:
    from .grassmann import to_json

    return {
        "k": x.k,
        "l": x.l,
        "N": x.n,
        "entries": [to_json(e) for row in x.rows for e in row],
    }


def supermatrix_from_json(data: dict) -> SuperMatrix:
    from .grassmann import from_json

    k, l, n = data["k"], data["l"], data["N"]
    size = k + l
    flat = [from_json(e) for e in data["entries"]]
    if len(flat) != size * size:
        raise ValueError("entry count does not match declared shape")
    entries = [flat[i * size : (i + 1) * size] for i in range(size)]
    return SuperMatrix(k, l, n, entries)

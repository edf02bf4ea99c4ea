"""Coordinate charts: points, embeddings, defining relations, antipode.

A point of a supergroup is a classical pair plus an odd coordinate
matrix; :func:`embed` realizes it as a block supermatrix through the
family's chart.  The chart entries satisfy the family's defining
relations identically, which :func:`check_defining_relations` verifies
entry by entry, and :func:`decompose` inverts the chart.

Points are "generalized": the classical factors may carry even Grassmann
entries with nonzero soul, which is exactly what products of embedded
points produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grassmann import GaussianRational, GrassmannElement
from .groups import ClassicalPoint, rational_point, sample
from .supermatrix import (
    SuperMatrix,
    gmat_add,
    gmat_conj,
    gmat_from_scalars,
    gmat_identity,
    gmat_max_abs,
    gmat_mul,
    gmat_neg,
    gmat_scale,
    gmat_sub,
    gmat_transpose,
    gmat_zero,
    neumann_inverse,
    orthosymplectic_ab,
    standard_symplectic,
    unitary_ab,
)

I_UNIT = GaussianRational(0, 1)


class DecompositionError(ValueError):
    """The matrix is not (numerically) in the image of the chart."""


@dataclass(frozen=True)
class SuperPoint:
    """Chart coordinates: classical pair and odd coordinate matrix.

    All three are nested tuples of Grassmann elements over one shared
    algebra.  ``pairs`` carries the second-kind conjugation pairing when
    the family needs one (uosp), possibly covering more generators than
    this point uses.
    """

    spec: object
    x: tuple
    y: tuple
    theta: tuple
    pairs: tuple = None

    @property
    def n(self):
        return self.x[0][0].n

    def classical(self):
        """The underlying classical pair, if the point is genuinely classical."""
        for block in (self.x, self.y):
            for row in block:
                for e in row:
                    if not e.soul().is_zero():
                        raise ValueError("point has soul in its classical factors")
        body = lambda block: tuple(tuple(e.body() for e in row) for row in block)
        return ClassicalPoint(body(self.x), body(self.y))


def _freeze(rows):
    return tuple(tuple(r) for r in rows)


def _lift_classical(mat, n):
    """Numeric or exact matrix -> gmat of scalar Grassmann elements."""
    if isinstance(mat, np.ndarray):
        return [
            [GrassmannElement.scalar(n, complex(v)) for v in row] for row in mat
        ]
    return gmat_from_scalars(mat, n)


def generator_point(spec, cp, n=None, offset=0):
    """The canonical point over a classical pair: theta holds the generators.

    ``n``/``offset`` place the odd coordinates inside a larger algebra
    (generators ``offset+1 .. offset+n_grassmann``), which is how two
    independent points share one algebra.
    """
    ng = spec.n_grassmann
    if n is None:
        n = ng
    if offset + ng > n:
        raise ValueError("generator window does not fit the algebra")
    theta = [
        [_shift(e, n, offset) for e in row] for row in spec.odd_coordinates()
    ]
    pairs = spec.conjugation_pairs()
    if pairs is not None:
        pairs = _full_pairs(n, offset, pairs)
    return SuperPoint(
        spec,
        _freeze(_lift_classical(cp.x, n)),
        _freeze(_lift_classical(cp.y, n)),
        _freeze(theta),
        pairs,
    )


def _shift(f, n_new, offset):
    return GrassmannElement(
        n_new, {b << offset: c for b, c in f.terms.items()}
    )


def _full_pairs(n, offset, window_pairs):
    """Extend a window's conjugation pairs to cover all n generators."""
    pairs = [(a + offset, b + offset) for a, b in window_pairs]
    used = {i for ab in pairs for i in ab}
    rest = [i for i in range(1, n + 1) if i not in used]
    # outside generators are paired among themselves in consecutive twos
    if len(rest) % 2:
        raise ValueError("cannot pair an odd number of leftover generators")
    pairs += [(rest[i], rest[i + 1]) for i in range(0, len(rest), 2)]
    return tuple(sorted(pairs))


def random_point(spec, rng, exact=True, n=None, offset=0, soul_degree=3):
    """A random generalized point: random classical pair, random odd theta.

    The odd entries are random odd elements (degree 1 plus optional
    degree-3 noise) over the generator window, not bare generators, so
    identities verified on these points are checked in honestly generic
    position.
    """
    ng = spec.n_grassmann
    if n is None:
        n = ng
    if offset + ng > n:
        raise ValueError("generator window does not fit the algebra")
    if exact:
        cp = rational_point(spec, rng)
    else:
        seed = int(rng.integers(0, 2**62))
        cp = sample(spec, seed, 1)[0]

    def coeff():
        num = int(rng.integers(-3, 4))
        den = int(rng.integers(1, 4))
        if exact:
            return GaussianRational(Fraction(num, den))
        return complex(num / den)

    window = list(range(offset + 1, offset + ng + 1))

    def odd_element():
        terms = {}
        for i in window:
            terms[1 << (i - 1)] = coeff()
        if soul_degree >= 3 and ng >= 3:
            picks = rng.choice(ng, size=3, replace=False)
            blade = 0
            for t in picks:
                blade |= 1 << (offset + int(t))
            terms[blade] = coeff()
        return GrassmannElement(n, terms)

    rows, cols = len(spec.odd_coordinates()), spec.even_size
    if spec.family == "u":
        theta = [[odd_element() for _ in range(cols)] for _ in range(rows)]
        pairs = None
    elif spec.family == "osp":
        theta = [[odd_element() for _ in range(cols)] for _ in range(rows)]
        pairs = None
    else:
        m, nn = spec.dims
        pairs = _full_pairs(n, offset, spec.conjugation_pairs())
        top = [[odd_element() for _ in range(m)] for _ in range(nn)]
        bottom = [
            [-e.conjugate_second_kind(pairs) for e in row] for row in top
        ]
        theta = top + bottom
    return SuperPoint(
        spec,
        _freeze(_lift_classical(cp.x, n)),
        _freeze(_lift_classical(cp.y, n)),
        _freeze(theta),
        pairs,
    )


# ---------------------------------------------------------------------------
# embedding


def embed(point: SuperPoint) -> SuperMatrix:
    """Realize a point as a block supermatrix through its family's chart."""
    spec = point.spec
    n = point.n
    x = [list(r) for r in point.x]
    y = [list(r) for r in point.y]
    theta = [list(r) for r in point.theta]
    k, l = spec.even_size, spec.odd_size
    if spec.family == "u":
        psi_dag, a, b = unitary_ab(theta)
        tl = gmat_mul(x, a)
        tr = gmat_scale(gmat_mul(gmat_mul(x, psi_dag), y), I_UNIT)
        br = gmat_mul(b, y)
        return SuperMatrix.from_blocks(k, l, n, tl, tr, theta, br)
    theta_hat, a, b = orthosymplectic_ab(theta)
    tl = gmat_mul(x, a)
    tr = gmat_mul(gmat_mul(x, theta_hat), y)
    br = gmat_mul(b, y)
    return SuperMatrix.from_blocks(k, l, n, tl, tr, theta, br)


# ---------------------------------------------------------------------------
# defining relations


def check_defining_relations(spec, xmat: SuperMatrix, pairs=None):
    """Max-abs residuals of the family's defining relations, by block.

    Exact inputs give exact zeros (reported as 0.0).  For the uosp family
    the unitarity block needs the second-kind conjugation ``pairs``.
    """
    n = xmat.n
    k, l = spec.even_size, spec.odd_size
    tl, tr = xmat.block(0, 0), xmat.block(0, 1)
    bl, br = xmat.block(1, 0), xmat.block(1, 1)
    out = {}
    if spec.family == "u":
        p, q = spec.dims
        tl_d, tr_d = gmat_conj(gmat_transpose(tl)), gmat_conj(gmat_transpose(tr))
        bl_d = gmat_conj(gmat_transpose(bl))
        r1 = gmat_sub(
            gmat_add(gmat_mul(tl_d, tl), gmat_scale(gmat_mul(bl_d, bl), I_UNIT)),
            gmat_identity(p, n),
        )
        r2 = gmat_add(
            gmat_neg(gmat_mul(tl_d, tr)), gmat_scale(gmat_mul(bl_d, br), I_UNIT)
        )
        r3 = gmat_sub(
            gmat_add(gmat_neg(gmat_mul(tr_d, tr)), gmat_scale(gmat_mul(gmat_conj(gmat_transpose(br)), br), I_UNIT)),
            gmat_scale(gmat_identity(q, n), I_UNIT),
        )
        out["defining-relations-block-1"] = gmat_max_abs(r1)
        out["defining-relations-block-2"] = gmat_max_abs(r2)
        out["defining-relations-block-3"] = gmat_max_abs(r3)
        return out

    m, nn = spec.dims
    jmat = standard_symplectic(nn, n)
    tl_t, tr_t, bl_t, br_t = map(
        gmat_transpose, (tl, tr, bl, br)
    )
    r1 = gmat_sub(
        gmat_add(gmat_mul(tl_t, tl), gmat_mul(gmat_mul(bl_t, jmat), bl)),
        gmat_identity(m, n),
    )
    r2 = gmat_add(
        gmat_neg(gmat_mul(tl_t, tr)), gmat_mul(gmat_mul(bl_t, jmat), br)
    )
    r3 = gmat_sub(
        gmat_add(gmat_neg(gmat_mul(tr_t, tr)), gmat_mul(gmat_mul(br_t, jmat), br)),
        jmat,
    )
    out["defining-relations-block-1"] = gmat_max_abs(r1)
    out["defining-relations-block-2"] = gmat_max_abs(r2)
    out["defining-relations-block-3"] = gmat_max_abs(r3)

    if spec.family == "uosp":
        if pairs is None:
            pairs = _full_pairs(n, 0, spec.conjugation_pairs())
        dag = xmat.dagger(pairs)
        flipped = SuperMatrix.from_blocks(
            k, l, n, tl, gmat_neg(tr), bl, br, validate=False
        )
        resid = dag.matmul(flipped) - SuperMatrix.identity(k, l, n)
        out["unitarity-block"] = resid.max_abs()
    return out


# ---------------------------------------------------------------------------
# antipode


def antipode(spec, xmat: SuperMatrix) -> SuperMatrix:
    """The inverse-of-group-element map on embedded matrices.

    Composing with the original through :meth:`SuperMatrix.group_product`
    gives the identity; the plain matrix product does not.
    """
    n = xmat.n
    k, l = spec.even_size, spec.odd_size
    tl, tr = xmat.block(0, 0), xmat.block(0, 1)
    bl, br = xmat.block(1, 0), xmat.block(1, 1)
    if spec.family == "u":
        conj_t = lambda g: gmat_conj(gmat_transpose(g))
        neg_i = -I_UNIT
        return SuperMatrix.from_blocks(
            k,
            l,
            n,
            conj_t(tl),
            gmat_scale(conj_t(bl), neg_i),
            gmat_scale(conj_t(tr), neg_i),
            conj_t(br),
        )
    nn = spec.dims[1]
    jmat = standard_symplectic(nn, n)
    return SuperMatrix.from_blocks(
        k,
        l,
        n,
        gmat_transpose(tl),
        gmat_neg(gmat_mul(gmat_transpose(bl), jmat)),
        gmat_neg(gmat_mul(jmat, gmat_transpose(tr))),
        gmat_neg(gmat_mul(gmat_mul(jmat, gmat_transpose(br)), jmat)),
    )


# ---------------------------------------------------------------------------
# chart inversion


def decompose(spec, xmat: SuperMatrix, tol=1e-10, pairs=None) -> SuperPoint:
    """Invert the chart: read off theta, strip the square-root factors.

    Raises :class:`DecompositionError` when the defining relations fail
    beyond ``tol`` or the off-diagonal block cannot be reproduced.
    """
    resid = check_defining_relations(spec, xmat, pairs=pairs)
    bad = {k: v for k, v in resid.items() if v > tol}
    if bad:
        raise DecompositionError(f"defining relations violated: {bad}")
    n = xmat.n
    theta = xmat.block(1, 0)
    tl, tr, br = xmat.block(0, 0), xmat.block(0, 1), xmat.block(1, 1)
    if spec.family == "u":
        psi_dag, a, b = unitary_ab(theta)
        x = gmat_mul(tl, neumann_inverse(a))
        y = gmat_mul(neumann_inverse(b), br)
        expect = gmat_scale(gmat_mul(gmat_mul(x, psi_dag), y), I_UNIT)
    else:
        theta_hat, a, b = orthosymplectic_ab(theta)
        x = gmat_mul(tl, neumann_inverse(a))
        y = gmat_mul(neumann_inverse(b), br)
        expect = gmat_mul(gmat_mul(x, theta_hat), y)
    err = gmat_max_abs(gmat_sub(expect, tr))
    if err > tol:
        raise DecompositionError(
            f"off-diagonal block not reproduced by the chart (residual {err:g})"
        )
    if spec.family == "uosp" and pairs is None:
        pairs = _full_pairs(n, 0, spec.conjugation_pairs())
    return SuperPoint(spec, _freeze(x), _freeze(y), _freeze(theta), pairs)


# ---------------------------------------------------------------------------
# left translation by a classical group element


def left_translate(g: ClassicalPoint, point: SuperPoint) -> SuperPoint:
    """Translate a point by a classical pair: x, y and the theta rows rotate.

    Embedding commutes with translation:
    ``embed(left_translate(g, p)) == blockdiag(g) @ embed(p)`` entrywise.
    """
    n = point.n
    gx = _lift_classical(g.x, n)
    gy = _lift_classical(g.y, n)
    return SuperPoint(
        point.spec,
        _freeze(gmat_mul(gx, [list(r) for r in point.x])),
        _freeze(gmat_mul(gy, [list(r) for r in point.y])),
        _freeze(gmat_mul(gy, [list(r) for r in point.theta])),
        point.pairs,
    )


def classical_block_matrix(spec, g: ClassicalPoint, n) -> SuperMatrix:
    """blockdiag(g_x, g_y) as a supermatrix over the algebra."""
    k, l = spec.even_size, spec.odd_size
    gx = _lift_classical(g.x, n)
    gy = _lift_classical(g.y, n)
    return SuperMatrix.from_blocks(
        k, l, n, gx, gmat_zero(k, l, n), gmat_zero(l, k, n), gy, validate=False
    )

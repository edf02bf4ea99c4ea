"""Invariant derivations of the entry-function algebra.

Each basis derivation is implemented twice and cross-checked:

* abstractly, as a linear action on entry symbols extended to products
  by the graded Leibniz rule, with brackets verified against the
  structure constants;
* concretely, at a chart point, as a first-order differential operator
  in the odd coordinates plus infinitesimal classical rotations, applied
  entry by entry to the chart expressions.

The concrete operators act through closed forms for the classical
rotation pieces (never finite differences), so exact points give exact
residuals.
"""

from __future__ import annotations

from fractions import Fraction

from .charts import embed
from .grassmann import GaussianRational, GrassmannElement
from .supermatrix import (
    gmat_conj,
    gmat_mul,
    gmat_scale,
    gmat_transpose,
    neumann_inverse,
    orthosymplectic_ab,
    symplectic_int,
    unitary_ab,
)
from .symbols import SuperPolynomial, symbol_parity

HALF = GaussianRational(Fraction(1, 2))
I_UNIT = GaussianRational(0, 1)


# ---------------------------------------------------------------------------
# abstract actions on symbols


def metric_int(spec):
    """diag(I_m, J) as an integer matrix (orthosymplectic families)."""
    m, n = spec.dims
    size = spec.size
    out = [[0] * size for _ in range(size)]
    for i in range(m):
        out[i][i] = 1
    j = symplectic_int(n)
    for a in range(2 * n):
        for b in range(2 * n):
            out[m + a][m + b] = j[a][b]
    return out


def basis(spec):
    """Basis labels for the invariant derivations.

    osp/uosp: pairs ``(i, j)`` with ``i < j <= m``, ``m < i <= j``, or
    ``i <= m < j``.  u: ``("S", k, l)``, ``("T", s, t)`` (even) and
    ``("Y", i, j)``, ``("Yb", i, j)`` (odd, complex basis).
    """
    if spec.family in ("osp", "uosp"):
        m, n = spec.dims
        size = spec.size
        out = [(i, j) for i in range(1, m + 1) for j in range(i + 1, m + 1)]
        out += [(i, j) for i in range(m + 1, size + 1) for j in range(i, size + 1)]
        out += [
            (i, j) for i in range(1, m + 1) for j in range(m + 1, size + 1)
        ]
        return out
    p, q = spec.dims
    out = [("S", k, l) for k in range(1, p + 1) for l in range(1, p + 1)]
    out += [("T", s, t) for s in range(1, q + 1) for t in range(1, q + 1)]
    out += [("Y", i, j) for i in range(1, q + 1) for j in range(1, p + 1)]
    out += [("Yb", i, j) for i in range(1, q + 1) for j in range(1, p + 1)]
    return out


def element_parity(spec, elem):
    if spec.family in ("osp", "uosp"):
        i, j = elem
        return (spec.parity(i) + spec.parity(j)) % 2
    return 1 if elem[0] in ("Y", "Yb") else 0


def act_symbol(spec, elem, sym):
    """Action of a basis derivation on one entry symbol, as a polynomial."""
    if spec.family in ("osp", "uosp"):
        return _act_symbol_osp(spec, elem, sym)
    return _act_symbol_u(spec, elem, sym)


def _act_symbol_osp(spec, elem, sym):
    alpha, beta = elem
    kind, gamma, delta = sym
    if kind != "X":
        raise ValueError("the orthosymplectic alphabet has X symbols only")
    g = metric_int(spec)
    pa, pb = spec.parity(alpha), spec.parity(beta)
    pd = spec.parity(delta)
    outer = -1 if ((1 + pd) * (pa + pb)) % 2 else 1
    inner = -1 if (pa * pb) % 2 else 1
    out = SuperPolynomial.zero(spec)
    c1 = g[gamma - 1][beta - 1]
    if c1:
        out = out + SuperPolynomial.from_symbol(
            spec, ("X", alpha, delta), GaussianRational(outer * c1)
        )
    c2 = g[gamma - 1][alpha - 1]
    if c2:
        out = out + SuperPolynomial.from_symbol(
            spec, ("X", beta, delta), GaussianRational(-outer * inner * c2)
        )
    return out


def _act_symbol_u(spec, elem, sym):
    p, q = spec.dims
    kind, alpha, beta = sym
    pb = spec.parity(beta)
    sgn = -1 if pb else 1
    tag = elem[0]
    terms = {}

    def put(k2, a2, b2, coeff):
        if coeff == 0:
            return
        mono = (((k2, a2, b2), 1),)
        terms[mono] = terms.get(mono, GaussianRational(0)) + coeff

    if tag == "Y":
        i, j = elem[1], elem[2]
        if kind == "X":
            if alpha == i + p:
                put("X", j, beta, GaussianRational(sgn))
        else:
            if alpha == j:
                put("conj", i + p, beta, GaussianRational(0, sgn))
    elif tag == "Yb":
        i, j = elem[1], elem[2]
        if kind == "X":
            if alpha == j:
                put("X", i + p, beta, GaussianRational(0, -sgn))
        else:
            if alpha == i + p:
                put("conj", j, beta, GaussianRational(sgn))
    elif tag == "S":
        k, l = elem[1], elem[2]
        if kind == "X":
            if alpha == l:
                put("X", k, beta, GaussianRational(1))
        else:
            if alpha == k:
                put("conj", l, beta, GaussianRational(-1))
    elif tag == "T":
        s, t = elem[1], elem[2]
        if kind == "X":
            if alpha == t + p:
                put("X", s + p, beta, GaussianRational(1))
        else:
            if alpha == s + p:
                put("conj", t + p, beta, GaussianRational(-1))
    else:
        raise ValueError(f"unknown basis element {elem!r}")
    return SuperPolynomial(spec, terms)


def matrix_action_u(spec, dmat, sym):
    """Action of a real-algebra matrix through the infinitesimal coaction.

    ``dmat`` is a (p+q) x (p+q) nested list over the coefficient ring;
    entry symbols transform by ``sum_g (-1)^(p_b (p_a + p_g)) D[g, a]``
    and conjugated symbols with the conjugated coefficients.
    """
    kind, alpha, beta = sym
    size = spec.size
    pb = spec.parity(beta)
    pa = spec.parity(alpha)
    out = SuperPolynomial.zero(spec)
    for g in range(1, size + 1):
        c = dmat[g - 1][alpha - 1]
        if isinstance(c, (int, Fraction)):
            c = GaussianRational(c)
        if _is_zero_coeff(c):
            continue
        if kind == "conj":
            c = c.conjugate()
        if (pb * (pa + spec.parity(g))) % 2:
            c = -c
        out = out + SuperPolynomial.from_symbol(spec, (kind, g, beta), c)
    return out


def _is_zero_coeff(c):
    if isinstance(c, complex):
        return c == 0
    return c.is_zero() if hasattr(c, "is_zero") else c == 0


def act_on_polynomial(spec, action, parity, poly):
    """Extend a symbol-level action to polynomials by graded Leibniz.

    ``action(sym) -> SuperPolynomial``; ``parity`` is the derivation's.
    """
    out = SuperPolynomial.zero(spec)
    for mono, coeff in poly.terms.items():
        flat = [s for s, e in mono for _ in range(e)]
        prefix_parity = 0
        for t, sym in enumerate(flat):
            acted = action(sym)
            if not acted.is_zero():
                piece = SuperPolynomial.from_product(spec, flat[:t], coeff)
                piece = piece * acted
                piece = piece * SuperPolynomial.from_product(
                    spec, flat[t + 1 :], 1
                )
                if (parity * prefix_parity) % 2:
                    piece = -piece
                out = out + piece
            prefix_parity = (prefix_parity + symbol_parity(spec, sym)) % 2
    return out


def derivation_action(spec, elem):
    """(callable, parity) pair for a basis derivation."""
    par = element_parity(spec, elem)
    return (lambda sym: act_symbol(spec, elem, sym)), par


# ---------------------------------------------------------------------------
# brackets


def _commutator_on_symbol(spec, a1, p1, a2, p2, sym):
    first = act_on_polynomial(spec, a1, p1, a2(sym))
    second = act_on_polynomial(spec, a2, p2, a1(sym))
    if (p1 * p2) % 2:
        return first + second
    return first - second


def bracket_rhs_osp(spec, e1, e2):
    """Structure constants: [K(i,j), K(k,l)] as basis combinations.

    Returns a list of ``(int coefficient, (a, b))`` with unreduced index
    pairs; each pairs with the symbol action which is defined for any
    index order.
    """
    i, j = e1
    k, l = e2
    g = metric_int(spec)
    par = spec.parity
    out = []
    c = g[k - 1][j - 1]
    if c:
        out.append((c, (i, l)))
    c = g[l - 1][i - 1]
    if c:
        s = -1 if (par(i) * (par(j) + par(k))) % 2 else 1
        out.append((s * c, (j, k)))
    c = g[l - 1][j - 1]
    if c:
        s = -1 if (par(k) * par(l)) % 2 else 1
        out.append((-s * c, (i, k)))
    c = g[k - 1][i - 1]
    if c:
        s = -1 if (par(i) * par(j)) % 2 else 1
        out.append((-s * c, (j, l)))
    return out


def all_symbols(spec):
    size = spec.size
    syms = [
        ("X", a, b) for a in range(1, size + 1) for b in range(1, size + 1)
    ]
    if spec.family == "u":
        syms += [
            ("conj", a, b)
            for a in range(1, size + 1)
            for b in range(1, size + 1)
        ]
    return syms


def verify_bracket_osp(spec):
    """Check the bracket of symbol actions against the structure constants.

    Exact; returns the number of (pair, symbol) mismatches (0 when the
    presentation is consistent).
    """
    bad = 0
    elems = basis(spec)
    syms = all_symbols(spec)
    for e1 in elems:
        a1, p1 = derivation_action(spec, e1)
        for e2 in elems:
            a2, p2 = derivation_action(spec, e2)
            rhs_terms = bracket_rhs_osp(spec, e1, e2)
            for sym in syms:
                lhs = _commutator_on_symbol(spec, a1, p1, a2, p2, sym)
                rhs = SuperPolynomial.zero(spec)
                for c, e3 in rhs_terms:
                    rhs = rhs + act_symbol(spec, e3, sym).scale(c)
                if not (lhs - rhs).is_zero():
                    bad += 1
    return bad


def canonical_osp(spec, i, j):
    """(sign, elem or None): reduce K(i, j) to the basis index order."""
    m = spec.even_size
    if i == j and i <= m:
        return 0, None
    if i > j:
        s = -1 if (spec.parity(i) * spec.parity(j)) % 2 else 1
        return -s, (j, i)
    return 1, (i, j)


def bracket_dict_osp(spec, e1, e2):
    """[e1, e2] reduced to canonical basis elements with int coefficients."""
    out = {}
    for c, (a, b) in bracket_rhs_osp(spec, e1, e2):
        s, elem = canonical_osp(spec, a, b)
        if elem is None:
            continue
        out[elem] = out.get(elem, 0) + s * c
        if out[elem] == 0:
            del out[elem]
    return out


def jacobi_mismatches_osp(spec):
    """Exhaustive graded Jacobi check on the structure constants."""
    elems = basis(spec)
    par = {e: element_parity(spec, e) for e in elems}

    def bracket_with_dict(e, d, flip=False):
        out = {}
        for e2, c2 in d.items():
            inner = (
                bracket_dict_osp(spec, e2, e) if flip else bracket_dict_osp(spec, e, e2)
            )
            for e3, c3 in inner.items():
                out[e3] = out.get(e3, 0) + c2 * c3
                if out[e3] == 0:
                    del out[e3]
        return out

    bad = 0
    for a in elems:
        for b in elems:
            ab = bracket_dict_osp(spec, a, b)
            for c in elems:
                bc = bracket_dict_osp(spec, b, c)
                lhs = bracket_with_dict(a, bc)  # [a, [b, c]]
                rhs1 = bracket_with_dict(c, ab, flip=True)  # [[a, b], c]
                rhs2 = bracket_with_dict(b, bracket_dict_osp(spec, a, c))
                sign = -1 if (par[a] * par[b]) % 2 else 1
                total = dict(lhs)
                for e3, v in rhs1.items():
                    total[e3] = total.get(e3, 0) - v
                    if total[e3] == 0:
                        del total[e3]
                for e3, v in rhs2.items():
                    total[e3] = total.get(e3, 0) - sign * v
                    if total[e3] == 0:
                        del total[e3]
                if total:
                    bad += 1
    return bad


# -- unitary family: real basis matrices ------------------------------------


def u_real_basis(spec):
    """Real basis of the unitary superalgebra as (matrix, parity) pairs.

    Even: antihermitian generators of both diagonal blocks.  Odd: the
    hatted matrices ``[[0, C], [-i C^dag, 0]]`` for ``C = E_jk`` and
    ``C = i E_jk``.
    """
    p, q = spec.dims
    size = spec.size
    zero = GaussianRational(0)
    one = GaussianRational(1)
    i_unit = I_UNIT

    def empty():
        return [[zero for _ in range(size)] for _ in range(size)]

    out = []
    for off, d in ((0, p), (p, q)):
        for a in range(d):
            m = empty()
            m[off + a][off + a] = i_unit
            out.append((m, 0))
        for a in range(d):
            for b in range(a + 1, d):
                m = empty()
                m[off + a][off + b] = one
                m[off + b][off + a] = -one
                out.append((m, 0))
                m = empty()
                m[off + a][off + b] = i_unit
                m[off + b][off + a] = i_unit
                out.append((m, 0))
    for j in range(p):
        for k in range(q):
            for c in (one, i_unit):
                m = empty()
                m[j][p + k] = c
                m[p + k][j] = -i_unit * c.conjugate()
                out.append((m, 1))
    return out


def u_hat_matrix(spec, cmat):
    """[[0, C], [-i C^dag, 0]] for a p x q matrix C over the exact ring."""
    p, q = spec.dims
    size = spec.size
    zero = GaussianRational(0)
    out = [[zero for _ in range(size)] for _ in range(size)]
    for j in range(p):
        for k in range(q):
            out[j][p + k] = cmat[j][k]
            out[p + k][j] = -I_UNIT * cmat[j][k].conjugate()
    return out


def u_matrix_supercommutator(spec, d1, p1, d2, p2):
    size = spec.size
    prod1 = [
        [
            sum((d1[i][t] * d2[t][j] for t in range(size)), GaussianRational(0))
            for j in range(size)
        ]
        for i in range(size)
    ]
    prod2 = [
        [
            sum((d2[i][t] * d1[t][j] for t in range(size)), GaussianRational(0))
            for j in range(size)
        ]
        for i in range(size)
    ]
    sign = -1 if (p1 * p2) % 2 else 1
    return [
        [prod1[i][j] - prod2[i][j] * sign for j in range(size)]
        for i in range(size)
    ]


def verify_bracket_u(spec):
    """Matrix-bracket consistency of the infinitesimal coaction.

    For every pair of real basis matrices, the graded commutator of
    their symbol actions must equal the action of their matrix
    supercommutator.  Exact; returns the mismatch count.
    """
    bad = 0
    elems = u_real_basis(spec)
    syms = all_symbols(spec)
    for d1, p1 in elems:
        a1 = lambda sym, d=d1: matrix_action_u(spec, d, sym)
        for d2, p2 in elems:
            a2 = lambda sym, d=d2: matrix_action_u(spec, d, sym)
            dc = u_matrix_supercommutator(spec, d1, p1, d2, p2)
            for sym in syms:
                lhs = _commutator_on_symbol(spec, a1, p1, a2, p2, sym)
                rhs = matrix_action_u(spec, dc, sym)
                if not (lhs - rhs).is_zero():
                    bad += 1
    return bad


def verify_bracket(spec):
    if spec.family in ("osp", "uosp"):
        return verify_bracket_osp(spec)
    return verify_bracket_u(spec)


# ---------------------------------------------------------------------------
# coordinate realizations


class ChartMats:
    """All chart-derived matrices needed by the realized derivations."""

    def __init__(self, point):
        spec = point.spec
        self.spec = spec
        self.n = point.n
        x = [list(r) for r in point.x]
        y = [list(r) for r in point.y]
        theta = [list(r) for r in point.theta]
        self.x, self.y, self.theta = x, y, theta
        if spec.family == "u":
            psi_dag, a, b = unitary_ab(theta)
            self.psi = theta
            self.psibar = gmat_conj(theta)
            self.psi_dag = psi_dag
            self.a, self.b = a, b
            self.a_inv = neumann_inverse(a)
            self.b_inv = neumann_inverse(b)
            self.xa = gmat_mul(x, a)
            self.xp = gmat_mul(x, psi_dag)
            self.xpy = gmat_scale(gmat_mul(self.xp, y), I_UNIT)
            self.by = gmat_mul(b, y)
            self.xa_conj = gmat_conj(self.xa)
            x_inv = gmat_conj(gmat_transpose(x))
            self.ainv_xinv = gmat_mul(self.a_inv, x_inv)
        else:
            theta_hat, a, b = orthosymplectic_ab(theta)
            nn = spec.dims[1]
            self.jmat = symplectic_int(nn)
            self.theta_hat = theta_hat
            self.a, self.b = a, b
            self.a_inv = neumann_inverse(a)
            self.b_inv = neumann_inverse(b)
            self.xa = gmat_mul(x, a)
            self.xainv = gmat_mul(x, self.a_inv)
            self.xth = gmat_mul(x, theta_hat)
            self.xty = gmat_mul(self.xth, y)
            self.by = gmat_mul(b, y)
            jg = _int_to_gmat(self.jmat, self.n)
            self.bj = gmat_mul(b, jg)
            self.xthj = gmat_mul(self.xth, jg)
            self.xainv_tht = gmat_mul(
                gmat_mul(x, self.a_inv), gmat_transpose(theta)
            )
            self.jbinv = gmat_mul(jg, self.b_inv)
            self.jbinvj = gmat_mul(self.jbinv, jg)

    # expression kinds -> entries
    def entry(self, kind, a, b):
        if kind == "xA":
            return self.xa[a - 1][b - 1]
        if kind == "theta" or kind == "psi":
            return self.theta[a - 1][b - 1]
        if kind == "psibar":
            return self.psibar[a - 1][b - 1]
        if kind == "By":
            return self.by[a - 1][b - 1]
        if kind == "xTy":
            return self.xty[a - 1][b - 1]
        if kind == "xPy":
            return self.xpy[a - 1][b - 1]
        raise ValueError(f"unknown expression kind {kind!r}")

    def symbol_entry(self, sym):
        """Evaluate an entry symbol ('X'/'conj', a, b) at this point."""
        kind, a, b = sym
        k = self.spec.even_size
        if a <= k and b <= k:
            v = self.entry("xA", a, b)
        elif a <= k:
            v = self.entry("xTy" if self.spec.family != "u" else "xPy", a, b - k)
        elif b <= k:
            v = self.entry(
                "theta" if self.spec.family != "u" else "psi", a - k, b
            )
        else:
            v = self.entry("By", a - k, b - k)
        if kind == "conj":
            v = v.conjugate()
        return v

    def generator_kinds(self):
        if self.spec.family == "u":
            return ("xA", "xPy", "psi", "psibar", "By")
        return ("xA", "xTy", "theta", "By")

    def kind_shape(self, kind):
        k, l = self.spec.even_size, self.spec.odd_size
        return {
            "xA": (k, k),
            "xTy": (k, l),
            "xPy": (k, l),
            "theta": (l, k),
            "psi": (l, k),
            "psibar": (l, k),
            "By": (l, l),
        }[kind]


def _int_to_gmat(mat, n):
    return [
        [GrassmannElement.scalar(n, c) for c in row] for row in mat
    ]


def _zero(n):
    return GrassmannElement.zero(n)


# -- elementary operator application ------------------------------------------


def _dpsi(mats, f, i, a, bar=False):
    re, im = mats.spec.psi_indices(i, a)
    im_coeff = GaussianRational(0, Fraction(1, 2) if bar else Fraction(-1, 2))
    return f.partial(re).scale(HALF) + f.partial(im).scale(im_coeff)


def apply_op(mats, op, kind, a, b):
    """Apply one elementary operator to one chart-expression entry.

    Classical rotation operators act through closed forms; odd
    derivatives act on the evaluated Grassmann entry.
    """
    spec = mats.spec
    tag = op[0]
    n = mats.n
    if tag == "dth":
        p, t = op[1], op[2]
        return mats.entry(kind, a, b).partial(spec.theta_index(p, t))
    if tag == "dpsi" or tag == "dpsibar":
        i, k = op[1], op[2]
        return _dpsi(mats, mats.entry(kind, a, b), i, k, bar=(tag == "dpsibar"))
    if tag == "Lx":
        i, j = op[1], op[2]
        if kind in ("xA", "xTy"):
            mat = mats.xa if kind == "xA" else mats.xty
            out = _zero(n)
            if j == a:
                out = out + mat[i - 1][b - 1]
            if i == a:
                out = out - mat[j - 1][b - 1]
            return out
        return _zero(n)
    if tag == "Ly":
        i, j = op[1], op[2]
        if kind == "By":
            return (
                mats.bj[a - 1][j - 1] * mats.y[i - 1][b - 1]
                + mats.bj[a - 1][i - 1] * mats.y[j - 1][b - 1]
            )
        if kind == "xTy":
            return (
                mats.xthj[a - 1][j - 1] * mats.y[i - 1][b - 1]
                + mats.xthj[a - 1][i - 1] * mats.y[j - 1][b - 1]
            )
        return _zero(n)
    if tag == "S":
        k, l = op[1], op[2]
        if kind == "xA" and l == a:
            return mats.xa[k - 1][b - 1]
        if kind == "xPy" and l == a:
            return mats.xpy[k - 1][b - 1]
        return _zero(n)
    if tag == "T":
        s, t = op[1], op[2]
        if kind == "By":
            return mats.b[a - 1][t - 1] * mats.y[s - 1][b - 1]
        if kind == "xPy":
            return (
                mats.xp[a - 1][t - 1].scale(I_UNIT) * mats.y[s - 1][b - 1]
            )
        return _zero(n)
    raise ValueError(f"unknown operator {op!r}")


def apply_derivation(mats, deriv, kind, a, b):
    """Sum of coefficient times elementary-operator applications."""
    out = _zero(mats.n)
    for coeff, op in deriv:
        out = out + coeff * apply_op(mats, op, kind, a, b)
    return out


# -- orthosymplectic realization ---------------------------------------------


def realized_osp(spec, mats, elem, variant=-1):
    """Coordinate realization of an orthosymplectic basis derivation.

    ``variant`` is the sign of the third odd term; the value -1 (as used
    in the consistency proof, not the displayed statement) is the one
    that reproduces the abstract action, and the default.
    """
    m = spec.even_size
    two_n = spec.odd_size
    i, j = elem
    n = mats.n
    one = GrassmannElement.one(n)
    jm = mats.jmat
    if j <= m:  # even, both indices in the orthogonal block
        return [(one, ("Lx", i, j))]
    if i > m:  # even, both indices in the symplectic block
        ii, jj = i - m, j - m
        terms = [(one, ("Ly", ii, jj))]
        for l in range(1, m + 1):
            for p in range(1, two_n + 1):
                c = _zero(n)
                if jm[p - 1][jj - 1]:
                    c = c + mats.theta[ii - 1][l - 1].scale(
                        GaussianRational(jm[p - 1][jj - 1])
                    )
                if jm[p - 1][ii - 1]:
                    c = c + mats.theta[jj - 1][l - 1].scale(
                        GaussianRational(jm[p - 1][ii - 1])
                    )
                if not c.is_zero():
                    terms.append((c, ("dth", p, l)))
        return terms

    # odd: i <= m < j
    jj = j - m
    terms = []
    for t in range(1, m + 1):
        for p in range(1, two_n + 1):
            jv = jm[jj - 1][p - 1]
            if jv == 0:
                continue
            coeff = mats.xa[i - 1][t - 1].scale(GaussianRational(jv))
            terms.append((coeff, ("dth", p, t)))
    for t in range(1, m + 1):
        c = mats.xainv_tht[t - 1][jj - 1].scale(HALF)
        if not c.is_zero():
            terms.append((c, ("Lx", t, i)))
    half_var = GaussianRational(Fraction(variant, 2))
    for s in range(1, two_n + 1):
        for t in range(1, two_n + 1):
            c = mats.jbinvj[t - 1][jj - 1] * mats.xth[i - 1][s - 1]
            for u in range(1, two_n + 1):
                for p in range(1, two_n + 1):
                    jv = jm[jj - 1][p - 1]
                    if jv == 0:
                        continue
                    for r in range(1, m + 1):
                        db = mats.b[u - 1][s - 1].partial(
                            spec.theta_index(p, r)
                        )
                        if db.is_zero():
                            continue
                        piece = (
                            mats.xa[i - 1][r - 1]
                            * mats.jbinv[t - 1][u - 1]
                            * db
                        ).scale(GaussianRational(jv))
                        c = c - piece
            c = c.scale(half_var)
            if not c.is_zero():
                terms.append((c, ("Ly", s, t)))
    for u in range(1, m + 1):
        for r in range(1, m + 1):
            c = _zero(n)
            for t in range(1, m + 1):
                for s in range(1, m + 1):
                    for p in range(1, two_n + 1):
                        jv = jm[jj - 1][p - 1]
                        if jv == 0:
                            continue
                        dxa = mats.xa[r - 1][s - 1].partial(
                            spec.theta_index(p, t)
                        )
                        if dxa.is_zero():
                            continue
                        c = c + (
                            mats.xa[i - 1][t - 1]
                            * mats.xainv[u - 1][s - 1]
                            * dxa
                        ).scale(GaussianRational(jv))
            c = c.scale(GaussianRational(Fraction(-1, 2)))
            if not c.is_zero():
                terms.append((c, ("Lx", u, r)))
    return terms


def compare_osp_realization(spec, point, variant=-1):
    """Max residual of the realized action against the abstract one.

    Loops every basis derivation over every entry of the defining
    matrix; the abstract side is the symbol action evaluated at the
    point.
    """
    mats = ChartMats(point)
    worst = 0.0
    for elem in basis(spec):
        deriv = realized_osp(spec, mats, elem, variant=variant)
        for sym in all_symbols(spec):
            kind, a, b = _sym_to_kind(spec, sym)
            lhs = apply_derivation(mats, deriv, kind, a, b)
            rhs_poly = act_symbol(spec, elem, sym)
            rhs = _eval_poly_at(mats, rhs_poly)
            worst = max(worst, (lhs - rhs).max_abs())
    return worst


def _sym_to_kind(spec, sym):
    _, a, b = sym
    k = spec.even_size
    if a <= k and b <= k:
        return "xA", a, b
    if a <= k:
        return ("xTy" if spec.family != "u" else "xPy"), a, b - k
    if b <= k:
        return ("theta" if spec.family != "u" else "psi"), a - k, b
    return "By", a - k, b - k


def _eval_poly_at(mats, poly):
    one = GrassmannElement.one(mats.n)
    return poly.evaluate(mats.symbol_entry, one)


# -- unitary realization -------------------------------------------------------


def f_coefficients(spec, mats, i, j):
    """The x-rotation coefficients of the realized odd derivation.

    Keyed so that ``out[(k, l)]`` multiplies the rotation sending row l
    to row k; it cancels the derivative part on the even top block.
    """
    p = spec.even_size
    out = {}
    for k in range(1, p + 1):
        for l in range(1, p + 1):
            c = _zero(mats.n)
            for a in range(1, p + 1):
                for b in range(1, p + 1):
                    d = _dpsi(mats, mats.xa[l - 1][b - 1], i, a)
                    if d.is_zero():
                        continue
                    c = c + mats.xa[j - 1][a - 1] * d * mats.ainv_xinv[b - 1][k - 1]
            out[(k, l)] = -c
    return out


def g_coefficients(spec, mats, i, j):
    """The y-rotation coefficients of the realized odd derivation.

    Keyed like the f coefficients: ``out[(s, t)]`` multiplies the
    rotation sending row t to row s of the classical bottom factor.
    """
    p, q = spec.dims
    out = {}
    for s in range(1, q + 1):
        for t in range(1, q + 1):
            c = _zero(mats.n)
            for a in range(1, p + 1):
                for r in range(1, q + 1):
                    d = _dpsi(mats, mats.b[r - 1][s - 1], i, a)
                    if d.is_zero():
                        continue
                    c = c + mats.xa[j - 1][a - 1] * d * mats.b_inv[t - 1][r - 1]
            c = -c - (
                mats.b_inv[t - 1][i - 1] * mats.xp[j - 1][s - 1]
            ).scale(I_UNIT)
            out[(s, t)] = c
    return out


def realized_u_odd(spec, mats, i, j, bar=False):
    """Realized odd derivation (or its conjugate partner) at a point."""
    p, q = spec.dims
    fs = f_coefficients(spec, mats, i, j)
    gs = g_coefficients(spec, mats, i, j)
    terms = []
    if not bar:
        for k in range(1, p + 1):
            terms.append((mats.xa[j - 1][k - 1], ("dpsi", i, k)))
        for (k, l), c in fs.items():
            if not c.is_zero():
                terms.append((c, ("S", k, l)))
        for (s, t), c in gs.items():
            if not c.is_zero():
                terms.append((c, ("T", s, t)))
        return terms
    for k in range(1, p + 1):
        terms.append((mats.xa_conj[j - 1][k - 1], ("dpsibar", i, k)))
    for (k, l), c in fs.items():
        if not c.is_zero():
            terms.append((-c.conjugate(), ("S", l, k)))
    for (s, t), c in gs.items():
        if not c.is_zero():
            terms.append((-c.conjugate(), ("T", t, s)))
    return terms


def realized_u_even(spec, mats, pmat, qmat):
    """Realized even derivation for block matrices (P, Q).

    The x-block part needs no odd tail; the y-block part carries the
    first-order compensation in the odd coordinates.
    """
    p, q = spec.dims
    terms = []
    for k in range(1, p + 1):
        for l in range(1, p + 1):
            c = pmat[k - 1][l - 1]
            if not _is_zero_coeff(c):
                terms.append(
                    (GrassmannElement.scalar(mats.n, c), ("S", k, l))
                )
    for s in range(1, q + 1):
        for t in range(1, q + 1):
            c = qmat[s - 1][t - 1]
            if not _is_zero_coeff(c):
                terms.append(
                    (GrassmannElement.scalar(mats.n, c), ("T", s, t))
                )
    for i in range(1, q + 1):
        for j in range(1, q + 1):
            c = qmat[i - 1][j - 1]
            if _is_zero_coeff(c):
                continue
            for k in range(1, p + 1):
                terms.append(
                    (mats.psi[i - 1][k - 1].scale(c), ("dpsi", j, k))
                )
                terms.append(
                    (mats.psibar[j - 1][k - 1].scale(-c), ("dpsibar", i, k))
                )
    return terms


def compare_u_realization(spec, point):
    """Max residual of the realized odd derivations against the symbols.

    Includes the direct oracle values on the odd coordinates and their
    conjugates, which are not themselves entry symbols.
    """
    mats = ChartMats(point)
    p, q = spec.dims
    worst = 0.0
    for i in range(1, q + 1):
        for j in range(1, p + 1):
            for bar in (False, True):
                deriv = realized_u_odd(spec, mats, i, j, bar=bar)
                elem = ("Yb", i, j) if bar else ("Y", i, j)
                for sym in all_symbols(spec):
                    if sym[0] == "conj":
                        continue  # conj entries are handled via psibar below
                    kind, a, b = _sym_to_kind(spec, sym)
                    lhs = apply_derivation(mats, deriv, kind, a, b)
                    rhs = _eval_poly_at(mats, act_symbol(spec, elem, sym))
                    worst = max(worst, (lhs - rhs).max_abs())
                # conjugated odd coordinates
                for s in range(1, q + 1):
                    for k in range(1, p + 1):
                        lhs = apply_derivation(mats, deriv, "psibar", s, k)
                        if bar and s == i:
                            rhs = mats.xa_conj[j - 1][k - 1]
                        else:
                            rhs = _zero(mats.n)
                        worst = max(worst, (lhs - rhs).max_abs())
    return worst


def compare_u_even_realization(spec, point, pmat, qmat):
    """Residual of the realized even derivation against the matrix action."""
    mats = ChartMats(point)
    size = spec.size
    p, q = spec.dims
    dmat = [[GaussianRational(0)] * size for _ in range(size)]
    for a in range(p):
        for b in range(p):
            dmat[a][b] = _as_gr(pmat[a][b])
    for a in range(q):
        for b in range(q):
            dmat[p + a][p + b] = _as_gr(qmat[a][b])
    deriv = realized_u_even(spec, mats, pmat, qmat)
    worst = 0.0
    for sym in all_symbols(spec):
        if sym[0] == "conj":
            continue
        kind, a, b = _sym_to_kind(spec, sym)
        lhs = apply_derivation(mats, deriv, kind, a, b)
        rhs = _eval_poly_at(mats, matrix_action_u(spec, dmat, sym))
        worst = max(worst, (lhs - rhs).max_abs())
    return worst


def _as_gr(c):
    if isinstance(c, GaussianRational):
        return c
    if isinstance(c, (int, Fraction)):
        return GaussianRational(c)
    raise TypeError("expected an exact coefficient")


# -- divergence form of the realized odd derivation ---------------------------


def s_of_f(spec, mats, i, j, ks, ls):
    """Closed-form action of one x-rotation on the f coefficient family.

    Returns a dict ``(k, l) -> S_(ks,ls)(f^(k,l))`` using the product
    rule over the three factors of f.
    """
    p = spec.even_size
    out = {}
    for k in range(1, p + 1):
        for l in range(1, p + 1):
            c = _zero(mats.n)
            for a in range(1, p + 1):
                for b in range(1, p + 1):
                    d = _dpsi(mats, mats.xa[l - 1][b - 1], i, a)
                    e = mats.ainv_xinv[b - 1][k - 1]
                    # rotation hits (xA)_{j a}
                    if ls == j:
                        c = c + mats.xa[ks - 1][a - 1] * d * e
                    # rotation hits the differentiated factor
                    if ls == l:
                        d2 = _dpsi(mats, mats.xa[ks - 1][b - 1], i, a)
                        c = c + mats.xa[j - 1][a - 1] * d2 * e
                    # rotation hits the inverse factor
                    if ks == k:
                        c = c - mats.xa[j - 1][a - 1] * d * mats.ainv_xinv[b - 1][ls - 1]
            out[(k, l)] = -c
    return out


def divergence_identity_residual(spec, point):
    """Residual of: sum_kl S_kl(f^kl) + sum_k dpsi_ik((xA)_jk) = 0.

    This is the substance of the reordered (divergence) form of the odd
    derivation; together with the y-coefficients being y-free it makes
    the two operator orderings agree.
    """
    mats = ChartMats(point)
    p, q = spec.dims
    worst = 0.0
    for i in range(1, q + 1):
        for j in range(1, p + 1):
            total = _zero(mats.n)
            for k in range(1, p + 1):
                for l in range(1, p + 1):
                    total = total + s_of_f(spec, mats, i, j, k, l)[(k, l)]
            for k in range(1, p + 1):
                total = total + _dpsi(mats, mats.xa[j - 1][k - 1], i, k)
            worst = max(worst, total.max_abs())
    return worst


def compare_divergence_form(spec, point):
    """Operator equality of the two orderings on every chart expression.

    The reordered form puts coefficients to the right of the operators;
    expanding by the product rule and using the closed-form rotation
    actions on the coefficients gives an exactly comparable operator.
    """
    mats = ChartMats(point)
    p, q = spec.dims
    worst = 0.0
    for i in range(1, q + 1):
        for j in range(1, p + 1):
            direct = realized_u_odd(spec, mats, i, j)
            fs = f_coefficients(spec, mats, i, j)
            gs = g_coefficients(spec, mats, i, j)
            sf = {
                (ks, ls): s_of_f(spec, mats, i, j, ks, ls)
                for ks in range(1, p + 1)
                for ls in range(1, p + 1)
            }
            for kind in mats.generator_kinds():
                rows, cols = mats.kind_shape(kind)
                for a in range(1, rows + 1):
                    for b in range(1, cols + 1):
                        u = mats.entry(kind, a, b)
                        lhs = _zero(mats.n)
                        for k in range(1, p + 1):
                            lhs = lhs + _dpsi(
                                mats, mats.xa[j - 1][k - 1] * u, i, k
                            )
                        for (ks, ls), smap in sf.items():
                            su = apply_op(mats, ("S", ks, ls), kind, a, b)
                            lhs = lhs + smap[(ks, ls)] * u + fs[(ks, ls)] * su
                        for (s, t), gv in gs.items():
                            tu = apply_op(mats, ("T", s, t), kind, a, b)
                            lhs = lhs + gv * tu
                        rhs = apply_derivation(mats, direct, kind, a, b)
                        worst = max(worst, (lhs - rhs).max_abs())
    return worst

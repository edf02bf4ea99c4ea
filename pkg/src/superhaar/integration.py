"""Invariant integration on the supergroups.

The fermionic half of the integral is always exact: the integrand is
expanded over the Grassmann generators, multiplied by the family's
density, and the top-blade coefficient is read off in the canonical
generator ordering.  The classical half is resolved in closed form when
possible (constant coefficients, U(1) phase moments) and Haar-sampled
otherwise.

Coefficients in exact mode are ``ClassicalPoly`` values: commutative
polynomials in the entries of the classical pair.  They ride through the
Grassmann pipeline unchanged because they quack like coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iter_product

import numpy as np

from . import _kernels
from .grassmann import (
    GR_ONE,
    GR_ZERO,
    GaussianRational,
    GrassmannElement,
    exp_series,
    inverse_series,
    sqrt_series,
)
from .groups import CHUNK, exact_u1_moment, sample_classical_batch, u
from .supermatrix import (
    det_even,
    gmat_add,
    gmat_identity,
    gmat_mul,
    gmat_sub,
    gmat_trace,
    orthosymplectic_ab,
    unitary_ab,
)
from .symbols import SuperPolynomial


class ExactIntegrationError(ValueError):
    """Exact mode cannot resolve the classical dependence in closed form."""


# ---------------------------------------------------------------------------
# classical coefficient ring

_CONJ_SIDE = {"x": "xc", "xc": "x", "y": "yc", "yc": "y"}


def _cp_lift(v):
    if isinstance(v, ClassicalPoly):
        return v
    if isinstance(v, (int, Fraction)):
        return ClassicalPoly.constant(GaussianRational(v))
    if isinstance(v, GaussianRational):
        return ClassicalPoly.constant(v)
    return None


def _mono_mul(ma, mb):
    if not ma:
        return mb
    if not mb:
        return ma
    powers = dict(ma)
    for sym, e in mb:
        powers[sym] = powers.get(sym, 0) + e
    return tuple(sorted(powers.items()))


class ClassicalPoly:
    """Commutative polynomial in classical matrix entries.

    Symbols are ``(side, i, j)`` with side one of ``x, xc, y, yc`` (the
    ``c`` marks a conjugated entry); coefficients are GaussianRational.
    Monomials are sorted tuples of ``(symbol, exponent)`` pairs.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                if not c.is_zero():
                    clean[mono] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("ClassicalPoly is immutable")

    @classmethod
    def constant(cls, c):
        return cls({(): c if isinstance(c, GaussianRational) else GaussianRational(c)})

    @classmethod
    def symbol(cls, side, i, j):
        return cls({(((side, i, j), 1),): GR_ONE})

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        o = _cp_lift(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for mono, c in o.terms.items():
            s = out.get(mono)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(mono, None)
            else:
                out[mono] = s
        return ClassicalPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ClassicalPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = _cp_lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = _cp_lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = _cp_lift(other)
        if o is None:
            return NotImplemented
        out = {}
        for ma, ca in self.terms.items():
            for mb, cb in o.terms.items():
                m = _mono_mul(ma, mb)
                c = ca * cb
                s = out.get(m)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = s
        return ClassicalPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = _cp_lift(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "ClassicalPoly(0)"
        bits = []
        for mono, c in sorted(self.terms.items()):
            factors = [
                f"{s}{i}{j}" + (f"^{e}" if e > 1 else "")
                for (s, i, j), e in mono
            ]
            bits.append("*".join([repr(c)] + factors) if factors else repr(c))
        return "ClassicalPoly(" + " + ".join(bits) + ")"

    # -- coefficient protocol ------------------------------------------------
    def is_zero(self):
        return not self.terms

    def conjugate(self):
        out = {}
        for mono, c in self.terms.items():
            m = tuple(
                sorted(((_CONJ_SIDE[s], i, j), e) for (s, i, j), e in mono)
            )
            out[m] = c.conjugate()
        return ClassicalPoly(out)

    def max_abs(self):
        return max(
            (abs(c.to_complex()) for c in self.terms.values()), default=0.0
        )

    def constant_value(self):
        """The constant coefficient if no symbol appears at all, else None."""
        if not self.terms:
            return GR_ZERO
        if len(self.terms) == 1 and () in self.terms:
            return self.terms[()]
        return None

    # constant-only; the series code never needs more than this here
    def inverse(self):
        c = self.constant_value()
        if c is None or c.is_zero():
            raise ValueError("only invertible constants invert")
        return ClassicalPoly.constant(GR_ONE / c)

    def sqrt(self):
        c = self.constant_value()
        if c is None:
            raise ValueError("only constant classical polynomials take sqrt")
        return ClassicalPoly.constant(c.sqrt())


def _cp_scale_elem(elem, poly):
    """Grassmann element times a classical polynomial coefficient."""
    return elem.map_coeff(lambda c: poly * c)


# ---------------------------------------------------------------------------
# density and the fermionic unit


@dataclass(frozen=True)
class Density:
    spec: object
    value: GrassmannElement


def density(spec, theta=None):
    """The fermionic weight of the invariant integral.

    For the orthosymplectic-style families this is
    ``det(I - theta_hat theta)^(-1/2)``, an even element with body one;
    the unitary family integrates with weight one.  ``theta`` defaults
    to the generator coordinate matrix, but any odd matrix over the same
    algebra is accepted (which is how translation invariance of the
    weight itself is checked).
    """
    if theta is None:
        theta = spec.odd_coordinates()
    ng = theta[0][0].n
    if spec.family == "u":
        return Density(spec, GrassmannElement.one(ng))
    m = len(theta[0])
    theta_hat, _a, _b = orthosymplectic_ab(theta)
    mat = gmat_sub(gmat_identity(m, ng), gmat_mul(theta_hat, theta))
    return Density(spec, sqrt_series(inverse_series(det_even(mat))))


@lru_cache(maxsize=None)
def berezin_normalizer(spec):
    """Fermionic unit: the raw top mass of exp(tr theta_hat theta).

    The classical factors carry unit-mass Haar measure.  The remaining
    freedom is the scale of the fermionic functional; it is fixed so the
    reference even integrand exp(tr theta_hat theta) has unit integral,
    which is the convention the closed-form values are quoted in.  Both
    the reference mass and any integrand's top coefficient flip together
    under a re-orientation of the top blade, so results do not depend on
    the generator ordering.  For the unitary family the raw coefficient
    is already the right unit.
    """
    if spec.family == "u":
        return GR_ONE
    theta = spec.odd_coordinates()
    theta_hat, _a, _b = orthosymplectic_ab(theta)
    c = exp_series(gmat_trace(gmat_mul(theta_hat, theta)))
    top = c.terms.get((1 << spec.n_grassmann) - 1, GR_ZERO)
    if top.is_zero():
        raise ArithmeticError("degenerate fermionic unit")
    return top


def _top_coefficient(elem):
    return elem.terms.get((1 << elem.n) - 1, GR_ZERO)


# ---------------------------------------------------------------------------
# exact engine


@lru_cache(maxsize=None)
def _symbolic_entries(spec):
    """Chart entries over symbolic classical coordinates, keyed by symbol.

    Values are Grassmann elements whose coefficients are ClassicalPoly.
    """
    ng = spec.n_grassmann
    k = spec.even_size
    theta = spec.odd_coordinates()
    if spec.family == "u":
        mid, a, b = unitary_ab(theta)
        mid = [[e.scale(GaussianRational(0, 1)) for e in row] for row in mid]
    else:
        mid, a, b = orthosymplectic_ab(theta)
    dx, dy = len(a), len(b)
    xs = [[ClassicalPoly.symbol("x", i + 1, j + 1) for j in range(dx)] for i in range(dx)]
    ys = [[ClassicalPoly.symbol("y", i + 1, j + 1) for j in range(dy)] for i in range(dy)]
    zero = GrassmannElement.zero(ng)

    def xrow_times(i, col):
        out = zero
        for t in range(dx):
            out = out + _cp_scale_elem(col[t], xs[i][t])
        return out

    table = {}
    for i in range(dx):
        for j in range(dx):
            table[("X", i + 1, j + 1)] = xrow_times(i, [a[t][j] for t in range(dx)])
    for i in range(dx):
        for j in range(dy):
            # x . mid . y entry, classical factors on both sides
            acc = zero
            for t in range(dx):
                for s in range(dy):
                    acc = acc + _cp_scale_elem(mid[t][s], xs[i][t] * ys[s][j])
            table[("X", i + 1, k + j + 1)] = acc
    for i in range(dy):
        for j in range(dx):
            table[("X", k + i + 1, j + 1)] = theta[i][j].map_coeff(
                lambda c: ClassicalPoly.constant(c)
            )
    for i in range(dy):
        for j in range(dy):
            acc = zero
            for s in range(dy):
                acc = acc + _cp_scale_elem(b[i][s], ys[s][j])
            table[("X", k + i + 1, k + j + 1)] = acc
    if spec.family == "u":
        for (kind, a_, b_), val in list(table.items()):
            table[("conj", a_, b_)] = val.conjugate()
    return table


def _classical_moment(spec, mono):
    """Exact Haar moment of one classical monomial, or raise.

    U(1) factors resolve through phase moments; any dependence on a
    larger factor has no closed form here and is left to sampling.
    """
    (fx, dx), (fy, dy) = spec.classical_factors()
    powers = {"x": {}, "y": {}}
    for (side, i, j), e in mono:
        base = side[0]
        conj = side.endswith("c")
        key = (i, j, conj)
        d = powers[base]
        d[key] = d.get(key, 0) + e
    for (kind, size), pw in (((fx, dx), powers["x"]), ((fy, dy), powers["y"])):
        if not pw:
            continue
        if kind == "unitary" and size == 1:
            if not exact_u1_moment(
                pw.get((1, 1, False), 0), pw.get((1, 1, True), 0)
            ):
                return GR_ZERO
            continue
        raise ExactIntegrationError(
            "integrand depends on a classical factor with no closed-form "
            "moments here; use the sampling mode"
        )
    return GR_ONE


def _resolve_classical(spec, coeff):
    """Average a top coefficient over the classical group, exactly."""
    if isinstance(coeff, (int, Fraction)):
        return GaussianRational(coeff), "exact-berezin-only"
    if isinstance(coeff, GaussianRational):
        return coeff, "exact-berezin-only"
    cv = coeff.constant_value()
    if cv is not None:
        return cv, "exact-berezin-only"
    total = GR_ZERO
    for mono, c in coeff.terms.items():
        total = total + c * _classical_moment(spec, mono)
    return total, "exact-phase"


# ---------------------------------------------------------------------------
# strategies and results


@dataclass(frozen=True)
class HaarStrategy:
    """How the classical average is carried out."""

    mode: str = "exact"  # "exact" or "mc"
    samples: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class IntegralResult:
    estimate: object  # GaussianRational in exact modes, complex otherwise
    stderr: float
    samples: int
    mode: str  # exact-phase | exact-berezin-only | monte-carlo

    def to_complex(self):
        return complex(self.estimate)

    def to_json_dict(self):
        est = complex(self.estimate)
        out = {
            "estimate": {"re": est.real, "im": est.imag},
            "stderr": float(self.stderr),
            "samples": int(self.samples),
            "mode": self.mode,
        }
        if isinstance(self.estimate, GaussianRational):
            out["estimate"]["re_exact"] = str(self.estimate.re)
            out["estimate"]["im_exact"] = str(self.estimate.im)
        return out


def integrate(spec, f, strategy=None):
    """Invariant integral of a polynomial in the matrix entry symbols."""
    if f.spec != spec:
        raise ValueError("integrand alphabet does not match the spec")
    strategy = strategy or HaarStrategy()
    if strategy.mode == "exact":
        return _integrate_exact(spec, f)
    if strategy.mode == "mc":
        return _integrate_mc(spec, f, strategy.samples, strategy.seed)
    raise ValueError(f"unknown integration mode {strategy.mode!r}")


def _integrate_exact(spec, f):
    ng = spec.n_grassmann
    entries = _symbolic_entries(spec)
    one = GrassmannElement.one(ng)
    val = f.evaluate(lambda sym: entries[sym], one)
    dens = density(spec).value
    if spec.family != "u":
        val = val * dens
    total, mode = _resolve_classical(spec, _top_coefficient(val))
    est = total / berezin_normalizer(spec)
    return IntegralResult(est, 0.0, 0, mode)


# ---------------------------------------------------------------------------
# sampling engine


@lru_cache(maxsize=None)
def _dense_chart(spec):
    """Constant Grassmann-dense chart blocks, classical parts factored out."""
    theta = spec.odd_coordinates()
    if spec.family == "u":
        mid, a, b = unitary_ab(theta)
        phase = 1j
    else:
        mid, a, b = orthosymplectic_ab(theta)
        phase = 1.0 + 0j
    return {
        "a": _kernels.gmat_dense(a),
        "mid": phase * _kernels.gmat_dense(mid),
        "b": _kernels.gmat_dense(b),
        "theta": _kernels.gmat_dense(theta),
        "density": _kernels.to_dense(density(spec).value),
    }


def _entry_batch(spec, dense, x, y, sym):
    kind, a, b = sym
    k = spec.even_size
    if a <= k and b <= k:
        v = np.einsum("st,tc->sc", x[:, a - 1, :], dense["a"][:, b - 1, :])
    elif a <= k:
        # x . mid . y, the odd middle factor carrying the blades
        v = np.einsum("st,tlc,sl->sc", x[:, a - 1, :], dense["mid"], y[:, :, b - k - 1])
    elif b <= k:
        v = np.broadcast_to(
            dense["theta"][a - k - 1, b - 1], (x.shape[0],) + dense["theta"].shape[2:]
        )
    else:
        v = np.einsum("lc,sl->sc", dense["b"][a - k - 1, :, :], y[:, :, b - k - 1])
    if kind == "conj":
        v = _kernels.batch_conj(v)
    return np.ascontiguousarray(v, dtype=np.complex128)


def _chunk_values(spec, poly, dense, table, x, y):
    """Per-sample fermionic integrals of poly at a batch of classical points."""
    s = x.shape[0]
    dim = 1 << spec.n_grassmann
    cache = {}

    def entry(sym):
        if sym not in cache:
            cache[sym] = _entry_batch(spec, dense, x, y, sym)
        return cache[sym]

    total = np.zeros((s, dim), dtype=np.complex128)
    for mono, coeff in poly.terms.items():
        acc = None
        for sym, e in mono:
            v = entry(sym)
            for _ in range(e):
                acc = v if acc is None else _kernels.batch_mul(acc, v, table)
        if acc is None:
            total[:, 0] += complex(coeff)
        else:
            total += complex(coeff) * acc
    if spec.family != "u":
        dens = np.ascontiguousarray(
            np.broadcast_to(dense["density"], (s, dim))
        )
        total = _kernels.batch_mul(total, dens, table)
    return total[:, -1]


def mc_sample_values(spec, f, samples, seed):
    """Per-sample values whose mean estimates the integral.

    Chunked deterministically by seed, so two calls sharing a seed share
    their classical randomness sample for sample (common random numbers).
    """
    if f.spec != spec:
        raise ValueError("integrand alphabet does not match the spec")
    dense = _dense_chart(spec)
    table = _kernels.pair_table(spec.n_grassmann)
    unit = complex(berezin_normalizer(spec).to_complex())
    out = np.empty(samples, dtype=np.complex128)
    done = 0
    chunk = 0
    while done < samples:
        take = min(CHUNK, samples - done)
        x, y = sample_classical_batch(spec, seed, take, chunk_start=chunk)
        out[done : done + take] = _chunk_values(spec, f, dense, table, x, y)
        done += take
        chunk += 1
    return out / unit


def _integrate_mc(spec, f, samples, seed):
    vals = mc_sample_values(spec, f, samples, seed)
    est = complex(vals.mean())
    if samples > 1:
        var = vals.real.var(ddof=1) + vals.imag.var(ddof=1)
        stderr = math.sqrt(var / samples)
    else:
        stderr = float("inf")
    return IntegralResult(est, stderr, samples, "monte-carlo")


# ---------------------------------------------------------------------------
# the U(1|1) table and its closed form


def u11_closed_formula(alpha, beta):
    """Closed-form monomial integral on U(1|1), as published.

    ``alpha``/``beta`` are exponent 4-tuples for the plain and adjoint
    entries in row-major order (11, 12, 21, 22).
    """
    a11, a12, a21, a22 = alpha
    b11, b12, b21, b22 = beta
    total = 0
    if a12 + a21 + b12 + b21 == 0 and a11 == b11 and a22 == b22:
        total += 2 * (a11 - a22)
    if (
        a12 + b12 == 1
        and a21 + b21 == 1
        and a11 + a12 == b11 + b21
        and a12 + a22 == b21 + b22
    ):
        total += 2 * (-1) ** (a21 * b12)
    return GaussianRational(total)


_ENTRY_ORDER = ((1, 1), (1, 2), (2, 1), (2, 2))


def u11_monomial(spec, alpha, beta):
    """X^alpha Xs^beta as a polynomial, factors in the table's order."""
    out = SuperPolynomial.one(spec)
    for (a, b), e in zip(_ENTRY_ORDER, alpha):
        f = SuperPolynomial.from_symbol(spec, ("X", a, b))
        for _ in range(e):
            out = out * f
    for (a, b), e in zip(_ENTRY_ORDER, beta):
        odd = (spec.parity(a) + spec.parity(b)) % 2
        phase = GaussianRational(0, 1) if odd else GR_ONE
        f = SuperPolynomial.from_symbol(spec, ("conj", b, a), phase)
        for _ in range(e):
            out = out * f
    return out


def u11_table(max_even=2, max_odd=1):
    """Every bounded-exponent monomial integral on U(1|1), with the
    closed-form prediction and a match flag per cell."""
    spec = u(1, 1)
    evens = range(max_even + 1)
    odds = range(max_odd + 1)
    tuples = list(iter_product(evens, odds, odds, evens))
    rows = []
    for alpha in tuples:
        for beta in tuples:
            res = _integrate_exact(spec, u11_monomial(spec, alpha, beta))
            pred = u11_closed_formula(alpha, beta)
            rows.append(
                {
                    "alpha": alpha,
                    "beta": beta,
                    "computed": res.estimate,
                    "predicted": pred,
                    "match": res.estimate == pred,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# density differential identities


def _gmat_inverse(mat):
    # geometric series on the nilpotent part; body must be the identity
    size = len(mat)
    ng = mat[0][0].n
    ident = gmat_identity(size, ng)
    z = gmat_sub(ident, mat)
    out = ident
    power = ident
    while True:
        power = gmat_mul(power, z)
        if all(e.is_zero() for row in power for e in row):
            return out
        out = gmat_add(out, power)


def verify_density_pde(spec, corrupt=False):
    """Exact checks of the two differential identities pinning the density.

    First identity: the generator derivative of det(I - theta_hat theta)
    equals 2 ((I - theta_hat theta)^{-1} theta_hat)_{ji} times the
    determinant.  Second: A^2 contracted with the density's derivatives
    reproduces -theta_hat times the density, entry by entry.  With
    ``corrupt=True`` the density is deliberately perturbed first, as a
    negative control.
    """
    if spec.family == "u":
        raise ValueError("the density identities live on the osp-style charts")
    m, n = spec.dims
    ng = spec.n_grassmann
    theta = spec.odd_coordinates()
    theta_hat, _a, _b = orthosymplectic_ab(theta)
    asq = gmat_sub(gmat_identity(m, ng), gmat_mul(theta_hat, theta))
    det = det_even(asq)
    inv = _gmat_inverse(asq)
    inv_hat = gmat_mul(inv, theta_hat)
    f = sqrt_series(inverse_series(det))
    if corrupt:
        f = f + gmat_trace(gmat_mul(theta_hat, theta)).scale(Fraction(1, 3))

    det_ok = True
    for i in range(1, 2 * n + 1):
        for j in range(1, m + 1):
            lhs = det.partial(spec.theta_index(i, j))
            rhs = (inv_hat[j - 1][i - 1] * det).scale(2)
            if not (lhs - rhs).is_zero():
                det_ok = False

    inv_ok = True
    for l in range(1, m + 1):
        for j in range(1, 2 * n + 1):
            lhs = GrassmannElement.zero(ng)
            for t in range(1, m + 1):
                lhs = lhs + asq[l - 1][t - 1] * f.partial(spec.theta_index(j, t))
            rhs = -(theta_hat[l - 1][j - 1] * f)
            if not (lhs - rhs).is_zero():
                inv_ok = False

    closed_ok = None
    if n == 1:
        closed = GrassmannElement.one(ng)
        for j in range(1, m + 1):
            closed = closed + GrassmannElement.generator(
                ng, spec.theta_index(1, j)
            ) * GrassmannElement.generator(ng, spec.theta_index(2, j))
        closed_ok = (f - closed).is_zero()

    return {
        "det_derivative": det_ok,
        "inverse_equation": inv_ok,
        "closed_form_n1": closed_ok,
        "pass": det_ok and inv_ok and closed_ok in (None, True),
    }


def density_equation_nullity(spec):
    """Dimension of the solution space of the density's linear system.

    Treats the second identity as a linear system on all blade
    coefficients and computes the exact nullity; the density is pinned
    up to scale exactly when this is one.
    """
    m, n = spec.dims
    ng = spec.n_grassmann
    dim = 1 << ng
    theta = spec.odd_coordinates()
    theta_hat, _a, _b = orthosymplectic_ab(theta)
    asq = gmat_sub(gmat_identity(m, ng), gmat_mul(theta_hat, theta))

    rows = []
    for l in range(1, m + 1):
        for j in range(1, 2 * n + 1):
            columns = []
            for mask in range(dim):
                e = GrassmannElement(ng, {mask: GR_ONE})
                img = theta_hat[l - 1][j - 1] * e
                for t in range(1, m + 1):
                    img = img + asq[l - 1][t - 1] * e.partial(
                        spec.theta_index(j, t)
                    )
                columns.append(img)
            for out_mask in range(dim):
                rows.append(
                    [c.terms.get(out_mask, GR_ZERO) for c in columns]
                )
    return dim - exact_rank(rows)


def exact_rank(rows):
    """Rank of a matrix of GaussianRationals, by exact elimination."""
    mat = [list(r) for r in rows if any(not c.is_zero() for c in r)]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(mat)):
            if not mat[r][col].is_zero():
                piv = r
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pivval = mat[rank][col]
        for r in range(len(mat)):
            if r != rank and not mat[r][col].is_zero():
                factor = mat[r][col] / pivval
                mat[r] = [
                    x - factor * y for x, y in zip(mat[r], mat[rank])
                ]
        rank += 1
        if rank == len(mat):
            break
    return rank


# ---------------------------------------------------------------------------
# invariance checks


def _odd_basis_actions(spec):
    from .superalgebra import basis, derivation_action, element_parity

    out = []
    for elem in basis(spec):
        if element_parity(spec, elem) == 1:
            action, par = derivation_action(spec, elem)
            out.append((elem, action, par))
    return out


def verify_odd_annihilation_exact(spec, max_degree=3):
    """integrate(D f) == 0 exactly, for every odd invariant derivation D
    and every monomial f up to the degree bound.  Exact mode only."""
    from .superalgebra import act_on_polynomial, all_symbols

    syms = all_symbols(spec)
    checked = 0
    failures = []
    for elem, action, par in _odd_basis_actions(spec):
        for deg in range(max_degree + 1):
            for seq in iter_product(syms, repeat=deg):
                f = SuperPolynomial.from_product(spec, seq)
                df = act_on_polynomial(spec, action, par, f)
                res = _integrate_exact(spec, df)
                checked += 1
                if not res.estimate.is_zero():
                    failures.append((elem, seq, res.estimate))
    return {"checked": checked, "failures": failures, "pass": not failures}


# exactly unimodular rational phases, for exact translation checks
_EXACT_PHASES = (
    GaussianRational(Fraction(3, 5), Fraction(4, 5)),
    GaussianRational(Fraction(5, 13), Fraction(12, 13)),
    GaussianRational(Fraction(-8, 17), Fraction(15, 17)),
)


def verify_translation_exact(spec, max_degree=2):
    """Exact left-translation invariance at rational unimodular classical
    points, monomial by monomial (the classically resolvable specs)."""
    from .superalgebra import all_symbols

    gx = [[_EXACT_PHASES[0]]]
    gy = [[_EXACT_PHASES[1]]]
    syms = all_symbols(spec)
    checked = 0
    failures = []
    for deg in range(max_degree + 1):
        for seq in iter_product(syms, repeat=deg):
            f = SuperPolynomial.from_product(spec, seq)
            lhs = _integrate_exact(spec, f.substitute_left(gx, gy)).estimate
            rhs = _integrate_exact(spec, f).estimate
            checked += 1
            if lhs != rhs:
                failures.append((seq, lhs, rhs))
    return {"checked": checked, "failures": failures, "pass": not failures}


def verify_invariance_mc(spec, strategy, n_polys=20, max_degree=2):
    """Sampling check that odd derivations integrate to zero.

    Every check pairs one random polynomial with every odd basis
    derivation; a check passes when |estimate| <= 3 stderr.
    """
    from .symbols import random_polynomial
    from .superalgebra import act_on_polynomial

    rng = np.random.default_rng(strategy.seed)
    actions = _odd_basis_actions(spec)
    checks = []
    for _ in range(n_polys):
        f = random_polynomial(spec, rng, max_degree)
        for elem, action, par in actions:
            df = act_on_polynomial(spec, action, par, f)
            res = _integrate_mc(spec, df, strategy.samples, strategy.seed)
            checks.append(
                {
                    "derivation": elem,
                    "estimate": abs(res.estimate),
                    "stderr": res.stderr,
                    "pass": abs(res.estimate) <= 3 * res.stderr,
                }
            )
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}


def verify_translation_mc(spec, strategy, n_polys=10, max_degree=2):
    """Left-translation invariance under sampling, with common random
    numbers: both integrals share every classical sample, so the
    per-sample difference estimates the deviation directly."""
    from .symbols import random_polynomial
    from .groups import sample

    rng = np.random.default_rng(strategy.seed + 1)
    g = sample(spec, seed=strategy.seed ^ 0x5EED, count=1)[0]
    gx = [list(row) for row in np.asarray(g.x)]
    gy = [list(row) for row in np.asarray(g.y)]
    checks = []
    for _ in range(n_polys):
        f = random_polynomial(spec, rng, max_degree)
        lf = f.substitute_left(gx, gy)
        va = mc_sample_values(spec, lf, strategy.samples, strategy.seed)
        vb = mc_sample_values(spec, f, strategy.samples, strategy.seed)
        d = va - vb
        est = complex(d.mean())
        var = d.real.var(ddof=1) + d.imag.var(ddof=1)
        stderr = math.sqrt(var / strategy.samples)
        ok = abs(est) <= 3 * stderr or abs(est) < 1e-12
        checks.append({"estimate": abs(est), "stderr": stderr, "pass": ok})
    return {"checks": checks, "pass": all(c["pass"] for c in checks)}


# ---------------------------------------------------------------------------
# the bilinear pairing at desk scale


def gram_basis(spec, max_degree=1):
    """Monomial basis up to the degree bound: 1, entries, adjoint entries.

    Even entries come first inside each group.  Only degree <= 1 plus
    the empty monomial is needed at desk scale.
    """
    if max_degree > 1:
        raise NotImplementedError("desk-scale pairing stops at degree one")
    size = spec.size
    cells = sorted(
        ((a, b) for a in range(1, size + 1) for b in range(1, size + 1)),
        key=lambda ab: ((spec.parity(ab[0]) + spec.parity(ab[1])) % 2, ab),
    )
    basis = [("one",)]
    if max_degree >= 1:
        basis += [("X", a, b) for a, b in cells]
        if spec.family == "u":
            basis += [("Xs", a, b) for a, b in cells]
    return basis


def _basis_poly(spec, label):
    if label == ("one",):
        return SuperPolynomial.one(spec)
    kind, a, b = label
    if kind == "X":
        return SuperPolynomial.from_symbol(spec, ("X", a, b))
    odd = (spec.parity(a) + spec.parity(b)) % 2
    phase = GaussianRational(0, 1) if odd else GR_ONE
    return SuperPolynomial.from_symbol(spec, ("conj", b, a), phase)


def gram_matrix(spec, max_degree=1):
    """The pairing (f, g) = integral of f g over the monomial basis."""
    labels = gram_basis(spec, max_degree)
    polys = [_basis_poly(spec, lab) for lab in labels]
    rows = []
    for fu in polys:
        rows.append(
            [_integrate_exact(spec, fu * fv).estimate for fv in polys]
        )
    return labels, rows


def _formula_gram_entry(spec, lu, lv):
    """Closed-formula value of the pairing of two U(1|1) basis monomials."""
    factors = [lab for lab in (lu, lv) if lab != ("one",)]

    def sort_key(lab):
        kind, a, b = lab
        return (kind == "Xs", a, b)

    def is_odd(lab):
        _, a, b = lab
        return (spec.parity(a) + spec.parity(b)) % 2 == 1

    sign = 1
    if len(factors) == 2 and sort_key(factors[0]) > sort_key(factors[1]):
        if is_odd(factors[0]) and is_odd(factors[1]):
            sign = -1
        factors.reverse()
    alpha = [0, 0, 0, 0]
    beta = [0, 0, 0, 0]
    pos = {cell: i for i, cell in enumerate(_ENTRY_ORDER)}
    for kind, a, b in factors:
        (alpha if kind == "X" else beta)[pos[(a, b)]] += 1
    return u11_closed_formula(tuple(alpha), tuple(beta)) * GaussianRational(sign)


def u11_gram_ranks(max_degree=1):
    """(computed rank, closed-formula rank) of the U(1|1) Gram matrix."""
    spec = u(1, 1)
    labels, mine = gram_matrix(spec, max_degree)
    formula = [
        [_formula_gram_entry(spec, lu, lv) for lv in labels] for lu in labels
    ]
    return exact_rank(mine), exact_rank(formula)

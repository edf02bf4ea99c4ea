"""Polynomials in matrix-entry symbols.

A symbol names one entry of the defining supermatrix: ``("X", a, b)`` for
the entry itself or ``("conj", a, b)`` for its conjugate (the unitary
family only; the orthosymplectic alphabet is real).  A symbol's parity is
the entry's, ``(p_a + p_b) mod 2``, and odd symbols square to zero.

Monomials are kept in a canonical sorted order with the Koszul sign
tracked explicitly, so polynomials compare exactly.  Evaluation is
generic in the target algebra: anything with ``+``, ``*`` and
``scale(coefficient)`` works (sparse Grassmann elements, the exact
phase-tracking ring, batched Monte-Carlo arrays).
"""

from __future__ import annotations

import re
from fractions import Fraction

from .grassmann import GaussianRational

KINDS = ("X", "conj")


def make_symbol(kind, a, b):
    if kind not in KINDS:
        raise ValueError(f"unknown symbol kind {kind!r}")
    return (kind, int(a), int(b))


def symbol_parity(spec, sym):
    _, a, b = sym
    return (spec.parity(a) + spec.parity(b)) % 2


def symbol_in_alphabet(spec, sym):
    kind, a, b = sym
    if not (1 <= a <= spec.size and 1 <= b <= spec.size):
        return False
    if kind == "conj" and spec.family != "u":
        return False
    return kind in KINDS


def normalize(spec, seq):
    """Canonical form of a product of symbols.

    Returns ``(sign, monomial)`` where the monomial is a tuple of
    ``(symbol, exponent)`` pairs in symbol order, or ``(0, ())`` when an
    odd symbol repeats.  The sign counts odd-odd transpositions.
    """
    arr = list(seq)
    parities = [symbol_parity(spec, s) for s in arr]
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j] < arr[j - 1]:
            if parities[j] and parities[j - 1]:
                sign = -sign
            arr[j], arr[j - 1] = arr[j - 1], arr[j]
            parities[j], parities[j - 1] = parities[j - 1], parities[j]
            j -= 1
    mono = []
    for s, p in zip(arr, parities):
        if mono and mono[-1][0] == s:
            if p:
                return 0, ()
            mono[-1][1] += 1
        else:
            mono.append([s, 1])
    return sign, tuple((s, e) for s, e in mono)


def monomial_degree(mono):
    return sum(e for _, e in mono)


def monomial_parity(spec, mono):
    return sum(symbol_parity(spec, s) * e for s, e in mono) % 2


def _flat(mono):
    out = []
    for s, e in mono:
        out.extend([s] * e)
    return out


class SuperPolynomial:
    """Finite sum of canonical monomials with exact or complex coefficients."""

    __slots__ = ("spec", "terms")

    def __init__(self, spec, terms=None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                if isinstance(c, (int, Fraction)):
                    c = GaussianRational(c)
                if _czero(c):
                    continue
                clean[mono] = clean.get(mono, 0) + c if mono in clean else c
                if _czero(clean[mono]):
                    del clean[mono]
        self.spec = spec
        self.terms = clean

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, spec):
        return cls(spec, {})

    @classmethod
    def scalar(cls, spec, c):
        return cls(spec, {(): c})

    @classmethod
    def one(cls, spec):
        return cls(spec, {(): GaussianRational(1)})

    @classmethod
    def from_symbol(cls, spec, sym, coeff=1):
        if not symbol_in_alphabet(spec, sym):
            raise ValueError(f"symbol {sym} not in the alphabet of {spec}")
        return cls(spec, {((sym, 1),): coeff})

    @classmethod
    def from_product(cls, spec, seq, coeff=1):
        sign, mono = normalize(spec, seq)
        if sign == 0:
            return cls.zero(spec)
        if isinstance(coeff, (int, Fraction)):
            coeff = GaussianRational(coeff)
        return cls(spec, {mono: coeff if sign > 0 else -coeff})

    # -- arithmetic ---------------------------------------------------------
    def _same(self, other):
        if self.spec != other.spec:
            raise ValueError("mixing polynomials over different specs")

    def __add__(self, other):
        if not isinstance(other, SuperPolynomial):
            other = SuperPolynomial.scalar(self.spec, other)
        self._same(other)
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            s = terms.get(mono)
            c = c if s is None else s + c
            if _czero(c):
                terms.pop(mono, None)
            else:
                terms[mono] = c
        out = SuperPolynomial.__new__(SuperPolynomial)
        out.spec, out.terms = self.spec, terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = SuperPolynomial.__new__(SuperPolynomial)
        out.spec = self.spec
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if not isinstance(other, SuperPolynomial):
            other = SuperPolynomial.scalar(self.spec, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, SuperPolynomial):
            return self.scale(other)
        self._same(other)
        out = SuperPolynomial.zero(self.spec)
        for m1, c1 in self.terms.items():
            f1 = _flat(m1)
            for m2, c2 in other.terms.items():
                sign, mono = normalize(self.spec, f1 + _flat(m2))
                if sign == 0:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                out = out + SuperPolynomial(self.spec, {mono: c})
        return out

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c):
        if isinstance(c, (int, Fraction)):
            c = GaussianRational(c)
        if _czero(c):
            return SuperPolynomial.zero(self.spec)
        out = SuperPolynomial.__new__(SuperPolynomial)
        out.spec = self.spec
        out.terms = {m: x * c for m, x in self.terms.items()}
        return out

    def __eq__(self, other):
        if not isinstance(other, SuperPolynomial):
            return NotImplemented
        return self.spec == other.spec and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mono in sorted(self.terms, key=lambda m: (monomial_degree(m), m)):
            c = self.terms[mono]
            label = "*".join(
                f"{k}[{a},{b}]" + (f"^{e}" if e > 1 else "")
                for (k, a, b), e in mono
            )
            bits.append(f"({c!r})" + (f"*{label}" if label else ""))
        return " + ".join(bits)

    # -- structure -----------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((monomial_degree(m) for m in self.terms), default=0)

    def symbols(self):
        return {s for m in self.terms for s, _ in m}

    def map_coeff(self, fn):
        return SuperPolynomial(self.spec, {m: fn(c) for m, c in self.terms.items()})

    def conjugate(self):
        """Swap X <-> conj symbols and conjugate coefficients (u family)."""
        if self.spec.family != "u":
            raise ValueError("conjugate() needs the conj alphabet (u family)")
        swap = {"X": "conj", "conj": "X"}
        out = SuperPolynomial.zero(self.spec)
        for mono, c in self.terms.items():
            seq = [(swap[k], a, b) for (k, a, b), e in mono for _ in range(e)]
            out = out + SuperPolynomial.from_product(
                self.spec, seq, c.conjugate()
            )
        return out

    def substitute_left(self, gx, gy):
        """Replace each symbol entry (a, b) by sum_c G[a, c] entry (c, b).

        ``G = blockdiag(gx, gy)`` with numeric (or exact) entries; conj
        symbols transform with the conjugated coefficients.  This is how
        an integrand composes with a left translation.
        """
        spec = self.spec
        k = spec.even_size
        size = spec.size

        def g_entry(a, c):
            # 1-based indices into the block-diagonal matrix
            if a <= k and c <= k:
                return gx[a - 1][c - 1]
            if a > k and c > k:
                return gy[a - k - 1][c - k - 1]
            return None

        out = SuperPolynomial.zero(spec)
        for mono, coeff in self.terms.items():
            expanded = [SuperPolynomial.scalar(spec, coeff)]
            for (kind, a, b), e in mono:
                for _ in range(e):
                    acc = SuperPolynomial.zero(spec)
                    for c in range(1, size + 1):
                        g = g_entry(a, c)
                        if g is None:
                            continue
                        gval = _as_coeff(g)
                        if kind == "conj":
                            gval = gval.conjugate()
                        if _czero(gval):
                            continue
                        acc = acc + SuperPolynomial.from_symbol(
                            spec, (kind, c, b), gval
                        )
                    expanded.append(acc)
            prod = expanded[0]
            for f in expanded[1:]:
                prod = prod * f
            out = out + prod
        return out

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, entry, one):
        """Evaluate with ``entry(symbol) -> value`` in any target algebra.

        ``one`` is the target's multiplicative unit; factors multiply in
        canonical monomial order.
        """
        total = None
        for mono, coeff in self.terms.items():
            v = one.scale(coeff)
            for sym, e in mono:
                ev = entry(sym)
                for _ in range(e):
                    v = v * ev
            total = v if total is None else total + v
        if total is None:
            return one.scale(0)
        return total


def _czero(c):
    if isinstance(c, complex):
        return c == 0
    if isinstance(c, (int, Fraction)):
        return c == 0
    return c.is_zero() if hasattr(c, "is_zero") else c == 0


def _as_coeff(g):
    if isinstance(g, GaussianRational):
        return g
    if isinstance(g, (int, Fraction)):
        return GaussianRational(g)
    return complex(g)


# ---------------------------------------------------------------------------
# parsing

_FACTOR_RE = re.compile(
    r"\s*(X|Xs)\s*\[\s*(\d+)\s*,\s*(\d+)\s*\]\s*(?:\^\s*(\d+))?\s*"
)


def parse_monomial(spec, text):
    """Parse a product like ``"X[1,1]^2 * Xs[2,1]"`` into a polynomial.

    ``X[a,b]`` is the matrix entry; ``Xs[a,b]`` is the graded-adjoint
    entry, which expands to ``i^(p_a + p_b) conj[b, a]`` and needs the
    unitary alphabet.  Factors multiply left to right.
    """
    out = SuperPolynomial.one(spec)
    pos = 0
    first = True
    while pos < len(text):
        if not first:
            nxt = text[pos:].lstrip()
            if not nxt:
                break
            if not nxt.startswith("*"):
                raise ValueError(f"expected '*' at ...{text[pos:]!r}")
            pos = len(text) - len(nxt) + 1
        m = _FACTOR_RE.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse factor at ...{text[pos:]!r}")
        name, a, b, e = m.group(1), int(m.group(2)), int(m.group(3)), m.group(4)
        e = int(e) if e else 1
        if not (1 <= a <= spec.size and 1 <= b <= spec.size):
            raise ValueError(f"entry index ({a},{b}) outside 1..{spec.size}")
        if name == "X":
            factor = SuperPolynomial.from_symbol(spec, ("X", a, b))
        else:
            if spec.family != "u":
                raise ValueError(
                    "Xs entries need the unitary family's conjugated alphabet"
                )
            odd = (spec.parity(a) + spec.parity(b)) % 2
            phase = GaussianRational(0, 1) if odd else GaussianRational(1)
            factor = SuperPolynomial.from_symbol(spec, ("conj", b, a), phase)
        for _ in range(e):
            out = out * factor
        pos = m.end()
        first = False
    return out


def random_polynomial(spec, rng, max_degree, n_terms=4, exact=True):
    """Random polynomial in the spec's alphabet, for invariance testing."""
    kinds = ["X"] if spec.family != "u" else ["X", "conj"]
    size = spec.size
    out = SuperPolynomial.zero(spec)
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        seq = []
        for _ in range(deg):
            kind = kinds[int(rng.integers(0, len(kinds)))]
            a = int(rng.integers(1, size + 1))
            b = int(rng.integers(1, size + 1))
            seq.append((kind, a, b))
        num = int(rng.integers(-4, 5))
        den = int(rng.integers(1, 4))
        if num == 0:
            num = 1
        coeff = (
            GaussianRational(Fraction(num, den))
            if exact
            else complex(num / den)
        )
        out = out + SuperPolynomial.from_product(spec, seq, coeff)
    return out

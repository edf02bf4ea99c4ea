"""Finitely generated Grassmann algebras with exact or floating coefficients.

An element of the algebra with ``n`` anticommuting generators is stored
sparsely as a map from blades to coefficients.  A blade is an integer
bitmask: bit ``i - 1`` set means generator ``i`` is present, and the blade
denotes the product of its generators in increasing index order.

Two coefficient rings are supported side by side:

* :class:`GaussianRational` -- exact complex rationals, the default for
  identity verification.  No float ever gets converted to a rational.
* ``complex`` -- double precision, used on the Monte-Carlo path.

Any other object implementing ``+``, ``*``, unary ``-``, ``== 0`` style
zero testing and ``conjugate()`` also works as a coefficient (the
integration layer uses a small commutative polynomial ring this way).
"""

from __future__ import annotations

import math
from fractions import Fraction

MAX_GENERATORS = 24

_FloatTypes = (float, complex)


class GaussianRational:
    """Exact complex number ``re + im*i`` with ``Fraction`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    # -- ring operations -------------------------------------------------
    # Mixing with float/complex demotes to complex, like Fraction does.
    def _coerce(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, _FloatTypes):
                return self.to_complex() + other
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, _FloatTypes):
                return self.to_complex() - other
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, _FloatTypes):
                return other - self.to_complex()
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, _FloatTypes):
                return self.to_complex() * other
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, _FloatTypes):
                return self.to_complex() / other
            return NotImplemented
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero GaussianRational")
        return GaussianRational(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def to_complex(self):
        return complex(self.re) + 1j * complex(self.im)

    __complex__ = to_complex

    def sqrt(self):
        """Exact square root of a nonnegative real rational.

        Raises if the value is not real-nonnegative or not a perfect
        square of a rational; callers needing general roots must use the
        float ring.
        """
        if self.im != 0 or self.re < 0:
            raise ValueError("exact sqrt needs a nonnegative real rational")
        num, den = self.re.numerator, self.re.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn != num or rd * rd != den:
            raise ValueError(f"{self.re} has no rational square root")
        return GaussianRational(Fraction(rn, rd))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


GR_ZERO = GaussianRational(0)
GR_ONE = GaussianRational(1)
GR_I = GaussianRational(0, 1)


def _coeff_coerce(c):
    """Normalize plain Python numbers into one of the two rings."""
    if isinstance(c, (int, Fraction)):
        return GaussianRational(c)
    if isinstance(c, float):
        return complex(c)
    return c


def _coeff_is_zero(c):
    if isinstance(c, GaussianRational):
        return c.is_zero()
    if isinstance(c, complex):
        return c == 0
    z = getattr(c, "is_zero", None)
    return z() if z is not None else c == 0


def _coeff_conj(c):
    return c.conjugate()


def _coeff_scale(c, q):
    """Multiply a coefficient by an exact rational ``q``."""
    if isinstance(c, complex):
        return float(q) * c
    return c * q


def _coeff_abs(c):
    if isinstance(c, GaussianRational):
        return abs(c.to_complex())
    if isinstance(c, complex):
        return abs(c)
    return c.max_abs() if hasattr(c, "max_abs") else abs(complex(c))


def merge_sign(a: int, b: int) -> int:
    """Koszul sign for concatenating disjoint blades ``a`` then ``b``.

    Counts the transpositions needed to interleave the two ascending
    generator lists, i.e. pairs ``(i in a, j in b)`` with ``i > j``.
    """
    swaps = 0
    a >>= 1
    while a:
        swaps += (a & b).bit_count()
        a >>= 1
    return -1 if swaps & 1 else 1


class GrassmannElement:
    """Immutable sparse element of the Grassmann algebra on ``n`` generators."""

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n: int, terms=None):
        if not 0 <= n <= MAX_GENERATORS:
            raise ValueError(
                f"generator count {n} outside supported range 0..{MAX_GENERATORS}"
            )
        clean = {}
        if terms:
            top = 1 << n
            for blade, c in terms.items():
                if not 0 <= blade < top:
                    raise ValueError(f"blade {blade:#x} out of range for n={n}")
                c = _coeff_coerce(c)
                if blade in clean:
                    c = clean[blade] + c
                if _coeff_is_zero(c):
                    clean.pop(blade, None)
                else:
                    clean[blade] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("GrassmannElement is immutable")

    # -- constructors ----------------------------------------------------
    @classmethod
    def zero(cls, n: int):
        return cls(n, {})

    @classmethod
    def scalar(cls, n: int, c):
        return cls(n, {0: c})

    @classmethod
    def one(cls, n: int):
        return cls(n, {0: GR_ONE})

    @classmethod
    def generator(cls, n: int, i: int):
        if not 1 <= i <= n:
            raise ValueError(f"generator index {i} outside 1..{n}")
        return cls(n, {1 << (i - 1): GR_ONE})

    # -- arithmetic ------------------------------------------------------
    def _check_same(self, other):
        if self.n != other.n:
            raise ValueError("mixing algebras of different generator counts")

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.n, other)
        self._check_same(other)
        terms = dict(self.terms)
        for blade, c in other.terms.items():
            s = terms.get(blade)
            c = c if s is None else s + c
            if _coeff_is_zero(c):
                terms.pop(blade, None)
            else:
                terms[blade] = c
        out = GrassmannElement.__new__(GrassmannElement)
        object.__setattr__(out, "n", self.n)
        object.__setattr__(out, "terms", terms)
        object.__setattr__(out, "_hash", None)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = GrassmannElement.__new__(GrassmannElement)
        object.__setattr__(out, "n", self.n)
        object.__setattr__(out, "terms", {b: -c for b, c in self.terms.items()})
        object.__setattr__(out, "_hash", None)
        return out

    def __sub__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.n, other)
        return self + (-other)

    def __rsub__(self, other):
        return GrassmannElement.scalar(self.n, other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, GrassmannElement):
            return self.scale(other)
        self._check_same(other)
        acc = {}
        for ba, ca in self.terms.items():
            for bb, cb in other.terms.items():
                if ba & bb:
                    continue
                c = ca * cb
                if merge_sign(ba, bb) < 0:
                    c = -c
                blade = ba | bb
                s = acc.get(blade)
                c = c if s is None else s + c
                if _coeff_is_zero(c):
                    acc.pop(blade, None)
                else:
                    acc[blade] = c
        out = GrassmannElement.__new__(GrassmannElement)
        object.__setattr__(out, "n", self.n)
        object.__setattr__(out, "terms", acc)
        object.__setattr__(out, "_hash", None)
        return out

    def __rmul__(self, other):
        # scalars commute with everything
        return self.scale(other)

    def scale(self, c):
        c = _coeff_coerce(c)
        if _coeff_is_zero(c):
            return GrassmannElement.zero(self.n)
        return GrassmannElement(self.n, {b: x * c for b, x in self.terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers need nilpotent_series(..., 'inverse')")
        out = GrassmannElement.one(self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return self.n == other.n and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.n, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for blade in sorted(self.terms):
            gens = "".join(f"g{i + 1}" for i in range(self.n) if blade >> i & 1)
            bits.append(f"({self.terms[blade]!r})" + (f"*{gens}" if gens else ""))
        return " + ".join(bits)

    # -- structure -------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def body(self):
        """Scalar (degree-0) part."""
        return self.terms.get(0, GR_ZERO)

    def soul(self):
        return GrassmannElement(
            self.n, {b: c for b, c in self.terms.items() if b != 0}
        )

    def degree(self):
        """Highest blade cardinality present (0 for the zero element)."""
        return max((b.bit_count() for b in self.terms), default=0)

    def parity(self):
        """'even', 'odd' or 'mixed' according to blade cardinalities."""
        par = {b.bit_count() & 1 for b in self.terms}
        if len(par) > 1:
            return "mixed"
        if not par or par == {0}:
            return "even"
        return "odd"

    def is_even(self):
        return all(b.bit_count() % 2 == 0 for b in self.terms)

    def is_odd(self):
        return bool(self.terms) and all(b.bit_count() % 2 == 1 for b in self.terms)

    def max_abs(self):
        """Largest coefficient magnitude, as a float."""
        return max((_coeff_abs(c) for c in self.terms.values()), default=0.0)

    def map_coeff(self, fn):
        return GrassmannElement(self.n, {b: fn(c) for b, c in self.terms.items()})

    def to_float(self):
        """Convert exact coefficients to complex doubles (total, lossy)."""
        return self.map_coeff(
            lambda c: c if isinstance(c, complex) else c.to_complex()
        )

    # -- calculus --------------------------------------------------------
    def partial(self, i: int):
        """Left derivative with respect to generator ``i``.

        Deletes the generator from each blade containing it, with sign
        ``(-1)**k`` where ``k`` generators of lower index precede it.
        """
        if not 1 <= i <= self.n:
            raise ValueError(f"generator index {i} outside 1..{self.n}")
        bit = 1 << (i - 1)
        below = bit - 1
        terms = {}
        for blade, c in self.terms.items():
            if not blade & bit:
                continue
            if (blade & below).bit_count() & 1:
                c = -c
            terms[blade ^ bit] = c
        return GrassmannElement(self.n, terms)

    def conjugate(self):
        """First-kind conjugation: generators fixed, coefficients conjugated."""
        return self.map_coeff(_coeff_conj)

    def conjugate_second_kind(self, pairs):
        """Conjugation swapping paired generators.

        ``pairs`` is an iterable of ``(a, b)``: generator ``a`` maps to
        ``b`` and ``b`` maps to ``-a``, so applying twice negates both.
        The map is multiplicative without order reversal, coefficients are
        conjugated, and products of a generator with its image are real.
        """
        image = {}
        for a, b in pairs:
            if a in image or b in image:
                raise ValueError("generator appears in more than one pair")
            image[a] = (b, 1)
            image[b] = (a, -1)
        missing = [i for i in range(1, self.n + 1) if i not in image]
        if missing:
            raise ValueError(f"generators without a conjugation pair: {missing}")
        out = GrassmannElement.zero(self.n)
        for blade, c in self.terms.items():
            term = GrassmannElement.scalar(self.n, _coeff_conj(c))
            for i in range(1, self.n + 1):
                if blade >> (i - 1) & 1:
                    j, s = image[i]
                    g = GrassmannElement.generator(self.n, j)
                    term = term * (g if s > 0 else -g)
            out = out + term
        return out


def berezin(f: GrassmannElement, order):
    """Full Berezin integral: the left derivatives composed in ``order``.

    ``order`` lists the derivative subscripts as written in an operator
    product, so the last entry acts first.  It must be a permutation of
    ``1..n``.  The result is the coefficient ring element equal to the
    top-blade coefficient up to the sign of the ordering.
    """
    if sorted(order) != list(range(1, f.n + 1)):
        raise ValueError("order must be a permutation of 1..n")
    g = f
    for i in reversed(order):
        g = g.partial(i)
    return g.body()


def _binom_half(k: int) -> Fraction:
    """Binomial coefficient C(1/2, k) as an exact rational."""
    out = Fraction(1)
    for j in range(k):
        out *= (Fraction(1, 2) - j) / (j + 1)
    return out


def _body_fn(kind, b, exact):
    if kind == "sqrt":
        if exact:
            return b.sqrt()
        if b.real <= 0 and b.imag == 0:
            raise ValueError("sqrt needs a body off the closed negative real axis")
        return b ** 0.5
    if kind == "inverse":
        if _coeff_is_zero(b):
            raise ValueError("inverse needs an invertible body")
        if exact:
            inv = getattr(b, "inverse", None)
            return inv() if inv is not None else GR_ONE / b
        return 1.0 / b
    if kind == "log":
        if exact:
            if b != 1:
                raise ValueError("exact log supports body 1 only")
            return GR_ZERO
        if b == 0:
            raise ValueError("log needs an invertible body")
        return complex(math.log(abs(b)), math.atan2(b.imag, b.real))
    if kind == "exp":
        if exact:
            if not _coeff_is_zero(b):
                raise ValueError("exact exp supports body 0 only")
            return GR_ONE
        return complex(math.e) ** b
    raise ValueError(f"unknown series kind {kind!r}")


def nilpotent_series(f: GrassmannElement, kind: str) -> GrassmannElement:
    """sqrt / inverse / log / exp of an even element via terminating series.

    The soul is nilpotent, so every series below is a finite sum; the
    result is exact in the exact ring.  In the exact ring the body must
    keep the result rational (perfect-square body for sqrt, body 1 for
    log, body 0 for exp); the formulas this package evaluates always have
    identity bodies, so this costs nothing in practice.
    """
    if not f.is_even():
        raise ValueError("nilpotent_series is defined for even elements")
    n = f.n
    b = f.body()
    exact = not isinstance(b, complex)
    head = _body_fn(kind, b, exact)
    s = f.soul()
    if s.is_zero():
        return GrassmannElement.scalar(n, head)
    kmax = n // 2 + 1

    if kind in ("sqrt", "inverse"):
        z = s.scale(_body_fn("inverse", b, exact))  # s/b, nilpotent
        out = GrassmannElement.zero(n)
        power = GrassmannElement.one(n)
        for k in range(kmax + 1):
            if power.is_zero():
                break
            coef = _binom_half(k) if kind == "sqrt" else Fraction((-1) ** k)
            out = out + power.map_coeff(lambda c, q=coef: _coeff_scale(c, q))
            power = power * z
        return out.scale(head)

    if kind == "log":
        z = s.scale(_body_fn("inverse", b, exact))
        out = GrassmannElement.scalar(n, head)
        power = z
        for k in range(1, kmax + 1):
            if power.is_zero():
                break
            q = Fraction((-1) ** (k + 1), k)
            out = out + power.map_coeff(lambda c, q=q: _coeff_scale(c, q))
            power = power * z
        return out

    # exp
    out = GrassmannElement.one(n)
    power = GrassmannElement.one(n)
    fact = 1
    for k in range(1, kmax + 1):
        power = power * s
        if power.is_zero():
            break
        fact *= k
        q = Fraction(1, fact)
        out = out + power.map_coeff(lambda c, q=q: _coeff_scale(c, q))
    return out.scale(head)


def sqrt_series(f):
    return nilpotent_series(f, "sqrt")


def inverse_series(f):
    return nilpotent_series(f, "inverse")


def log_series(f):
    return nilpotent_series(f, "log")


def exp_series(f):
    return nilpotent_series(f, "exp")


# -- serialization -------------------------------------------------------

def _blade_to_list(blade, n):
    return [i for i in range(1, n + 1) if blade >> (i - 1) & 1]


def _blade_from_list(gens):
    blade = 0
    for i in gens:
        blade |= 1 << (i - 1)
    return blade


def _frac_to_json(x: Fraction):
    return {"num": x.numerator, "den": x.denominator}


def _frac_from_json(d):
    return Fraction(d["num"], d["den"])


def to_json(f: GrassmannElement) -> dict:
    """JSON-safe dict; exact coefficients round-trip bit-exactly."""
    terms = []
    for blade in sorted(f.terms):
        c = f.terms[blade]
        entry = {"blade": _blade_to_list(blade, f.n)}
        if isinstance(c, GaussianRational):
            entry["re"] = _frac_to_json(c.re)
            entry["im"] = _frac_to_json(c.im)
        elif isinstance(c, complex):
            entry["re"] = c.real
            entry["im"] = c.imag
        else:
            raise TypeError(f"coefficient {type(c).__name__} has no JSON form")
        terms.append(entry)
    return {"N": f.n, "terms": terms}


def from_json(data: dict) -> GrassmannElement:
    n = data["N"]
    terms = {}
    for entry in data["terms"]:
        blade = _blade_from_list(entry["blade"])
        re, im = entry["re"], entry["im"]
        if isinstance(re, dict):
            c = GaussianRational(_frac_from_json(re), _frac_from_json(im))
        else:
            c = complex(re, im)
        terms[blade] = c
    return GrassmannElement(n, terms)

"""Exact star products of polynomials in the Weyl algebra.

Polynomials live in ``Q(i)[hbar][u_1..u_m, v_1..v_m]``.  The generators are
ordered ``(u_1, ..., u_m, v_1, ..., v_m)`` and the product attached to a
complex symmetric matrix ``K`` is the bidifferential Moyal-type product with
bivector ``Lambda = K + J``, where ``J = [[0, -I], [I, 0]]``::

    f * g = sum_k (i hbar)^k / (k! 2^k) Lambda^{i1 j1} ... Lambda^{ik jk}
            (d_{i1..ik} f)(d_{j1..jk} g)

The sum terminates on polynomials, so every identity can be checked with
zero residual.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial, gcd
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegreeCapExceeded, DimensionMismatch, SchemaError

DEFAULT_DEGREE_CAP = 16


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip().replace("−", "-"))
    if isinstance(x, float):
        # decimal reading, so 0.3 means 3/10
        return Fraction(repr(float(x)))
    return Fraction(x)


class GaussianRational:
    """Exact complex number with rational real and imaginary parts.

    Stored as integers ``(a + b i) / d`` with ``d > 0`` and
    ``gcd(a, b, d) = 1``; this is several times faster than a pair of
    ``Fraction`` objects in the inner loops of the star product.
    """

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, re=0, im=0):
        x, y = _frac(re), _frac(im)
        d = x.denominator * y.denominator // gcd(x.denominator, y.denominator)
        self._set(x.numerator * (d // x.denominator), y.numerator * (d // y.denominator), d)

    def _set(self, a: int, b: int, d: int) -> None:
        g = gcd(gcd(a, b), d)
        if g != 1:
            a, b, d = a // g, b // g, d // g
        self._a, self._b, self._d = a, b, d

    @classmethod
    def _raw(cls, a: int, b: int, d: int) -> "GaussianRational":
        z = object.__new__(cls)
        z._set(a, b, d)
        return z

    @property
    def re(self) -> Fraction:
        return Fraction(self._a, self._d)

    @property
    def im(self) -> Fraction:
        return Fraction(self._b, self._d)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, int) and not isinstance(x, bool):
            return cls._raw(x, 0, 1)
        if isinstance(x, complex):
            return cls(repr(float(x.real)), repr(float(x.imag)))
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return cls(x[0], x[1])
        return cls(x, 0)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        if self._d == o._d:
            return GaussianRational._raw(self._a + o._a, self._b + o._b, self._d)
        return GaussianRational._raw(
            self._a * o._d + o._a * self._d, self._b * o._d + o._b * self._d, self._d * o._d
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-GaussianRational.coerce(other))

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational._raw(-self._a, -self._b, self._d)

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        a, b, c, e = self._a, self._b, o._a, o._b
        return GaussianRational._raw(a * c - b * e, a * e + b * c, self._d * o._d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        den = o._a * o._a + o._b * o._b
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        # (a + bi)/d / ((c + ei)/f) = (a + bi)(c - ei) f / (d (c^2 + e^2))
        a, b, c, e = self._a, self._b, o._a, o._b
        return GaussianRational._raw((a * c + b * e) * o._d, (b * c - a * e) * o._d, self._d * den)

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._a == o._a and self._b == o._b and self._d == o._d

    def __hash__(self):
        return hash((self._a, self._b, self._d))

    def __bool__(self):
        return bool(self._a) or bool(self._b)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussianRational._raw(self._a, -self._b, self._d)

    def __repr__(self):
        if not self._b:
            return str(self.re)
        if not self._a:
            return f"{self.im}i"
        return f"({self.re}{'+' if self._b > 0 else '-'}{abs(self.im)}i)"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I_UNIT = GaussianRational(0, 1)


class HbarScalar:
    """Polynomial in the formal symbol hbar with Gaussian-rational coefficients.

    ``coeffs[k]`` multiplies ``hbar**k``.  Trailing zeros are stripped, so the
    zero scalar has an empty coefficient tuple.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [GaussianRational.coerce(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def coerce(cls, x) -> "HbarScalar":
        if isinstance(x, HbarScalar):
            return x
        return cls((x,))

    @classmethod
    def hbar(cls) -> "HbarScalar":
        return cls((0, 1))

    def __add__(self, other):
        other = HbarScalar.coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (ZERO,) * (n - len(self.coeffs))
        b = other.coeffs + (ZERO,) * (n - len(other.coeffs))
        return HbarScalar(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return HbarScalar(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-HbarScalar.coerce(other))

    def __rsub__(self, other):
        return HbarScalar.coerce(other) - self

    def __mul__(self, other):
        other = HbarScalar.coerce(other)
        if not self.coeffs or not other.coeffs:
            return HbarScalar()
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if not x:
                continue
            for j, y in enumerate(other.coeffs):
                if y:
                    out[i + j] = out[i + j] + x * y
        return HbarScalar(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        """Divide by a nonzero Gaussian rational (not by hbar)."""
        g = GaussianRational.coerce(other)
        return HbarScalar(c / g for c in self.coeffs)

    def shift(self, k: int) -> "HbarScalar":
        """Multiply by ``hbar**k``."""
        if not self.coeffs:
            return self
        return HbarScalar((ZERO,) * k + self.coeffs)

    def __eq__(self, other):
        try:
            other = HbarScalar.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def evaluate(self, hbar: complex = 1.0) -> complex:
        return sum((complex(c) * hbar**k for k, c in enumerate(self.coeffs)), 0j)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                parts.append(repr(c) if k == 0 else f"{c!r}*hbar^{k}")
        return " + ".join(parts)


class ExpressionParameter:
    """Exact complex symmetric 2m x 2m matrix K selecting an ordering."""

    __slots__ = ("m", "K")

    def __init__(self, K: Sequence[Sequence], m: int | None = None):
        rows = [[GaussianRational.coerce(x) for x in row] for row in K]
        n = len(rows)
        if n == 0 or n % 2 or any(len(r) != n for r in rows):
            raise ValueError("K must be a nonempty even square matrix")
        if m is not None and 2 * m != n:
            raise DimensionMismatch(f"K has size {n}, expected {2 * m}")
        for i in range(n):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"K is not symmetric at ({i}, {j})")
        self.m = n // 2
        self.K = tuple(tuple(r) for r in rows)

    @classmethod
    def zero(cls, m: int) -> "ExpressionParameter":
        return cls([[0] * (2 * m) for _ in range(2 * m)])

    @classmethod
    def identity(cls, m: int) -> "ExpressionParameter":
        n = 2 * m
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def normal(cls, m: int) -> "ExpressionParameter":
        """K0 = [[0, I], [I, 0]]: the bivector becomes [[0, 0], [2I, 0]]."""
        n = 2 * m
        return cls([[1 if abs(i - j) == m else 0 for j in range(n)] for i in range(n)])

    def bivector(self) -> tuple:
        """Lambda = K + J as nested tuples of Gaussian rationals."""
        m = self.m
        lam = [list(r) for r in self.K]
        for i in range(m):
            lam[i][i + m] = lam[i][i + m] - 1
            lam[i + m][i] = lam[i + m][i] + 1
        return tuple(tuple(r) for r in lam)

    def __add__(self, other: "ExpressionParameter") -> "ExpressionParameter":
        _check_m(self.m, other.m)
        return ExpressionParameter([[a + b for a, b in zip(r, s)] for r, s in zip(self.K, other.K)])

    def __sub__(self, other: "ExpressionParameter") -> "ExpressionParameter":
        _check_m(self.m, other.m)
        return ExpressionParameter([[a - b for a, b in zip(r, s)] for r, s in zip(self.K, other.K)])

    def __neg__(self):
        return ExpressionParameter([[-a for a in r] for r in self.K])

    def __eq__(self, other):
        return isinstance(other, ExpressionParameter) and self.K == other.K

    def __hash__(self):
        return hash(self.K)

    def to_array(self) -> np.ndarray:
        return np.array([[complex(x) for x in r] for r in self.K], dtype=complex)

    def __repr__(self):
        return f"ExpressionParameter({[list(r) for r in self.K]!r})"


def _check_m(m1: int, m2: int) -> None:
    if m1 != m2:
        raise DimensionMismatch(f"generator counts differ: 2*{m1} vs 2*{m2}")


class WeylPolynomial:
    """Exact polynomial in 2m generators with ``HbarScalar`` coefficients.

    ``terms`` maps exponent tuples of length 2m to nonzero coefficients.
    Arithmetic operators ``+``, ``-`` and scalar ``*`` are the linear
    structure; the commutative product is ``pointwise_mul`` and star
    products go through :func:`star_product`.
    """

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: Mapping[tuple, object] | None = None):
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * m or any(e < 0 for e in exps):
                raise DimensionMismatch(f"bad multi-index {exps} for m={m}")
            c = HbarScalar.coerce(c)
            if c:
                clean[exps] = clean[exps] + c if exps in clean else c
                if not clean[exps]:
                    del clean[exps]
        self.terms = clean

    # constructors

    @classmethod
    def constant(cls, c, m: int) -> "WeylPolynomial":
        return cls(m, {(0,) * (2 * m): c})

    @classmethod
    def generator(cls, i: int, m: int) -> "WeylPolynomial":
        exps = [0] * (2 * m)
        exps[i] = 1
        return cls(m, {tuple(exps): 1})

    @classmethod
    def generators(cls, m: int) -> list:
        return [cls.generator(i, m) for i in range(2 * m)]

    @classmethod
    def hbar(cls, m: int) -> "WeylPolynomial":
        return cls(m, {(0,) * (2 * m): HbarScalar.hbar()})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> "WeylPolynomial":
        return cls(len(exps) // 2, {tuple(exps): c})

    # linear structure

    def __add__(self, other):
        if not isinstance(other, WeylPolynomial):
            other = WeylPolynomial.constant(other, self.m)
        _check_m(self.m, other.m)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return WeylPolynomial(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return WeylPolynomial(self.m, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, WeylPolynomial):
            raise TypeError("use star_product or pointwise_mul for polynomial products")
        c = HbarScalar.coerce(c)
        return WeylPolynomial(self.m, {e: x * c for e, x in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return WeylPolynomial(self.m, {e: x / c for e, x in self.terms.items()})

    def __eq__(self, other):
        if isinstance(other, WeylPolynomial):
            return self.m == other.m and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def pointwise_mul(self, other: "WeylPolynomial") -> "WeylPolynomial":
        _check_m(self.m, other.m)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                out[e] = out[e] + c if e in out else c
        return WeylPolynomial(self.m, out)

    def derivative(self, i: int) -> "WeylPolynomial":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return WeylPolynomial(self.m, out)

    def evaluate(self, point: Sequence[complex], hbar: complex = 1.0) -> complex:
        """Numeric value at a point of C^{2m} with hbar instantiated."""
        point = np.asarray(point, dtype=complex)
        if point.shape[-1] != 2 * self.m:
            raise DimensionMismatch("point has wrong length")
        total = np.zeros(point.shape[:-1], dtype=complex)
        for e, c in self.terms.items():
            mono = np.ones(point.shape[:-1], dtype=complex)
            for k, p in enumerate(e):
                if p:
                    mono = mono * point[..., k] ** p
            total = total + c.evaluate(hbar) * mono
        return total if total.shape else complex(total)

    def __repr__(self):
        if not self.terms:
            return "0"
        names = _generator_names(self.m)
        parts = []
        for e in sorted(self.terms, key=lambda x: (-sum(x), x)):
            mono = "*".join(f"{names[k]}^{p}" if p > 1 else names[k] for k, p in enumerate(e) if p)
            parts.append(f"({self.terms[e]!r})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # serialization

    def to_json(self) -> dict:
        terms = []
        for e in sorted(self.terms):
            coeff = [
                [[str(c.re.numerator), str(c.re.denominator)], [str(c.im.numerator), str(c.im.denominator)]]
                for c in self.terms[e].coeffs
            ]
            terms.append({"exps": list(e), "coeff": coeff})
        return {"type": "polynomial", "m": self.m, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> "WeylPolynomial":
        try:
            m = int(data["m"])
            terms = {}
            for t in data["terms"]:
                exps = tuple(int(x) for x in t["exps"])
                if len(exps) != 2 * m:
                    raise SchemaError(f"terms.exps: expected length {2 * m}, got {len(exps)}")
                coeffs = [GaussianRational(_parse_rational(re), _parse_rational(im)) for re, im in t["coeff"]]
                c = HbarScalar(coeffs)
                terms[exps] = terms[exps] + c if exps in terms else c
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"polynomial: malformed field ({exc})") from exc
        if m < 1:
            raise SchemaError("polynomial.m: must be a positive integer")
        return cls(m, terms)


def _parse_rational(x) -> Fraction:
    """Accept ``[num, den]`` string pairs, ``"p/q"`` strings or integers."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise SchemaError("rational must be a [numerator, denominator] pair")
        return _frac(x[0]) / _frac(x[1])
    return _frac(x)


def _generator_names(m: int) -> list:
    if m == 1:
        return ["u", "v"]
    return [f"u{k + 1}" for k in range(m)] + [f"v{k + 1}" for k in range(m)]


def _falling(n: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= n - j
    return out


def _apply_pair_exponential(state: dict, i: int, j: int, c: GaussianRational) -> dict:
    """Apply ``exp(c * hbar * d_i (x) d_j)`` to a tensor ``{(a, b): coeff}``."""
    out: dict = {}
    for (a, b), coeff in state.items():
        top = min(a[i], b[j])
        cn = ONE
        for n in range(top + 1):
            if n:
                cn = cn * c
            w = GaussianRational(Fraction(_falling(a[i], n) * _falling(b[j], n), factorial(n))) * cn
            if n:
                a2 = a[:i] + (a[i] - n,) + a[i + 1 :]
                b2 = b[:j] + (b[j] - n,) + b[j + 1 :]
            else:
                a2, b2 = a, b
            term = (coeff * w).shift(n)
            key = (a2, b2)
            if key in out:
                out[key] = out[key] + term
            else:
                out[key] = term
    return {k: v for k, v in out.items() if v}


def star_product(
    f: WeylPolynomial, g: WeylPolynomial, K: ExpressionParameter, degree_cap: int = DEFAULT_DEGREE_CAP
) -> WeylPolynomial:
    """Exact product ``f *_K g`` with bivector ``K + J``.

    The exponential of the bidifferential operator is applied one bivector
    entry at a time; the entries commute, so the factors can be applied in
    any order and each one terminates on polynomials.
    """
    _check_m(f.m, g.m)
    _check_m(f.m, K.m)
    if f.degree() + g.degree() > degree_cap:
        raise DegreeCapExceeded(f"product degree {f.degree() + g.degree()} exceeds cap {degree_cap}")
    state = {(a, b): ca * cb for a, ca in f.terms.items() for b, cb in g.terms.items()}
    lam = K.bivector()
    half_i = GaussianRational(0, Fraction(1, 2))
    n = 2 * f.m
    for i in range(n):
        for j in range(n):
            if lam[i][j]:
                state = _apply_pair_exponential(state, i, j, half_i * lam[i][j])
    out: dict = {}
    for (a, b), c in state.items():
        e = tuple(x + y for x, y in zip(a, b))
        out[e] = out[e] + c if e in out else c
    return WeylPolynomial(f.m, out)


def commutator(f: WeylPolynomial, g: WeylPolynomial, K: ExpressionParameter) -> WeylPolynomial:
    return star_product(f, g, K) - star_product(g, f, K)


def star_power(f: WeylPolynomial, n: int, K: ExpressionParameter) -> WeylPolynomial:
    out = WeylPolynomial.constant(1, f.m)
    for _ in range(n):
        out = star_product(out, f, K)
    return out


def star_fold(factors: Sequence[WeylPolynomial], K: ExpressionParameter) -> WeylPolynomial:
    """Left-to-right star product of a nonempty sequence."""
    it = iter(factors)
    out = next(it)
    for x in it:
        out = star_product(out, x, K)
    return out


def star_polyval(coeffs: Sequence, x: WeylPolynomial, K: ExpressionParameter) -> WeylPolynomial:
    """Evaluate ``sum_k coeffs[k] * x^{*k}`` with star powers."""
    out = WeylPolynomial(x.m)
    power = WeylPolynomial.constant(1, x.m)
    for k, c in enumerate(coeffs):
        if k:
            power = star_product(power, x, K)
        out = out + power * c
    return out


def _heat_factor(state: dict, i: int, j: int, c: GaussianRational) -> dict:
    """Apply ``exp(c * hbar * d_i d_j)`` to ``{exps: coeff}``."""
    out: dict = {}
    for e, coeff in state.items():
        if i == j:
            top = e[i] // 2
        else:
            top = min(e[i], e[j])
        cn = ONE
        for n in range(top + 1):
            if n:
                cn = cn * c
            e2 = list(e)
            if i == j:
                mult = _falling(e[i], 2 * n)
                e2[i] -= 2 * n
            else:
                mult = _falling(e[i], n) * _falling(e[j], n)
                e2[i] -= n
                e2[j] -= n
            term = (coeff * (GaussianRational(Fraction(mult, factorial(n))) * cn)).shift(n)
            key = tuple(e2)
            out[key] = out[key] + term if key in out else term
    return {k: v for k, v in out.items() if v}


def intertwine_poly(f: WeylPolynomial, K: ExpressionParameter, K2: ExpressionParameter) -> WeylPolynomial:
    """Map the K-expression of an element to its K2-expression.

    Applies ``exp((i hbar / 4) sum_{ij} (K2 - K)^{ij} d_i d_j)``, which is a
    finite sum on polynomials.
    """
    _check_m(f.m, K.m)
    _check_m(f.m, K2.m)
    diff = (K2 - K).K
    quarter_i = GaussianRational(0, Fraction(1, 4))
    state = dict(f.terms)
    n = 2 * f.m
    for i in range(n):
        for j in range(i, n):
            if diff[i][j]:
                # off-diagonal entries appear twice in the symmetric sum
                c = quarter_i * diff[i][j] * (1 if i == j else 2)
                state = _heat_factor(state, i, j, c)
    return WeylPolynomial(f.m, state)


def weyl_symmetrize(word: Sequence[int], m: int) -> WeylPolynomial:
    """Average of the Weyl-ordered star products over all orderings of ``word``."""
    word = list(word)
    if not word:
        raise ValueError("word must be nonempty")
    if any(not (0 <= w < 2 * m) for w in word):
        raise ValueError(f"generator index out of range for m={m}")
    gens = WeylPolynomial.generators(m)
    K0 = ExpressionParameter.zero(m)
    total = WeylPolynomial(m)
    for perm in itertools.permutations(word):
        total = total + star_fold([gens[k] for k in perm], K0)
    return total / factorial(len(word))


def symmetric_product(f: WeylPolynomial, g: WeylPolynomial, K: ExpressionParameter) -> WeylPolynomial:
    """``f o g = (f*g + g*f) / 2``."""
    return (star_product(f, g, K) + star_product(g, f, K)) / 2


def quadratic_form(A, m: int | None = None) -> WeylPolynomial:
    """Plain polynomial ``<uA, u> = sum_ij A_ij u_i u_j`` for exact symmetric A."""
    rows = [[GaussianRational.coerce(x) for x in r] for r in A]
    n = len(rows)
    m = m or n // 2
    out = WeylPolynomial(m)
    for i in range(n):
        for j in range(n):
            if rows[i][j]:
                e = [0] * n
                e[i] += 1
                e[j] += 1
                out = out + WeylPolynomial(m, {tuple(e): rows[i][j]})
    return out


def linear_form(a: Sequence, m: int | None = None) -> WeylPolynomial:
    """Plain polynomial ``<a, u> = sum_i a_i u_i``."""
    m = m or len(a) // 2
    out = WeylPolynomial(m)
    for i, x in enumerate(a):
        x = GaussianRational.coerce(x)
        if x:
            out = out + WeylPolynomial.generator(i, m) * x
    return out

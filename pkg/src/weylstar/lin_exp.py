"""Star exponentials of linear forms ``<a, u>``.

Everything here is numeric (complex doubles) with ``hbar`` a positive real.
For a covector ``a`` and expression parameter ``K`` write ``c = <aK, a>``;
all closed forms below depend on ``K`` only through ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfcx

from .errors import DimensionMismatch, SiegelConditionError
from .linalg import as_matrix, standard_j
from .quad_group import GaussianElement

# derivative step for fields whose second derivative is not known
_FD_STEP = 1e-4


def _vec(a, m: int | None = None) -> np.ndarray:
    a = np.asarray(a, dtype=complex).reshape(-1)
    if a.size % 2 or a.size == 0:
        raise DimensionMismatch("covector length must be a positive even number")
    if m is not None and a.size != 2 * m:
        raise DimensionMismatch(f"covector has length {a.size}, expected {2 * m}")
    return a


def _pairing(a: np.ndarray, K) -> complex:
    K = as_matrix(K)
    if K.shape[0] != a.size:
        raise DimensionMismatch(f"K is {K.shape[0]}x{K.shape[0]} but covector has length {a.size}")
    return complex(a @ K @ a)


@dataclass(frozen=True)
class LinearExponential:
    """The element ``exp_*(s <a, u> / i hbar)``.

    Stored canonically: ``|a| = 1`` with the first nonzero entry real and
    positive, the scale absorbed into ``s``.  ``a = 0`` is kept as is with
    ``s = 0``.
    """

    a: np.ndarray
    s: complex = 1.0

    def __post_init__(self):
        a = _vec(self.a)
        s = complex(self.s)
        norm = float(np.linalg.norm(a))
        if norm == 0.0 or s == 0:
            a, s = np.zeros_like(a), 0j
        else:
            lead = a[np.flatnonzero(np.abs(a) > 0)[0]]
            phase = lead / abs(lead)
            # leave canonical input untouched so serialized values round-trip exactly
            if abs(norm - 1) > 4e-16 or phase != 1:
                a = a / (norm * phase)
                s = s * norm * phase
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "s", s)

    @property
    def m(self) -> int:
        return self.a.size // 2

    @property
    def covector(self) -> np.ndarray:
        """The scaled covector ``s a``."""
        return self.s * self.a

    @classmethod
    def from_covector(cls, b) -> "LinearExponential":
        return cls(b, 1.0)

    def same_as(self, other: "LinearExponential", tol: float = 1e-12) -> bool:
        return self.m == other.m and np.max(np.abs(self.covector - other.covector)) <= tol

    def to_json(self) -> dict:
        return {
            "type": "linexp",
            "a": [[float(z.real), float(z.imag)] for z in self.a],
            "s": [float(self.s.real), float(self.s.imag)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearExponential":
        a = [complex(re, im) for re, im in obj["a"]]
        re, im = obj["s"]
        return cls(np.array(a), complex(re, im))


@dataclass(frozen=True)
class ScalarField1D:
    """A holomorphic function of one variable with its derivative.

    ``d2f`` is optional; when absent, derived fields fall back to a central
    difference of ``df``.
    """

    f: Callable[[complex], complex]
    df: Callable[[complex], complex]
    d2f: Callable[[complex], complex] | None = None

    def __call__(self, x):
        return self.f(x)

    def second(self, x):
        if self.d2f is not None:
            return self.d2f(x)
        x = np.asarray(x, dtype=complex)
        h = _FD_STEP * np.maximum(1.0, np.abs(x))
        return (self.df(x + h) - self.df(x - h)) / (2 * h)

    def derivative_residual(self, grid, step: float = 1e-5) -> float:
        """Max relative gap between ``df`` and a central difference of ``f``."""
        x = np.asarray(grid, dtype=complex)
        fd = (self.f(x + step) - self.f(x - step)) / (2 * step)
        exact = self.df(x)
        scale = np.maximum(np.abs(exact), np.max(np.abs(exact)) * 1e-3 + 1e-300)
        return float(np.max(np.abs(fd - exact) / scale))

    @classmethod
    def constant(cls, value: complex) -> "ScalarField1D":
        value = complex(value)
        return cls(
            lambda x: np.full(np.shape(x), value, dtype=complex),
            lambda x: np.zeros(np.shape(x), dtype=complex),
            lambda x: np.zeros(np.shape(x), dtype=complex),
        )

    @classmethod
    def identity(cls) -> "ScalarField1D":
        return cls(
            lambda x: np.asarray(x, dtype=complex),
            lambda x: np.ones(np.shape(x), dtype=complex),
            lambda x: np.zeros(np.shape(x), dtype=complex),
        )


# K-expressions and products


def linexp_k_expression(e: LinearExponential, K, hbar: float = 1.0) -> tuple:
    """K-expression ``amp * exp(<b, u> / i hbar)`` of ``e``; returns ``(amp, b)``."""
    b = e.covector
    c = _pairing(b, K) if e.s != 0 else 0j
    return complex(np.exp(c / (4j * hbar))), b


def linexp_intertwine_factor(e: LinearExponential, K, K2, hbar: float = 1.0) -> complex:
    """Scalar picked up by the K-expression of ``e`` when moving from K to K2."""
    b = e.covector
    return complex(np.exp((_pairing(b, K2) - _pairing(b, K)) / (4j * hbar)))


def linexp_product(e1: LinearExponential, e2: LinearExponential, K=None, hbar: float = 1.0) -> tuple:
    """``e1 * e2 = scalar * exp_*(<a + b, u> / i hbar)``; returns ``(scalar, e)``.

    The scalar ``exp(<aJ, b> / 2 i hbar)`` does not depend on K; ``K`` is only
    checked for size.
    """
    if e1.m != e2.m:
        raise DimensionMismatch("linear exponentials over different m")
    a, b = e1.covector, e2.covector
    if K is not None:
        _pairing(a, K)
    scalar = complex(np.exp((a @ standard_j(e1.m) @ b) / (2j * hbar)))
    return scalar, LinearExponential.from_covector(a + b)


def k_expression_evaluator(e: LinearExponential, K, hbar: float = 1.0) -> Callable:
    """Pointwise evaluator of the K-expression of ``e`` on points ``u`` of shape (..., 2m)."""
    amp, b = linexp_k_expression(e, K, hbar)

    def evaluate(u):
        u = np.asarray(u, dtype=complex)
        return amp * np.exp((u @ b) / (1j * hbar))

    return evaluate


def translate_product(e: LinearExponential, f: Callable, K, side: str = "left", hbar: float = 1.0) -> Callable:
    """Product of the ordinary exponential ``exp(s <a,u> / i hbar)`` with ``f``.

    Left: ``exp(...) * f = exp(...) f(u + (s/2) a(K + J))``.
    Right: ``f * exp(...) = exp(...) f(u + (s/2) a(K - J))``.
    """
    b = e.covector
    K = as_matrix(K)
    _pairing(b, K)
    J = standard_j(e.m)
    if side == "left":
        shift = 0.5 * b @ (K + J)
    elif side == "right":
        shift = 0.5 * b @ (K - J)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    def evaluate(u):
        u = np.asarray(u, dtype=complex)
        return np.exp((u @ b) / (1j * hbar)) * f(u + shift)

    return evaluate


# delta function and one-sided inverses


def _siegel_p(a, K, hbar: float) -> tuple:
    a = _vec(a)
    c = _pairing(a, K)
    if not (c / (1j * hbar)).real < 0:
        raise SiegelConditionError(
            f"Siegel condition violated: Re(<aK,a>/(i hbar)) = {(c / (1j * hbar)).real:.6g} is not negative"
        )
    return a, c, -c / (4j * hbar)


def delta_star(a, K, hbar: float = 1.0) -> GaussianElement:
    """``(1/2 pi hbar) * integral over R of exp_*(t <a,u> / i hbar) dt`` as a Gaussian.

    Equals ``(1/2 pi hbar) 2 sqrt(-i hbar pi / c) exp(-<a,u>^2 / (i hbar c))``.
    """
    a, c, _ = _siegel_p(a, K, hbar)
    amp = 2.0 * np.sqrt(-1j * hbar * np.pi / c) / (2 * np.pi * hbar)
    return GaussianElement(amp, -np.outer(a, a) / c)


def delta_kernel(a, K, hbar: float = 1.0) -> ScalarField1D:
    """``delta_star`` as a function of ``x = <a, u>``."""
    _, c, _ = _siegel_p(a, K, hbar)
    amp = 2.0 * np.sqrt(-1j * hbar * np.pi / c) / (2 * np.pi * hbar)
    k = -1.0 / (1j * hbar * c)

    def f(x):
        x = np.asarray(x, dtype=complex)
        return amp * np.exp(k * x * x)

    def df(x):
        x = np.asarray(x, dtype=complex)
        return 2 * k * x * f(x)

    def d2f(x):
        x = np.asarray(x, dtype=complex)
        return (2 * k + (2 * k * x) ** 2) * f(x)

    return ScalarField1D(f, df, d2f)


def reduced_1d_product(a, K, f: ScalarField1D, hbar: float = 1.0) -> ScalarField1D:
    """``<a,u> *_K f(<a,u>)`` as the function ``x f(x) + (i hbar / 2) c f'(x)``."""
    c = _pairing(_vec(a), K)
    h = 0.5j * hbar * c

    def g(x):
        x = np.asarray(x, dtype=complex)
        return x * f.f(x) + h * f.df(x)

    def dg(x):
        x = np.asarray(x, dtype=complex)
        return f.f(x) + x * f.df(x) + h * f.second(x)

    return ScalarField1D(g, dg)


def one_sided_inverse(a, K, side: str = "plus", hbar: float = 1.0) -> ScalarField1D:
    """Inverse of ``<a,u> / i hbar`` as a function of ``x = <a, u>``.

    ``plus`` integrates ``exp_*(t <a,u>/i hbar)`` over ``t < 0``; ``minus`` is
    minus the integral over ``t > 0``.  With ``p = -c / 4 i hbar`` and
    ``q = x / i hbar`` the integrals are ``1/2 sqrt(pi/p) erfcx(-+q / 2 sqrt p)``.
    """
    _, _, p = _siegel_p(a, K, hbar)
    if side == "plus":
        sign, flip = 1.0, 1.0
    elif side == "minus":
        sign, flip = -1.0, -1.0
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    rp = np.sqrt(p)
    pref = 0.5 * np.sqrt(np.pi / p)

    def z_of(x):
        return flip * np.asarray(x, dtype=complex) / (1j * hbar) / (2 * rp)

    def f(x):
        return sign * pref * erfcx(z_of(x))

    def df(x):
        z = z_of(x)
        dz = flip / (1j * hbar) / (2 * rp)
        return sign * pref * (2 * z * erfcx(z) - 2 / np.sqrt(np.pi)) * dz

    def d2f(x):
        z = z_of(x)
        dz = flip / (1j * hbar) / (2 * rp)
        w = erfcx(z)
        # w' = 2zw - 2/sqrt(pi), w'' = 2w + 2z w'
        w1 = 2 * z * w - 2 / np.sqrt(np.pi)
        return sign * pref * (2 * w + 2 * z * w1) * dz * dz

    return ScalarField1D(f, df, d2f)


def associativity_witness(a, K, x, hbar: float = 1.0) -> tuple:
    """Evaluate both bracketings of ``inv_plus * l * inv_minus`` at ``x``.

    Functions of ``<a,u>`` commute under the product, and ``l * inv`` is
    computed with :func:`reduced_1d_product` (with ``l = <a,u>/i hbar``).
    Returns ``(left, right, unit_residual)`` where ``left`` is
    ``(inv_plus * l) * inv_minus``, ``right`` is ``inv_plus * (l * inv_minus)``
    and ``unit_residual`` is how far the inner products are from the constant 1.
    """
    x = np.asarray(x, dtype=complex)
    plus = one_sided_inverse(a, K, "plus", hbar)
    minus = one_sided_inverse(a, K, "minus", hbar)
    inner_left = reduced_1d_product(a, K, plus, hbar)(x) / (1j * hbar)
    inner_right = reduced_1d_product(a, K, minus, hbar)(x) / (1j * hbar)
    residual = float(max(np.max(np.abs(inner_left - 1)), np.max(np.abs(inner_right - 1))))
    # both inner products are the constant 1, which is the unit of the product
    left = minus(x)
    right = plus(x)
    return left, right, residual


def linexp_grid(e: LinearExponential, K, points, hbar: float = 1.0) -> list:
    """Rows ``(u_1, ..., u_2m, re, im)`` of the K-expression of ``e`` on ``points``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 * e.m:
        raise DimensionMismatch(f"grid points must have shape (n, {2 * e.m})")
    vals = k_expression_evaluator(e, K, hbar)(pts)
    return [tuple(map(float, p)) + (float(v.real), float(v.imag)) for p, v in zip(pts, vals)]

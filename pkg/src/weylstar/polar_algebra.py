"""Polar elements, the square roots e1, e2, e3 and their algebra (m = 1).

Products of star exponentials are evaluated as *words*: a word is a list of
factors ``(A, t)`` standing for ``exp_*(t <uA,u> / i hbar)``.  The value of a
word is obtained by shrinking every factor simultaneously, ``t -> lam t``,
and continuing the square root of the total amplitude from ``lam = 0`` (where
the word is 1) to ``lam = 1``.  This is what makes two sides of a relation
use synchronized paths; straight single factors reduce to straight-line
tracing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import root

from .branch_tracker import PathSpec, continue_sqrt, trace_amplitude
from .errors import NumericalDomainError, SingularPointError
from .linalg import as_matrix, guarded_inv
from .quad_group import (
    GaussianElement,
    exp_quad,
    exp_quad_det,
    gaussian_product,
    kappa_of,
    product_determinant,
    sp_of_quadratic,
)

DEFAULT_RHO = 0.3
DEFAULT_CPRIME = 0.4
AMP_TOL = 1e-9
PHASE_TOL = 1e-10
SIGN_MARGIN = 1e-3

U_CIRC_V = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
U2_PLUS_V2 = np.eye(2, dtype=complex)
U2_MINUS_V2 = np.diag([1.0, -1.0]).astype(complex)


def k_re(rho: float = DEFAULT_RHO, cprime: float = DEFAULT_CPRIME) -> np.ndarray:
    return np.array([[rho, 1j * cprime], [1j * cprime, rho]], dtype=complex)


def k_im(rho: float = DEFAULT_RHO, c: float = DEFAULT_CPRIME) -> np.ndarray:
    return np.array([[1j * rho, c], [c, 1j * rho]], dtype=complex)


def is_k_re(K, tol: float = 1e-12) -> bool:
    K = as_matrix(K)
    if K.shape != (2, 2):
        return False
    rho, z = K[0, 0], K[0, 1]
    return (
        abs(K[0, 0] - K[1, 1]) <= tol
        and abs(rho.imag) <= tol
        and abs(z.real) <= tol
        and abs(abs((1 + rho + z) / (1 - rho - z)) - 1) > 1e-9
    )


# words


def _factor(A, t) -> tuple:
    return (as_matrix(A), complex(t))


def inverse_word(word) -> list:
    return [(A, -t) for A, t in reversed(word)]


def _word_parts(word, K, lam: float) -> tuple:
    kappa = kappa_of(K)
    f = 1.0 + 0j
    cur = None
    for A, t in word:
        alpha = sp_of_quadratic(A)
        f *= exp_quad_det(alpha, lam * t, K)
        gp = exp_quad(alpha, lam * t, K).group_point()
        if cur is None:
            cur = gp
        else:
            f *= product_determinant(cur, gp, kappa)
            cur = gaussian_product(cur, gp, kappa)
    return f, cur


def word_value(word, K) -> GaussianElement:
    """Synchronized value of the product of the factors in ``word``.

    Raises :class:`SingularPointError` when the homotopy meets a singular
    point of the product.
    """
    word = [_factor(A, t) for A, t in word]
    K = as_matrix(K)
    if not word:
        return GaussianElement.one(K.shape[0] // 2)
    try:
        w = continue_sqrt(lambda lam: _word_parts(word, K, lam.real)[0], [lambda s: complex(s)], 1.0)
        _, cur = _word_parts(word, K, 1.0)
    except NumericalDomainError as exc:
        raise SingularPointError(f"synchronized product undefined: {exc}") from exc
    return GaussianElement.from_sp(1.0 / w, cur.alpha)


# polar elements


@dataclass(frozen=True)
class PolarElement:
    gaussian: GaussianElement
    g: np.ndarray
    path: PathSpec
    sheet: int = 1

    @property
    def amp(self) -> complex:
        return self.gaussian.amp

    @property
    def Q(self) -> np.ndarray:
        return self.gaussian.Q

    def residuals(self, K) -> tuple:
        """``(|amp^2 det K - 1|, max |Q + K^-1|)``."""
        K = as_matrix(K)
        inv = guarded_inv(K, "K is not invertible")
        return abs(self.amp**2 * np.linalg.det(K) - 1), float(np.max(np.abs(self.Q + inv)))


def polar_element(g, K, path: PathSpec | None = None, hbar: float = 1.0) -> PolarElement:
    """``exp_*(t <ug,ug> / 2 i hbar)`` traced along ``path`` (default ``[0, pi]``)."""
    g, K = as_matrix(g), as_matrix(K)
    path = path or PathSpec.segment(math.pi)
    if abs(path.end - math.pi) > 1e-12:
        raise ValueError("polar element paths must end at pi")
    alpha = sp_of_quadratic(0.5 * g @ g.T)
    try:
        val = trace_amplitude(alpha, K, path, hbar)
    except SingularPointError as exc:
        raise NumericalDomainError(f"polar element undefined for this g: {exc}") from exc
    return PolarElement(val.value, g, path, val.sheet)


def strict_polar(g, K, hbar: float = 1.0) -> PolarElement:
    """Polar element on the same sheet as the start point (sheet +1)."""
    el = polar_element(g, K, PathSpec.segment(math.pi, "same_sheet"), hbar)
    return PolarElement(el.gaussian, el.g, el.path, 1)


def polar_powers(el: PolarElement, K) -> tuple:
    """Square and fourth power by :func:`gaussian_product`; returns ``(sq, fourth)``."""
    kappa = kappa_of(K)
    gp = el.gaussian.group_point()
    sq = gaussian_product(gp, gp, kappa)
    fourth = gaussian_product(sq, sq, kappa)
    return sq.gaussian(), fourth.gaussian()


def k_re_polar_formula(rho: float = DEFAULT_RHO, cprime: float = DEFAULT_CPRIME) -> GaussianElement:
    """Closed form ``(rho^2+c'^2)^-1/2 exp(-(rho(u^2+v^2) - 2 i c' uv) / (i hbar (rho^2+c'^2)))``."""
    n = rho**2 + cprime**2
    Q = -np.array([[rho, -1j * cprime], [-1j * cprime, rho]]) / n
    return GaussianElement(1.0 / math.sqrt(n), Q)


# the square roots


def basis_words() -> dict:
    return {
        "1": [],
        "eps": [(U2_PLUS_V2, -math.pi / 2)],
        "e1": [(U_CIRC_V, math.pi * 1j / 2)],
        "e2": [(U2_PLUS_V2, math.pi / 4)],
        "e3": [(U2_MINUS_V2, math.pi * 1j / 4)],
    }


def square_roots_e123(K=None) -> tuple:
    """``(e1, e2, e3)`` traced along straight segments in ``K`` (default K_re)."""
    K = k_re() if K is None else as_matrix(K)
    if not is_k_re(K):
        raise ValueError("K must be in the K_re class with |(1+rho+ic')/(1-rho-ic')| != 1")
    words = basis_words()
    return tuple(word_value(words[name], K) for name in ("e1", "e2", "e3"))


def _word_residual(w1, w2, K) -> float:
    return algebra_residual(AlgebraElement.word(w1), AlgebraElement.word(w2), K)


def master_relation_check(i: int, j: int, K=None) -> dict:
    """Check ``e_i e_j e_i^-1 = e_j^-1`` (``= e_j`` when ``i == j``)."""
    K = k_re() if K is None else as_matrix(K)
    words = basis_words()
    wi, wj = words[f"e{i}"], words[f"e{j}"]
    lhs = wi + wj + inverse_word(wi)
    rhs = wj if i == j else inverse_word(wj)
    res = _word_residual(lhs, rhs, K)
    name = f"e{i}*e{j}*e{i}^-1 = e{j}" + ("" if i == j else "^-1")
    return {"relation": name, "residual": res, "passed": res <= AMP_TOL}


# formal combinations


@dataclass
class AlgebraElement:
    """Finite complex combination of words."""

    terms: list = field(default_factory=list)  # [(coef, word)]

    @classmethod
    def word(cls, word, coef: complex = 1.0) -> "AlgebraElement":
        return cls([(complex(coef), list(word))])

    @classmethod
    def basis(cls, name: str) -> "AlgebraElement":
        return cls.word(basis_words()[name])

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.terms + other.terms)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement([(-c, w) for c, w in self.terms])

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __rmul__(self, c: complex) -> "AlgebraElement":
        return AlgebraElement([(complex(c) * k, w) for k, w in self.terms])

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement([(c1 * c2, w1 + w2) for c1, w1 in self.terms for c2, w2 in other.terms])

    def realize(self, K) -> list:
        """Collect terms by phase matrix: list of ``(amplitude, Q)``."""
        out: list = []
        for c, w in self.terms:
            g = word_value(w, K)
            for k, (amp, Q) in enumerate(out):
                if np.max(np.abs(Q - g.Q)) <= 1e-8:
                    out[k] = (amp + c * g.amp, Q)
                    break
            else:
                out.append((c * g.amp, g.Q))
        return out


def algebra_residual(x: AlgebraElement, y: AlgebraElement, K) -> float:
    """Largest leftover coefficient of ``x - y``, relative to the larger side."""
    scale = max([abs(a) for a, _ in x.realize(K)] + [abs(a) for a, _ in y.realize(K)] + [1e-300])
    return max([abs(a) for a, _ in (x - y).realize(K)] + [0.0]) / scale


def quaternion_structure(K=None) -> dict:
    """Relation table of the algebra generated by ``eps`` and ``e1, e2, e3``."""
    K = k_re() if K is None else as_matrix(K)
    B = {name: AlgebraElement.basis(name) for name in basis_words()}
    one, eps = B["1"], B["eps"]
    p_plus = 0.5 * (one + eps)
    p_minus = 0.5 * (one - eps)
    hat = {i: p_minus @ B[f"e{i}"] for i in (1, 2, 3)}
    klein = {i: p_plus @ B[f"e{i}"] for i in (1, 2, 3)}
    zero = AlgebraElement()

    rels: list = []

    def rel(name, x, y):
        if y.terms:
            r = algebra_residual(x, y, K)
        else:
            scale = max([abs(a) for c, w in x.terms for a in [c * word_value(w, K).amp]] + [1e-300])
            r = max([abs(a) for a, _ in x.realize(K)] + [0.0]) / scale
        rels.append({"relation": name, "residual": float(r), "passed": bool(r <= AMP_TOL)})

    for i in (1, 2, 3):
        rel(f"e{i}^2 = eps", B[f"e{i}"] @ B[f"e{i}"], eps)
    rel("eps^2 = 1", eps @ eps, one)
    rel("e1*e2 = e3", B["e1"] @ B["e2"], B["e3"])
    rel("e2*e3 = e1", B["e2"] @ B["e3"], B["e1"])
    rel("e3*e1 = e2", B["e3"] @ B["e1"], B["e2"])
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i != j:
                r = master_relation_check(i, j, K)
                rels.append(r)
    rel("p+ * p- = 0", p_plus @ p_minus, zero)
    rel("p+ + p- = 1", p_plus + p_minus, one)
    rel("p+ * p+ = p+", p_plus @ p_plus, p_plus)
    rel("p- * p- = p-", p_minus @ p_minus, p_minus)
    for i in (1, 2, 3):
        rel(f"ê{i}^2 = -p-", hat[i] @ hat[i], -p_minus)
    for i, j in ((1, 2), (2, 3), (3, 1)):
        rel(f"ê{i}*ê{j} = -ê{j}*ê{i}", hat[i] @ hat[j], -(hat[j] @ hat[i]))
    rel("ê1*ê2 = ê3", hat[1] @ hat[2], hat[3])
    for i in (1, 2, 3):
        rel(f"(p+ e{i})^2 = p+", klein[i] @ klein[i], p_plus)
    for i, j in ((1, 2), (2, 3), (3, 1)):
        rel(f"(p+ e{i})*(p+ e{j}) = (p+ e{j})*(p+ e{i})", klein[i] @ klein[j], klein[j] @ klein[i])
    return {
        "K": [[[float(z.real), float(z.imag)] for z in row] for row in K],
        "relations": rels,
        "passed": all(r["passed"] for r in rels),
    }


def rotation_checks(s_values, K=None) -> list:
    """Conjugation of the ``u^2+v^2`` family by quarter and half ``u o v`` exponentials.

    Quarter turn gives the ``i(u^2-v^2)`` family, half turn the ``-(u^2+v^2)``
    family, each with the path carried along by the synchronized homotopy.
    """
    K = k_re() if K is None else as_matrix(K)
    out = []
    for s in s_values:
        for turn, target, label in (
            (math.pi * 1j / 4, 1j * U2_MINUS_V2, "quarter"),
            (math.pi * 1j / 2, -U2_PLUS_V2, "half"),
        ):
            lhs = [(U_CIRC_V, turn), (U2_PLUS_V2, s), (U_CIRC_V, -turn)]
            res = _word_residual(lhs, [(target, s)], K)
            out.append({"s": complex(s), "turn": label, "residual": res, "passed": res <= AMP_TOL})
    return out


def dual_route_checks(K=None, params=(0.3, 0.7, 1.1)) -> list:
    """Compare word products against a single straight-line trace at the combined parameter."""
    K = k_re() if K is None else as_matrix(K)
    out = []
    for A, name in ((U_CIRC_V, "u o v"), (U2_PLUS_V2, "u^2+v^2"), (U2_MINUS_V2, "u^2-v^2")):
        for s in params:
            for t in params:
                prod = word_value([(A, s), (A, t)], K)
                alpha = sp_of_quadratic(A)
                direct = trace_amplitude(alpha, K, PathSpec.segment(s + t)).value
                a, q = prod.distance(direct)
                out.append({"family": name, "s": s, "t": t, "amp_residual": a, "phase_residual": q})
    return out


# sign exchange for non-commuting exponentials


@dataclass(frozen=True)
class SignReport:
    sign: str  # plus | minus | inconclusive
    zeros: tuple  # interior (sigma, tau) zeros of the product denominator
    winding: int  # total index of the interior zeros


def _square_det(alpha, beta, K):
    kappa = kappa_of(K)
    eye = np.eye(alpha.shape[0], dtype=complex)

    def h(sigma: float, tau: float) -> complex:
        with np.errstate(all="ignore"):
            E = expm(-2 * sigma * alpha) @ expm(-2 * tau * beta)
            return complex(np.linalg.det(eye - kappa + E @ (eye + kappa)))

    return h


def _winding(h, pts) -> float:
    vals = [h(*p) for p in pts]
    total = 0.0
    for a, b in zip(vals, vals[1:] + vals[:1]):
        total += cmath.phase(b / a)
    return total / (2 * math.pi)


def noncommuting_sign(alpha, beta, s: float, t: float, K, grid: int = 48) -> SignReport:
    """Sign relating ``e^{[0->s] alpha} * e^{t beta}`` to ``e^{[0->t] beta~(s)} * e^{s alpha}``.

    Zeros of ``h(sigma, tau) = det(I - k + e^{-2 sigma alpha} e^{-2 tau beta}(I + k))``
    in the open square are located by a grid search refined with Newton's
    method; each contributes its local index, and the sign is minus when the
    total index is odd.
    """
    alpha, beta, K = as_matrix(alpha), as_matrix(beta), as_matrix(K)
    h = _square_det(alpha, beta, K)
    ss = np.linspace(0, s, grid + 1)
    ts = np.linspace(0, t, grid + 1)
    vals = np.array([[abs(h(a, b)) for b in ts] for a in ss])
    cell = max(abs(s), abs(t)) / grid
    found: list = []
    for i in range(grid + 1):
        for j in range(grid + 1):
            v = vals[i, j]
            nb = vals[max(0, i - 1) : i + 2, max(0, j - 1) : j + 2]
            if v > nb.min() or v > 0.5 * np.median(vals):
                continue
            with np.errstate(all="ignore"):
                sol = root(lambda p: [h(*p).real, h(*p).imag], [ss[i], ts[j]], method="hybr")
            if not sol.success or not np.all(np.isfinite(sol.x)) or not abs(h(*sol.x)) <= 1e-10:
                continue
            z = (float(sol.x[0]), float(sol.x[1]))
            if all(abs(z[0] - y[0]) + abs(z[1] - y[1]) > 1e-6 for y in found):
                found.append(z)
    boundary = [z for z in found if min(abs(z[0]), abs(z[0] - s), abs(z[1]), abs(z[1] - t)) < 1e-9]
    inside = [z for z in found if z not in boundary and 0 < z[0] / s < 1 and 0 < z[1] / t < 1]
    if boundary:
        return SignReport("inconclusive", tuple(boundary), 0)
    index = 0
    for z in inside:
        r = 0.1 * cell
        circle = [(z[0] + r * math.cos(th), z[1] + r * math.sin(th)) for th in np.linspace(0, 2 * math.pi, 64, endpoint=False)]
        index += int(round(_winding(h, circle)))
    return SignReport("minus" if index % 2 else "plus", tuple(inside), index)


def l_path_sign(alpha, beta, s: float, t: float, K) -> str:
    """Continue ``sqrt(h)`` along the two L-shaped paths to ``(s, t)`` and compare."""
    alpha, beta, K = as_matrix(alpha), as_matrix(beta), as_matrix(K)
    h = _square_det(alpha, beta, K)

    def run(first_sigma: bool) -> complex:
        def f(z: complex) -> complex:
            return h(z.real, z.imag)

        corner = complex(s, 0) if first_sigma else complex(0, t)
        legs = [lambda x: corner * x, lambda x: corner + (complex(s, t) - corner) * x]
        return continue_sqrt(f, legs, 1.0)

    a, b = run(True), run(False)
    return "plus" if abs(a - b) < abs(a + b) else "minus"

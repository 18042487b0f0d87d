"""Gaussian elements, sp(m, C) charts and star exponentials of quadratic forms.

Conventions (checked against the exact engine in ``weyl_poly``):

* a quadratic form ``<uA, u>`` with symmetric ``A`` corresponds to the
  sp-element ``alpha = -A J`` (so ``A = alpha J``);
* a Gaussian ``g exp(<uQ, u> / i hbar)`` has sp-phase ``xi = -Q J``;
* the expression parameter ``K`` enters the chart maps through ``kappa = J K``.

All square roots in this module are principal; path-dependent signs are the
job of :mod:`weylstar.branch_tracker`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .errors import ChartError, DimensionMismatch, SingularPointError
from .linalg import (
    COND_LIMIT,
    as_matrix,
    guarded_inv,
    guarded_solve,
    half_dim,
    in_sp,
    is_symplectic,
    standard_j,
    symmetrize,
)
from .weyl_poly import ExpressionParameter, GaussianRational, WeylPolynomial

SYMMETRY_TOL = 1e-12


def kappa_of(K) -> np.ndarray:
    K = np.asarray(K, dtype=complex)
    return standard_j(half_dim(K)) @ K


def K_of(kappa) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=complex)
    return -standard_j(half_dim(kappa)) @ kappa


def sp_of_quadratic(A) -> np.ndarray:
    A = as_matrix(A)
    return -A @ standard_j(half_dim(A))


def quadratic_of_sp(alpha) -> np.ndarray:
    alpha = as_matrix(alpha)
    return symmetrize(alpha @ standard_j(half_dim(alpha)))


@dataclass(frozen=True)
class SpElement:
    """Element of sp(m, C): ``alpha J + J alpha^T = 0``."""

    alpha: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.alpha)
        if not in_sp(a):
            raise ValueError("matrix is not in sp(m, C)")
        object.__setattr__(self, "alpha", a)

    @property
    def m(self) -> int:
        return half_dim(self.alpha)

    @classmethod
    def from_quadratic(cls, A) -> "SpElement":
        return cls(sp_of_quadratic(A))

    def quadratic(self) -> np.ndarray:
        return quadratic_of_sp(self.alpha)


@dataclass(frozen=True)
class GaussianElement:
    """The function ``amp * exp(<uQ, u> / (i hbar))``.

    ``sheet`` is bookkeeping for path-dependent signs; it does not change the
    value.  The zero element is represented by ``amp == 0``.
    """

    amp: complex
    Q: np.ndarray
    sheet: int = 1

    def __post_init__(self):
        q = as_matrix(self.Q)
        scale = max(1.0, float(np.max(np.abs(q))))
        if np.max(np.abs(q - q.T)) > SYMMETRY_TOL * scale:
            raise ValueError("phase matrix Q is not symmetric")
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        object.__setattr__(self, "Q", symmetrize(q))
        object.__setattr__(self, "amp", complex(self.amp))

    @property
    def m(self) -> int:
        return half_dim(self.Q)

    @classmethod
    def one(cls, m: int) -> "GaussianElement":
        return cls(1.0, np.zeros((2 * m, 2 * m), dtype=complex))

    @classmethod
    def from_sp(cls, amp: complex, xi, sheet: int = 1) -> "GaussianElement":
        xi = as_matrix(xi)
        return cls(amp, symmetrize(xi @ standard_j(half_dim(xi))), sheet)

    def sp_phase(self) -> np.ndarray:
        return -self.Q @ standard_j(self.m)

    def group_point(self) -> "GroupPoint":
        return GroupPoint(self.amp, self.sp_phase())

    def evaluate(self, u, hbar: float = 1.0):
        u = np.asarray(u, dtype=complex)
        quad = np.einsum("...i,ij,...j->...", u, self.Q, u)
        return self.amp * np.exp(quad / (1j * hbar))

    def scaled(self, c: complex) -> "GaussianElement":
        return GaussianElement(self.amp * c, self.Q, self.sheet)

    def negated(self) -> "GaussianElement":
        return GaussianElement(-self.amp, self.Q, -self.sheet)

    def distance(self, other: "GaussianElement") -> tuple:
        """Relative amplitude residual and absolute phase residual."""
        amp_res = abs(self.amp - other.amp) / max(abs(other.amp), 1e-300)
        return amp_res, float(np.max(np.abs(self.Q - other.Q)))

    def close_to(self, other: "GaussianElement", amp_tol: float = 1e-9, phase_tol: float = 1e-9) -> bool:
        a, q = self.distance(other)
        return a <= amp_tol and q <= phase_tol


@dataclass(frozen=True)
class GroupPoint:
    """Amplitude and sp-phase pair ``(g; alpha)``."""

    amp: complex
    alpha: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_matrix(self.alpha))
        object.__setattr__(self, "amp", complex(self.amp))

    @property
    def m(self) -> int:
        return half_dim(self.alpha)

    def gaussian(self, sheet: int = 1) -> GaussianElement:
        return GaussianElement.from_sp(self.amp, self.alpha, sheet)


def _eye(m: int) -> np.ndarray:
    return np.eye(2 * m, dtype=complex)


def _check_same(*mats) -> int:
    sizes = {np.asarray(x).shape for x in mats}
    if len(sizes) != 1:
        raise DimensionMismatch(f"matrix shapes differ: {sorted(sizes)}")
    return half_dim(np.asarray(mats[0]))


def principal_sqrt(z: complex) -> complex:
    return complex(np.sqrt(complex(z)))


# Cayley charts


def cayley(kappa, alpha) -> np.ndarray:
    """Twisted Cayley transform ``(I - (I - k) a)(I + (I + k) a)^{-1}``."""
    kappa, alpha = as_matrix(kappa), as_matrix(alpha)
    m = _check_same(kappa, alpha)
    eye = _eye(m)
    num = eye - (eye - kappa) @ alpha
    den = eye + (eye + kappa) @ alpha
    # right division: num @ den^{-1} = (den^T \ num^T)^T
    return guarded_solve(den.T, num.T, "outside chart O_kappa").T


def cayley_inverse(kappa, Y) -> np.ndarray:
    """Inverse chart map ``(I - k + Y (I + k))^{-1} (I - Y)``."""
    kappa, Y = as_matrix(kappa), as_matrix(Y)
    m = _check_same(kappa, Y)
    eye = _eye(m)
    return guarded_solve(eye - kappa + Y @ (eye + kappa), eye - Y, "Y outside chart image")


def chart_translate(alpha, kappa, kappa2) -> np.ndarray:
    """Phase change between charts: ``(I - a (k2 - k))^{-1} a``."""
    alpha, kappa, kappa2 = as_matrix(alpha), as_matrix(kappa), as_matrix(kappa2)
    m = _check_same(alpha, kappa, kappa2)
    return guarded_solve(_eye(m) - alpha @ (kappa2 - kappa), alpha, "outside overlap D")


def chart_translate_inverse(alpha, kappa, kappa2) -> np.ndarray:
    alpha, kappa, kappa2 = as_matrix(alpha), as_matrix(kappa), as_matrix(kappa2)
    m = _check_same(alpha, kappa, kappa2)
    return guarded_solve(_eye(m) + alpha @ (kappa2 - kappa), alpha, "outside overlap D")


# products and intertwiners of Gaussians


def gaussian_product(A: GroupPoint, B: GroupPoint, kappa) -> GroupPoint:
    """Closed-form star product of two Gaussian group points in chart ``kappa``.

    The amplitude carries the principal value of ``det(P)^{-1/2}``.
    """
    kappa = as_matrix(kappa)
    m = _check_same(A.alpha, B.alpha, kappa)
    eye = _eye(m)
    a, b = A.alpha, B.alpha
    P = eye + a @ (eye - kappa) @ b @ (eye + kappa)
    Q = a + b + 2 * a @ kappa @ b
    msg = "product undefined in this expression; re-express via chart_translate"
    right = guarded_inv(eye + (eye + kappa) @ b, msg)
    phase = (eye + b @ (eye + kappa)) @ guarded_solve(P, Q, msg) @ right
    amp = A.amp * B.amp / principal_sqrt(np.linalg.det(P))
    return GroupPoint(amp, phase)


def product_determinant(A: GroupPoint, B: GroupPoint, kappa) -> complex:
    """``det P`` of :func:`gaussian_product`, without inverting anything."""
    kappa = as_matrix(kappa)
    m = _check_same(A.alpha, B.alpha, kappa)
    eye = _eye(m)
    return complex(np.linalg.det(eye + A.alpha @ (eye - kappa) @ B.alpha @ (eye + kappa)))


def gaussian_star(e1: GaussianElement, e2: GaussianElement, K) -> GaussianElement:
    """Star product of two Gaussians in the K-expression (principal root)."""
    out = gaussian_product(e1.group_point(), e2.group_point(), kappa_of(K))
    return out.gaussian()


def intertwine_gaussian(e: GaussianElement, kappa, kappa2) -> GaussianElement:
    """Move a Gaussian from the kappa-expression to the kappa2-expression."""
    kappa, kappa2 = as_matrix(kappa), as_matrix(kappa2)
    m = _check_same(e.Q, kappa, kappa2)
    alpha = e.sp_phase()
    den = _eye(m) - alpha @ (kappa2 - kappa)
    new_alpha = guarded_solve(den, alpha, "parallel section leaves chart")
    amp = e.amp / principal_sqrt(np.linalg.det(den))
    return GaussianElement.from_sp(amp, new_alpha, e.sheet)


# infinitesimal action and integral manifolds


def infinitesimal_action(A, g: complex, Q, K) -> tuple:
    """Left multiplication by ``(1/i hbar) :<uA, u>:_K`` on ``g exp(<uQ,u>/i hbar)``.

    Returns ``(rate, Q')`` such that the product equals
    ``(rate + g <uQ'u>/(i hbar)) exp(<uQ,u>/i hbar)``; ``rate`` is ``g`` times
    the trace coefficient.
    """
    A, Q, K = as_matrix(A), as_matrix(Q), as_matrix(K)
    m = _check_same(A, Q, K)
    J = standard_j(m)
    coef = 0.5 * np.trace((K - J) @ A @ (K + J) @ Q + A @ K)
    Qp = A + A @ (K + J) @ Q + Q @ (K - J) @ A + Q @ (K - J) @ A @ (K + J) @ Q
    return complex(g * coef), symmetrize(Qp)


def infinitesimal_phase_sp(alpha, xi, kappa) -> np.ndarray:
    """sp-form of the phase increment: ``(I + xi(I+k)) alpha (I - (I-k) xi)``."""
    alpha, xi, kappa = as_matrix(alpha), as_matrix(xi), as_matrix(kappa)
    eye = _eye(_check_same(alpha, xi, kappa))
    return (eye + xi @ (eye + kappa)) @ alpha @ (eye - (eye - kappa) @ xi)


def integral_manifold_amplitude(alpha, kappa) -> complex:
    """Principal ``sqrt(det(I + alpha (I + kappa)))``."""
    alpha, kappa = as_matrix(alpha), as_matrix(kappa)
    eye = _eye(_check_same(alpha, kappa))
    if np.linalg.cond(eye + (eye + kappa) @ alpha) > 1e12:
        raise ChartError("outside chart O_kappa")
    return principal_sqrt(np.linalg.det(eye + alpha @ (eye + kappa)))


def on_integral_manifold(e: GaussianElement, kappa, rtol: float = 1e-9) -> bool:
    """True if the amplitude is +- the integral-manifold amplitude of its phase."""
    ref = integral_manifold_amplitude(e.sp_phase(), kappa)
    return min(abs(e.amp - ref), abs(e.amp + ref)) <= rtol * abs(ref)


# star exponentials of quadratic forms


def exp_quad_denominator(alpha, t: complex, K) -> tuple:
    """Return ``(B, N)``: ``B = P (I - k) + P^-1 (I + k)`` and ``N = P - P^-1``
    with ``P = exp(t alpha)``.

    ``B = P D`` for ``D = I - k + exp(-2t alpha)(I + k)``, so ``det B = det D``
    and the phase is ``B^-1 N``.  Splitting the exponential this way keeps both
    sides at size ``e^|t|`` instead of ``e^2|t|``, which matters far out along
    the imaginary axis.
    """
    alpha, K = as_matrix(alpha), as_matrix(K)
    m = _check_same(alpha, K)
    kappa = kappa_of(K)
    eye = _eye(m)
    P = expm(complex(t) * alpha)
    Pinv = expm(-complex(t) * alpha)
    return P @ (eye - kappa) + Pinv @ (eye + kappa), P - Pinv


def exp_quad_det(alpha, t: complex, K) -> complex:
    """``det(I - k + exp(-2 t alpha)(I + k)) / 4^m``; equals 1 at ``t = 0``."""
    B, _ = exp_quad_denominator(alpha, t, K)
    return complex(np.linalg.det(B)) / 4 ** half_dim(B)


def exp_quad(alpha, t: complex, K, hbar: float = 1.0) -> GaussianElement:
    """K-expression of ``exp_*(t <u alpha J, u> / i hbar)`` (principal amplitude).

    ``hbar`` does not enter the amplitude or phase matrix; it only fixes how
    the returned element is evaluated.
    """
    B, N = exp_quad_denominator(alpha, t, K)
    m = half_dim(B)
    # B can be a tiny multiple of a well-conditioned matrix (scalar K), which
    # the condition-number guard misses; compare against the size of N too
    scale = max(1.0, np.linalg.norm(B, 2), np.linalg.norm(N, 2))
    if np.linalg.svd(B, compute_uv=False)[-1] <= COND_LIMIT**-1 * scale:
        raise SingularPointError("singular point of *-exponential", t=complex(t))
    try:
        xi = guarded_solve(B, N, "singular point of *-exponential")
    except ChartError as exc:
        raise SingularPointError(str(exc), t=complex(t)) from exc
    amp = 2**m / principal_sqrt(np.linalg.det(B))
    return GaussianElement.from_sp(amp, xi)


def exp_quad_amplitude(alpha, t: complex, K) -> complex:
    """Principal-branch amplitude, defined right up to the singular points."""
    return 1.0 / principal_sqrt(exp_quad_det(alpha, t, K))


def delta_K(t: complex, M) -> complex:
    """``det(cos t I + sin t M)``."""
    M = as_matrix(M)
    n = M.shape[0]
    return complex(np.linalg.det(np.cos(t) * np.eye(n) + np.sin(t) * M))


def rotation_matrix(g, K) -> np.ndarray:
    """The matrix ``M`` with ``delta_K(t, M) = 4^-m det(I - k + exp(-2t alpha)(I + k))``
    for ``alpha`` the sp-image of ``<ug, ug>``; it is ``-g^T K g``."""
    g, K = as_matrix(g), as_matrix(K)
    return -g.T @ K @ g


def ad_matrix(A) -> np.ndarray:
    """Matrix ``M`` with ``[<uA,u>/(2 i hbar), <a,u>] = <a M, u>``.

    Equals ``-J A``; for m = 1 and ``A = [[a, c], [c, b]]`` the operator
    ``ad((i/2 hbar)<uA,u>)`` acts on the column ``(u, v)`` by ``J A``.
    """
    A = as_matrix(A)
    return -standard_j(half_dim(A)) @ A


def adjoint_orbit(a, alpha, t: complex) -> np.ndarray:
    """Covector ``b`` with ``Ad(exp_*(t <u alpha J,u>/2 i hbar)) <a,u> = <b,u>``.

    As a column vector ``b = exp(-t alpha) a``.
    """
    alpha = as_matrix(alpha)
    return expm(-complex(t) * alpha) @ np.asarray(a, dtype=complex)


# change of generators


def change_generators(e, S, K):
    """Re-express ``e`` in the generators ``u' = u S``.

    Returns ``(e', K')`` with ``K' = S^T K S``.  Works for
    :class:`GaussianElement` (numeric ``S``, ``K``) and for
    :class:`WeylPolynomial` (exact ``S`` entries, ``ExpressionParameter`` K).
    """
    if isinstance(e, WeylPolynomial):
        return _change_poly(e, S, K)
    S, K = as_matrix(S), as_matrix(K)
    _check_same(S, K, e.Q)
    if not is_symplectic(S):
        raise ValueError("S is not symplectic")
    S_inv = np.linalg.inv(S)
    return GaussianElement(e.amp, S_inv @ e.Q @ S_inv.T, e.sheet), S.T @ K @ S


def _change_poly(f: WeylPolynomial, S, K: ExpressionParameter):
    n = 2 * f.m
    S = [[GaussianRational.coerce(x) for x in row] for row in S]
    if len(S) != n or K.m != f.m:
        raise DimensionMismatch("S, K and f must share m")
    J = [[0] * n for _ in range(n)]
    for i in range(f.m):
        J[i][i + f.m] = GaussianRational(-1)
        J[i + f.m][i] = GaussianRational(1)
    J = [[GaussianRational.coerce(x) for x in r] for r in J]

    def mul(X, Y):
        return [[sum((X[i][k] * Y[k][j] for k in range(n)), GaussianRational(0)) for j in range(n)] for i in range(n)]

    St = [[S[j][i] for j in range(n)] for i in range(n)]
    if mul(mul(St, J), S) != J:
        raise ValueError("S is not symplectic")
    # S^{-1} = -J S^T J
    S_inv = [[-x for x in r] for r in mul(mul(J, St), J)]
    # u_i = sum_j u'_j (S^{-1})_{ji}
    subs = []
    for i in range(n):
        lin = WeylPolynomial(f.m)
        for j in range(n):
            if S_inv[j][i]:
                lin = lin + WeylPolynomial.generator(j, f.m) * S_inv[j][i]
        subs.append(lin)
    out = WeylPolynomial(f.m)
    for exps, c in f.terms.items():
        term = WeylPolynomial.constant(c, f.m)
        for i, p in enumerate(exps):
            for _ in range(p):
                term = term.pointwise_mul(subs[i])
        out = out + term
    K2 = ExpressionParameter(mul(mul(St, [list(r) for r in K.K]), S))
    return out, K2


# mixed polynomial-Gaussian product (oracle for the closed forms)


def _numeric_terms(p, hbar: float) -> dict:
    if isinstance(p, WeylPolynomial):
        return {e: c.evaluate(hbar) for e, c in p.terms.items()}
    return {tuple(e): complex(c) for e, c in p.items()}


def _d(poly: dict, i: int) -> dict:
    out = {}
    for e, c in poly.items():
        if e[i]:
            e2 = e[:i] + (e[i] - 1,) + e[i + 1 :]
            out[e2] = out.get(e2, 0) + c * e[i]
    return out


def _add(p: dict, q: dict, scale: complex = 1.0) -> dict:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0) + scale * c
    return out


def _times_linear(p: dict, vec: np.ndarray) -> dict:
    out: dict = {}
    for e, c in p.items():
        for k, w in enumerate(vec):
            if w != 0:
                e2 = e[:k] + (e[k] + 1,) + e[k + 1 :]
                out[e2] = out.get(e2, 0) + c * w
    return out


def _eval_terms(p: dict, u: np.ndarray):
    total = np.zeros(u.shape[:-1], dtype=complex)
    for e, c in p.items():
        mono = np.ones(u.shape[:-1], dtype=complex)
        for k, q in enumerate(e):
            if q:
                mono = mono * u[..., k] ** q
        total = total + c * mono
    return total


def poly_star_gaussian(p, e: GaussianElement, K, hbar: float = 1.0) -> Callable:
    """Evaluator of ``p *_K e`` for a polynomial ``p`` and a Gaussian ``e``.

    Uses the terminating bidifferential sum::

        p * G = sum_beta (i hbar/2)^|beta| / beta! (d^beta p) (D^beta G),
        D_i = sum_j Lambda_ij d_j,   Lambda = K + J,

    with ``D^beta G`` kept as (polynomial) * G.
    """
    K = as_matrix(K)
    m = _check_same(K, e.Q)
    n = 2 * m
    lam = K + standard_j(m)
    terms = _numeric_terms(p, hbar)
    deg = max((sum(x) for x in terms), default=0)
    # row i of Lambda Q, times 2/(i hbar), is the linear factor of D_i G
    LQ = (2.0 / (1j * hbar)) * (lam @ e.Q)

    def apply_D(R: dict, i: int) -> dict:
        out: dict = {}
        for j in range(n):
            if lam[i, j] != 0:
                out = _add(out, _d(R, j), lam[i, j])
        return _add(out, _times_linear(R, LQ[i]))

    zero = (0,) * n
    pieces = []  # (coefficient, derivative of p, polynomial factor of G)
    frontier = {zero: ({zero: 1.0 + 0j}, terms, 1.0 + 0j)}
    for order in range(deg + 1):
        nxt = {}
        for beta, (R, dp, weight) in frontier.items():
            if dp:
                pieces.append((weight, dp, R))
            for i in range(n):
                if i < max((k for k, b in enumerate(beta) if b), default=0):
                    continue  # enumerate each multi-index once (nondecreasing)
                b2 = beta[:i] + (beta[i] + 1,) + beta[i + 1 :]
                dp2 = _d(dp, i)
                if not dp2:
                    continue
                w2 = weight * (0.5j * hbar) / b2[i]
                nxt[b2] = (apply_D(R, i), dp2, w2)
        frontier = nxt
        if not frontier:
            break

    def evaluate(u):
        u = np.asarray(u, dtype=complex)
        total = np.zeros(u.shape[:-1], dtype=complex)
        for w, dp, R in pieces:
            total = total + w * _eval_terms(dp, u) * _eval_terms(R, u)
        return total * e.evaluate(u, hbar)

    return evaluate


# random samplers


def random_sp(rng: np.random.Generator, m: int = 1, scale: float = 1.0) -> np.ndarray:
    """Random element of sp(m, C) as ``-A J`` with ``A`` complex symmetric."""
    X = rng.normal(size=(2 * m, 2 * m)) + 1j * rng.normal(size=(2 * m, 2 * m))
    return sp_of_quadratic(scale * 0.5 * (X + X.T))


def random_generic_K(rng: np.random.Generator, m: int = 1, box: float = 1.0) -> np.ndarray:
    """Complex symmetric K with entries uniform in ``[-box, box]^2``, kept generic.

    Resampled until ``|det K| > 1e-6``, the eigenvalues of K are separated by
    more than 1e-4, and no eigenvalue ``b`` has ``|(1+b)/(1-b)|`` within 1e-4 of 1.
    """
    n = 2 * m
    while True:
        X = rng.uniform(-box, box, size=(n, n)) + 1j * rng.uniform(-box, box, size=(n, n))
        K = np.triu(X) + np.triu(X, 1).T
        if abs(np.linalg.det(K)) <= 1e-6:
            continue
        ev = np.linalg.eigvals(K)
        if n > 1 and min(abs(a - b) for i, a in enumerate(ev) for b in ev[i + 1 :]) <= 1e-4:
            continue
        if any(abs(1 - b) < 1e-9 or abs(abs((1 + b) / (1 - b)) - 1) <= 1e-4 for b in ev):
            continue
        return K

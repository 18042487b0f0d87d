"""Verification suites run by ``weylstar verify``.

Every check records its residual and tolerance; a suite passes when all of
its checks do.  Random draws come from one ``numpy`` generator seeded by the
caller (the CLI reads ``WEYLSTAR_SEED``).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import branch_tracker as bt
from . import lin_exp as le
from . import polar_algebra as pa
from . import quad_group as qg
from .errors import NumericalDomainError
from .weyl_poly import (
    ExpressionParameter,
    GaussianRational,
    HbarScalar,
    WeylPolynomial,
    commutator,
    intertwine_poly,
    star_polyval,
    star_product,
)

SUITES = ("verify-poly", "verify-linexp", "verify-quad", "verify-branch", "verify-polar")


def _check(name: str, residual: float, tol: float) -> dict:
    residual = float(residual)
    return {"check": name, "residual": residual, "tol": tol, "passed": bool(residual <= tol)}


def _exact_check(name: str, ok: bool) -> dict:
    return {"check": name, "residual": 0.0 if ok else 1.0, "tol": 0.0, "passed": bool(ok)}


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1e-300, float(np.max(np.abs(b)))))


# random exact data


def random_gaussian_rational(rng: np.random.Generator, bound: int = 3) -> GaussianRational:
    def q():
        return Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))

    return GaussianRational(q(), q())


def random_polynomial(rng: np.random.Generator, m: int, degree: int = 4, n_terms: int = 4) -> WeylPolynomial:
    terms = {}
    for _ in range(n_terms):
        d = int(rng.integers(0, degree + 1))
        exps = [0] * (2 * m)
        for _ in range(d):
            exps[int(rng.integers(0, 2 * m))] += 1
        coeffs = [random_gaussian_rational(rng) for _ in range(int(rng.integers(1, 3)))]
        terms[tuple(exps)] = HbarScalar(coeffs)
    return WeylPolynomial(m, terms)


def random_expression_parameter(rng: np.random.Generator, m: int) -> ExpressionParameter:
    n = 2 * m
    rows = [[GaussianRational(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = random_gaussian_rational(rng, 2)
    return ExpressionParameter(rows)


# suites


def suite_poly(rng: np.random.Generator, n: int = 8) -> list:
    out = []
    u, v = WeylPolynomial.generators(1)
    ih = WeylPolynomial.hbar(1) * GaussianRational(0, 1)
    for name, K in (("0", ExpressionParameter.zero(1)), ("I", ExpressionParameter.identity(1)), ("K0", ExpressionParameter.normal(1))):
        out.append(_exact_check(f"[u,v] = -i hbar, K={name}", commutator(u, v, K) == -ih))
    ok_assoc = ok_hom = ok_cocycle = ok_conj = ok_skew = ok_comm = True
    for k in range(n):
        m = 1 + k % 2
        K1, K2, K3 = (random_expression_parameter(rng, m) for _ in range(3))
        f, g, h = (random_polynomial(rng, m, 3, 3) for _ in range(3))
        ok_assoc &= star_product(star_product(f, g, K1), h, K1) == star_product(f, star_product(g, h, K1), K1)
        ok_hom &= intertwine_poly(star_product(f, g, K1), K1, K2) == star_product(
            intertwine_poly(f, K1, K2), intertwine_poly(g, K1, K2), K2
        )
        ok_cocycle &= intertwine_poly(intertwine_poly(f, K1, K2), K2, K3) == intertwine_poly(f, K1, K3)
        Z = ExpressionParameter.zero(m)
        lhs = intertwine_poly(star_product(intertwine_poly(f, K2, Z), intertwine_poly(g, K2, Z), K1), Z, K2)
        ok_conj &= lhs == star_product(f, g, K1 + K2)
        lin = random_polynomial(rng, m, 1, 3)
        ok_skew &= commutator(lin, g, K1) == commutator(lin, g, ExpressionParameter.zero(m))
        ok_comm &= intertwine_poly(commutator(f, g, K1), K1, K2) == commutator(
            intertwine_poly(f, K1, K2), intertwine_poly(g, K1, K2), K2
        )
    out.append(_exact_check("associativity", ok_assoc))
    out.append(_exact_check("intertwiner homomorphism", ok_hom))
    out.append(_exact_check("intertwiner cocycle", ok_cocycle))
    out.append(_exact_check("conjugation identity", ok_conj))
    out.append(_exact_check("commutator with a linear form depends only on J", ok_skew))
    out.append(_exact_check("intertwiner maps commutators to commutators", ok_comm))
    K0 = ExpressionParameter.zero(1)
    ok_bump = True
    for _ in range(3):
        coeffs = [random_gaussian_rational(rng) for _ in range(4)]
        vu = star_product(v, u, K0)
        uv = star_product(u, v, K0)
        ok_bump &= star_product(u, star_polyval(coeffs, vu, K0), K0) == star_product(star_polyval(coeffs, uv, K0), u, K0)
    out.append(_exact_check("bumping identity", ok_bump))
    uov = (star_product(u, v, K0) + star_product(v, u, K0)) * GaussianRational(Fraction(1, 2))
    half = GaussianRational(0, Fraction(1, 2))
    hb = WeylPolynomial.hbar(1)
    lhs = star_product(star_product(u, star_product(u, v, K0), K0), v, K0)
    rhs = star_product(uov - hb * half, uov - hb * (half * 3), K0)
    out.append(_exact_check("u*(u*v)*v = (uov - i hbar/2)*(uov - 3 i hbar/2)", lhs == rhs))
    lhs = star_product(star_product(v, star_product(v, u, K0), K0), u, K0)
    rhs = star_product(uov + hb * half, uov + hb * (half * 3), K0)
    out.append(_exact_check("v*(v*u)*u = (uov + i hbar/2)*(uov + 3 i hbar/2)", lhs == rhs))
    return out


def suite_linexp(rng: np.random.Generator, n: int = 10, hbar: float = 1.0) -> list:
    out = []
    res_law = res_int = res_evo = 0.0
    for _ in range(n):
        K = qg.random_generic_K(rng, 1)
        K2 = qg.random_generic_K(rng, 1)
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        s, t = rng.normal(), rng.normal()
        scalar, prod = le.linexp_product(le.LinearExponential(a, s), le.LinearExponential(a, t), K, hbar)
        res_law = max(res_law, abs(scalar - 1), float(np.max(np.abs(prod.covector - (s + t) * a))))
        e = le.LinearExponential(a, s)
        amp1, _ = le.linexp_k_expression(e, K, hbar)
        amp2, _ = le.linexp_k_expression(e, K2, hbar)
        res_int = max(res_int, abs(amp1 * le.linexp_intertwine_factor(e, K, K2, hbar) - amp2) / abs(amp2))
        # d/ds of the K-expression against <a,u>/(i hbar) * (.)
        h = 1e-5
        x = complex(rng.normal())
        c = complex(a @ K @ a)

        def field(sv):
            return le.ScalarField1D(
                lambda y: np.exp(sv * sv * c / (4j * hbar) + sv * np.asarray(y) / (1j * hbar)),
                lambda y: sv / (1j * hbar) * np.exp(sv * sv * c / (4j * hbar) + sv * np.asarray(y) / (1j * hbar)),
            )

        deriv = (field(s + h)(x) - field(s - h)(x)) / (2 * h)
        rhs = le.reduced_1d_product(a, K, field(s), hbar)(x) / (1j * hbar)
        res_evo = max(res_evo, abs(deriv - rhs) / abs(rhs))
    out.append(_check("exponential law (collinear)", res_law, 1e-12))
    out.append(_check("intertwiner consistency", res_int, 1e-12))
    out.append(_check("evolution equation", res_evo, 1e-6))
    a = np.array([1.0, 0.0])
    K = -1j * np.eye(2)
    grid = np.linspace(-3, 3, 20)
    d = le.delta_kernel(a, K, hbar)
    out.append(_check("delta annihilation", np.max(np.abs(le.reduced_1d_product(a, K, d, hbar)(grid))), 1e-10))
    for side in ("plus", "minus"):
        inv = le.one_sided_inverse(a, K, side, hbar)
        r = np.max(np.abs(le.reduced_1d_product(a, K, inv, hbar)(grid) / (1j * hbar) - 1))
        out.append(_check(f"one-sided inverse ({side})", r, 1e-6))
    left, right, unit = le.associativity_witness(a, K, grid, hbar)
    out.append(_check("inner products of the witness are 1", unit, 1e-6))
    out.append(_check("witness = -2 pi hbar delta", np.max(np.abs(left - right + 2 * np.pi * hbar * d(grid))), 1e-10))
    out.append(_check("witness is nonzero", 0.1 / max(float(np.max(np.abs(left - right))), 1e-300), 1.0))
    return out


def suite_quad(rng: np.random.Generator, n: int = 10) -> list:
    out = []
    lem22 = evo = law = cay = pdet = adj = chart = 0.0
    for k in range(n):
        m = 1 + k % 2
        K = qg.random_generic_K(rng, m)
        kappa = qg.kappa_of(K)
        eye = np.eye(2 * m)
        xi = qg.random_sp(rng, m, 0.3)
        d1 = np.linalg.det(eye + xi @ (eye + kappa))
        d2 = np.linalg.det(eye - (eye - kappa) @ xi)
        d3 = np.linalg.det(eye - xi @ (eye - kappa))
        lem22 = max(lem22, abs(d1 - d2) / abs(d1), abs(d1 - d3) / abs(d1))
        alpha = qg.random_sp(rng, m, 0.3)
        A = qg.quadratic_of_sp(alpha)
        t, h = 0.3 * rng.uniform(0.2, 1.0), 1e-5
        e = qg.exp_quad(alpha, t, K)
        ep, em = qg.exp_quad(alpha, t + h, K), qg.exp_quad(alpha, t - h, K)
        d_amp = (ep.amp - em.amp) / (2 * h)
        d_Q = (ep.amp * ep.Q - em.amp * em.Q) / (2 * h)
        rate, Qp = qg.infinitesimal_action(A, e.amp, e.Q, K)
        evo = max(evo, abs(d_amp - rate) / abs(rate), _rel(d_Q, rate * e.Q + e.amp * Qp))
        s = 0.2 * rng.uniform(0.1, 1.0)
        prod = qg.gaussian_star(qg.exp_quad(alpha, s, K), e, K)
        a_res, q_res = prod.distance(qg.exp_quad(alpha, s + t, K))
        law = max(law, a_res, q_res)
        Y = qg.cayley(kappa, xi)
        cay = max(cay, float(np.max(np.abs(qg.cayley_inverse(kappa, Y) - xi))))
        beta = qg.random_sp(rng, m, 0.3)
        P = eye + xi @ (eye - kappa) @ beta @ (eye + kappa)
        Qm = xi + beta + 2 * xi @ kappa @ beta
        lhs = np.linalg.det(P + Qm @ (eye + kappa))
        rhs = np.linalg.det(eye + xi @ (eye + kappa)) * np.linalg.det(eye + beta @ (eye + kappa))
        pdet = max(pdet, abs(lhs - rhs) / abs(rhs))
        E = qg.expm(-2 * t * alpha)
        chart = max(chart, float(np.max(np.abs(e.sp_phase() - qg.cayley_inverse(kappa, E)))))
        a = rng.normal(size=2 * m)
        two = qg.adjoint_orbit(qg.adjoint_orbit(a, alpha, s), alpha, t)
        adj = max(adj, float(np.max(np.abs(two - qg.adjoint_orbit(a, alpha, s + t)))))
    out.append(_check("determinant identities", lem22, 1e-10))
    out.append(_check("evolution equation", evo, 1e-6))
    out.append(_check("exponential law", law, 1e-9))
    out.append(_check("Cayley round trip", cay, 1e-10))
    out.append(_check("det(P + Q(I+k)) factorization", pdet, 1e-9))
    out.append(_check("exp_quad phase is the chart image of exp(-2t alpha)", chart, 1e-9))
    out.append(_check("adjoint homomorphism", adj, 1e-12))
    return out


def suite_branch(rng: np.random.Generator, hbar: float = 1.0) -> list:
    out = []
    for m in (1, 2):
        alpha = qg.sp_of_quadratic(np.eye(2 * m))
        val = bt.trace_amplitude(alpha, np.zeros((2 * m, 2 * m)), bt.PathSpec.segment(math.pi), hbar)
        out.append(_check(f"Weyl endpoint (-1)^m, m={m}", abs(val.value.amp - (-1) ** m), 1e-9))
    sq = 0.0
    for _ in range(5):
        K = qg.random_generic_K(rng, 1)
        g = bt.random_sl2(rng, 0.5)
        alpha = qg.sp_of_quadratic(g @ g.T)
        smap = bt.find_singularities(alpha, K)
        if any(abs(a.imag) < 1e-6 for a in smap.branching):
            continue
        v1 = bt.trace_amplitude(alpha, K, bt.PathSpec.segment(math.pi), hbar, smap).value.amp
        v2 = bt.trace_amplitude(alpha, K, bt.PathSpec.segment(2 * math.pi), hbar, smap).value.amp
        sq = max(sq, abs(v1 * v1 - v2))
    out.append(_check("(value at pi)^2 = value at 2 pi", sq, 1e-9))
    families = (("2uov", 2 * pa.U_CIRC_V), ("u^2+v^2", pa.U2_PLUS_V2), ("u^2-v^2", pa.U2_MINUS_V2))
    for name, A in families:
        rep = bt.classify_periodicity(qg.sp_of_quadratic(A), pa.k_re(), hbar)
        out.append(_exact_check(f"K_re {name}: pi_periodic", rep.label == "pi_periodic"))
    for name, A in families[:2]:
        rep = bt.classify_periodicity(qg.sp_of_quadratic(A), pa.k_im(), hbar)
        out.append(_exact_check(f"K_im {name}: alternating_pi", rep.label == "alternating_pi"))
    # with K_im the u^2-v^2 family has its branching anchors on the real
    # tau-line for every real rho, c (the relevant eigenvalues are real)
    rep = bt.classify_periodicity(qg.sp_of_quadratic(pa.U2_MINUS_V2), pa.k_im(), hbar)
    out.append(_exact_check("K_im u^2-v^2: singular_on_line", rep.label == "singular_on_line"))
    K = qg.random_generic_K(rng, 1)
    anchors = 0.0
    for _ in range(3):
        g = bt.random_sl2(rng, 0.5)
        smap = bt.find_singularities(qg.sp_of_quadratic(g @ g.T), K)
        for a in smap.anchors:
            anchors = max(anchors, abs(qg.delta_K(a, smap.M)))
    out.append(_check("anchors are zeros of delta_K", anchors, 1e-9))
    return out


def suite_polar(rng: np.random.Generator) -> list:
    out = []
    table = pa.quaternion_structure()
    for r in table["relations"]:
        out.append(_check(r["relation"], r["residual"], pa.AMP_TOL))
    for r in pa.rotation_checks([0.4, 1.3]):
        out.append(_check(f"rotation ({r['turn']}) s={r['s'].real:g}", r["residual"], pa.AMP_TOL))
    dual = max(max(d["amp_residual"], d["phase_residual"]) for d in pa.dual_route_checks())
    out.append(_check("word products agree with direct traces", dual, 1e-9))
    K = pa.k_re()
    worst = 0.0
    for _ in range(10):
        g = bt.random_sl2(rng, 0.3)
        try:
            el = pa.polar_element(g, K)
        except NumericalDomainError:
            continue
        a, q = el.residuals(K)
        worst = max(worst, a, q)
    out.append(_check("polar element phase -K^-1 and amplitude^2 det K = 1", worst, 1e-9))
    el = pa.polar_element(np.eye(2), K)
    a, q = el.gaussian.distance(pa.k_re_polar_formula())
    out.append(_check("K_re polar closed form", max(a, q), 1e-9))
    return out


def run_suite(name: str, seed: int = 0) -> tuple:
    """Run ``name`` (one of :data:`SUITES` or ``all``); returns ``(ok, report)``."""
    names = SUITES if name == "all" else (name,)
    if any(n not in SUITES for n in names):
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    runners = {
        "verify-poly": suite_poly,
        "verify-linexp": suite_linexp,
        "verify-quad": suite_quad,
        "verify-branch": suite_branch,
        "verify-polar": suite_polar,
    }
    report = {"seed": seed, "suites": {}}
    ok = True
    for n in names:
        checks = runners[n](np.random.default_rng(seed))
        passed = all(c["passed"] for c in checks)
        ok &= passed
        report["suites"][n] = {"passed": passed, "checks": checks}
    report["passed"] = ok
    return ok, report

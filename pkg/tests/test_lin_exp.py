import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from weylstar import lin_exp as le
from weylstar.errors import DimensionMismatch, SiegelConditionError

SIEGEL = -1j * np.eye(2)
A1 = np.array([1.0, 0.0])


def _quad_c(fn, lo, hi):
    re = integrate.quad(lambda t: fn(t).real, lo, hi, epsabs=1e-13, limit=200)[0]
    im = integrate.quad(lambda t: fn(t).imag, lo, hi, epsabs=1e-13, limit=200)[0]
    return re + 1j * im


def _integrand(a, K, x, hbar=1.0):
    c = complex(a @ K @ a)
    return lambda t: np.exp(t * t * c / (4j * hbar) + t * x / (1j * hbar))


def test_canonical_form():
    e = le.LinearExponential(np.array([0, -2j]), 3.0)
    assert abs(np.linalg.norm(e.a) - 1) < 1e-15
    assert e.a[1].real > 0 and abs(e.a[1].imag) < 1e-15
    assert np.allclose(e.covector, [0, -6j])
    assert e.same_as(le.LinearExponential.from_covector([0, -6j]))
    assert le.LinearExponential.from_json(e.to_json()).same_as(e)


def test_k_expression_examples():
    e = le.LinearExponential(A1, 1.0)
    amp, b = le.linexp_k_expression(e, np.zeros((2, 2)))
    assert amp == 1 and np.allclose(b, A1)
    amp, b = le.linexp_k_expression(le.LinearExponential(A1, 0.0), SIEGEL)
    assert amp == 1 and np.allclose(b, 0)
    k = 0.7 - 0.2j
    amp, _ = le.linexp_k_expression(e, np.diag([k, 0]), hbar=0.5)
    assert abs(amp - cmath.exp(k / (4j * 0.5))) < 1e-15


def test_k_expression_solves_the_evolution_equation():
    # d/ds of the K-expression at x equals (<a,u> * f_s)(x) / i hbar
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        K = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        K = K + K.T
        hbar = rng.uniform(0.3, 2.0)
        u = rng.normal(size=2)
        s, h = rng.normal(), 1e-5

        def f(sv):
            return le.k_expression_evaluator(le.LinearExponential(a, sv), K, hbar)(u)

        deriv = (f(s + h) - f(s - h)) / (2 * h)
        # <a,u> * g for g = amp e^{<b,u>/i hbar}: multiply by <a,u> + (i hbar/2) a(K+J) grad
        c = complex(a @ K @ a)
        rhs = (a @ u + 0.5j * hbar * c * s / (1j * hbar)) * f(s) / (1j * hbar)
        assert abs(deriv - rhs) <= 1e-6 * abs(rhs)


def test_product_examples():
    e1 = le.LinearExponential(np.array([1.0, 0.0]), 1.0)
    e2 = le.LinearExponential(np.array([0.0, 1.0]), 1.0)
    scalar, e = le.linexp_product(e1, e2, SIEGEL)
    assert abs(scalar - cmath.exp(0.5j)) < 1e-15
    assert np.allclose(e.covector, [1, 1])
    zero = le.LinearExponential(np.zeros(2), 0.0)
    scalar, e = le.linexp_product(zero, e2)
    assert scalar == 1 and e.same_as(e2)
    with pytest.raises(DimensionMismatch):
        le.linexp_product(e1, le.LinearExponential(np.ones(4), 1.0))


@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
)
@settings(max_examples=50, deadline=None)
def test_collinear_exponential_law(s, t, a0, a1):
    a = np.array([a0, a1])
    if np.linalg.norm(a) < 1e-6:
        return
    scalar, e = le.linexp_product(le.LinearExponential(a, s), le.LinearExponential(a, t))
    assert abs(scalar - 1) < 1e-12
    assert np.allclose(e.covector, (s + t) * a, atol=1e-12)


def test_intertwiner_consistency():
    rng = np.random.default_rng(1)
    for _ in range(10):
        e = le.LinearExponential(rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal())
        K, K2 = (rng.normal(size=(2, 2)) for _ in range(2))
        K, K2 = K + K.T, K2 + K2.T
        a1, _ = le.linexp_k_expression(e, K)
        a2, _ = le.linexp_k_expression(e, K2)
        assert abs(a1 * le.linexp_intertwine_factor(e, K, K2) - a2) <= 1e-12 * abs(a2)


def test_translation_examples():
    s = 0.8
    e = le.LinearExponential(A1, s)
    pts = np.array([[0.3, -0.4], [1.1, 0.2], [-0.5, 0.9]])
    f = lambda u: u[..., 1]  # noqa: E731
    left = le.translate_product(e, f, np.zeros((2, 2)), "left")(pts)
    assert np.allclose(left, np.exp(s * pts[:, 0] / 1j) * (pts[:, 1] - s / 2))
    right = le.translate_product(e, f, np.zeros((2, 2)), "right")(pts)
    assert np.allclose(right, np.exp(s * pts[:, 0] / 1j) * (pts[:, 1] + s / 2))
    one = lambda u: np.ones(u.shape[:-1])  # noqa: E731
    assert np.allclose(le.translate_product(e, one, SIEGEL)(pts), np.exp(s * pts[:, 0] / 1j))
    with pytest.raises(ValueError):
        le.translate_product(e, one, SIEGEL, "middle")


def test_translation_of_the_linear_form_agrees_on_both_sides():
    rng = np.random.default_rng(2)
    a = rng.normal(size=2)
    K = rng.normal(size=(2, 2))
    K = K + K.T
    e = le.LinearExponential(a, 0.6)
    f = lambda u: u @ a  # noqa: E731
    xs = np.linspace(-1, 1, 10)
    grid = np.array([[x, y] for x in xs for y in xs])
    left = le.translate_product(e, f, K, "left")(grid)
    right = le.translate_product(e, f, K, "right")(grid)
    assert np.max(np.abs(left - right)) < 1e-12


def test_delta_star_matches_quadrature():
    K = SIEGEL
    d = le.delta_star(A1, K)
    for x in np.linspace(-2, 2, 9):
        want = _quad_c(_integrand(A1, K, x), -40, 40) / (2 * math.pi)
        assert abs(d.evaluate(np.array([x, 0.3])) - want) <= 1e-6


def test_delta_star_rescaling():
    # t -> t/2 in the integral: delta for 2a equals half the delta for a
    K = np.array([[0.3 - 1.2j, 0.2], [0.2, -0.5j]])
    a = np.array([0.6, -0.3])
    pts = np.array([[0.2, 0.1], [-0.7, 0.4], [1.0, -1.0]])
    d1 = le.delta_star(a, K).evaluate(pts)
    d2 = le.delta_star(2 * a, K).evaluate(pts)
    assert np.allclose(d2, d1 / 2, atol=1e-13)


def test_siegel_condition_is_enforced():
    with pytest.raises(SiegelConditionError):
        le.delta_star(A1, np.eye(2))
    with pytest.raises(SiegelConditionError):
        le.one_sided_inverse(A1, np.eye(2), "plus")


def test_reduced_product_examples():
    assert np.allclose(le.reduced_1d_product(A1, SIEGEL, le.ScalarField1D.constant(1.0))(np.array([0.5, 2.0])), [0.5, 2.0])
    xs = np.linspace(-2, 2, 7)
    got = le.reduced_1d_product(A1, np.eye(2), le.ScalarField1D.identity())(xs)
    assert np.allclose(got, xs**2 + 0.5j)


def test_one_sided_inverses_against_quadrature():
    a, K = A1, np.array([[-0.3 - 1.1j, 0.0], [0.0, 1.0]])
    plus = le.one_sided_inverse(a, K, "plus")
    minus = le.one_sided_inverse(a, K, "minus")
    d = le.delta_kernel(a, K)
    for x in np.linspace(-1.5, 1.5, 7):
        p = _quad_c(_integrand(a, K, x), -60, 0)
        mi = -_quad_c(_integrand(a, K, x), 0, 60)
        full = _quad_c(_integrand(a, K, x), -60, 60)
        assert abs(plus(x) - p) <= 1e-6
        assert abs(minus(x) - mi) <= 1e-6
        assert abs(plus(x) - minus(x) - 2 * math.pi * d(x)) <= 1e-10
        assert abs(full - 2 * math.pi * d(x)) <= 1e-6


def test_scalar_field_derivatives_are_consistent():
    xs = np.linspace(-2, 2, 11)
    for side in ("plus", "minus"):
        f = le.one_sided_inverse(A1, SIEGEL, side)
        assert f.derivative_residual(xs) <= 1e-6
    assert le.delta_kernel(A1, SIEGEL).derivative_residual(xs) <= 1e-6


def test_associativity_witness():
    xs = np.linspace(-2, 2, 20)
    left, right, unit = le.associativity_witness(A1, SIEGEL, xs)
    assert unit <= 1e-6
    assert np.max(np.abs(left - right)) > 0.1
    assert np.allclose(left, le.one_sided_inverse(A1, SIEGEL, "minus")(xs))
    assert np.allclose(right, le.one_sided_inverse(A1, SIEGEL, "plus")(xs))


def test_grid_rows():
    e = le.LinearExponential(A1, 1.0)
    rows = le.linexp_grid(e, SIEGEL, np.array([[0.0, 0.0], [1.0, 2.0]]))
    amp = cmath.exp(-1j / 4j)
    assert rows[0][:2] == (0.0, 0.0)
    assert abs(complex(rows[0][2], rows[0][3]) - amp) < 1e-15
    with pytest.raises(DimensionMismatch):
        le.linexp_grid(e, SIEGEL, np.zeros((3, 3)))

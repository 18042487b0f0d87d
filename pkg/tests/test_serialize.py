import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylstar import quad_group as qg
from weylstar.branch_tracker import PathSpec
from weylstar.errors import SchemaError
from weylstar.lin_exp import LinearExponential
from weylstar.serialize import ElementEnvelope, envelope, load_file, parse_element, serialize_element, to_object
from weylstar.weyl_poly import ExpressionParameter, GaussianRational, WeylPolynomial

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def _round_trip(element, meta=None):
    env = envelope(element, meta)
    return parse_element(serialize_element(env))


@given(cplx, st.lists(cplx, min_size=3, max_size=3), st.sampled_from([1, -1]))
@settings(max_examples=50, deadline=None)
def test_gaussian_round_trip_is_bit_exact(amp, q, sheet):
    Q = np.array([[q[0], q[1]], [q[1], q[2]]])
    e = qg.GaussianElement(amp, Q, sheet)
    back = _round_trip(e, {"hbar": 0.5}).element
    assert back.amp == e.amp and np.array_equal(back.Q, e.Q) and back.sheet == sheet


def test_round_trips_for_every_type():
    rng = np.random.default_rng(0)
    alpha = qg.random_sp(rng)
    u, v = WeylPolynomial.generators(1)
    poly = u.pointwise_mul(v) * GaussianRational(Fraction(1, 3), -2) + WeylPolynomial.hbar(1)
    cases = [
        poly,
        LinearExponential(np.array([1.0, 2j]), 0.5),
        qg.SpElement(alpha),
        qg.GroupPoint(0.3 - 1j, alpha),
        PathSpec((1.0, 1 + 2j), "avoid"),
        np.array([[0.3, 0.4j], [0.4j, 0.3]]),
        ExpressionParameter([[Fraction(1, 2), GaussianRational(0, 1)], [GaussianRational(0, 1), -3]]),
    ]
    for el in cases:
        env = _round_trip(el, {"m": 1})
        assert env.meta == {"m": 1}
        assert serialize_element(env) == serialize_element(envelope(el, {"m": 1}))


def test_symplectic_envelope():
    g = np.array([[2.0, 1.0], [1.0, 1.0]])
    env = parse_element(serialize_element(ElementEnvelope("symplectic", g)))
    assert np.array_equal(env.element, g)
    with pytest.raises(SchemaError):
        parse_element({"type": "symplectic", "g": [[2, 0], [0, 2]]})


def test_exact_K_keeps_rationals():
    obj = {"type": "K", "exact": True, "K": [["1/3", ["0", "-1/2"]], [["0", "-1/2"], 1]]}
    K = parse_element(obj).element
    assert isinstance(K, ExpressionParameter)
    assert K.K[0][0] == GaussianRational(Fraction(1, 3))
    assert K.K[0][1] == GaussianRational(0, Fraction(-1, 2))
    again = parse_element(json.loads(json.dumps(to_object(envelope(K))))).element
    assert again.K == K.K


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        "[1, 2]",
        {"type": "tensor"},
        {"type": "gaussian", "amp": 1, "Q": [[0, 1], [0, 0]]},
        {"type": "gaussian", "amp": 1, "Q": [[0, 0, 0]]},
        {"type": "gaussian", "amp": "one", "Q": [[0, 0], [0, 0]]},
        {"type": "gaussian", "amp": 1, "Q": [[0, 0], [0, 0]], "sheet": 2},
        {"type": "gaussian", "m": 2, "amp": 1, "Q": [[0, 0], [0, 0]]},
        {"type": "gaussian", "Q": [[0, 0], [0, 0]]},
        {"type": "sp", "alpha": [[1, 0], [0, 1]]},
        {"type": "group_point", "alpha": [[0, 0], [0, 0]]},
        {"type": "linexp", "a": [1, 2, 3]},
        {"type": "path", "waypoints": [[0, 0]]},
        {"type": "path", "waypoints": [[1, 0]], "mode": "fly"},
        {"type": "K", "K": [[1, 2], [3, 4]]},
        {"type": "K", "exact": True, "K": [["x", 0], [0, 0]]},
        {"type": "K", "K": [[1, 0], [0, 1]], "meta": {"hbar": -1}},
        {"type": "K", "K": [[1, 0], [0, 1]], "meta": {"colour": "red"}},
    ],
)
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        parse_element(doc if isinstance(doc, str) else json.dumps(doc))


def test_gaussian_symmetry_limit():
    # asymmetry below 1e-12 is accepted and symmetrized
    env = parse_element({"type": "gaussian", "amp": 1, "Q": [[0, 1], [1 + 1e-13, 0]]})
    assert np.allclose(env.element.Q, env.element.Q.T, atol=0)


def test_unknown_object_is_refused():
    with pytest.raises(SchemaError):
        envelope(object())


def test_load_file(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"type": "K", "K": [[1, 0], [0, [0, 1]]]}))
    K = load_file(str(p)).element
    assert np.array_equal(K, np.diag([1, 1j]))

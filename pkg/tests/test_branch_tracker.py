import cmath
import math

import numpy as np
import pytest
from scipy.linalg import expm

from weylstar import branch_tracker as bt
from weylstar import polar_algebra as pa
from weylstar import quad_group as qg
from weylstar.errors import SingularPointError

FAMILIES = {
    "2uov": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "u2+v2": np.eye(2),
    "u2-v2": np.diag([1.0, -1.0]),
}


def _alpha(name):
    return qg.sp_of_quadratic(FAMILIES[name])


def _dense_amplitude(alpha, K, waypoints, n=4000):
    """1 / sqrt(d(t)) continued by always taking the root nearest the previous one."""
    w = 1.0 + 0j
    pts = [complex(p) for p in waypoints]
    for a, b in zip(pts, pts[1:]):
        for s in np.linspace(0, 1, n)[1:]:
            r = cmath.sqrt(qg.exp_quad_det(alpha, a + (b - a) * s, K))
            w = r if abs(r - w) <= abs(r + w) else -r
    return 1 / w


def _su2(theta, phi, psi):
    a = math.cos(theta) * cmath.exp(1j * phi)
    b = math.sin(theta) * cmath.exp(1j * psi)
    return np.array([[a, -b.conjugate()], [b, a.conjugate()]])


# paths


def test_path_parse():
    p = bt.PathSpec.parse("0,0;3.14,0;3.14,1", "avoid")
    assert p.waypoints == (0j, 3.14 + 0j, 3.14 + 1j) and p.mode == "avoid"
    assert bt.PathSpec.parse("1,2").waypoints == (0j, 1 + 2j)
    assert bt.PathSpec.segment(2.0).end == 2


@pytest.mark.parametrize(
    "text,mode",
    [("1", "straight"), ("0,0", "straight"), ("1,0;1,0", "straight"), ("1,0", "sideways"), ("a,b", "straight")],
)
def test_path_parse_errors(text, mode):
    with pytest.raises(ValueError):
        bt.PathSpec.parse(text, mode)


# singularity maps


def test_diagonal_K_anchors():
    # u^2 + v^2 with K = diag(a, b): zeros of (cos t - a sin t)(cos t - b sin t)
    a, b = 0.6 + 0.8j, -1.5 + 0.2j
    K = np.diag([a, b])
    smap = bt.find_singularities(_alpha("u2+v2"), K)
    assert smap.scale == 1 and len(smap.anchors) == 2 and smap.orders == (1, 1)
    for t in smap.anchors:
        assert 0 <= t.real < math.pi
        factors = (cmath.cos(t) - a * cmath.sin(t), cmath.cos(t) - b * cmath.sin(t))
        assert min(abs(f) for f in factors) < 1e-12
        assert abs(qg.exp_quad_det(_alpha("u2+v2"), t, K)) < 1e-12


def test_hyperbolic_family_under_unit_ordering_is_regular():
    smap = bt.find_singularities(_alpha("2uov"), np.eye(2))
    assert smap.anchors == () and smap.slits == ()
    assert abs(smap.period - math.pi * 1j) < 1e-15
    for t in (0.5, 3.0, 2.0 + 1.0j, 5.0 - 0.5j):
        assert abs(qg.exp_quad_det(_alpha("2uov"), t, np.eye(2)) - 1) < 1e-9


@pytest.mark.parametrize("c", [0.5, 2.0, -3.0])
def test_normal_family_poles_lie_on_one_line(c):
    K = np.array([[0.0, c], [c, 0.0]])
    alpha = _alpha("2uov")
    smap = bt.find_singularities(alpha, K)
    assert smap.branching == ()
    # e^t (1 - c) + e^-t (1 + c) = 0  =>  Re t = log|(c+1)/(c-1)| / 2
    want = 0.5 * math.log(abs((c + 1) / (c - 1)))
    for tau in smap.anchors:
        t = tau / smap.scale
        assert abs(t.real - want) < 1e-12
        assert abs(math.exp(t.real) * cmath.exp(1j * t.imag) * (1 - c) + cmath.exp(-t) * (1 + c)) < 1e-10
    assert len(smap.lines) == 1


def test_slits_follow_the_anchor_side():
    smap = bt.find_singularities(_alpha("u2+v2"), pa.k_re())
    assert sorted(s.direction for s in smap.slits) == [-1, 1]
    a, b = smap.anchors
    assert abs(a - b.conjugate()) < 1e-12
    smap = bt.find_singularities(_alpha("u2+v2"), pa.k_im())
    assert len(smap.slits) == 2 and len({s.direction for s in smap.slits}) == 1
    # the real segment [0, 2 pi] crosses no slit when no anchor is real
    line = [complex(x, 0) for x in np.linspace(0, 2 * math.pi, 50)]
    assert smap.crossings(line) == 0


def test_real_anchor_gets_no_slit():
    smap = bt.find_singularities(_alpha("u2-v2"), pa.k_im())
    assert smap.slits == () and len(smap.on_real_line()) == 2


def test_matrix_input_agrees_with_alpha_input():
    rng = np.random.default_rng(0)
    g = expm(np.array([[0.2, 0.7], [-0.4, -0.2]]))
    K = qg.random_generic_K(rng)
    by_m = bt.find_singularities(M=qg.rotation_matrix(g, K))
    by_alpha = bt.find_singularities(qg.sp_of_quadratic(g @ g.T), K)
    assert sorted(by_m.anchors, key=lambda z: z.real) == pytest.approx(sorted(by_alpha.anchors, key=lambda z: z.real))
    for t in by_m.anchors:
        assert abs(qg.delta_K(t, by_m.M)) < 1e-10


def test_rootfind_fallback():
    # not periodic: alpha^2 = -diag(a1 b1, a2 b2, ...) is not scalar here
    A = np.diag([1.0, 2.0, 1.0, 1.0])
    K = np.eye(4)
    alpha = qg.sp_of_quadratic(A)
    assert bt.periodic_scale(alpha) is None
    smap = bt.find_singularities(alpha, K, window=(0, 1.5, -0.5, 0.5), step=0.05)
    assert smap.method == "rootfind" and smap.anchors
    for t in smap.anchors:
        assert abs(qg.exp_quad_det(alpha, t, K)) < 1e-8
    with pytest.raises(ValueError):
        bt.find_singularities(alpha, K)


def test_scan_grid_rows():
    K = np.diag([0.6 + 0.8j, -1.5 + 0.2j])
    alpha = _alpha("u2+v2")
    rows = bt.scan_grid(alpha, K, (0, math.pi, -1, 1), 0.25)
    grid = [r for r in rows if r[3] == 0]
    anchors = [r for r in rows if r[3] == 1]
    assert len(grid) == 13 * 9
    assert all(r[4] == -1 for r in grid)
    assert len(anchors) == 2
    for r in anchors:
        assert r[2] < 1e-10 and r[4] >= 0
    x, y = grid[10][:2]
    assert abs(grid[10][2] - abs(qg.exp_quad_det(alpha, complex(x, y), K))) < 1e-12
    with pytest.raises(ValueError):
        bt.scan_grid(alpha, K, (1, 0, 0, 1), 0.1)


# continuation


def test_trivial_determinant_family():
    # nilpotent alpha with K = 0: the determinant is identically 1
    alpha = np.array([[0.0, 1.0], [0.0, 0.0]])
    val = bt.trace_amplitude(alpha, np.zeros((2, 2)), bt.PathSpec((1.0, 2 + 1j, -3.0)))
    assert val.sheet == 1 and val.crossings == 0
    assert val.value.close_to(qg.exp_quad(alpha, -3.0, np.zeros((2, 2))))


@pytest.mark.parametrize("m", [1, 2])
def test_weyl_endpoint(m):
    rng = np.random.default_rng(m)
    X = rng.normal(size=(2 * m, 2 * m))
    g = expm(qg.sp_of_quadratic(0.3 * (X + X.T)).real)
    alpha = qg.sp_of_quadratic(g @ g.T)
    val = bt.trace_amplitude(alpha, np.zeros((2 * m, 2 * m)), bt.PathSpec.segment(math.pi))
    assert abs(val.value.amp - (-1) ** m) < 1e-9


def test_k_re_rotation_returns_to_one():
    val = bt.trace_amplitude(_alpha("u2+v2"), pa.k_re(), bt.PathSpec.segment(math.pi))
    assert abs(val.value.amp - 1) < 1e-9 and val.crossings == 0


@pytest.mark.parametrize(
    "waypoints",
    [
        (0, math.pi),
        (0, 1.5 - 1j, 1.5, math.pi),
        (0, -1j, math.pi - 1j, math.pi),
        (0, 0.7 + 0.9j, 2.4 - 0.8j, 3.0 + 0.2j),
    ],
)
def test_continuation_matches_dense_oracle(waypoints):
    K = pa.k_im()
    alpha = _alpha("u2+v2")
    val = bt.trace_amplitude(alpha, K, bt.PathSpec(tuple(complex(w) for w in waypoints)))
    want = _dense_amplitude(alpha, K, waypoints)
    assert abs(val.value.amp - want) <= 1e-9 * abs(want)
    assert val.sheet == (-1) ** val.crossings


def test_slit_crossing_count():
    K = pa.k_im()  # both slits of u^2 + v^2 point down
    alpha = _alpha("u2+v2")
    assert bt.trace_amplitude(alpha, K, bt.PathSpec((1.5 - 1j, 1.5, math.pi))).crossings == 1
    assert bt.trace_amplitude(alpha, K, bt.PathSpec((-1j, math.pi - 1j, math.pi))).crossings == 2


def test_straight_path_through_a_branch_point_fails():
    K = pa.k_im()
    alpha = _alpha("u2-v2")
    smap = bt.find_singularities(alpha, K)
    t0 = min(smap.anchors, key=lambda z: z.real) / smap.scale
    with pytest.raises(SingularPointError) as info:
        bt.trace_amplitude(alpha, K, bt.PathSpec.segment(1.5 * t0))
    assert abs(info.value.t - t0) < 1e-6


def test_avoid_mode_matches_an_explicit_detour():
    K = pa.k_im()
    alpha = _alpha("u2+v2")
    smap = bt.find_singularities(alpha, K)
    # a straight segment through one anchor, continued around it
    p = smap.anchors[0]
    end = 2 * p
    val = bt.trace_amplitude(alpha, K, bt.PathSpec.segment(end, "avoid"))
    # slit points down, so the detour passes above the anchor
    detour = (0, p + 0.05j, end)
    want = _dense_amplitude(alpha, K, detour)
    assert abs(val.value.amp - want) <= 1e-8 * abs(want)


def test_same_sheet_mode_undoes_an_odd_crossing():
    K = pa.k_im()
    alpha = _alpha("u2+v2")
    plain = bt.trace_amplitude(alpha, K, bt.PathSpec((1.5 - 1j, 1.5, math.pi)))
    same = bt.trace_amplitude(alpha, K, bt.PathSpec((1.5 - 1j, 1.5, math.pi), "same_sheet"))
    assert plain.crossings % 2 == 1 and same.crossings % 2 == 0
    assert abs(same.value.amp + plain.value.amp) < 1e-8


def test_sheeted_value_invariant():
    with pytest.raises(ValueError):
        bt.SheetedValue(qg.GaussianElement.one(1), 1, 1)


def test_continue_sqrt_on_a_loop_around_a_simple_zero():
    # sqrt(t - 1) changes sign once around t = 1
    loop = [lambda s: 1 + cmath.exp(1j * (math.pi + 2 * math.pi * s))]
    w0 = cmath.sqrt(-1)
    assert abs(bt.continue_sqrt(lambda t: t - 1, loop, w0) + w0) < 1e-12


# classification


@pytest.mark.parametrize("name", list(FAMILIES))
def test_k_re_families_are_pi_periodic(name):
    rep = bt.classify_periodicity(_alpha(name), pa.k_re())
    assert rep.label == "pi_periodic" and rep.pattern == "Q(3)"


@pytest.mark.parametrize("name", ["2uov", "u2+v2"])
def test_k_im_families_alternate(name):
    rep = bt.classify_periodicity(_alpha(name), pa.k_im())
    assert rep.label == "alternating_pi" and abs(rep.value_at_period + 1) < 1e-9


@pytest.mark.parametrize("rho,c", [(0.3, 0.4), (0.1, 0.7), (-0.5, 0.2)])
def test_pattern_inversion(rho, c):
    # reversing t swaps the half-planes: Q(1) <-> Q(2), Q(3) fixed
    for K in (pa.k_im(rho, c), pa.k_re(rho, c)):
        for name in FAMILIES:
            a = bt.classify_periodicity(_alpha(name), K)
            b = bt.classify_periodicity(-_alpha(name), K)
            swap = {"Q(1)": "Q(2)", "Q(2)": "Q(1)", "Q(3)": "Q(3)", None: None}
            assert b.pattern == swap[a.pattern]


def test_singular_on_line_label():
    rep = bt.classify_periodicity(_alpha("u2-v2"), pa.k_im())
    assert rep.label == "singular_on_line" and rep.value_at_period is None


# sign at pi


def test_sign_at_pi_weyl_is_minus_one():
    rng = np.random.default_rng(3)
    for _ in range(10):
        assert bt.sign_at_pi(bt.random_sl2(rng), np.zeros((2, 2))) == "minus_one"


def test_sign_at_pi_su2_under_k_re_is_plus_one():
    for angles in [(0.0, 0.0, 0.0), (0.3, 1.1, -0.4), (1.2, -2.0, 0.5), (0.7, 0.2, 2.9)]:
        assert bt.sign_at_pi(_su2(*angles), pa.k_re()) == "plus_one"


def test_sign_at_pi_matches_dense_oracle():
    rng = np.random.default_rng(4)
    K = qg.random_generic_K(rng)
    checked = 0
    for _ in range(15):
        g = bt.random_sl2(rng)
        label = bt.sign_at_pi(g, K)
        if bt.min_line_offset(g, K) < 1e-2:
            continue
        amp = _dense_amplitude(qg.sp_of_quadratic(g @ g.T), K, (0, math.pi), n=20000)
        assert label == ("plus_one" if abs(amp - 1) < abs(amp + 1) else "minus_one")
        checked += 1
    assert checked >= 10


def test_sign_at_pi_on_the_singular_set():
    g = np.eye(2)
    smap = bt.find_singularities(_alpha("u2-v2"), pa.k_im())
    assert smap.on_real_line()
    # rotate u^2 - v^2 data into g g^T form: g = diag(1, i) gives u^2 - v^2
    assert bt.sign_at_pi(np.diag([1.0, 1j]) @ g, pa.k_im()) == "singular"


def test_trichotomy_flips_are_localized():
    rng = np.random.default_rng(5)
    scan = bt.trichotomy_scan(qg.random_generic_K(rng), n=40, rng=rng, max_bisections=2)
    assert scan.labels["plus_one"] and scan.labels["minus_one"]
    for _g, off, left, right in scan.flip_checks:
        assert off <= 1e-6
        assert {left, right} == {"plus_one", "minus_one"}

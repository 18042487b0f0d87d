"""Singular points, slits and continuation of star-exponential amplitudes.

The amplitude of ``exp_*(t <u alpha J, u>/i hbar)`` is ``1/sqrt(d(t))`` with
``d(t) = det(I - kappa + exp(-2t alpha)(I + kappa)) / 4^m``.  Along a path
the square root is continued step by step from ``sqrt(d(0)) = 1``.

When ``alpha^2 = -lam^2 I`` the family is periodic: in the normalized
variable ``tau = lam t`` one has ``d = det(cos tau I + sin tau M)`` with
``M = -(alpha/lam) kappa``, so the singular set is the finite list of
anchors ``-arctan(1/mu_j) mod pi`` (``mu_j`` eigenvalues of ``M``) repeated
with period ``pi``.  Slits are vertical rays in the tau-plane leaving each
branching anchor away from the real axis.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalDomainError, SingularPointError
from .linalg import as_matrix
from .quad_group import (
    GaussianElement,
    exp_quad,
    exp_quad_det,
    kappa_of,
    sp_of_quadratic,
)

EPS_SING = 1e-8
MAX_SUBDIVISIONS = 2**20
CLUSTER_TOL = 1e-6
DETOUR_RADIUS = 1e-3
LINE_TOL = 1e-9
MODES = ("straight", "avoid", "same_sheet")


# paths


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear path in the complex t-plane starting at 0."""

    waypoints: tuple
    mode: str = "straight"

    def __post_init__(self):
        pts = tuple(complex(w) for w in self.waypoints)
        if not pts or pts[0] != 0:
            pts = (0j,) + pts
        if len(pts) < 2:
            raise ValueError("a path needs an endpoint besides 0")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must differ")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "waypoints", pts)

    @classmethod
    def segment(cls, end: complex, mode: str = "straight") -> "PathSpec":
        return cls((0j, complex(end)), mode)

    @classmethod
    def parse(cls, text: str, mode: str = "straight") -> "PathSpec":
        """Parse ``"0,0;3.14159,0"`` (pairs of real and imaginary parts)."""
        pts = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ValueError(f"waypoint {chunk!r} is not 're,im'")
            pts.append(complex(float(parts[0]), float(parts[1])))
        return cls(tuple(pts), mode)

    @property
    def end(self) -> complex:
        return self.waypoints[-1]


def _line(a: complex, b: complex) -> Callable:
    return lambda s: a + (b - a) * s


def _arc(center: complex, radius: float, theta0: float, theta1: float) -> Callable:
    return lambda s: center + radius * cmath.exp(1j * (theta0 + (theta1 - theta0) * s))


def _polyline(pieces: Sequence[Callable], samples: int = 64) -> list:
    pts = [pieces[0](0.0)]
    for p in pieces:
        pts.extend(p(k / samples) for k in range(1, samples + 1))
    return pts


# singularity maps


def periodic_scale(alpha, tol: float = 1e-9):
    """Return ``lam`` with ``alpha^2 = -lam^2 I``, or None if alpha^2 is not scalar."""
    alpha = as_matrix(alpha)
    sq = alpha @ alpha
    c = np.trace(sq) / sq.shape[0]
    scale = max(1.0, float(np.max(np.abs(sq))))
    if np.max(np.abs(sq - c * np.eye(sq.shape[0]))) > tol * scale or abs(c) < tol:
        return None
    return complex(np.sqrt(-c))


def complex_arctan(z: complex) -> complex:
    """``(1/2i) log((1 + iz)/(1 - iz))`` with the principal logarithm."""
    return cmath.log((1 + 1j * z) / (1 - 1j * z)) / 2j


def _reduce(t: complex) -> complex:
    x = t.real % math.pi
    if math.pi - x < 1e-12:
        x = 0.0
    return complex(x, t.imag)


@dataclass(frozen=True)
class Slit:
    """Vertical ray in the tau-plane from ``anchor`` going up (+1) or down (-1)."""

    anchor: complex
    direction: int


@dataclass(frozen=True)
class SingularityMap:
    """Singular set of a quadratic star exponential.

    For periodic families the anchors live in the normalized variable
    ``tau = scale * t`` with ``Re tau`` in ``[0, pi)``; the full set is
    ``anchors + pi Z`` and ``period`` is the t-plane period ``pi / scale``.
    For the root-finding fallback ``scale`` is 1, ``period`` is None and the
    anchors are the points found in the requested window.
    """

    anchors: tuple
    orders: tuple
    scale: complex
    period: complex | None
    method: str
    M: np.ndarray | None = None
    slits: tuple = ()

    @property
    def branching(self) -> tuple:
        return tuple(a for a, k in zip(self.anchors, self.orders) if k % 2)

    @property
    def lines(self) -> tuple:
        """Distinct imaginary offsets of the lines carrying singular points."""
        out = []
        for a in self.anchors:
            if not any(abs(a.imag - y) < CLUSTER_TOL for y in out):
                out.append(a.imag)
        return tuple(sorted(out))

    def on_real_line(self, tol: float = LINE_TOL) -> tuple:
        return tuple(a for a, k in zip(self.anchors, self.orders) if k % 2 and abs(a.imag) <= tol)

    def to_tau(self, t: complex) -> complex:
        return self.scale * t

    def copies_near(self, tau: complex, radius: float) -> list:
        """Singular points (tau, order) within ``radius`` of ``tau``."""
        out = []
        for a, k in zip(self.anchors, self.orders):
            if self.period is None:
                if abs(a - tau) <= radius:
                    out.append((a, k))
                continue
            n0 = math.floor((tau.real - a.real) / math.pi)
            for n in range(n0 - 1, n0 + 3):
                p = a + n * math.pi
                if abs(p - tau) <= radius:
                    out.append((p, k))
        return out

    def distance(self, tau: complex) -> float:
        """Distance from ``tau`` to the singular set (inf if empty)."""
        best = math.inf
        for a in self.anchors:
            if self.period is None:
                best = min(best, abs(a - tau))
            else:
                d = (tau.real - a.real) % math.pi
                d = min(d, math.pi - d)
                best = min(best, math.hypot(d, tau.imag - a.imag))
        return best

    def in_window(self, window: Sequence[float]) -> list:
        """All singular points (tau, order, anchor index) in a tau-window."""
        x0, x1, y0, y1 = window
        out = []
        for idx, (a, k) in enumerate(zip(self.anchors, self.orders)):
            if not (y0 <= a.imag <= y1):
                continue
            if self.period is None:
                if x0 <= a.real <= x1:
                    out.append((a, k, idx))
                continue
            n = math.ceil((x0 - a.real) / math.pi)
            while a.real + n * math.pi <= x1:
                out.append((a + n * math.pi, k, idx))
                n += 1
        return out

    def crossings(self, tau_points: Sequence[complex]) -> int:
        """Number of slit crossings of the polyline through ``tau_points``."""
        count = 0
        for p, q in zip(tau_points, tau_points[1:]):
            if p.real == q.real:
                continue
            lo, hi = sorted((p.real, q.real))
            for slit in self.slits:
                if self.period is None:
                    xs = [slit.anchor.real]
                else:
                    n0 = math.ceil((lo - slit.anchor.real) / math.pi)
                    n1 = math.floor((hi - slit.anchor.real) / math.pi)
                    xs = [slit.anchor.real + n * math.pi for n in range(n0, n1 + 1)]
                for x in xs:
                    if not (lo < x <= hi) and not (lo <= x < hi):
                        continue
                    if x == lo or x == hi:
                        # count endpoint touches once, on the closing side
                        if x != (q.real):
                            continue
                    s = (x - p.real) / (q.real - p.real)
                    y = p.imag + s * (q.imag - p.imag)
                    if (y - slit.anchor.imag) * slit.direction > 0:
                        count += 1
        return count


def _anchor_orders(anchors: list) -> tuple:
    """Merge anchors closer than ``CLUSTER_TOL`` (modulo pi) into one with multiplicity."""
    merged: list = []
    for a in anchors:
        for item in merged:
            d = abs(a.real - item[0].real) % math.pi
            d = min(d, math.pi - d)
            if math.hypot(d, a.imag - item[0].imag) < CLUSTER_TOL:
                item[1] += 1
                break
        else:
            merged.append([a, 1])
    return tuple(x[0] for x in merged), tuple(x[1] for x in merged)


def _newton_delta(t: complex, M: np.ndarray, iters: int = 30) -> complex:
    n = M.shape[0]
    for _ in range(iters):
        A = np.cos(t) * np.eye(n) + np.sin(t) * M
        dA = -np.sin(t) * np.eye(n) + np.cos(t) * M
        try:
            step = 1.0 / np.trace(np.linalg.solve(A, dA))
        except np.linalg.LinAlgError:
            break
        t = t - step
        if abs(step) < 1e-16 * max(1.0, abs(t)):
            break
    return t


def anchors_from_matrix(M) -> tuple:
    """Anchors and multiplicities of the zeros of ``det(cos t I + sin t M)``."""
    M = as_matrix(M)
    mus = np.linalg.eigvals(M)
    raw = []
    for mu in mus:
        if abs(mu * mu + 1) < 1e-12:
            continue  # factor exp(+-it) never vanishes
        if abs(mu) < 1e-300:
            raw.append(complex(math.pi / 2, 0))
        else:
            raw.append(_reduce(-complex_arctan(1 / mu)))
    anchors, orders = _anchor_orders(raw)
    polished = []
    for a, k in zip(anchors, orders):
        polished.append(_reduce(_newton_delta(a, M)) if k == 1 else a)
    return tuple(polished), orders


def _rootfind_window(f: Callable, window: Sequence[float], step: float) -> list:
    """Zeros of an analytic ``f`` in a t-window by grid seeding and Newton."""
    x0, x1, y0, y1 = window
    xs = np.arange(x0, x1 + step / 2, step)
    ys = np.arange(y0, y1 + step / 2, step)
    vals = np.array([[abs(f(complex(x, y))) for x in xs] for y in ys])
    seeds = []
    for i in range(1, len(ys) - 1):
        for j in range(1, len(xs) - 1):
            v = vals[i, j]
            if v <= vals[i - 1 : i + 2, j - 1 : j + 2].min() and v < 0.5:
                seeds.append(complex(xs[j], ys[i]))
    roots: list = []
    for z in seeds:
        for _ in range(60):
            h = 1e-6
            fz = f(z)
            df = (f(z + h) - f(z - h)) / (2 * h)
            if df == 0:
                break
            dz = fz / df
            z = z - dz
            if abs(dz) < 1e-14:
                break
        if abs(f(z)) < 1e-9 and x0 <= z.real <= x1 and y0 <= z.imag <= y1:
            if not any(abs(z - r) < CLUSTER_TOL for r in roots):
                roots.append(z)
    return roots


def find_singularities(alpha=None, K=None, window=None, M=None, step: float = 0.05) -> SingularityMap:
    """Locate the singular points of a quadratic star exponential.

    Give either ``M`` (zeros of ``det(cos t I + sin t M)``) or ``alpha`` and
    ``K``.  Periodic families use the eigenvalue formula; other ``alpha``
    fall back to root finding of ``d(t)`` inside ``window`` (x0, x1, y0, y1).
    """
    if M is not None:
        M = as_matrix(M)
        anchors, orders = anchors_from_matrix(M)
        method = "eigen" if all(k == 1 for k in orders) else "eigen+cluster"
        return place_slits(SingularityMap(anchors, orders, 1 + 0j, math.pi + 0j, method, M))
    alpha, K = as_matrix(alpha), as_matrix(K)
    lam = periodic_scale(alpha)
    if lam is not None:
        beta = alpha / lam
        M = -beta @ kappa_of(K)
        anchors, orders = anchors_from_matrix(M)
        method = "eigen" if all(k == 1 for k in orders) else "eigen+cluster"
        return place_slits(SingularityMap(anchors, orders, lam, math.pi / lam, method, M))
    if window is None:
        raise ValueError("a window is required for non-periodic families")
    roots = _rootfind_window(lambda t: exp_quad_det(alpha, t, K), window, step)
    orders = []
    for r in roots:
        # even order if d/dt of sqrt-free determinant vanishes too
        h = 1e-5
        d1 = (exp_quad_det(alpha, r + h, K) - exp_quad_det(alpha, r - h, K)) / (2 * h)
        orders.append(2 if abs(d1) < 1e-6 else 1)
    return place_slits(SingularityMap(tuple(roots), tuple(orders), 1 + 0j, None, "rootfind"))


def place_slits(smap: SingularityMap) -> SingularityMap:
    """Attach a vertical slit to every branching anchor, pointing away from R.

    Anchors on the real axis get no slit; they are reported through
    :meth:`SingularityMap.on_real_line`.
    """
    slits = []
    for a, k in zip(smap.anchors, smap.orders):
        if k % 2 == 0 or abs(a.imag) <= LINE_TOL:
            continue
        slits.append(Slit(a, 1 if a.imag > 0 else -1))
    return SingularityMap(smap.anchors, smap.orders, smap.scale, smap.period, smap.method, smap.M, tuple(slits))


def scan_grid(alpha, K, window: Sequence[float], step: float) -> list:
    """Rows ``(t_re, t_im, |d(t)|, is_anchor, line_index)`` over a t-window.

    Grid rows carry ``line_index = -1``; singular points inside the window
    follow as extra rows with ``is_anchor = 1``.
    """
    x0, x1, y0, y1 = window
    if step <= 0 or x1 < x0 or y1 < y0:
        raise ValueError("invalid window or step")
    alpha, K = as_matrix(alpha), as_matrix(K)
    nx = int(math.floor((x1 - x0) / step + 1e-9)) + 1
    ny = int(math.floor((y1 - y0) / step + 1e-9)) + 1
    xs = x0 + step * np.arange(nx)
    ys = y0 + step * np.arange(ny)
    T = xs[None, :] + 1j * ys[:, None]
    lam = periodic_scale(alpha)
    if lam is not None:
        M = -(alpha / lam) @ kappa_of(K)
        tau = lam * T
        n = M.shape[0]
        mats = np.cos(tau)[..., None, None] * np.eye(n) + np.sin(tau)[..., None, None] * M
        absd = np.abs(np.linalg.det(mats))
    else:
        absd = np.array([[abs(exp_quad_det(alpha, t, K)) for t in row] for row in T])
    rows = []
    for i in range(ny):
        for j in range(nx):
            rows.append((float(xs[j]), float(ys[i]), float(absd[i, j]), 0, -1))
    smap = find_singularities(alpha, K, window=window)
    lines = smap.lines
    # map the t-window to tau for periodic families by scanning copies
    corners = [smap.to_tau(complex(x, y)) for x in (x0, x1) for y in (y0, y1)]
    tw = (min(c.real for c in corners), max(c.real for c in corners), min(c.imag for c in corners), max(c.imag for c in corners))
    for tau, _k, _idx in smap.in_window(tw):
        t = tau / smap.scale
        if x0 - 1e-12 <= t.real <= x1 + 1e-12 and y0 - 1e-12 <= t.imag <= y1 + 1e-12:
            li = min(range(len(lines)), key=lambda q: abs(lines[q] - tau.imag))
            rows.append((t.real, t.imag, abs(exp_quad_det(alpha, t, K)), 1, li))
    return rows


# continuation


@dataclass(frozen=True)
class SheetedValue:
    """Continued star exponential with its sheet bookkeeping."""

    value: GaussianElement
    sheet: int
    crossings: int
    principal_sign: int = 1
    route: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.sheet != (-1) ** self.crossings:
            raise ValueError("sheet must equal (-1)^crossings")


def continue_sqrt(
    f: Callable[[complex], complex],
    pieces: Sequence[Callable[[float], complex]],
    w0: complex = 1.0,
    clearance: Callable[[complex], float] | None = None,
) -> complex:
    """Continue ``sqrt(f)`` along a chain of parametrized pieces.

    Each accepted step keeps ``|f(t1)/f(t0) - 1| < 0.5`` (so the argument
    increment stays below pi/2) and, when ``clearance`` is given, moves less
    than half the distance to the nearest singular point.  Steps rejected by
    the ratio test are bisected; more than ``MAX_SUBDIVISIONS`` bisections
    is an error.
    """
    w = complex(w0)
    subdivisions = 0
    for piece in pieces:
        s, h = 0.0, 1.0 / 8
        t0 = piece(0.0)
        d0 = f(t0)
        if d0 == 0 or not np.isfinite(d0):
            raise SingularPointError(f"path hits a singular point at t={t0}", t=t0)
        while s < 1.0:
            s1 = min(1.0, s + h)
            t1 = piece(s1)
            if clearance is not None:
                c = clearance(t0)
                if c <= EPS_SING:
                    raise SingularPointError(f"path passes within {EPS_SING} of a singular point near t={t0}", t=t0)
                move = abs(t1 - t0)
                if move > 0.5 * c:
                    h = (s1 - s) * 0.45 * c / move
                    if h < 1e-16:
                        raise SingularPointError(f"continuation stalled near singular point t={t0}", t=t0)
                    continue
            d1 = f(t1)
            if d1 != 0 and np.isfinite(d1) and abs(d1 / d0 - 1) < 0.5:
                w = w * complex(np.sqrt(d1 / d0))
                s, t0, d0 = s1, t1, d1
                h = min(h * 1.5, 1.0 / 8)
            else:
                h /= 2
                subdivisions += 1
                if h < 1e-16 or subdivisions > MAX_SUBDIVISIONS:
                    raise SingularPointError(f"continuation stalled near singular point t={t0}", t=t0)
    return w


def _route(path: PathSpec, smap: SingularityMap) -> list:
    """Parametrized pieces in the t-plane, with detours around singular points.

    Non-branching points are always bypassed; branching points are bypassed
    in modes ``avoid`` and ``same_sheet`` on the side opposite their slit,
    so a detour never crosses a slit.
    """
    lam = smap.scale
    radius = 2 * DETOUR_RADIUS
    pieces = []
    for a, b in zip(path.waypoints, path.waypoints[1:]):
        ta, tb = lam * a, lam * b
        length = abs(tb - ta)
        direction = (tb - ta) / length
        hits = []
        for p, k in _points_near_segment(smap, ta, tb, DETOUR_RADIUS):
            if k % 2 == 1 and path.mode == "straight":
                if _seg_dist(p, ta, tb) <= EPS_SING:
                    raise SingularPointError(f"straight path hits branching singular point tau={p}", t=p / lam)
                continue
            s = ((p - ta) / direction).real
            if s <= radius or s >= length - radius:
                raise SingularPointError(f"path endpoint too close to singular point tau={p}", t=p / lam)
            hits.append((s, p, k))
        hits.sort(key=lambda h: h[0])
        cur = ta
        for s, p, k in hits:
            foot = ta + direction * s
            half = math.sqrt(max(radius**2 - abs(p - foot) ** 2, 0.0))
            enter, leave = foot - direction * half, foot + direction * half
            pieces.append(_line(cur, enter))
            th0, th1 = cmath.phase(enter - p), cmath.phase(leave - p)
            ccw = (th1 - th0) % (2 * math.pi)
            options = (ccw, ccw - 2 * math.pi)
            # midpoint below p when the slit points up, above when it points down
            want = -1.0 if p.imag > 0 else 1.0
            sweep = max(options, key=lambda sw: want * math.sin(th0 + sw / 2))
            pieces.append(_arc(p, radius, th0, th0 + sweep))
            cur = leave
        pieces.append(_line(cur, tb))
    return [_scaled(pc, lam) for pc in pieces]


def _scaled(piece: Callable, lam: complex) -> Callable:
    return lambda s: piece(s) / lam


def _seg_dist(p: complex, a: complex, b: complex) -> float:
    d = b - a
    s = max(0.0, min(1.0, ((p - a) / d).real if d != 0 else 0.0))
    return abs(p - (a + s * d))


def _points_near_segment(smap: SingularityMap, a: complex, b: complex, radius: float) -> list:
    x0, x1 = min(a.real, b.real) - radius, max(a.real, b.real) + radius
    y0, y1 = min(a.imag, b.imag) - radius, max(a.imag, b.imag) + radius
    return [(p, k) for p, k, _ in smap.in_window((x0, x1, y0, y1)) if _seg_dist(p, a, b) <= radius]


def _loop_around(smap: SingularityMap, end_tau: complex) -> list:
    """Out-and-back loop from ``end_tau`` around the nearest branching point.

    The loop crosses that point's slit once; the radial legs cross any
    other slit twice, so the sheet flips exactly once.
    """
    candidates = [
        p
        for a in smap.branching
        if abs(a.imag) > LINE_TOL
        for p, _ in smap.copies_near(end_tau, abs(end_tau - a) + 2 * math.pi)
        if abs(p.imag - a.imag) < 1e-12
    ]
    if not candidates:
        raise NumericalDomainError("same-sheet routing impossible: no branching point to loop around")
    best = min(candidates, key=lambda p: abs(p - end_tau))
    r = DETOUR_RADIUS
    direction = (end_tau - best) / abs(end_tau - best)
    start = best + r * direction
    th = cmath.phase(direction)
    return [_line(end_tau, start), _arc(best, r, th, th + 2 * math.pi), _line(start, end_tau)]


def trace_amplitude(alpha, K, path: PathSpec, hbar: float = 1.0, smap: SingularityMap | None = None) -> SheetedValue:
    """Continue ``exp_*(t <u alpha J,u>/i hbar)`` along ``path`` from t = 0."""
    alpha, K = as_matrix(alpha), as_matrix(K)
    if smap is None:
        if periodic_scale(alpha) is None:
            pts = path.waypoints
            pad = 1.0
            window = (
                min(p.real for p in pts) - pad,
                max(p.real for p in pts) + pad,
                min(p.imag for p in pts) - pad,
                max(p.imag for p in pts) + pad,
            )
            smap = find_singularities(alpha, K, window=window)
        else:
            smap = find_singularities(alpha, K)
    lam = smap.scale
    pieces = _route(path, smap)
    tau_pts = [lam * t for t in _polyline(pieces)]
    crossings = smap.crossings(tau_pts)
    if path.mode == "same_sheet" and crossings % 2:
        loop = _loop_around(smap, lam * path.end)
        pieces = pieces + [_scaled(pc, lam) for pc in loop]
        tau_pts = [lam * t for t in _polyline(pieces)]
        crossings = smap.crossings(tau_pts)
        if crossings % 2:
            raise NumericalDomainError("same-sheet routing impossible within detour budget")

    def f(t):
        return exp_quad_det(alpha, t, K)

    def clearance(t):
        return smap.distance(lam * t) / abs(lam)

    w = continue_sqrt(f, pieces, 1.0, clearance if smap.anchors else None)
    end = path.end
    base = exp_quad(alpha, end, K, hbar)
    amp = 1.0 / w
    sign = 1 if abs(amp - base.amp) <= abs(amp + base.amp) else -1
    sheet = (-1) ** crossings
    value = GaussianElement(amp, base.Q, sheet)
    return SheetedValue(value, sheet, crossings, sign, tuple(tau_pts[:: max(1, len(tau_pts) // 256)]))


# classification


@dataclass(frozen=True)
class PeriodicityReport:
    label: str  # pi_periodic | alternating_pi | singular_on_line
    pattern: str | None  # Q(1) | Q(2) | Q(3) | None
    line_sides: tuple  # "upper"/"lower"/"on" per branching anchor
    value_at_period: complex | None


def classify_periodicity(alpha, K, hbar: float = 1.0) -> PeriodicityReport:
    """Compare the value after one period with the start value."""
    alpha, K = as_matrix(alpha), as_matrix(K)
    smap = find_singularities(alpha, K)
    if smap.period is None:
        raise ValueError("alpha does not generate a periodic family")
    sides = tuple(
        "on" if abs(a.imag) <= LINE_TOL else ("upper" if a.imag > 0 else "lower") for a in smap.branching
    )
    if "on" in sides:
        return PeriodicityReport("singular_on_line", None, sides, None)
    val = trace_amplitude(alpha, K, PathSpec.segment(smap.period), hbar, smap)
    v = val.value.amp
    label = "pi_periodic" if abs(v - 1) < abs(v + 1) else "alternating_pi"
    pattern = None
    if label == "alternating_pi" and sides and all(s == "upper" for s in sides):
        pattern = "Q(1)"
    elif label == "alternating_pi" and sides and all(s == "lower" for s in sides):
        pattern = "Q(2)"
    elif label == "pi_periodic" and "upper" in sides and "lower" in sides:
        pattern = "Q(3)"
    return PeriodicityReport(label, pattern, sides, v)


def sign_at_pi(g, K, hbar: float = 1.0, line_tol: float = EPS_SING) -> str:
    """Label of ``exp_*(pi <ug,ug>/i hbar)`` traced along the real segment [0, pi].

    Returns ``plus_one``, ``minus_one`` or ``singular`` (a branching singular
    point within ``line_tol`` of the segment).
    """
    g, K = as_matrix(g), as_matrix(K)
    alpha = sp_of_quadratic(g @ g.T)
    smap = find_singularities(alpha, K)
    for a in smap.branching:
        if abs(a.imag) <= line_tol:
            return "singular"
    try:
        val = trace_amplitude(alpha, K, PathSpec.segment(math.pi), hbar, smap)
    except SingularPointError:
        return "singular"
    return "plus_one" if abs(val.value.amp - 1) < abs(val.value.amp + 1) else "minus_one"


def min_line_offset(g, K) -> float:
    """Smallest ``|Im tau|`` over the branching anchors of the ``<ug,ug>`` family."""
    alpha = sp_of_quadratic(as_matrix(g) @ as_matrix(g).T)
    smap = find_singularities(alpha, K)
    return min((abs(a.imag) for a in smap.branching), default=math.inf)


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element of Sp(1, C) = SL(2, C)."""
    while True:
        h = np.eye(2) + scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        d = np.linalg.det(h)
        if abs(d) > 1e-3:
            return h / np.sqrt(d)


def _sl2_path(g0: np.ndarray, g1: np.ndarray) -> Callable[[float], np.ndarray]:
    def g(s: float) -> np.ndarray:
        h = (1 - s) * g0 + s * g1
        return h / np.sqrt(np.linalg.det(h))

    return g


@dataclass
class TrichotomyScan:
    labels: dict
    singular_examples: list
    flip_checks: list  # (g_star, min_line_offset, label_left, label_right)


def trichotomy_scan(K, n: int = 200, rng: np.random.Generator | None = None, max_bisections: int = 3) -> TrichotomyScan:
    """Label ``n`` random g in Sp(1, C); locate singular labels between sign flips.

    Random g almost never land exactly on the singular set, so each found
    pair (plus_one, minus_one) is joined by a path in SL(2, C) and bisected
    until the crossing anchor reaches the real line.
    """
    K = as_matrix(K)
    rng = rng or np.random.default_rng(0)
    labels: dict = {"plus_one": [], "minus_one": [], "singular": []}
    for _ in range(n):
        g = random_sl2(rng)
        labels[sign_at_pi(g, K)].append(g)
    flips = []
    singular = list(labels["singular"])
    pairs = list(zip(labels["plus_one"], labels["minus_one"]))[:max_bisections]
    for gp, gm in pairs:
        path = _sl2_path(gp, gm)
        lo, hi = 0.0, 1.0
        lab_lo, lab_hi = sign_at_pi(path(lo), K), sign_at_pi(path(hi), K)
        if lab_lo == lab_hi or "singular" in (lab_lo, lab_hi):
            continue
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lab = sign_at_pi(path(mid), K)
            if lab == "singular":
                lo = hi = mid
                break
            if lab == lab_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        g_star = path(0.5 * (lo + hi))
        off = min_line_offset(g_star, K)
        flips.append((g_star, off, sign_at_pi(path(lo - 1e-6), K), sign_at_pi(path(hi + 1e-6), K)))
        if sign_at_pi(g_star, K) == "singular":
            singular.append(g_star)
    labels["singular"] = singular
    return TrichotomyScan(labels, singular, flips)

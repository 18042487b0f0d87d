"""JSON envelopes for every element type.

Each document is an object with a ``type`` tag, the payload fields of that
type and an optional ``meta`` object (``m``, ``hbar``, ``K``, ``sheet``,
``path``).  Floats go through ``json`` unchanged, so numeric round trips are
bit-exact; polynomial coefficients are exact rational strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .branch_tracker import MODES, PathSpec
from .errors import SchemaError
from .lin_exp import LinearExponential
from .linalg import in_sp, is_symplectic
from .quad_group import GaussianElement, GroupPoint, SpElement
from .weyl_poly import ExpressionParameter, GaussianRational, WeylPolynomial

TYPES = ("polynomial", "linexp", "gaussian", "sp", "group_point", "path", "K", "symplectic")
META_KEYS = ("m", "hbar", "K", "sheet", "path")
SYMMETRY_LIMIT = 1e-12


@dataclass(frozen=True)
class ElementEnvelope:
    type: str
    element: object
    meta: dict = field(default_factory=dict)


# low-level encoders


def _c(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _mat(a) -> list:
    return [[_c(z) for z in row] for row in np.asarray(a)]


def _complex(x, where: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise SchemaError(f"{where}: expected a number or a [re, im] pair, got {x!r}")


def _matrix(x, where: str) -> np.ndarray:
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise SchemaError(f"{where}: expected a nonempty list of rows")
    n = len(x)
    if n % 2 or any(len(r) != n for r in x):
        raise SchemaError(f"{where}: must be an even square matrix, got {n} rows of lengths {[len(r) for r in x]}")
    return np.array([[_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)])


def _exact(x, where: str) -> GaussianRational:
    """Exact entry: a number, a rational string or a [re, im] pair of those."""
    try:
        if isinstance(x, (list, tuple)):
            if len(x) != 2:
                raise SchemaError(f"{where}: expected [re, im]")
            return GaussianRational(Fraction(str(x[0])), Fraction(str(x[1])))
        return GaussianRational(Fraction(str(x)), 0)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"{where}: not an exact rational ({exc})") from exc


def _sheet(obj: dict, where: str) -> int:
    s = obj.get("sheet", 1)
    if s not in (1, -1):
        raise SchemaError(f"{where}.sheet: must be +1 or -1, got {s!r}")
    return s


def _check_m(obj: dict, n: int, where: str) -> None:
    if "m" in obj and obj["m"] != n // 2:
        raise SchemaError(f"{where}.m: declared {obj['m']} but matrices are {n}x{n}")


# parse


def _parse_gaussian(obj: dict) -> GaussianElement:
    if "amp" not in obj or "Q" not in obj:
        raise SchemaError("gaussian: fields 'amp' and 'Q' are required")
    amp = _complex(obj["amp"], "gaussian.amp")
    Q = _matrix(obj["Q"], "gaussian.Q")
    _check_m(obj, Q.shape[0], "gaussian")
    asym = float(np.max(np.abs(Q - Q.T)))
    if asym >= SYMMETRY_LIMIT:
        raise SchemaError(f"gaussian.Q: must be symmetric (asymmetry {asym:.3g} >= {SYMMETRY_LIMIT})")
    return GaussianElement(amp, Q, _sheet(obj, "gaussian"))


def _parse_sp(obj: dict, where: str = "sp") -> np.ndarray:
    if "alpha" not in obj:
        raise SchemaError(f"{where}: field 'alpha' is required")
    alpha = _matrix(obj["alpha"], f"{where}.alpha")
    _check_m(obj, alpha.shape[0], where)
    if not in_sp(alpha):
        raise SchemaError(f"{where}.alpha: must satisfy alpha J + J alpha^T = 0 to 1e-12")
    return alpha


def _parse_linexp(obj: dict) -> LinearExponential:
    if "a" not in obj:
        raise SchemaError("linexp: field 'a' is required")
    a = obj["a"]
    if not isinstance(a, list) or not a or len(a) % 2:
        raise SchemaError("linexp.a: must be a list of even length")
    vec = np.array([_complex(v, f"linexp.a[{i}]") for i, v in enumerate(a)])
    s = _complex(obj.get("s", 1.0), "linexp.s")
    return LinearExponential(vec, s)


def _parse_path(obj: dict) -> PathSpec:
    pts = obj.get("waypoints")
    if not isinstance(pts, list) or not pts:
        raise SchemaError("path.waypoints: expected a nonempty list of [re, im] pairs")
    mode = obj.get("mode", "straight")
    if mode not in MODES:
        raise SchemaError(f"path.mode: must be one of {MODES}, got {mode!r}")
    try:
        return PathSpec(tuple(_complex(p, f"path.waypoints[{i}]") for i, p in enumerate(pts)), mode)
    except ValueError as exc:
        raise SchemaError(f"path.waypoints: {exc}") from exc


def _parse_K(obj: dict):
    """Numeric K unless ``exact`` is true, then an :class:`ExpressionParameter`."""
    if "K" not in obj:
        raise SchemaError("K: field 'K' is required")
    raw = obj["K"]
    if obj.get("exact"):
        if not isinstance(raw, list) or not raw:
            raise SchemaError("K.K: expected a nonempty list of rows")
        rows = [[_exact(v, f"K.K[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(raw)]
        try:
            return ExpressionParameter(rows, obj.get("m"))
        except ValueError as exc:
            raise SchemaError(f"K.K: {exc}") from exc
    K = _matrix(raw, "K.K")
    _check_m(obj, K.shape[0], "K")
    if np.max(np.abs(K - K.T)) >= SYMMETRY_LIMIT:
        raise SchemaError("K.K: must be symmetric")
    return K


def parse_element(text) -> ElementEnvelope:
    """Parse JSON text (or an already decoded object) into a validated envelope."""
    if isinstance(text, (str, bytes)):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    else:
        obj = text
    if not isinstance(obj, dict):
        raise SchemaError("document: expected a JSON object")
    kind = obj.get("type")
    if kind not in TYPES:
        raise SchemaError(f"type: must be one of {TYPES}, got {kind!r}")
    meta = obj.get("meta", {})
    if not isinstance(meta, dict) or any(k not in META_KEYS for k in meta):
        raise SchemaError(f"meta: must be an object with keys among {META_KEYS}")
    if "hbar" in meta and not (isinstance(meta["hbar"], (int, float)) and meta["hbar"] > 0):
        raise SchemaError("meta.hbar: must be a positive number")
    if kind == "polynomial":
        element = WeylPolynomial.from_json(obj)
    elif kind == "linexp":
        element = _parse_linexp(obj)
    elif kind == "gaussian":
        element = _parse_gaussian(obj)
    elif kind == "sp":
        element = SpElement(_parse_sp(obj))
    elif kind == "group_point":
        alpha = _parse_sp(obj, "group_point")
        if "amp" not in obj:
            raise SchemaError("group_point: field 'amp' is required")
        element = GroupPoint(_complex(obj["amp"], "group_point.amp"), alpha)
    elif kind == "path":
        element = _parse_path(obj)
    elif kind == "symplectic":
        if "g" not in obj:
            raise SchemaError("symplectic: field 'g' is required")
        element = _matrix(obj["g"], "symplectic.g")
        if not is_symplectic(element):
            raise SchemaError("symplectic.g: must satisfy g^T J g = J to 1e-10")
    else:
        element = _parse_K(obj)
    return ElementEnvelope(kind, element, dict(meta))


# serialize


def to_object(env: ElementEnvelope) -> dict:
    el = env.element
    if env.type == "polynomial":
        obj = el.to_json()
    elif env.type == "linexp":
        obj = el.to_json()
    elif env.type == "gaussian":
        obj = {"type": "gaussian", "m": el.m, "amp": _c(el.amp), "Q": _mat(el.Q), "sheet": el.sheet}
    elif env.type == "sp":
        obj = {"type": "sp", "m": el.m, "alpha": _mat(el.alpha)}
    elif env.type == "group_point":
        obj = {"type": "group_point", "m": el.m, "amp": _c(el.amp), "alpha": _mat(el.alpha)}
    elif env.type == "path":
        obj = {"type": "path", "waypoints": [_c(w) for w in el.waypoints], "mode": el.mode}
    elif env.type == "symplectic":
        obj = {"type": "symplectic", "m": el.shape[0] // 2, "g": _mat(el)}
    elif env.type == "K":
        if isinstance(el, ExpressionParameter):
            obj = {
                "type": "K",
                "exact": True,
                "m": el.m,
                "K": [[[str(z.re), str(z.im)] for z in row] for row in el.K],
            }
        else:
            obj = {"type": "K", "m": el.shape[0] // 2, "K": _mat(el)}
    else:
        raise SchemaError(f"type: unknown {env.type!r}")
    if env.meta:
        obj["meta"] = env.meta
    return obj


def serialize_element(env: ElementEnvelope) -> str:
    return json.dumps(to_object(env), ensure_ascii=False)


def envelope(element, meta: dict | None = None) -> ElementEnvelope:
    """Wrap a library object, inferring its type tag."""
    if isinstance(element, WeylPolynomial):
        kind = "polynomial"
    elif isinstance(element, LinearExponential):
        kind = "linexp"
    elif isinstance(element, GaussianElement):
        kind = "gaussian"
    elif isinstance(element, SpElement):
        kind = "sp"
    elif isinstance(element, GroupPoint):
        kind = "group_point"
    elif isinstance(element, PathSpec):
        kind = "path"
    elif isinstance(element, (ExpressionParameter, np.ndarray)):
        kind = "K"
    else:
        raise SchemaError(f"cannot serialize {type(element).__name__}")
    return ElementEnvelope(kind, element, dict(meta or {}))


def load_file(path: str) -> ElementEnvelope:
    with open(path, encoding="utf-8") as fh:
        return parse_element(fh.read())

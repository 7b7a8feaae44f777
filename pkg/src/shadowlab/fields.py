"""Vector fields: the built-in catalog plus coefficient-table custom fields.

Every field component is a sum of terms

    coef * x**px * y**py * r**pr * fx(ax * x) * fy(ay * y)

with ``r = sqrt(x^2 + y^2)`` and ``fx``/``fy`` either absent, ``sin`` or
``cos``.  The same small language covers polynomial fields, the polar
limit-cycle fields and trigonometric torus fields, and packs into a flat
float array the integration kernels can consume.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FieldSpecError
from .geometry import Surface

__all__ = ["VectorField", "ScalarField", "CATALOG_NAMES", "pack_terms"]

# packed term layout: coef, px, py, pr, fx_code, fx_freq, fy_code, fy_freq
TERM_WIDTH = 8
_TRIG_NONE, _TRIG_SIN, _TRIG_COS = 0.0, 1.0, 2.0


def _term(coef, px=0, py=0, pr=0, fx=None, fy=None):
    def code(f):
        if f is None:
            return (_TRIG_NONE, 0.0)
        kind, freq = f
        if kind == "sin":
            return (_TRIG_SIN, float(freq))
        if kind == "cos":
            return (_TRIG_COS, float(freq))
        raise FieldSpecError(f"unknown trig factor {kind!r}")

    cx, wx = code(fx)
    cy, wy = code(fy)
    return [float(coef), float(px), float(py), float(pr), cx, wx, cy, wy]


def pack_terms(terms: list[list[float]]) -> np.ndarray:
    arr = np.asarray(terms, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != TERM_WIDTH:
        raise FieldSpecError("term table must be (n, 8)")
    return np.ascontiguousarray(arr)


def _eval_terms_np(terms: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Reference evaluation in plain numpy (kernels have their own copy)."""
    r = np.sqrt(x * x + y * y)
    out = np.zeros_like(x, dtype=float)
    for coef, px, py, pr, cx, wx, cy, wy in terms:
        v = np.full_like(out, coef)
        if px:
            v = v * x**int(px)
        if py:
            v = v * y**int(py)
        if pr:
            v = v * r**int(pr)
        if cx == _TRIG_SIN:
            v = v * np.sin(wx * x)
        elif cx == _TRIG_COS:
            v = v * np.cos(wx * x)
        if cy == _TRIG_SIN:
            v = v * np.sin(wy * y)
        elif cy == _TRIG_COS:
            v = v * np.cos(wy * y)
        out = out + v
    return out


# Catalog formulas.  The polar ones are expanded in cartesian coordinates:
#   limit_cycle:      dr/dt = r(1-r),   dtheta/dt = 1
#   semistable_cycle: dr/dt = r(1-r)^2, dtheta/dt = 1
_CATALOG: dict[str, tuple[list, list, str]] = {
    "sink": ([_term(-1, px=1)], [_term(-1, py=1)], "plane"),
    "source": ([_term(1, px=1)], [_term(1, py=1)], "plane"),
    "saddle": ([_term(1, px=1)], [_term(-1, py=1)], "plane"),
    "center": ([_term(-1, py=1)], [_term(1, px=1)], "plane"),
    "monkey": (
        [_term(1, px=2), _term(-1, py=2)],
        [_term(-2, px=1, py=1)],
        "plane",
    ),
    "saddle_node": ([_term(1, px=2)], [_term(-1, py=1)], "plane"),
    "limit_cycle": (
        [_term(1, px=1), _term(-1, px=1, pr=1), _term(-1, py=1)],
        [_term(1, py=1), _term(-1, py=1, pr=1), _term(1, px=1)],
        "plane",
    ),
    "semistable_cycle": (
        # x(1-r)^2 - y = x - 2xr + xr^2 - y
        [_term(1, px=1), _term(-2, px=1, pr=1), _term(1, px=1, pr=2), _term(-1, py=1)],
        [_term(1, py=1), _term(-2, py=1, pr=1), _term(1, py=1, pr=2), _term(1, px=1)],
        "plane",
    ),
    "torus_gradient": ([_term(1, fx=("sin", 1))], [_term(1, fy=("sin", 1))], "torus"),
}

CATALOG_NAMES = tuple(sorted(_CATALOG))


def _terms_from_json(spec: list[dict]) -> list[list[float]]:
    terms = []
    for t in spec:
        try:
            terms.append(
                _term(
                    t["coef"],
                    px=t.get("px", 0),
                    py=t.get("py", 0),
                    pr=t.get("pr", 0),
                    fx=t.get("fx"),
                    fy=t.get("fy"),
                )
            )
        except KeyError as e:
            raise FieldSpecError(f"term missing key {e}") from None
    return terms


def _terms_to_json(terms: np.ndarray) -> list[dict]:
    out = []
    for coef, px, py, pr, cx, wx, cy, wy in terms:
        t: dict = {"coef": coef}
        if px:
            t["px"] = int(px)
        if py:
            t["py"] = int(py)
        if pr:
            t["pr"] = int(pr)
        if cx:
            t["fx"] = ["sin" if cx == _TRIG_SIN else "cos", wx]
        if cy:
            t["fy"] = ["sin" if cy == _TRIG_SIN else "cos", wy]
        out.append(t)
    return out


@dataclass(frozen=True)
class ScalarField:
    """Scalar function in the same term language (candidate Conley functions)."""

    terms: np.ndarray
    name: str | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return _eval_terms_np(self.terms, pts[..., 0], pts[..., 1])

    @staticmethod
    def from_spec(spec) -> "ScalarField":
        if isinstance(spec, ScalarField):
            return spec
        return ScalarField(pack_terms(_terms_from_json(spec)))


@dataclass(frozen=True)
class VectorField:
    u_terms: np.ndarray
    v_terms: np.ndarray
    surface: Surface
    name: str | None = None
    _frozen_check: None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for pt in ((0.3, -0.7), (1.1, 0.9)):
            v = self.eval(np.array(pt))
            if not np.all(np.isfinite(v)):
                raise FieldSpecError("field evaluates to a non-finite value")

    @staticmethod
    def catalog(name: str, surface: Surface | None = None) -> "VectorField":
        if name not in _CATALOG:
            raise FieldSpecError(f"unknown catalog field {name!r}")
        ut, vt, kind = _CATALOG[name]
        if surface is None:
            surface = Surface.torus() if kind == "torus" else Surface.plane()
        return VectorField(pack_terms(ut), pack_terms(vt), surface, name=name)

    @staticmethod
    def from_spec(spec, surface: Surface | None = None) -> "VectorField":
        """Accept a catalog name or a {"u": [...], "v": [...]} coefficient table."""
        if isinstance(spec, VectorField):
            return spec
        if isinstance(spec, str):
            return VectorField.catalog(spec, surface=surface)
        if not isinstance(spec, dict):
            raise FieldSpecError("field spec must be a name or a dict")
        if "name" in spec and "u" not in spec:
            surf = Surface.from_dict(spec["surface"]) if "surface" in spec else surface
            fld = VectorField.catalog(spec["name"], surface=surf)
            return fld.reversed() if spec.get("reversed") else fld
        try:
            ut = pack_terms(_terms_from_json(spec["u"]))
            vt = pack_terms(_terms_from_json(spec["v"]))
        except KeyError as e:
            raise FieldSpecError(f"custom field spec missing {e}") from None
        if surface is None:
            surface = (
                Surface.from_dict(spec["surface"]) if "surface" in spec else Surface.plane()
            )
        return VectorField(ut, vt, surface, name=spec.get("label"))

    def to_spec(self) -> dict:
        base = self.name
        if base is not None and not base.startswith("-") and base in _CATALOG:
            return {"name": base, "surface": self.surface.describe()}
        if base is not None and base.startswith("-") and base[1:] in _CATALOG:
            return {"name": base[1:], "reversed": True, "surface": self.surface.describe()}
        return {
            "u": _terms_to_json(self.u_terms),
            "v": _terms_to_json(self.v_terms),
            "surface": self.surface.describe(),
            "label": base,
        }

    def eval(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([_eval_terms_np(self.u_terms, x, y), _eval_terms_np(self.v_terms, x, y)], axis=-1)

    def speed(self, pts: np.ndarray) -> np.ndarray:
        v = self.eval(pts)
        return np.sqrt(np.sum(v * v, axis=-1))

    def jacobian(self, pt: np.ndarray, h: float = 1e-6) -> np.ndarray:
        """Central-difference Jacobian at one point."""
        pt = np.asarray(pt, dtype=float)
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            J[:, k] = (self.eval(pt + e) - self.eval(pt - e)) / (2 * h)
        return J

    def reversed(self) -> "VectorField":
        ut = self.u_terms.copy()
        vt = self.v_terms.copy()
        ut[:, 0] *= -1
        vt[:, 0] *= -1
        name = None
        if self.name is not None:
            name = self.name[1:] if self.name.startswith("-") else "-" + self.name
        return VectorField(ut, vt, self.surface, name=name)

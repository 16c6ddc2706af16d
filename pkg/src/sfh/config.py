"""Run configuration: JSON schema checks, defaults, and body/graph/field construction."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import convex_body as cb
from . import graph_surface as gs
from .bumps import Bump2D
from .characteristic import RulingData, build_ruled_graph
from .errors import ConfigError, SFHError
from .quadrature import QuadratureSpec, Rect
from .variation import VariationField

DEFAULT_DOMAIN = Rect(0.0, 1.0, 0.0, 1.0)

SECTIONS = {
    "body": None,
    "graph": None,
    "domain": {"x", "t"},
    "quadrature": {"order", "cells"},
    "fd": {"step", "variation_step"},
    "ode": {"step"},
    "characteristics": {"n_eps", "base_x"},
    "stability": {"basis", "refinements", "tol"},
    "field": {"coeffs", "basis", "bump"},
    "variation": {"order"},
    "codazzi": {"a", "b", "range", "step"},
    "output": {"dir"},
    "seed": None,
}

BODY_KEYS = {"disk": {"r"}, "ellipse": {"a", "b"}, "support_samples": {"theta_count", "h", "name"}}
CLOSED_FORM_KEYS = {
    "zero": set(),
    "affine": {"a", "b"},
    "xt_over_1px2": set(),
    "custom_poly": {"coeffs"},
    "rational_ruled": {"alpha", "beta"},
}
GRID_KEYS = {"x0", "x1", "t0", "t1", "nx", "nt", "values"}
RULING_KEYS = {"eps", "a", "b", "base_x", "x0", "x1", "t0", "t1"}


@dataclass
class RunConfig:
    body: dict
    graph: dict
    domain: Rect = DEFAULT_DOMAIN
    quadrature: QuadratureSpec = QuadratureSpec()
    fd_step: float = 1e-5
    variation_step: float = 1e-3
    ode_step: float = 1e-3
    n_eps: int = 21
    base_x: float | None = None
    basis: tuple = (12, 12)
    refinements: int = 3
    stability_tol: float = 0.05
    field_spec: dict | None = None
    variation_order: int = 1
    codazzi_a: float = 0.0
    codazzi_b: float = 0.0
    codazzi_range: tuple = (-1.0, 1.0)
    codazzi_step: float = 1e-4
    out_dir: str = "out"
    seed: int = 0
    base_dir: Path = field(default=Path("."), repr=False)

    def to_dict(self):
        d = self.domain
        return {
            "body": self.body, "graph": self.graph,
            "domain": {"x": [d.x0, d.x1], "t": [d.t0, d.t1]},
            "quadrature": {"order": self.quadrature.order, "cells": list(self.quadrature.cells)},
            "fd": {"step": self.fd_step, "variation_step": self.variation_step},
            "ode": {"step": self.ode_step},
            "characteristics": {"n_eps": self.n_eps, "base_x": self.base_x},
            "stability": {"basis": list(self.basis), "refinements": self.refinements,
                          "tol": self.stability_tol},
            "field": self.field_spec,
            "variation": {"order": self.variation_order},
            "codazzi": {"a": self.codazzi_a, "b": self.codazzi_b,
                        "range": list(self.codazzi_range), "step": self.codazzi_step},
            "output": {"dir": self.out_dir},
            "seed": self.seed,
        }


# ------------------------------------------------------------ validators

def _keys(obj, path, allowed, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown key")
    for k in required:
        if k not in obj:
            raise ConfigError(f"{path}.{k}", "required key missing")


def _num(value, path, positive=False, integer=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(path, f"must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(path, f"must be nonnegative, got {value!r}")
    return int(value) if integer else float(value)


def _pair(value, path, positive=False, integer=False, increasing=False):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(path, f"expected a pair, got {value!r}")
    a = _num(value[0], f"{path}[0]", positive=positive, integer=integer)
    b = _num(value[1], f"{path}[1]", positive=positive, integer=integer)
    if increasing and not b > a:
        raise ConfigError(path, f"interval must be nondegenerate, got {value!r}")
    return a, b


def validate_body_spec(spec, path="body"):
    _keys(spec, path, {"type"} | set().union(*BODY_KEYS.values()), ("type",))
    kind = spec["type"]
    if kind not in BODY_KEYS:
        raise ConfigError(f"{path}.type", f"unknown body type {kind!r}")
    _keys(spec, path, {"type"} | BODY_KEYS[kind])
    if kind == "disk":
        _num(spec.get("r", 1.0), f"{path}.r", positive=True)
    elif kind == "ellipse":
        _keys(spec, path, {"type", "a", "b"}, ("a", "b"))
        _num(spec["a"], f"{path}.a", positive=True)
        _num(spec["b"], f"{path}.b", positive=True)
    else:
        _keys(spec, path, {"type"} | BODY_KEYS[kind], ("h",))
        if not isinstance(spec["h"], list) or len(spec["h"]) < 8:
            raise ConfigError(f"{path}.h", "expected a list of at least 8 support values")
        for i, v in enumerate(spec["h"]):
            _num(v, f"{path}.h[{i}]", positive=True)
        if "theta_count" in spec:
            n = _num(spec["theta_count"], f"{path}.theta_count", positive=True, integer=True)
            if n != len(spec["h"]):
                raise ConfigError(f"{path}.theta_count", f"{n} declared but {len(spec['h'])} values given")


def validate_graph_spec(spec, path="graph"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(path, "expected an object with a 'type' key")
    kind = spec["type"]
    if kind == "closed_form":
        gid = spec.get("id")
        if gid not in CLOSED_FORM_KEYS:
            raise ConfigError(f"{path}.id", f"unknown closed form {gid!r}")
        _keys(spec, path, {"type", "id"} | CLOSED_FORM_KEYS[gid], CLOSED_FORM_KEYS[gid])
        for k in CLOSED_FORM_KEYS[gid] - {"coeffs"}:
            _num(spec[k], f"{path}.{k}")
        if gid == "custom_poly":
            c = spec["coeffs"]
            if not (isinstance(c, list) and c and all(isinstance(r, list) and r for r in c)):
                raise ConfigError(f"{path}.coeffs", "expected a nonempty list of rows")
            for i, row in enumerate(c):
                for j, v in enumerate(row):
                    _num(v, f"{path}.coeffs[{i}][{j}]")
    elif kind == "grid":
        _keys(spec, path, {"type"} | GRID_KEYS, tuple(sorted(GRID_KEYS)))
        for k in ("x0", "x1", "t0", "t1"):
            _num(spec[k], f"{path}.{k}")
        for k in ("nx", "nt"):
            if _num(spec[k], f"{path}.{k}", positive=True, integer=True) < 2:
                raise ConfigError(f"{path}.{k}", "need at least 2 grid points")
        if not isinstance(spec["values"], str):
            raise ConfigError(f"{path}.values", "expected a CSV path")
    elif kind == "ruling":
        _keys(spec, path, {"type"} | RULING_KEYS, ("eps", "a", "b"))
        n = None
        for k in ("eps", "a", "b"):
            v = spec[k]
            if not isinstance(v, list) or len(v) < 4:
                raise ConfigError(f"{path}.{k}", "expected a list of at least 4 numbers")
            for i, x in enumerate(v):
                _num(x, f"{path}.{k}[{i}]")
            if n is not None and len(v) != n:
                raise ConfigError(f"{path}.{k}", f"length {len(v)} differs from eps length {n}")
            n = len(v)
        if np.any(np.diff(spec["eps"]) <= 0):
            raise ConfigError(f"{path}.eps", "must be strictly increasing")
    else:
        raise ConfigError(f"{path}.type", f"unknown graph type {kind!r}")


def validate_field_spec(spec, path="field"):
    _keys(spec, path, SECTIONS["field"], ("coeffs", "bump"))
    c = spec["coeffs"]
    if not isinstance(c, list) or len(c) != 3:
        raise ConfigError(f"{path}.coeffs", "expected three coefficients")
    for i, v in enumerate(c):
        _num(v, f"{path}.coeffs[{i}]")
    if spec.get("basis", "surface") not in ("surface", "frame"):
        raise ConfigError(f"{path}.basis", "must be 'surface' or 'frame'")
    b = spec["bump"]
    _keys(b, f"{path}.bump", {"support", "power", "tilt", "amplitude"}, ("support",))
    s = b["support"]
    if not isinstance(s, list) or len(s) != 4:
        raise ConfigError(f"{path}.bump.support", "expected [x0, x1, t0, t1]")
    _pair(s[:2], f"{path}.bump.support[x]", increasing=True)
    _pair(s[2:], f"{path}.bump.support[t]", increasing=True)
    if "power" in b and _num(b["power"], f"{path}.bump.power", integer=True) < 3:
        raise ConfigError(f"{path}.bump.power", "must be at least 3 for a C^2 field")
    if "tilt" in b:
        _pair(b["tilt"], f"{path}.bump.tilt")
    if "amplitude" in b:
        _num(b["amplitude"], f"{path}.bump.amplitude")


# ------------------------------------------------------------------ parse

def parse_config(source, overrides=None, base_dir=None) -> RunConfig:
    """Validate a config mapping (or a JSON file path) and fill defaults.

    ``overrides`` is a mapping of dotted paths to values applied before
    validation, e.g. ``{"quadrature.order": 8}``.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        base_dir = path.parent if base_dir is None else base_dir
    else:
        raw = json.loads(json.dumps(source or {}))
    for dotted, value in (overrides or {}).items():
        node = raw
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value

    _keys(raw, "", set(SECTIONS), ())
    for k in ("body", "graph"):
        if k not in raw:
            raise ConfigError(k, "required section missing")
    validate_body_spec(raw["body"])
    validate_graph_spec(raw["graph"])
    cfg = RunConfig(body=raw["body"], graph=raw["graph"], base_dir=Path(base_dir or "."))

    for name, allowed in SECTIONS.items():
        if allowed is not None and name in raw and raw[name] is not None:
            _keys(raw[name], name, allowed)

    if "domain" in raw:
        d = raw["domain"]
        x = _pair(d.get("x", [0, 1]), "domain.x", increasing=True)
        t = _pair(d.get("t", [0, 1]), "domain.t", increasing=True)
        cfg.domain = Rect(x[0], x[1], t[0], t[1])
    q = raw.get("quadrature", {})
    order = _num(q.get("order", 16), "quadrature.order", positive=True, integer=True)
    cells = _pair(q.get("cells", [8, 8]), "quadrature.cells", positive=True, integer=True)
    cfg.quadrature = QuadratureSpec(order, cells)
    fd = raw.get("fd", {})
    cfg.fd_step = _num(fd.get("step", cfg.fd_step), "fd.step", positive=True)
    cfg.variation_step = _num(fd.get("variation_step", cfg.variation_step), "fd.variation_step", positive=True)
    cfg.ode_step = _num(raw.get("ode", {}).get("step", cfg.ode_step), "ode.step", positive=True)
    ch = raw.get("characteristics", {})
    cfg.n_eps = _num(ch.get("n_eps", cfg.n_eps), "characteristics.n_eps", positive=True, integer=True)
    if ch.get("base_x") is not None:
        cfg.base_x = _num(ch["base_x"], "characteristics.base_x")
    st = raw.get("stability", {})
    cfg.basis = _pair(st.get("basis", list(cfg.basis)), "stability.basis", positive=True, integer=True)
    cfg.refinements = _num(st.get("refinements", cfg.refinements), "stability.refinements",
                           integer=True, nonneg=True)
    cfg.stability_tol = _num(st.get("tol", cfg.stability_tol), "stability.tol", positive=True)
    if raw.get("field") is not None:
        validate_field_spec(raw["field"])
        cfg.field_spec = raw["field"]
    order = _num(raw.get("variation", {}).get("order", 1), "variation.order", integer=True)
    if order not in (1, 2):
        raise ConfigError("variation.order", f"must be 1 or 2, got {order}")
    cfg.variation_order = order
    cz = raw.get("codazzi", {})
    cfg.codazzi_a = _num(cz.get("a", 0.0), "codazzi.a")
    cfg.codazzi_b = _num(cz.get("b", 0.0), "codazzi.b")
    cfg.codazzi_range = _pair(cz.get("range", list(cfg.codazzi_range)), "codazzi.range", increasing=True)
    cfg.codazzi_step = _num(cz.get("step", cfg.codazzi_step), "codazzi.step", positive=True)
    out = raw.get("output", {}).get("dir", cfg.out_dir)
    if not isinstance(out, str) or not out:
        raise ConfigError("output.dir", "expected a nonempty path string")
    cfg.out_dir = out
    cfg.seed = _num(raw.get("seed", 0), "seed", integer=True, nonneg=True)
    return cfg


# ----------------------------------------------------------- construction

def build_body(cfg_or_spec) -> cb.ConvexBody2D:
    spec = cfg_or_spec.body if isinstance(cfg_or_spec, RunConfig) else cfg_or_spec
    try:
        return cb.body_from_spec(spec)
    except SFHError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("body", str(exc)) from exc


def _spec_rect(spec, fallback):
    if all(k in spec for k in ("x0", "x1", "t0", "t1")):
        return Rect(float(spec["x0"]), float(spec["x1"]), float(spec["t0"]), float(spec["t1"]))
    return fallback


def graph_from_spec(spec, domain: Rect = DEFAULT_DOMAIN, base_dir=".") -> gs.IntrinsicGraph:
    validate_graph_spec(spec)
    kind = spec["type"]
    if kind == "closed_form":
        gid = spec["id"]
        if gid == "zero":
            return gs.zero_graph(domain)
        if gid == "affine":
            return gs.affine_graph(domain, float(spec["a"]), float(spec["b"]))
        if gid == "xt_over_1px2":
            return gs.xt_graph(domain)
        if gid == "custom_poly":
            return gs.poly_graph(domain, spec["coeffs"])
        return gs.rational_ruled_graph(domain, float(spec["alpha"]), float(spec["beta"]))
    if kind == "grid":
        rect = _spec_rect(spec, domain)
        path = Path(spec["values"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        try:
            values = gs.read_grid_csv(path, int(spec["nx"]), int(spec["nt"]))
        except OSError as exc:
            raise ConfigError("graph.values", f"cannot read {path}: {exc.strerror}") from exc
        except ValueError as exc:
            raise ConfigError("graph.values", str(exc)) from exc
        return gs.GridGraph(rect, values, source=spec["values"])
    ruling = RulingData(np.asarray(spec["eps"], float), np.asarray(spec["a"], float),
                        np.asarray(spec["b"], float), float(spec.get("base_x", 0.0)))
    return build_ruled_graph(ruling, _spec_rect(spec, domain))


def build_graph(cfg: RunConfig) -> gs.IntrinsicGraph:
    return graph_from_spec(cfg.graph, cfg.domain, cfg.base_dir)


def default_field(graph: gs.IntrinsicGraph) -> dict:
    """U = bump * nu_h with the bump on the middle half of the domain."""
    d = graph.domain
    qx, qt = (d.x1 - d.x0) / 4, (d.t1 - d.t0) / 4
    return {"coeffs": [0.0, 1.0, 0.0], "basis": "surface",
            "bump": {"support": [d.x0 + qx, d.x1 - qx, d.t0 + qt, d.t1 - qt], "power": 4}}


def build_field(spec: dict) -> VariationField:
    validate_field_spec(spec)
    return VariationField(tuple(float(c) for c in spec["coeffs"]), Bump2D.from_spec(spec["bump"]),
                          spec.get("basis", "surface"))

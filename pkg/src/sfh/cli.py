"""Command-line front end.

    sfh area        --body '{"type":"disk","r":1}' --graph '{"type":"closed_form","id":"zero"}'
    sfh codazzi     --a 1 --b 1 --range 0:0.5
    sfh report      --config run.json

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import characteristic as ch
from . import codazzi as cz
from . import graph_surface as gs
from . import stability as st
from . import variation as var
from .config import (RunConfig, build_body, build_field, build_graph, default_field,
                     parse_config)
from .errors import ConfigError, DomainError, InvalidBodyError, NotStationaryError, NumericalError
from .output import write_csv, write_json

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("area", "stationarity", "foliate", "variation", "codazzi", "stability", "report")


def _json_arg(text, path):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON: {exc}") from exc


def _range_arg(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError("codazzi.range", f"expected LO:HI, got {text!r}") from None
    return [lo, hi]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--body", help="body spec as JSON (overrides config)")
    common.add_argument("--graph", help="graph spec as JSON (overrides config)")
    common.add_argument("--domain", nargs=4, type=float, metavar=("X0", "X1", "T0", "T1"))
    common.add_argument("--out", help="output directory")
    common.add_argument("--report", help="report JSON path (default OUT/<command>.json)")
    common.add_argument("--seed", type=int)
    common.add_argument("--quad-order", type=int, help="Gauss nodes per cell")
    common.add_argument("--cells", nargs=2, type=int, metavar=("NX", "NT"))

    chars = argparse.ArgumentParser(add_help=False)
    chars.add_argument("--n-eps", type=int, help="number of characteristic curves")
    chars.add_argument("--base-x", type=float, help="x where the curves start")
    chars.add_argument("--step", type=float, help="RK4 step")

    stab = argparse.ArgumentParser(add_help=False)
    stab.add_argument("--basis", nargs=2, type=int, metavar=("NX", "NT"))
    stab.add_argument("--refinements", type=int)
    stab.add_argument("--tol", type=float, help="relative eigenvalue change for convergence")

    parser = argparse.ArgumentParser(prog="sfh", description="Sub-Finsler area computations in H^1.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("area", parents=[common], help="sub-Finsler area of a graph")
    sub.add_parser("stationarity", parents=[common, chars], help="p along characteristics")
    sub.add_parser("foliate", parents=[common, chars], help="characteristic curves as CSV")
    p = sub.add_parser("variation", parents=[common], help="first/second variation checks")
    p.add_argument("--order", type=int, choices=(1, 2))
    p.add_argument("--field", help="variation field spec as JSON")
    p.add_argument("--ds", type=float, help="flow step for finite differences")
    p = sub.add_parser("codazzi", parents=[common], help="solve y'' - 6y'y + 4y^3 = 0")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--range", help="LO:HI (use --range=-1:1 for negative LO)")
    p.add_argument("--step", type=float)
    sub.add_parser("stability", parents=[common, stab], help="eigen-search for Q < 0")
    p = sub.add_parser("report", parents=[common, stab, chars], help="full Bernstein report")
    return parser


def config_from_args(args) -> RunConfig:
    raw = {}
    base_dir = None
    if args.config:
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        base_dir = path.parent
    ov = {}
    if args.body:
        ov["body"] = _json_arg(args.body, "body")
    if args.graph:
        ov["graph"] = _json_arg(args.graph, "graph")
    if args.domain:
        ov["domain.x"] = args.domain[:2]
        ov["domain.t"] = args.domain[2:]
    if args.out:
        ov["output.dir"] = args.out
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.quad_order is not None:
        ov["quadrature.order"] = args.quad_order
    if args.cells:
        ov["quadrature.cells"] = args.cells
    g = vars(args)
    for flag, key in (("n_eps", "characteristics.n_eps"), ("base_x", "characteristics.base_x"),
                      ("basis", "stability.basis"), ("refinements", "stability.refinements"),
                      ("tol", "stability.tol"), ("order", "variation.order"), ("ds", "fd.variation_step"),
                      ("a", "codazzi.a"), ("b", "codazzi.b")):
        if g.get(flag) is not None:
            ov[key] = g[flag]
    if g.get("field"):
        ov["field"] = _json_arg(g["field"], "field")
    if g.get("range"):
        ov["codazzi.range"] = _range_arg(g["range"])
    if g.get("step") is not None:
        ov["codazzi.step" if args.command == "codazzi" else "ode.step"] = g["step"]
    if args.command == "codazzi":
        # the ODE needs no surface; fill placeholders so the schema stays uniform
        raw.setdefault("body", {"type": "disk", "r": 1.0})
        raw.setdefault("graph", {"type": "closed_form", "id": "zero"})
        ov.setdefault("body", raw["body"])
        ov.setdefault("graph", raw["graph"])
    for k in ("body", "graph"):
        if k in ov:
            raw[k] = ov.pop(k)
    return parse_config(raw, ov, base_dir)


def _base_x(cfg, graph):
    if cfg.base_x is not None:
        return cfg.base_x
    d = graph.domain
    return 0.0 if d.x0 <= 0.0 <= d.x1 else 0.5 * (d.x0 + d.x1)


def _eps_grid(cfg, graph):
    d = graph.domain
    return np.linspace(d.t0, d.t1, cfg.n_eps + 2)[1:-1]


def _meta(cfg, command, graph=None):
    meta = {"command": command, "seed": cfg.seed, "body": cfg.body}
    if graph is not None:
        d = graph.domain
        meta["graph"] = cfg.graph
        meta["domain"] = {"x": [d.x0, d.x1], "t": [d.t0, d.t1]}
    return meta


# ------------------------------------------------------------ commands

def cmd_area(cfg, out):
    body, graph = build_body(cfg), build_graph(cfg)
    q = cfg.quadrature
    rep = _meta(cfg, "area", graph)
    rep["quadrature"] = {"order": q.order, "cells": list(q.cells)}
    rep["area"] = gs.subfinsler_area(graph, body, q)
    rep["area_param"] = var.area_param(graph, body, q)
    rep["sub_riemannian_area"] = gs.sub_riemannian_area(graph, q)
    return rep, []


def cmd_stationarity(cfg, out):
    graph = build_graph(cfg)
    eps, bx = _eps_grid(cfg, graph), _base_x(cfg, graph)
    curves = ch.integrate_characteristics(graph, eps, step=cfg.ode_step, base_x=bx)
    lines = [ch.line_check(graph, c) for c in curves]
    residual = max(float(np.ptp(c.p)) for c in curves)
    rep = _meta(cfg, "stationarity", graph)
    rep.update({
        "base_x": bx, "n_eps": len(curves), "step": cfg.ode_step,
        "residual": residual,
        "stationary": residual <= st.STATIONARY_TOL,
        "monotonicity": ch.monotonicity_check(graph, eps, step=cfg.ode_step, base_x=bx),
        "line_residual": max(r[0] for r in lines),
        "contact_residual": max(r[1] for r in lines),
        "quadratic_fit_residual": max(ch.quadratic_fit_residual(c) for c in curves),
    })
    return rep, []


def cmd_foliate(cfg, out):
    graph = build_graph(cfg)
    eps, bx = _eps_grid(cfg, graph), _base_x(cfg, graph)
    curves = ch.integrate_characteristics(graph, eps, step=cfg.ode_step, base_x=bx)
    files = []
    for k, c in enumerate(curves):
        files.append(write_csv(out / "curves" / f"curve_{k:03d}.csv", ["s", "t", "u", "p"],
                               [c.s, c.t, c.u, c.p]))
    ruling = ch.ruling_from_graph(graph, eps, bx)
    d = graph.domain
    ruling_spec = {"type": "ruling", **ruling.to_json(), "x0": d.x0, "x1": d.x1, "t0": d.t0, "t1": d.t1}
    files.append(write_json(out / "ruling.json", ruling_spec))
    rep = _meta(cfg, "foliate", graph)
    rep.update({
        "base_x": bx, "step": cfg.ode_step,
        "curves": [{"eps": c.eps, "file": str(f.relative_to(out)), "samples": int(c.s.size),
                    "truncated": c.truncated} for c, f in zip(curves, files)],
        "ruling": "ruling.json",
    })
    return rep, files


def cmd_variation(cfg, out):
    body, graph = build_body(cfg), build_graph(cfg)
    spec = cfg.field_spec or default_field(graph)
    field = build_field(spec)
    q, ds = cfg.quadrature, cfg.variation_step
    rep = _meta(cfg, "variation", graph)
    rep.update({"order": cfg.variation_order, "field": spec, "ds": ds})
    if cfg.variation_order == 1:
        fd = var.first_variation_fd(graph, field, body, ds, q)
        formula = var.first_variation_formula(graph, field, body, q, cfg.fd_step)
        graph_route = var.first_variation_graph(graph, var.equivalent_graph_perturbation(graph, field), body, q)
        rep["graph_route"] = graph_route
        rep["graph_route_gap"] = abs(graph_route - fd)
    else:
        c0, c1, c2 = field.coeffs
        if field.basis != "surface" or c0 != 0 or c2 != 0:
            raise ConfigError("field.coeffs", "the second variation is checked for U = f nu_h, "
                                              "i.e. surface basis with coeffs [0, c, 0]")
        fd = var.second_variation_fd(graph, field, body, ds, q)
        formula = var.second_variation_formula(graph, field.bump.scaled(c1), body, q, cfg.fd_step)
    rep["fd"] = fd
    rep["formula"] = formula
    rep["abs_gap"] = abs(fd - formula)
    rep["rel_gap"] = abs(fd - formula) / max(abs(fd), abs(formula), 1e-300)
    rep["scaled_gap"] = abs(fd - formula) / (1 + abs(fd))
    return rep, []


def cmd_codazzi(cfg, out):
    a, b = cfg.codazzi_a, cfg.codazzi_b
    sol = cz.integrate_codazzi(a, b, cfg.codazzi_range, cfg.codazzi_step)
    closed = cz.y_closed_form(a, b, sol.s)
    gap = np.abs(closed - sol.y)
    path = write_csv(out / "codazzi.csv", ["s", "y_closed", "y_rk4", "residual"],
                     [sol.s, closed, sol.y, gap])
    cls = cz.classify_global(a, b)
    rep = {"command": "codazzi", "seed": cfg.seed, "a": a, "b": b,
           "range": list(cfg.codazzi_range), "step": cfg.codazzi_step,
           "classification": {"entire": cls.entire, "pole_at": cls.pole, "poles": list(cls.poles)},
           "samples": int(sol.s.size), "truncated": sol.truncated, "truncation": sol.reason,
           "max_residual": float(gap.max()),
           "ode_residual": cz.ode_residual(sol.s, sol.y) if sol.s.size > 2 else None,
           "first_integral_residual": float(np.max(cz.first_integral_residual(a, b, sol.s))),
           "csv": path.name}
    return rep, [path]


def _require_stationary(cfg, graph):
    eps, bx = _eps_grid(cfg, graph), _base_x(cfg, graph)
    res = ch.stationarity_residual(graph, eps, step=cfg.ode_step, base_x=bx)
    if res > st.STATIONARY_TOL:
        raise NotStationaryError(f"graph is not area-stationary (p oscillation {res:.3g})")
    return res


def cmd_stability(cfg, out):
    body, graph = build_body(cfg), build_graph(cfg)
    res = _require_stationary(cfg, graph)
    eig = st.find_destabilizing(graph, body, shape=cfg.basis, refinements=cfg.refinements,
                                tol=cfg.stability_tol)
    w = eig.witness
    direct = st.stability_form(graph, body, w, st.witness_quadrature(w.rect, w.shape))
    rep = _meta(cfg, "stability", graph)
    rep.update({
        "stationarity_residual": res,
        "min_eigenvalue": eig.min_eigenvalue,
        "negative": eig.min_eigenvalue < -st.NEG_TOL,
        "converged": eig.converged,
        "eigen_history": eig.history,
        "kappa_oscillation": eig.kappa_oscillation,
        "witness": {**w.to_spec(), "Q_direct": direct, "mass": st.witness_mass(graph, body, w)},
    })
    return rep, []


def cmd_report(cfg, out):
    body, graph = build_body(cfg), build_graph(cfg)
    report = st.bernstein_report(graph, body, n_eps=cfg.n_eps, base_x=cfg.base_x, basis=cfg.basis,
                                 refinements=cfg.refinements, tol=cfg.stability_tol,
                                 ode_step=cfg.ode_step)
    rep = _meta(cfg, "report", graph)
    rep.update(report.to_dict())
    return rep, []


HANDLERS = {
    "area": cmd_area, "stationarity": cmd_stationarity, "foliate": cmd_foliate,
    "variation": cmd_variation, "codazzi": cmd_codazzi, "stability": cmd_stability,
    "report": cmd_report,
}


def _thread_limit():
    raw = os.environ.get("SFH_THREADS")
    if raw is None or raw == "":
        return contextlib.nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("SFH_THREADS", f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("SFH_THREADS", f"expected a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            cfg = config_from_args(args)
            out = Path(cfg.out_dir)
            report, _ = HANDLERS[args.command](cfg, out)
            path = Path(args.report) if args.report else out / f"{args.command}.json"
            write_json(path, report)
    except (ConfigError, InvalidBodyError, DomainError, NotStationaryError) as exc:
        print(f"sfh {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sfh {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"sfh {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(path)
    return EXIT_OK


def main():
    sys.exit(run())


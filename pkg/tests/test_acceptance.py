"""Acceptance criteria, each run at its stated tolerance with one PASS/FAIL line."""
import numpy as np
import pytest

from sfh import characteristic as ch
from sfh import codazzi as cz
from sfh import convex_body as cb
from sfh import graph_surface as gs
from sfh import stability as sb
from sfh import variation as va
from sfh.quadrature import QuadratureSpec, Rect

from suites import (BUMP, QUAD, SQUARE, area_graphs, bodies, first_variation_fields,
                    first_variation_graphs, stationary_graphs)

RESULTS = []


def record(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_1_convex_duality():
    v = np.random.default_rng(2024).normal(size=(1000, 2)) * 3
    errs = {}
    for name, body in (("disk", cb.disk()), ("ellipse(2,1)", cb.ellipse(2, 1)),
                       ("shifted_ellipse", cb.shifted_ellipse())):
        lhs = np.sum(v * cb.pi_K(body, v), axis=-1)
        errs[name] = float(np.max(np.abs(lhs - cb.dual_norm(body, v))))
    ok = errs["disk"] <= 1e-10 and errs["ellipse(2,1)"] <= 1e-10 and errs["shifted_ellipse"] <= 1e-6
    record(1, "convex duality", ok, ", ".join(f"{k} {e:.2e}" for k, e in errs.items()))


def test_2_sub_riemannian_specialization():
    worst = 0.0
    graphs = area_graphs()
    for g in graphs.values():
        a = gs.subfinsler_area(g, cb.disk(), QUAD)
        # reference integrand sqrt(1 + p^2) assembled directly from u
        x, t, w = QUAD.nodes(g.domain)
        u, ux, ut = g.derivatives(x, t)
        ref = float(np.dot(np.sqrt(1 + (ux + 2 * u * ut) ** 2), w))
        worst = max(worst, abs(a - ref) / abs(ref))
    record(2, "disk area equals sub-Riemannian area", len(graphs) >= 5 and worst <= 1e-8,
           f"{len(graphs)} graphs, max rel err {worst:.2e}")


def test_3_first_variation():
    worst_fd, worst_route, n = 0.0, 0.0, 0
    for g in first_variation_graphs().values():
        for field in first_variation_fields().values():
            for body in bodies().values():
                fd = va.first_variation_fd(g, field, body, quad=QUAD)
                formula = va.first_variation_formula(g, field, body, QUAD)
                route = va.first_variation_graph(g, va.equivalent_graph_perturbation(g, field), body, QUAD)
                scale = 1 + abs(fd)
                worst_fd = max(worst_fd, abs(fd - formula) / scale)
                worst_route = max(worst_route, abs(route - fd) / scale, abs(route - formula) / scale)
                n += 1
    ok = n >= 12 and worst_fd <= 1e-4 and worst_route <= 1e-4
    record(3, "first variation FD / formula / graph route", ok,
           f"{n} triples, FD-formula {worst_fd:.2e}, graph route {worst_route:.2e}")


def _foliation_graphs():
    box = Rect(-2.0, 2.0, -2.0, 2.0)
    eps = np.linspace(-3.0, 3.0, 121)
    ruling = ch.RulingData(eps, 0.3 * np.sin(eps), 0.2 + 0.1 * np.cos(eps))
    return {
        "zero": gs.zero_graph(box),
        "affine(0.4,0.7)": gs.affine_graph(box, 0.4, 0.7),
        "xt_over_1px2": gs.xt_graph(box),
        "rational_ruled(0.5,0.2)": gs.rational_ruled_graph(box, 0.5, 0.2),
        "ruled(sin,cos)": ch.build_ruled_graph(ruling, box),
    }


def test_4_foliation():
    eps = np.linspace(-1.0, 1.0, 9)
    worst = {"p": 0.0, "line": 0.0, "quadratic": 0.0}
    for g in _foliation_graphs().values():
        for c in ch.integrate_characteristics(g, eps, step=1e-2):
            worst["p"] = max(worst["p"], float(np.ptp(c.p)))
            worst["line"] = max(worst["line"], ch.line_check(g, c)[0])
            worst["quadratic"] = max(worst["quadratic"], ch.quadratic_fit_residual(c))
    ok = all(v <= 1e-8 for v in worst.values())
    record(4, "stationary graphs are ruled by lines", ok,
           ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_5_codazzi():
    rng = np.random.default_rng(5)
    gap, first, dil = 0.0, 0.0, 0.0
    for _ in range(100):
        a, b = rng.uniform(-2, 2, 2)
        pole = cz.classify_global(a, b).pole
        L = 1.0 if pole is None else min(1.0, 0.5 * abs(pole))
        sol = cz.integrate_codazzi(a, b, (-L, L), step=1e-4)
        gap = max(gap, float(np.max(np.abs(sol.y - cz.y_closed_form(a, b, sol.s)))))
        first = max(first, float(np.max(cz.first_integral_residual(a, b, sol.s))))
        lam = rng.uniform(0.5, 2.0)
        s = sol.s[::50]
        dilated = cz.y_closed_form(a, b, s / lam) / lam
        dil = max(dil, float(np.max(np.abs(dilated - cz.y_closed_form(a / lam, b / lam**2, s)))))
    d_gap, _ = cz.dilation_residual(0.8, -0.5, 1.7, (-1, 1))
    dil = max(dil, d_gap)
    ok = gap <= 1e-8 and first <= 1e-10 and dil <= 1e-8
    record(5, "Codazzi closed form", ok, f"RK4 gap {gap:.2e}, first integral {first:.2e}, dilation {dil:.2e}")


def test_6_second_variation():
    worst, n_graphs, n_bodies = 0.0, 0, 0
    field = va.VariationField((0.0, 1.0, 0.0), BUMP)
    for g in stationary_graphs().values():
        n_graphs += 1
        n_bodies = 0
        for body in bodies().values():
            n_bodies += 1
            fd = va.second_variation_fd(g, field, body, quad=QUAD)
            formula = va.second_variation_formula(g, BUMP, body, QUAD)
            worst = max(worst, abs(fd - formula) / abs(formula))
    ok = n_graphs >= 3 and n_bodies >= 2 and worst <= 1e-3
    record(6, "second variation FD vs formula", ok,
           f"{n_graphs} graphs x {n_bodies} bodies, max rel gap {worst:.2e}")


def test_7_bernstein():
    zero = sb.bernstein_report(gs.zero_graph(SQUARE), cb.disk())
    plane = sb.bernstein_report(gs.affine_graph(SQUARE, 6.0, 2.0), cb.ellipse(2, 1))
    xt = sb.bernstein_report(gs.xt_graph(Rect(-5.0, 5.0, -5.0, 5.0)), cb.disk())
    ok = (zero.verdict == "stable-planar" and zero.min_eigenvalue >= -1e-8
          and plane.verdict == "stable-planar" and plane.min_eigenvalue >= -1e-8
          and xt.verdict == "unstable" and xt.min_eigenvalue < 0
          and xt.witness["Q_direct"] < 0 and xt.witness["rel_gap"] <= 0.01)
    record(7, "Bernstein verdicts", ok,
           f"zero {zero.verdict} lam {zero.min_eigenvalue:.3g}, plane {plane.verdict} lam "
           f"{plane.min_eigenvalue:.3g}, xt {xt.verdict} lam {xt.min_eigenvalue:.4g} "
           f"(direct rel gap {xt.witness.get('rel_gap', float('nan')):.1e})")


def test_8_hardy():
    fail_gap = sb.hardy_gap(0.0, 2.0, sb.cutoff_rational(60.0), cells=256)
    rng = np.random.default_rng(8)
    worst = np.inf
    for _ in range(100):
        A = rng.uniform(-3, 3)
        B = A * A / 2
        psi = sb.random_bump_sum(rng, sb.support_avoiding_roots(A, B, rng))
        worst = min(worst, sb.hardy_gap(A, B, psi))
    ok = fail_gap < 0 and worst >= 0
    record(8, "Hardy inequality", ok, f"(0,2) gap {fail_gap:.4f}, min gap on 2B=A^2 {worst:.3e}")


def test_9_integration_by_parts():
    order = 4
    # a single cell per side is pre-asymptotic; rates are measured from 2 cells on
    cells = (2, 4, 8, 16)
    graphs = {k: g for k, g in stationary_graphs().items() if k != "zero"}
    finals, rates, errs_at_4 = [], [], []
    for g in graphs.values():
        for body in bodies().values():
            errs = []
            for c in cells:
                res = va.integration_by_parts_residuals(g, BUMP, body, QuadratureSpec(order, (c, c)))
                errs.append(max(abs(v) for v in res))
            finals.append(errs[-1])
            errs_at_4.append(errs[1])
            rates += [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    # Gauss-Legendre with n nodes per cell converges like h^(2n) on smooth integrands
    ok = max(finals) <= 1e-5 and min(rates) >= 2 * order - 0.5
    record(9, "integration-by-parts residuals", ok,
           f"max residual {max(finals):.2e} at {cells[-1]}x{cells[-1]} cells, "
           f"{max(errs_at_4):.2e} at 4x4, "
           f"observed order >= {min(rates):.2f} (expected {2 * order})")

"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (printed and collected into the
terminal summary) before asserting.
"""
from __future__ import annotations

import json
import time

import numpy as np
import pytest

from _exprgen import random_tree
from conftest import ACCEPTANCE_LOG, cubic
from pleatlab import curves as cv
from pleatlab.classify import classify_singular_point, table1_case
from pleatlab.errors import DomainError
from pleatlab.jet import CompiledExpr, algebra
from pleatlab.lift import ImplicitOde
from pleatlab.nflab import WELLFOLDED_TEXT, check_integral_curve, representative_b
from pleatlab import portrait as pr

CRIMINANT_B = (-3.0, -1.0, 0.25, 0.55, 0.8, 2.0)
PERTURBATION = "p^4 + x^2*p"  # phi = p^4, x * psi with psi = x p


def record(n: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {title} -- {detail}"
    print(line)
    ACCEPTANCE_LOG.append(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------


def _fd_errors(expr, center, h=1e-5):
    """Largest scaled error of every order-1..3 jet partial against a central
    difference (step h) of the AD partial one order lower."""
    alg = algebra(3)
    prog = CompiledExpr(expr)
    base = prog.jet(center, 3) * alg.factorials
    worst = 0.0
    for n, mono in enumerate(alg.monomials):
        if sum(mono) == 0:
            continue
        v = max(range(3), key=lambda i: mono[i])
        lower = list(mono)
        lower[v] -= 1
        lo_idx = alg.index[tuple(lower)]
        shift = np.zeros(3)
        shift[v] = h
        plus = prog.jet(np.add(center, shift), 3) * alg.factorials
        minus = prog.jet(np.subtract(center, shift), 3) * alg.factorials
        fd = (plus[lo_idx] - minus[lo_idx]) / (2 * h)
        worst = max(worst, abs(base[n] - fd) / max(abs(base[n]), 1.0))
    return worst


def test_criterion_01_ad_matches_finite_differences():
    rng = np.random.default_rng(20240601)
    errors = []
    while len(errors) < 50:
        tree = random_tree(rng, 3)
        center = tuple(rng.uniform(-0.8, 0.8, 3))
        try:
            errors.append(_fd_errors(tree, center))
        except DomainError:
            continue
    worst = max(errors)
    record(1, "jet partials vs central differences", worst < 1e-6, f"50 expressions, max rel err {worst:.2e} (< 1e-6)")


# 2 ---------------------------------------------------------------------------


def test_criterion_02_criminant_exact():
    devs = {}
    for b in CRIMINANT_B:
        tr = cv.trace_criminant(cubic(b), (-0.3, 0.3))
        dev = max(np.max(np.abs(tr.x - tr.p**2 / b)), np.max(np.abs(tr.y - 2 * tr.p**3 / 3)))
        devs[b] = float(dev)
        assert np.min(tr.p) <= -0.3 + 1e-12 and np.max(tr.p) >= 0.3 - 1e-12
    worst = max(devs.values())
    record(2, "traced criminant vs x = p^2/b, y = 2p^3/3", worst < 1e-8, f"max deviation {worst:.2e} over 6 b (< 1e-8)")


# 3 ---------------------------------------------------------------------------


def test_criterion_03_vertical_curve_coefficient():
    errs = {}
    for b in (-3.0, -1.0, 0.25, 0.8, 2.0):
        res = cv.lemma2_check(cubic(b))
        assert res["mode"] == "fit"
        errs[b] = res["rel_err"]
    n2 = cv.lemma2_check(cubic(0.55))
    inv = n2["invariance_residual"]
    worst = max(errs.values())
    ok = worst < 0.01 and inv < 1e-10
    record(3, "v0 = 1/(3b-2)", ok, f"max fit rel err {worst:.2e} (< 1e-2); N2 invariance residual {inv:.1e} (< 1e-10)")


# 4 ---------------------------------------------------------------------------


def test_criterion_04_table1_rows_and_m_invariants():
    failures, worst_m = [], 0.0
    for case, b in representative_b().items():
        measured, rep = cv.table1_from_fits(cubic(b))
        expected = table1_case(b)
        if measured.lifted_field != expected.lifted_field or measured.signs != expected.signs:
            failures.append(case)
        if expected.inverse_ratio is not None and measured.inverse_ratio != expected.inverse_ratio:
            failures.append(case)
        if expected.cube_ratio is not None and measured.cube_ratio != expected.cube_ratio:
            failures.append(case)
        mK, mC = 4 / 9 * b**3, 4 / 9 * (3 * b - 2)
        worst_m = max(worst_m, abs(rep.mK - mK) / abs(mK), abs(rep.mC - mC) / abs(mC))
    ok = not failures and worst_m < 0.01
    detail = f"row mismatches {sorted(set(failures)) or 'none'}; max m rel err {worst_m:.2e} (< 1e-2)"
    record(4, "Table 1 rows and (mK, mC)", ok, detail)


# 5 ---------------------------------------------------------------------------


def test_criterion_05_well_folded_thresholds():
    got = {}
    for alpha in (-1.0, 1 / 16, 1 / 4):
        cls = classify_singular_point(ImplicitOde.from_text(WELLFOLDED_TEXT, {"alpha": alpha}))
        got[alpha] = (cls.kind, cls.stability)
    ok = got == {
        -1.0: ("FoldedImproper", "saddle"),
        1 / 16: ("FoldedImproper", "node"),
        1 / 4: ("FoldedImproper", "focus"),
    }
    record(5, "(p + alpha x)^2 = y saddle/node/focus", ok, ", ".join(f"alpha={a:g}: {s}" for a, (_, s) in got.items()))


# 6 ---------------------------------------------------------------------------


def test_criterion_06_resonance_detection():
    res = {b: classify_singular_point(cubic(b)).resonance for b in (1 / 3, 3 / 4, 0.55)}
    got = {b: None if r is None else (r.form, r.n) for b, r in res.items()}
    ok = got == {1 / 3: ("1/(n+1)", 2), 3 / 4: ("n/(n+1)", 3), 0.55: None}
    record(6, "resonance forms", ok, f"b=1/3: {got[1 / 3]}, b=3/4: {got[3 / 4]}, b=0.55: {got[0.55]}")


# 7 ---------------------------------------------------------------------------


def test_criterion_07_perturbation_robustness():
    shifts, cases_ok = {}, True
    for b in (-3.0, 0.25, 0.8, 2.0):
        plain = cubic(b)
        pert = plain.with_term(PERTURBATION)
        cases_ok &= classify_singular_point(pert).case == classify_singular_point(plain).case
        v_plain = cv.lemma2_check(plain)["v0_fitted"]
        v_pert = cv.lemma2_check(pert)["v0_fitted"]
        shifts[b] = abs(v_pert - v_plain) / abs(v_plain)
    worst = max(shifts.values())
    record(7, "phi = p^4, psi = xp perturbation", cases_ok and worst < 0.02, f"cases unchanged: {cases_ok}; max v0 shift {worst:.2e} (< 2e-2)")


# 8 ---------------------------------------------------------------------------


def test_criterion_08_form12_reduction():
    red = cv.reduce_to_form12(cubic(2.0).with_term("x^2*p"), window=0.1)
    ident = cv.reduce_to_form12(cubic(2.0), window=0.1)
    grid = np.linspace(-0.1, 0.1, 401)
    u_max = float(max(np.max(np.abs(ident.u(grid))), np.max(np.abs(ident.du(grid)))))
    ok = red.residual < 1e-6 and u_max < 1e-12
    record(8, "reduction y -> y - u(x)", ok, f"perturbed residual {red.residual:.1e} (< 1e-6); unperturbed |u|,|u'| {u_max:.1e} (< 1e-12)")


# 9 ---------------------------------------------------------------------------


def _six(outdir):
    built = {}
    for case, b in representative_b().items():
        pt = pr.render(cubic(b))
        pt.write(outdir)
        built[case] = pt
    return built


def _read_all(outdir):
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


def test_criterion_09_portraits(tmp_path):
    start = time.perf_counter()
    first = _six(tmp_path / "a")
    bold = {case: pr.bold_branches(pt.manifest, "chart") for case, pt in first.items()}
    sides = pr.cusp_sides(first["N1"])
    tongue = {case: pr.tongue_containment(first[case]) for case in ("S3", "N3")}
    elapsed = time.perf_counter() - start
    _six(tmp_path / "b")
    a, b = _read_all(tmp_path / "a"), _read_all(tmp_path / "b")
    identical = a == b and len(a) == 18
    saddles_ok = all(bold[c] == 4 for c in ("S1", "S2", "S3"))
    opposite = sides[0] * sides[1] < 0
    inside = all(v == 1.0 for v in tongue.values())
    ok = saddles_ok and opposite and inside and identical and elapsed < 60
    detail = (
        f"saddle bold branches {[bold[c] for c in ('S1', 'S2', 'S3')]}; N1 cusp sides {sides}; "
        f"tongue fraction S3={tongue['S3']:.2f} N3={tongue['N3']:.2f}; byte-identical {identical}; {elapsed:.1f} s (< 60 s)"
    )
    record(9, "six portrait pairs", ok, detail)
    manifest = json.loads(a["S3.manifest.json"])
    assert manifest["case"] == "S3"


# 10 --------------------------------------------------------------------------


def test_criterion_10_normal_form_oracles():
    runs = {
        "node_nonres:b=0.3": (1.0, -0.5),
        "node_nonres:b=0.6": (1.0, 2.0),
        "node_res:n=2,eps=1": (1.0, -1.0),
        "node_res:n=3,eps=1": (0.5, 2.0),
        "node_res:n=2,eps=0": (1.0, 3.0),
    }
    worst = 0.0
    for oracle_id, cs in runs.items():
        for c in cs:
            chk = check_integral_curve(oracle_id, c, (1e-3, 1.0))
            assert chk.stop_reason == "window_exit"
            assert chk.xi[-1] <= 1e-3
            worst = max(worst, chk.max_error)
    record(10, "closed-form node integral curves", worst < 1e-8, f"max |eta - exact| {worst:.1e} on xi in [1e-3, 1] (< 1e-8)")

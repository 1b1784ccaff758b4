import math

import numpy as np
import pytest

from conftest import cubic
from pleatlab import curves as cv
from pleatlab.errors import DegenerateError, FitError
from pleatlab.lift import ImplicitOde, Trajectory, locus_residual


def _traj(p, x, y):
    return Trajectory(np.arange(len(p), dtype=float), x, p, y)


def test_criminant_of_a_perturbed_equation_stays_on_the_locus():
    ode = cubic(0.8).with_term("p^4 + x^2*p")
    tr = cv.trace_criminant(ode, (-0.2, 0.2))
    assert np.all(np.diff(tr.p) > 0)
    for x, p, y in zip(tr.x[::10], tr.p[::10], tr.y[::10]):
        assert locus_residual(ode, (x, y, p), "criminant").vanishes(1e-12)


@pytest.mark.parametrize("b, kind", [(2.0, "separatrix"), (-1.0, "separatrix"), (0.25, "strong"), (0.8, "weak")])
def test_vertical_curve_matches_closed_form(b, kind):
    inv = cv.invariant_curve(cubic(b), "C")
    assert inv.kind == kind
    tr = inv.curve
    v0 = 1 / (3 * b - 2)
    assert np.max(np.abs(tr.x - v0 * tr.p**2)) < 1e-7
    assert np.max(np.abs(tr.y - 2 * v0 * tr.p**3 / 3)) < 1e-7
    # signed arclength parameter, zero at O
    assert np.all(np.diff(tr.t) > 0)
    assert tr.t[np.argmin(np.hypot(tr.x, tr.p))] == 0.0
    if kind == "weak":
        assert inv.beta == pytest.approx(0.8 / 0.2)


# N2: the strong/weak ratio is 0.55/0.45, so neighbouring orbits leave the
# axis only like r^0.22 and shooting pins the angle to about 1e-6
@pytest.mark.parametrize("b, tol", [(-3.0, 1e-9), (0.25, 1e-9), (0.55, 1e-6), (0.8, 1e-9)])
def test_horizontal_curve_is_the_x_axis(b, tol):
    tr = cv.invariant_curve(cubic(b), "Cprime").curve
    assert np.max(np.abs(tr.p)) < tol and np.max(np.abs(tr.y)) < tol
    assert tr.x.min() < -0.2 and tr.x.max() > 0.2


def test_invariant_curve_argument_checks():
    with pytest.raises(ValueError):
        cv.invariant_curve(cubic(2.0), "K")


def test_fit_semicubic_recovers_coefficients():
    p = np.linspace(-0.1, 0.1, 201)
    x = 0.7 * p**2 + 0.3 * p**3 - 2 * p**5
    y = -1.2 * p**3 + 0.4 * p**4
    fit = cv.fit_semicubic(_traj(p, x, y), "chart", 0.1)
    assert fit.A == pytest.approx(0.7, rel=1e-10) and fit.B == pytest.approx(-1.2, rel=1e-10)
    assert fit.m == pytest.approx(1.44 / 0.343)
    assert fit.to_json()["window"] == 0.1


def test_fit_semicubic_with_nuisance_power():
    p = np.linspace(-0.1, 0.1, 401)
    beta = 2.5
    x = 0.5 * p**2 + 0.2 * np.abs(p) ** beta * (p > 0) + 0.1 * p**3
    fit = cv.fit_semicubic(_traj(p, x, x * p), "chart", 0.1, beta)
    assert fit.A == pytest.approx(0.5, rel=1e-8)


def test_fit_semicubic_plane_mode():
    s = np.linspace(-0.3, 0.3, 301)
    x, y = 2.0 * s**2, 0.9 * s**3
    fit = cv.fit_semicubic(_traj(s, x, y), "plane", 0.1)
    # y = K |x|^(3/2) with K = 0.9 / 2^1.5
    assert fit.A == 1.0 and fit.B == pytest.approx(0.9 / 2**1.5, rel=1e-8)


def test_fit_errors():
    p = np.linspace(-0.1, 0.1, 5)
    with pytest.raises(FitError):
        cv.fit_semicubic(_traj(p, p**2, p**3), "chart", 0.1)
    with pytest.raises(ValueError):
        cv.fit_semicubic(_traj(p, p**2, p**3), "polar", 0.1)


def test_lemma3_arrangement(case_b):
    case, b = case_b
    rep = cv.arrangement(cubic(b))
    assert rep.same_semiplane == (not 0 < b < 2 / 3)
    if b < -2 or b > 2 / 3:
        assert rep.c_in_tongue is True
    elif -2 < b < 0:
        assert rep.c_in_tongue is False
    else:
        assert rep.c_in_tongue is None
        assert rep.to_json()["c_in_tongue"] == "not_applicable"
    assert rep.mK == pytest.approx(4 / 9 * b**3, rel=1e-3)
    assert rep.mC == pytest.approx(4 / 9 * (3 * b - 2), rel=1e-3)


def test_lemma2_on_a_rescaled_equation():
    # x -> 2x changes f_ppp; the check works in normalized units
    ode = ImplicitOde.from_text("b*x*p - 8*p^3/3 - y", {"b": 2.0})
    res = cv.lemma2_check(ode)
    assert res["case"] == "S3"
    assert res["rel_err"] < 1e-3 and res["rel_err_B"] < 1e-3


def test_lemma2_n2_uses_invariance():
    res = cv.lemma2_check(cubic(0.55))
    assert res["mode"] == "invariance" and res["invariance_residual"] < 1e-12
    assert cv.invariance_residual(cubic(0.55), 1.2 / (3 * 0.55 - 2)) > 1e-4


def test_checks_need_a_pleated_improper_point():
    with pytest.raises(DegenerateError):
        cv.lemma2_check(ImplicitOde.from_text("(p - x)^2 - y"))


def test_form12_nontrivial_reduction():
    red = cv.reduce_to_form12(cubic(2.0).with_term("x^3"), window=0.1)
    grid = np.linspace(-0.1, 0.1, 101)
    assert red.residual < 1e-8
    assert np.max(np.abs(red.u(grid))) > 1e-5
    assert red.u(0.0) == pytest.approx(0.0, abs=1e-12) and red.du(0.0) == pytest.approx(0.0, abs=1e-10)
    assert np.max(np.abs(red.G(grid, 0.0, 0.0))) < 1e-8
    with pytest.raises(ValueError):
        red.u(10.0)


def test_theorem_smoothness():
    assert cv.theorem_smoothness(1 / 3, 1)[0] == 2
    assert cv.theorem_smoothness(1 / 3, 0)[0] == math.inf
    assert cv.theorem_smoothness(3 / 4, 1)[0] == math.inf
    assert cv.theorem_smoothness(2.0)[0] == math.inf

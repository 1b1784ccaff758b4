import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _exprgen import random_tree
from pleatlab import expr as E
from pleatlab.errors import DomainError, UnboundParameterError
from pleatlab.jet import CompiledExpr, algebra, eval_jet

coords = st.floats(-0.8, 0.8, allow_nan=False)


def test_monomial_layout():
    alg = algebra(3)
    assert alg.size == 20
    assert alg.monomials[:4] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_polynomial_partials_exact():
    j = eval_jet(E.parse("b*x*p - p^3/3 - y"), {"b": 2.0}, (0.1, 0.2, 0.3))
    assert j.F == pytest.approx(2 * 0.1 * 0.3 - 0.3**3 / 3 - 0.2)
    assert j.F_x == pytest.approx(0.6)
    assert j.F_y == -1.0
    assert j.F_p == pytest.approx(0.2 - 0.09)
    assert j.F_xp == 2.0
    assert j.F_pp == pytest.approx(-0.6)
    assert j.F_ppp == -2.0
    assert j.d("xx") == 0.0


def test_constants_shift_only_the_value():
    j = eval_jet(E.parse("1.5*(0.7 - y) + 2 + x"), None, (0.0, 0.3, 0.0))
    assert j.F == pytest.approx(1.5 * 0.4 + 2)
    assert j.F_x == 1.0 and j.F_y == -1.5
    assert np.count_nonzero(j.coeff[4:]) == 0


@given(coords, coords, coords)
def test_transcendental_series(x, y, p):
    j = eval_jet(E.parse("exp(x)*sin(p) + ln(2 + y)"), None, (x, y, p))
    assert j.F == pytest.approx(math.exp(x) * math.sin(p) + math.log(2 + y))
    assert j.d("xpp") == pytest.approx(-math.exp(x) * math.sin(p))
    assert j.d("yyy") == pytest.approx(2 / (2 + y) ** 3)
    assert j.d("xp") == pytest.approx(math.exp(x) * math.cos(p))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), coords, coords, coords)
def test_batched_matches_scalar(seed, x, y, p):
    tree = random_tree(np.random.default_rng(seed), 3)
    prog = CompiledExpr(tree)
    xs = np.array([x, -x, 0.5 * x])
    F, Fx, Fy, Fp = prog.grad(xs, y, p)
    for i, xi in enumerate(xs):
        c = prog.jet((xi, y, p), 1, strict=False)
        assert np.allclose([F[i], Fx[i], Fy[i], Fp[i]], c[:4], rtol=1e-12, atol=1e-12, equal_nan=True)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), coords, coords, coords)
def test_product_rule(seed, x, y, p):
    rng = np.random.default_rng(seed)
    f, g = random_tree(rng, 2), random_tree(rng, 2)
    c = (x, y, p)
    jf, jg = eval_jet(f, None, c), eval_jet(g, None, c)
    jfg = eval_jet(E.mul(f, g), None, c)
    assert jfg.d("xp") == pytest.approx(
        jf.d("xp") * jg.F + jf.d("x") * jg.d("p") + jf.d("p") * jg.d("x") + jf.F * jg.d("xp"), rel=1e-9, abs=1e-9
    )


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_jet(E.parse("ln(x)"), None, (0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        eval_jet(E.parse("1/x"), None, (0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        eval_jet(E.parse("x"), None, (math.nan, 0.0, 0.0))
    # non-strict evaluation yields nan instead
    assert math.isnan(CompiledExpr(E.parse("ln(x)")).value(-1.0, 0.0, 0.0))


def test_unbound_parameter():
    with pytest.raises(UnboundParameterError, match="b"):
        CompiledExpr(E.parse("b*x"))

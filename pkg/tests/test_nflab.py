import numpy as np
import pytest
from hypothesis import given, strategies as st

from pleatlab.classify import classify_singular_point
from pleatlab.errors import InadmissibleParameterError
from pleatlab.lift import locus_residual
from pleatlab.nflab import (
    beta_from_b,
    check_integral_curve,
    make_oracle,
    oracle_integral_curve,
    parse_oracle_id,
    representative_b,
    sample_closed_form,
)


def test_parse_ids():
    assert parse_oracle_id("cubic:b=2") == ("cubic", {"b": 2.0})
    assert parse_oracle_id("node_res: n=3, eps=1") == ("node_res", {"n": 3.0, "eps": 1.0})
    with pytest.raises(InadmissibleParameterError):
        parse_oracle_id("cubic:b")
    with pytest.raises(InadmissibleParameterError):
        parse_oracle_id("cubic:b=two")


@pytest.mark.parametrize(
    "oid", ["cubic:b=0", "cubic:b=0.6666666666666666", "cubic", "node_res:n=2.5", "node_res:n=2,eps=2", "node_nonres:b=0.5", "mystery:a=1"]
)
def test_inadmissible(oid):
    with pytest.raises(InadmissibleParameterError):
        make_oracle(oid)


def test_beta():
    assert beta_from_b(0.25) == pytest.approx(3.0)
    assert beta_from_b(0.75) == pytest.approx(3.0)
    assert make_oracle("node_nonres:b=0.6").params["beta"] == pytest.approx(1.5)


def test_representatives_cover_every_case():
    for case, b in representative_b().items():
        assert classify_singular_point(make_oracle(f"cubic:b={b}").ode).case == case


@given(st.floats(-0.3, 0.3, allow_nan=False))
def test_cubic_criminant_closed_form(p):
    oracle = make_oracle("cubic:b=-3")
    x, pp, y = sample_closed_form(oracle, "criminant", np.array([p]))
    assert locus_residual(oracle.ode, (x[0], y[0], pp[0]), "criminant").vanishes(1e-12)


@given(st.floats(-0.5, 0.5, allow_nan=False))
def test_wellfolded_criminant_closed_form(x):
    oracle = make_oracle("wellfolded:alpha=-1")
    xs, p, y = sample_closed_form(oracle, "criminant", np.array([x]))
    assert locus_residual(oracle.ode, (xs[0], y[0], p[0]), "criminant").vanishes(1e-12)


@pytest.mark.parametrize("oid", ["node_nonres:beta=1.5", "node_res:n=2,eps=1", "node_res:n=4,eps=0"])
def test_closed_forms_solve_the_field(oid):
    oracle = make_oracle(oid)
    xi, eta = oracle_integral_curve(oracle, 0.7, (1e-3, 1.0), 100)
    assert np.max(np.abs(oracle.closed_forms["residual"](xi, eta, 0.7))) < 1e-12


def test_integrator_against_closed_form():
    chk = check_integral_curve("node_res:n=3,eps=1", -1.5)
    assert chk.max_error < 1e-8
    assert np.allclose(chk.eta, chk.exact, atol=1e-8)


def test_integral_curve_range_checks():
    with pytest.raises(InadmissibleParameterError):
        oracle_integral_curve("node_res:n=2,eps=1", 1.0, (-1.0, 1.0))
    with pytest.raises(InadmissibleParameterError):
        oracle_integral_curve("cubic:b=2", 1.0)
    with pytest.raises(InadmissibleParameterError):
        check_integral_curve("node_res:n=2", 1.0, (0.0, 1.0))

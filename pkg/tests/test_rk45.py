import numpy as np
import pytest

from pleatlab.nflab import PlanarField
from pleatlab.rk45 import IntegSpec, integrate_batch


def _until(t_end):
    return lambda s, t, a: np.where(np.abs(t) >= t_end, 8, 0)


def test_exponential_decay_lanes_independent():
    fld = PlanarField(lambda u, v: (-u, -2 * v))
    y0 = np.array([[1.0, 2.0, -1.0], [1.0, 0.5, 3.0]])
    spec = IntegSpec(rel_tol=1e-10, abs_tol=1e-12, max_step=0.1)
    lanes = integrate_batch(fld, y0, 1.0, spec, _until(1.0))
    assert len(lanes) == 3
    for k, lane in enumerate(lanes):
        t = lane.t
        assert lane.stop_reason == "max_time"
        assert np.allclose(lane.states[0], y0[0, k] * np.exp(-t), rtol=1e-8, atol=1e-12)
        assert np.allclose(lane.states[1], y0[1, k] * np.exp(-2 * t), rtol=1e-8, atol=1e-12)


def test_backward_direction_and_max_step():
    fld = PlanarField(lambda u, v: (v, -u))
    spec = IntegSpec(rel_tol=1e-10, abs_tol=1e-12, max_step=0.01)
    lane = integrate_batch(fld, np.array([[1.0], [0.0]]), -1.0, spec, _until(np.pi))[0]
    assert np.all(np.diff(lane.t) < 0)
    assert np.max(np.abs(np.diff(lane.t))) <= 0.01 + 1e-15
    u, v = lane.states
    assert np.allclose(u, np.cos(lane.t), atol=1e-8)
    assert np.allclose(v, -np.sin(lane.t), atol=1e-8)


def test_budgets_stop_lanes():
    fld = PlanarField(lambda u, v: (np.ones_like(u), np.zeros_like(v)))
    lane = integrate_batch(fld, np.zeros((2, 1)), 1.0, IntegSpec(max_step=0.1, max_arc=1.0))[0]
    assert lane.stop_reason == "max_arc"
    lane = integrate_batch(fld, np.zeros((2, 1)), 1.0, IntegSpec(max_step=0.1, max_steps=7))[0]
    assert lane.stop_reason == "max_steps"
    assert len(lane.t) == 8


def test_invalid_tolerances():
    with pytest.raises(ValueError):
        IntegSpec(rel_tol=0.0)

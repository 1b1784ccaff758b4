"""Batched Dormand-Prince 5(4) integrator with per-lane step control.

Every lane (one trajectory) keeps its own step size and stops on its own,
but all active lanes share each right-hand-side evaluation.  Fields expose
``rhs(state) -> (derivative, status)`` with ``state`` of shape
``(n_state, lanes)``; a nonzero status flags a lane whose field could not
be evaluated (e.g. chart breakdown).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order weights minus embedded 4th-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

STOP_CODES = {
    0: "running",
    1: "window_exit",
    2: "max_arc",
    3: "reached_origin",
    4: "max_steps",
    5: "step_underflow",
    6: "chart_breakdown",
    7: "newton_divergence",
    8: "max_time",
    9: "left_cone",
    10: "reached_radius",
}
_FIELD_STATUS_TO_STOP = {1: 6, 2: 7}


@dataclass
class IntegSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.5
    max_arc: float = 10.0
    max_steps: int = 20000
    max_time: float = np.inf

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")


@dataclass
class LaneResult:
    t: np.ndarray
    states: np.ndarray  # (n_state, samples)
    stop_reason: str
    meta: dict = field(default_factory=dict)


StopFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def integrate_batch(
    fld,
    y0: np.ndarray,
    directions,
    spec: IntegSpec,
    stop_fn: StopFn | None = None,
) -> list[LaneResult]:
    """Integrate every column of ``y0`` until its stop condition fires.

    ``stop_fn(states, t, arc)`` receives the accepted states of the active
    lanes and returns an integer stop code per lane (0 to continue).
    """
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    n_state, lanes = y0.shape
    direction = np.broadcast_to(np.asarray(directions, dtype=float), (lanes,)).copy()
    err_rows = list(getattr(fld, "err_rows", range(n_state)))

    y = y0.copy()
    t = np.zeros(lanes)
    arc = np.zeros(lanes)
    nsteps = np.zeros(lanes, dtype=int)
    stop = np.zeros(lanes, dtype=int)
    history = [(np.arange(lanes), t.copy(), y.copy())]

    k1, status = fld.rhs(y)
    bad = status != 0
    for code, stop_code in _FIELD_STATUS_TO_STOP.items():
        stop[bad & (status == code)] = stop_code

    # initial step from the usual scale heuristic
    sc = spec.abs_tol + spec.rel_tol * np.abs(y[err_rows])
    d0 = np.sqrt(np.mean((y[err_rows] / sc) ** 2, axis=0))
    d1 = np.sqrt(np.mean((k1[err_rows] / sc) ** 2, axis=0))
    with np.errstate(all="ignore"):
        h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / d1)
    h = np.minimum(np.nan_to_num(h, nan=1e-6), spec.max_step) * direction

    active = np.flatnonzero(stop == 0)
    while active.size:
        ya, ha, ka = y[:, active], h[active], k1[:, active]
        stages = [ka]
        stage_status = np.zeros(active.size, dtype=int)
        for s in range(1, 7):
            inc = sum(a * k for a, k in zip(_A[s], stages) if a != 0.0)
            ks, st = fld.rhs(ya + ha * inc)
            stage_status = np.maximum(stage_status, st)
            stages.append(ks)
        y_new = ya + ha * sum(b * k for b, k in zip(_B, stages) if b != 0.0)
        err_vec = ha * sum(e * k for e, k in zip(_E, stages) if e != 0.0)
        scale = spec.abs_tol + spec.rel_tol * np.maximum(np.abs(ya[err_rows]), np.abs(y_new[err_rows]))
        with np.errstate(all="ignore"):
            err = np.sqrt(np.mean((err_vec[err_rows] / scale) ** 2, axis=0))
        err = np.where(np.isfinite(err) & (stage_status == 0), err, np.inf)
        accept = err <= 1.0

        with np.errstate(divide="ignore"):
            factor = np.where(err == 0, 5.0, 0.9 * err ** -0.2)
        factor = np.clip(np.nan_to_num(factor, nan=0.2, posinf=5.0), 0.2, 5.0)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))
        factor = np.where(stage_status != 0, 0.25, factor)
        h_next = np.clip(np.abs(ha) * factor, 0.0, spec.max_step) * direction[active]

        tiny = np.abs(h_next) < 1e-13 * np.maximum(1.0, np.abs(t[active]))
        idx_ok = active[accept]
        if idx_ok.size:
            dpos = y_new[:2, accept] - ya[:2, accept]
            arc[idx_ok] += np.hypot(dpos[0], dpos[1])
            t[idx_ok] += ha[accept]
            y[:, idx_ok] = y_new[:, accept]
            k1[:, idx_ok] = stages[-1][:, accept]
            nsteps[idx_ok] += 1
            history.append((idx_ok.copy(), t[idx_ok].copy(), y[:, idx_ok].copy()))
            codes = np.zeros(idx_ok.size, dtype=int)
            if stop_fn is not None:
                codes = np.asarray(stop_fn(y[:, idx_ok], t[idx_ok], arc[idx_ok]), dtype=int)
            codes = np.where((codes == 0) & (arc[idx_ok] > spec.max_arc), 2, codes)
            codes = np.where((codes == 0) & (np.abs(t[idx_ok]) >= spec.max_time), 8, codes)
            codes = np.where((codes == 0) & (nsteps[idx_ok] >= spec.max_steps), 4, codes)
            stop[idx_ok] = codes
        h[active] = h_next
        rejected = active[~accept]
        if rejected.size:
            sub = ~accept
            failed = rejected[tiny[sub]]
            for lane, st in zip(failed, stage_status[sub][tiny[sub]]):
                stop[lane] = _FIELD_STATUS_TO_STOP.get(int(st), 5)
        active = np.flatnonzero(stop == 0)

    return _assemble(history, lanes, n_state, stop)


def _assemble(history, lanes, n_state, stop) -> list[LaneResult]:
    idx = np.concatenate([h[0] for h in history])
    ts = np.concatenate([h[1] for h in history])
    ys = np.concatenate([h[2] for h in history], axis=1)
    order = np.argsort(idx, kind="stable")
    idx, ts, ys = idx[order], ts[order], ys[:, order]
    bounds = np.searchsorted(idx, np.arange(lanes + 1))
    return [
        LaneResult(ts[a:b], ys[:, a:b], STOP_CODES[int(stop[lane])])
        for lane, (a, b) in enumerate(zip(bounds[:-1], bounds[1:]))
    ]

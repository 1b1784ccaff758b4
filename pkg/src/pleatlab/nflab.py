"""Closed-form oracle families used to validate the numerical routines.

* ``cubic:b=..``         F = b x p - p^3/3 - y (pleated improper point at O)
* ``wellfolded:alpha=..`` F = (p + alpha x)^2 - y (folded improper point at O)
* ``node_nonres:beta=..`` planar node xi' = xi, eta' = beta eta (also ``b=..``)
* ``node_res:n=..,eps=..`` planar node xi' = xi, eta' = n eta + eps xi^n
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import DomainError, InadmissibleParameterError
from .lift import ImplicitOde
from .rk45 import IntegSpec, integrate_batch

LOG_FLOOR = 1e-12

CUBIC_TEXT = "b*x*p - p^3/3 - y"
WELLFOLDED_TEXT = "(p + alpha*x)^2 - y"


class PlanarField:
    """Autonomous planar vector field in the integrator's rhs protocol."""

    n_state = 2
    err_rows = (0, 1)

    def __init__(self, func: Callable, label: str = ""):
        self.func = func
        self.label = label

    def rhs(self, state):
        xi, eta = state
        d = np.stack(self.func(xi, eta))
        return d, np.zeros(xi.shape, dtype=int)

    def __call__(self, xi, eta):
        return self.func(xi, eta)


@dataclass
class Oracle:
    id: str
    family: str
    params: dict
    ode: ImplicitOde | None = None
    field: PlanarField | None = None
    closed_forms: dict = dc_field(default_factory=dict)


def parse_oracle_id(text: str) -> tuple[str, dict]:
    family, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise InadmissibleParameterError(f"malformed oracle parameter {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise InadmissibleParameterError(f"oracle parameter {key!r} is not a number") from None
    return family.strip(), params


def beta_from_b(b: float) -> float:
    return max(b / (1.0 - b), (1.0 - b) / b)


def _require(params: dict, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise InadmissibleParameterError(f"missing oracle parameter(s): {', '.join(missing)}")


def make_oracle(oracle_id: str) -> Oracle:
    family, params = parse_oracle_id(oracle_id)
    if family == "cubic":
        _require(params, "b")
        b = params["b"]
        if b == 0 or 3 * b - 2 == 0:
            raise InadmissibleParameterError("cubic family needs b != 0 and b != 2/3")
        ode = ImplicitOde.from_text(CUBIC_TEXT, {"b": b})
        v0 = 1.0 / (3 * b - 2)
        forms = {
            # parametrized by p: returns (x, p, y)
            "criminant": lambda p: (p**2 / b, p, 2.0 * p**3 / 3.0),
            "C": lambda p: (v0 * p**2, p, 2.0 * v0 * p**3 / 3.0),
            # parametrized by x
            "Cprime": lambda x: (x, np.zeros_like(x), np.zeros_like(x)),
            "mK": 4.0 / 9.0 * b**3,
            "mC": 4.0 / 9.0 * (3 * b - 2),
            "v0": v0,
        }
        return Oracle(oracle_id, family, params, ode=ode, closed_forms=forms)

    if family == "wellfolded":
        _require(params, "alpha")
        a = params["alpha"]
        ode = ImplicitOde.from_text(WELLFOLDED_TEXT, {"alpha": a})
        forms = {
            "criminant": lambda x: (x, -a * x, np.zeros_like(x)),
            "det": 2.0 * a,
            "stability": "saddle" if a < 0 else ("node" if a <= 0.125 else "focus"),
        }
        return Oracle(oracle_id, family, params, ode=ode, closed_forms=forms)

    if family == "node_nonres":
        if "beta" in params:
            beta = params["beta"]
        elif "b" in params:
            b = params["b"]
            if not (0 < b < 1) or b == 0.5:
                raise InadmissibleParameterError("node_nonres needs 0 < b < 1, b != 1/2")
            beta = beta_from_b(b)
        else:
            raise InadmissibleParameterError("node_nonres needs beta or b")
        if not beta > 1:
            raise InadmissibleParameterError("node_nonres needs beta > 1")
        params = {**params, "beta": beta}
        fld = PlanarField(lambda xi, eta: (xi, beta * eta), f"node_nonres(beta={beta:g})")
        forms = {
            "curve": lambda xi, c: c * np.abs(xi) ** beta,
            "residual": lambda xi, eta, c: xi * (c * beta * np.sign(xi) * np.abs(xi) ** (beta - 1)) - beta * eta,
        }
        return Oracle(oracle_id, family, params, field=fld, closed_forms=forms)

    if family == "node_res":
        _require(params, "n")
        n = params["n"]
        eps = params.get("eps", 0.0)
        if n != int(n) or n < 2:
            raise InadmissibleParameterError("node_res needs an integer n >= 2")
        if eps not in (0.0, 1.0):
            raise InadmissibleParameterError("node_res needs eps in {0, 1}")
        n = int(n)
        params = {**params, "n": n, "eps": eps}
        fld = PlanarField(lambda xi, eta: (xi, n * eta + eps * xi**n), f"node_res(n={n},eps={eps:g})")

        def curve(xi, c):
            return xi**n * (c + eps * np.log(np.maximum(np.abs(xi), LOG_FLOOR)))

        def residual(xi, eta, c):
            # xi * d(eta)/d(xi) - (n eta + eps xi^n)
            slope = n * xi ** (n - 1) * (c + eps * np.log(np.maximum(np.abs(xi), LOG_FLOOR))) + eps * xi ** (n - 1)
            return xi * slope - (n * eta + eps * xi**n)

        return Oracle(oracle_id, family, params, field=fld, closed_forms={"curve": curve, "residual": residual})

    raise InadmissibleParameterError(f"unknown oracle family {family!r}")


def oracle_integral_curve(oracle: Oracle | str, c: float, xi_range=(1e-3, 1.0), samples: int = 200):
    """Exact samples (xi, eta) of the integral curve with constant ``c``."""
    if isinstance(oracle, str):
        oracle = make_oracle(oracle)
    if "curve" not in oracle.closed_forms:
        raise InadmissibleParameterError(f"{oracle.family} has no one-parameter integral-curve family")
    lo, hi = xi_range
    if oracle.family == "node_res" and oracle.params["eps"] != 0 and lo <= 0 <= hi:
        raise InadmissibleParameterError("xi range must exclude 0 when eps != 0")
    xi = np.linspace(lo, hi, samples)
    with np.errstate(all="ignore"):
        eta = oracle.closed_forms["curve"](xi, c)
    if not np.all(np.isfinite(eta)):
        raise DomainError("closed form overflowed on the requested range")
    return xi, eta


@dataclass
class ClosedFormCheck:
    xi: np.ndarray
    eta: np.ndarray  # integrated
    exact: np.ndarray
    max_error: float
    stop_reason: str


def check_integral_curve(
    oracle: Oracle | str, c: float, xi_range=(1e-3, 1.0), spec: IntegSpec | None = None
) -> ClosedFormCheck:
    """Integrate the planar field from the closed form at the far end of
    ``xi_range`` down to the near end and compare with the closed form."""
    if isinstance(oracle, str):
        oracle = make_oracle(oracle)
    if oracle.field is None:
        raise InadmissibleParameterError(f"{oracle.family} has no planar field")
    lo, hi = xi_range
    if not 0 < lo < hi:
        raise InadmissibleParameterError("xi range must satisfy 0 < lo < hi")
    spec = spec or IntegSpec(rel_tol=1e-10, abs_tol=1e-12, max_step=0.05)
    eta0 = oracle.closed_forms["curve"](np.array([hi]), c)
    stop = lambda s, t, a: np.where(s[0] <= lo, 1, 0)  # noqa: E731
    lane = integrate_batch(oracle.field, np.array([[hi], eta0]), -1.0, spec, stop)[0]
    xi, eta = lane.states
    with np.errstate(all="ignore"):
        exact = oracle.closed_forms["curve"](xi, c)
    err = float(np.max(np.abs(eta - exact)))
    return ClosedFormCheck(xi, eta, exact, err, lane.stop_reason)


def sample_closed_form(oracle: Oracle, name: str, param: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact (x, p, y) samples of a named curve of an equation oracle."""
    form = oracle.closed_forms[name]
    return tuple(np.asarray(v, dtype=float) for v in form(np.asarray(param, dtype=float)))


def representative_b() -> dict[str, float]:
    """One value of b per Table 1 interval."""
    return {"S1": -3.0, "S2": -1.0, "N1": 0.25, "N2": 0.55, "N3": 0.8, "S3": 2.0}

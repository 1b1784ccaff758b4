"""Geometry of F(x, y, p) = 0: lifted field, chart field, loci, projection."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Mapping

import numpy as np

from . import expr as E
from .errors import ChartBreakdownError, NewtonDivergenceError, OffSurfaceError
from .jet import CompiledExpr, Jet3, algebra

TOL_SURFACE = 1e-9
CHART_BREAKDOWN = 1e-6
NEWTON_MAXITER = 30

# per-lane status codes returned by ChartField.rhs
OK, BREAKDOWN, DIVERGED = 0, 1, 2


@dataclass(frozen=True, eq=False)
class ImplicitOde:
    """F(x, y, p) = 0 with bound parameters and a distinguished point O."""

    ast: E.Node
    params: Mapping[str, float] = field(default_factory=dict)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    source: str | None = None

    @classmethod
    def from_text(cls, text: str, params: Mapping[str, float] | None = None, origin=(0.0, 0.0, 0.0)):
        params = {k: float(v) for k, v in (params or {}).items()}
        return cls(E.parse(text), params, tuple(float(v) for v in origin), text)

    @cached_property
    def compiled(self) -> CompiledExpr:
        return CompiledExpr(self.ast, self.params)

    @property
    def text(self) -> str:
        return self.source if self.source is not None else E.to_source(self.ast)

    def jet(self, point=None) -> Jet3:
        point = self.origin if point is None else tuple(float(v) for v in point)
        return Jet3(point, self.compiled.jet(point, 3))

    def grad(self, x, y, p):
        return self.compiled.grad(x, y, p)

    def value(self, x, y, p):
        return self.compiled.value(x, y, p)

    def surface_tol(self, point) -> float:
        return TOL_SURFACE * max(1.0, *(abs(float(v)) for v in point))

    def check_on_surface(self, point=None):
        point = self.origin if point is None else point
        f = float(self.value(*point))
        if not abs(f) <= self.surface_tol(point):
            raise OffSurfaceError(f"|F| = {abs(f):.3g} at {tuple(point)} exceeds surface tolerance")

    def centered(self) -> "ImplicitOde":
        """Same equation in coordinates where O is the origin.

        Uses the affine change x -> x + x0, y -> y + y0 + p0 x, p -> p + p0,
        which preserves the contact structure dy = p dx.
        """
        x0, y0, p0 = self.origin
        if (x0, y0, p0) == (0.0, 0.0, 0.0):
            return self
        shift = {
            "x": E.add(E.Var("x"), E.Const(x0)),
            "y": E.add(E.add(E.Var("y"), E.Const(y0)), E.mul(E.Const(p0), E.Var("x"))),
            "p": E.add(E.Var("p"), E.Const(p0)),
        }
        return ImplicitOde(E.substitute(self.ast, shift), dict(self.params))

    def with_term(self, text: str, params: Mapping[str, float] | None = None) -> "ImplicitOde":
        """Equation with an extra additive term (perturbation experiments)."""
        extra = E.parse(text)
        merged = {**self.params, **(params or {})}
        source = f"{self.text} + ({text})"
        return ImplicitOde(E.add(self.ast, extra), merged, self.origin, source)

    def scaled_by(self, text: str) -> "ImplicitOde":
        """Equation multiplied by another expression."""
        factor = E.parse(text)
        return ImplicitOde(E.mul(factor, self.ast), dict(self.params), self.origin, f"({text}) * ({self.text})")


@dataclass(frozen=True)
class LiftedVector:
    dx: float
    dy: float
    dp: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dp)


@dataclass(frozen=True)
class LocusResidual:
    which: str
    r1: float
    r2: float

    def vanishes(self, tol: float = 1e-10) -> bool:
        return abs(self.r1) <= tol and abs(self.r2) <= tol


def lifted_field(ode: ImplicitOde, point) -> LiftedVector:
    """Components (F_p, p F_p, -(F_x + p F_y)) of the lifted field."""
    point = tuple(float(v) for v in point)
    F, Fx, Fy, Fp = (float(v) for v in ode.grad(*point))
    if not abs(F) <= ode.surface_tol(point):
        raise OffSurfaceError(f"|F| = {abs(F):.3g} at {point} exceeds surface tolerance")
    p = point[2]
    return LiftedVector(Fp, p * Fp, -(Fx + p * Fy))


def locus_residual(ode: ImplicitOde, point, which: Literal["criminant", "inflection"]) -> LocusResidual:
    F, Fx, Fy, Fp = (float(v) for v in ode.grad(*point))
    if which == "criminant":
        return LocusResidual(which, F, Fp)
    if which == "inflection":
        return LocusResidual(which, F, Fx + float(point[2]) * Fy)
    raise ValueError(f"unknown locus {which!r}")


class ChartField:
    """Lifted field on the (x, p) chart; y is recovered by Newton on F(x, ., p) = 0.

    The integrator state is (x, p, y): y is carried as a passenger updated
    by dy = p dx and serves as the Newton warm start.  ``orient`` multiplies
    the field (use -1 to reverse time, e.g. so that the linear part at O
    matches the normalization F_y = -1).
    """

    n_state = 3
    err_rows = (0, 1)

    def __init__(self, ode: ImplicitOde, orient: float = 1.0):
        self.ode = ode
        self.orient = float(orient)

    def solve_y(self, x, p, y0):
        """Vectorized Newton for y; returns (y, F_x, F_y, F_p, status)."""
        x, p, y = (np.array(v, dtype=float) for v in np.broadcast_arrays(x, p, y0))
        status = np.zeros(y.shape, dtype=int)
        scale = np.maximum.reduce([np.ones_like(x), abs(x), abs(y), abs(p)])
        for _ in range(NEWTON_MAXITER):
            F, Fx, Fy, Fp = self.ode.grad(x, y, p)
            small = ~(np.abs(Fy) >= CHART_BREAKDOWN)
            done = np.abs(F) <= 1e-3 * TOL_SURFACE * scale
            if np.all(done | small):
                break
            step = np.where(small | done, 0.0, F / np.where(small, 1.0, Fy))
            y = y - step
        else:
            F, Fx, Fy, Fp = self.ode.grad(x, y, p)
        status[~(np.abs(F) <= TOL_SURFACE * np.maximum.reduce([np.ones_like(x), abs(x), abs(y), abs(p)]))] = DIVERGED
        status[~(np.abs(Fy) >= CHART_BREAKDOWN)] = BREAKDOWN
        return y, Fx, Fy, Fp, status

    def rhs(self, state):
        x, p, y = state
        y, Fx, Fy, Fp, status = self.solve_y(x, p, y)
        dx = self.orient * Fp
        dp = -self.orient * (Fx + p * Fy)
        return np.stack([dx, dp, p * dx]), status

    def surface_y(self, x, p, y0):
        y, _, _, _, status = self.solve_y(x, p, y0)
        return y, status

    def __call__(self, x, p, y0=None):
        """Chart velocity (dx, dp) at scalar (x, p)."""
        y0 = self.ode.origin[1] if y0 is None else y0
        y, Fx, Fy, Fp, status = self.solve_y(x, p, y0)
        code = int(np.max(status))
        if code == BREAKDOWN:
            raise ChartBreakdownError(f"|F_y| < {CHART_BREAKDOWN:g} at x={x}, p={p}")
        if code == DIVERGED:
            raise NewtonDivergenceError(f"Newton for y did not converge at x={x}, p={p}")
        return float(self.orient * Fp), float(-self.orient * (Fx + p * Fy))


class ArclengthField:
    """Chart field rescaled to unit speed in (x, p): t becomes arclength.

    Bounding the step then bounds chord lengths, and slow approaches to a
    node cost no more steps than fast passages.  Undefined at equilibria,
    so integrations must stop short of O.
    """

    n_state = 3
    err_rows = (0, 1)

    def __init__(self, fld: ChartField):
        self.fld = fld

    def rhs(self, state):
        d, status = self.fld.rhs(state)
        speed = np.hypot(d[0], d[1])
        return d / np.maximum(speed, 1e-300), status

    def surface_y(self, x, p, y0):
        return self.fld.surface_y(x, p, y0)


def chart_field(ode: ImplicitOde, chart_point, y_guess: float | None = None) -> tuple[float, float]:
    x, p = (float(v) for v in chart_point)
    return ChartField(ode)(x, p, y_guess)


def chart_jacobian(ode: ImplicitOde, x: float, p: float, y: float) -> np.ndarray:
    """Jacobian of the chart field (F_p, -(F_x + p F_y)) restricted to the surface."""
    j = ode.jet((x, y, p))
    Fx, Fy, Fp = j.F_x, j.F_y, j.F_p
    if abs(Fy) < CHART_BREAKDOWN:
        raise ChartBreakdownError(f"|F_y| < {CHART_BREAKDOWN:g} at the chart point")
    gx, gp = -Fx / Fy, -Fp / Fy
    A_x = j.d("xp") + j.d("yp") * gx
    A_p = j.d("pp") + j.d("yp") * gp
    B_x = -(j.d("xx") + j.d("xy") * gx + p * (j.d("xy") + j.d("yy") * gx))
    B_p = -(j.d("xp") + j.d("xy") * gp + Fy + p * (j.d("yp") + j.d("yy") * gp))
    return np.array([[A_x, A_p], [B_x, B_p]])


def contact_jet(ode: ImplicitOde) -> Jet3:
    """Jet of F at O in contact-adapted coordinates centred at O.

    Seeds x = x0 + X, y = y0 + p0 X + Y, p = p0 + P; then the X-partial is
    F_x + p0 F_y, the third component of the lifted field.
    """
    alg = algebra(3)
    x0, y0, p0 = ode.origin
    X = alg.variable(0, x0)
    Y = alg.variable(1, y0) + p0 * (alg.variable(0, 0.0))
    P = alg.variable(2, p0)
    with np.errstate(all="ignore"):
        coeff = ode.compiled.run((X, Y, P), 3, strict=True)
    return Jet3((0.0, 0.0, 0.0), np.asarray(coeff, dtype=float))


@dataclass
class Trajectory:
    """Sampled integral curve on the (x, p) chart with recovered y."""

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def reversed(self) -> "Trajectory":
        return Trajectory(self.t[::-1], self.x[::-1], self.p[::-1], self.y[::-1], dict(self.meta))

    def to_csv(self) -> str:
        lines = ["t,x,p,y"]
        for row in zip(self.t, self.x, self.p, self.y):
            lines.append(",".join(f"{float(v):.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def concat(cls, parts, meta=None) -> "Trajectory":
        return cls(
            np.concatenate([q.t for q in parts]),
            np.concatenate([q.x for q in parts]),
            np.concatenate([q.p for q in parts]),
            np.concatenate([q.y for q in parts]),
            dict(meta or {}),
        )


@dataclass
class PlaneCurve:
    """pi-projection of a trajectory: samples in the (x, y) plane."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)


def project(curve: Trajectory) -> PlaneCurve:
    """Drop the p coordinate; order and sample count are preserved."""
    return PlaneCurve(curve.t.copy(), curve.x.copy(), curve.y.copy(), dict(curve.meta))

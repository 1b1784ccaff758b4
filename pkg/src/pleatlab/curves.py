"""Criminant, invariant curves through O, semicubic fits and the checks built on them.

All curves are computed for ``ode.centered()``, i.e. in coordinates where
the distinguished point O is the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .classify import TAU, SingularClass, Table1Row, classify_singular_point, smoothness_report
from .errors import (
    ChartBreakdownError,
    ConvergenceError,
    CorrectorError,
    DegenerateError,
    FitError,
)
from .lift import CHART_BREAKDOWN, ArclengthField, ChartField, ImplicitOde, PlaneCurve, Trajectory, chart_jacobian, contact_jet
from .rk45 import IntegSpec, integrate_batch

CORRECTOR_TOL = 1e-10
SMOOTH_POWERS = (2, 3, 4, 5, 6)  # x = sum a_k p^k in chart fits


@dataclass
class CurveConfig:
    delta: float = 1e-4  # seeding radius for separatrices
    p_fit: float = 0.1  # fit window in p
    arc: float = 0.3  # extent of invariant curves (radius in the chart)
    r_stop: float = 1e-5  # inward integrations stop at this radius
    cone: float = 0.5  # |w| / |u| beyond which a shooting orbit has left the cone
    bisections: int = 60
    lanes: int = 16  # angles tried per shooting round
    integ: IntegSpec = field(default_factory=lambda: IntegSpec(max_step=0.05))


@dataclass
class SemicubicFit:
    A: float
    B: float
    m: float
    residual: float
    window: float
    mode: str = "chart"
    n_samples: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"A": self.A, "B": self.B, "m": self.m, "residual": self.residual, "window": self.window}


@dataclass
class InvariantCurve:
    which: str  # "C" (vertical tangent) or "Cprime"
    kind: str  # separatrix | strong | weak
    branches: tuple[Trajectory, Trajectory]  # each ordered outward from O
    eigenvalue: float
    other_eigenvalue: float
    tangent: np.ndarray
    beta: float | None = None  # |other / tangent| for weak node curves

    @property
    def curve(self) -> Trajectory:
        """Both branches stitched at O; t is signed arclength from O (negative on the - branch)."""
        origin = Trajectory(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1))
        parts = [self.branches[1].reversed(), origin, self.branches[0]]
        whole = Trajectory.concat(parts, {"which": self.which, "kind": self.kind})
        i0 = len(parts[0])
        steps = np.hypot(np.diff(whole.x), np.diff(whole.p))
        s = np.concatenate([[0.0], np.cumsum(steps)])
        whole.t = s - s[i0]
        return whole


@dataclass
class ArrangementReport:
    same_semiplane: bool
    c_in_tongue: bool | None  # None when not applicable
    mK: float
    mC: float
    A_K: float
    A_C: float

    def to_json(self) -> dict:
        return {
            "same_semiplane": self.same_semiplane,
            "c_in_tongue": "not_applicable" if self.c_in_tongue is None else self.c_in_tongue,
            "mK": self.mK,
            "mC": self.mC,
        }


# --- criminant -----------------------------------------------------------------


def _criminant_newton(ode: ImplicitOde, p: float, x: float, y: float) -> tuple[float, float]:
    for _ in range(30):
        j = ode.jet((x, y, p))
        F, Fx, Fy, Fp, Fxp, Fyp = j.F, j.F_x, j.F_y, j.F_p, j.d("xp"), j.d("yp")
        J = np.array([[Fx, Fy], [Fxp, Fyp]])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        res = max(abs(F), abs(Fp))
        if res <= 1e-15 * max(1.0, abs(x), abs(y), abs(p)):
            break
        if abs(det) < 1e-12 * max(1.0, np.abs(J).max() ** 2):
            raise CorrectorError(
                f"Jacobian breakdown at p={p:g}: the criminant is not a curve parametrized by p here"
            )
        dx, dy = np.linalg.solve(J, [F, Fp])
        x, y = x - dx, y - dy
        if not (math.isfinite(x) and math.isfinite(y)):
            break
    F, Fx, Fy, Fp = (float(v) for v in ode.grad(x, y, p))
    if not (math.isfinite(F) and max(abs(F), abs(Fp)) <= CORRECTOR_TOL):
        raise CorrectorError(f"criminant corrector diverged at p={p:g}")
    return x, y


def trace_criminant(ode: ImplicitOde, p_range=(-0.3, 0.3), step: float = 0.005) -> Trajectory:
    """Polyline on {F = 0, F_p = 0} parametrized by p, through O."""
    c = ode.centered()
    c.check_on_surface()
    lo, hi = p_range
    if not lo <= 0.0 <= hi:
        raise ValueError("p_range must contain 0")
    origin = _criminant_newton(c, 0.0, 0.0, 0.0)
    rows = {0: (0.0, origin[0], origin[1])}
    for sign, limit in ((1.0, hi), (-1.0, lo)):
        n = int(math.floor(abs(limit) / step + 1e-9))
        prev2, prev = None, (0.0, *origin)
        for k in range(1, n + 1):
            p = sign * k * step
            if prev2 is None:
                guess = prev[1:]
            else:  # secant predictor
                guess = tuple(2 * a - b for a, b in zip(prev[1:], prev2[1:]))
            x, y = _criminant_newton(c, p, *guess)
            prev2, prev = prev, (p, x, y)
            rows[sign * k] = (p, x, y)
    keys = sorted(rows)
    p, x, y = (np.array([rows[k][i] for k in keys]) for i in range(3))
    return Trajectory(p.copy(), x, p, y, {"curve": "criminant", "step": step})


# --- invariant curves ------------------------------------------------------------


def _linearization(c: ImplicitOde):
    j = contact_jet(c)
    if abs(j.F_y) < CHART_BREAKDOWN:
        raise ChartBreakdownError("F_y vanishes at O; the (x, p) chart is not available")
    orient = 1.0 if j.F_y < 0 else -1.0
    J = orient * chart_jacobian(c, 0.0, 0.0, 0.0)
    w, V = np.linalg.eig(J)
    if np.any(np.abs(w.imag) > TAU):
        raise ConvergenceError("O is a focus of the chart field: no invariant curves through O")
    w, V = w.real, V.real
    if np.any(np.abs(w) <= TAU):
        raise DegenerateError("zero eigenvalue at O")
    if abs(abs(w[0]) - abs(w[1])) <= TAU and w[0] * w[1] > 0:
        raise DegenerateError("degenerate node (equal eigenvalues)")
    return orient, J, w, V


def _eigen_frame(which: str, w, V):
    it = int(np.argmax(np.abs(V[1]))) if which == "C" else int(np.argmax(np.abs(V[0])))
    io = 1 - it
    e_t, e_o = V[:, it].copy(), V[:, io].copy()
    # + branch: positive p for C, positive x for C'
    if (which == "C" and e_t[1] < 0) or (which == "Cprime" and e_t[0] < 0):
        e_t = -e_t
    if (which == "C" and e_o[0] < 0) or (which == "Cprime" and e_o[1] < 0):
        e_o = -e_o
    M = np.column_stack([e_t, e_o])
    return w[it], w[io], e_t, e_o, M


def _run(fld: ChartField, xs, ps, directions, spec: IntegSpec, stop_fn) -> list[Trajectory]:
    xs, ps = np.asarray(xs, dtype=float), np.asarray(ps, dtype=float)
    y, _ = fld.surface_y(xs, ps, np.zeros_like(xs))
    results = integrate_batch(ArclengthField(fld), np.vstack([xs, ps, y]), directions, spec, stop_fn)
    out = []
    for r in results:
        x, p, yp = r.states
        y, _ = fld.surface_y(x, p, yp)
        out.append(Trajectory(r.t, x, p, y, {"stop_reason": r.stop_reason}))
    return out


def _outward(radius):
    return lambda s, t, a: np.where(np.hypot(s[0], s[1]) >= radius, 10, 0)


def _inward(r_stop):
    return lambda s, t, a: np.where(np.hypot(s[0], s[1]) <= r_stop, 3, 0)


def _coords(M, x, p):
    return np.linalg.solve(M, np.vstack([x, p]))


def _nuisance_columns(u, beta):
    cols, names = [], []
    near_int = abs(beta - round(beta)) < 1e-6
    au = np.abs(u)
    with np.errstate(all="ignore"):
        powb = np.where(au > 0, au**beta, 0.0)
        logb = np.where(au > 0, powb * np.log(au), 0.0)
    for side, mask in (("+", u > 0), ("-", u < 0)):
        cols.append(np.where(mask, powb, 0.0))
        names.append(f"|u|^beta{side}")
        if near_int:
            cols.append(np.where(mask, logb, 0.0))
            names.append(f"|u|^beta ln|u|{side}")
    return cols, names


def _lstsq(columns, target):
    X = np.column_stack(columns)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise FitError("empty basis column in fit window")
    coef, _, rank, sv = np.linalg.lstsq(X / norms, target, rcond=None)
    if rank < X.shape[1] or sv[-1] < 1e-12 * sv[0]:
        raise FitError("ill-conditioned fit")
    coef = coef / norms
    resid = target - X @ coef
    return coef, resid


def _smooth_powers(beta):
    # u^k and |u|^beta are independent unless k = beta (then the log term takes over)
    return [k for k in SMOOTH_POWERS if beta is None or abs(k - beta) > 1e-6]


def _weak_refine(branches, M, beta):
    """Polynomial part w = sum a_k u^k of the weak curve, |u|^beta terms removed."""
    u, w = [], []
    for tr in branches:
        uw = _coords(M, tr.x, tr.p)
        u.append(uw[0])
        w.append(uw[1])
    u, w = np.concatenate(u), np.concatenate(w)
    keep = np.abs(u) > 0
    u, w = u[keep], w[keep]
    powers = _smooth_powers(beta)
    cols = [u**k for k in powers]
    ncols, _ = _nuisance_columns(u, beta)
    coef, _ = _lstsq(cols + ncols, w)
    return dict(zip(powers, coef[: len(powers)]))


def _shoot_strong(fld, M, direction, cfg: CurveConfig):
    """Angle multisection for the unique orbit entering O along the strong direction."""
    arc = cfg.arc

    def seeds(phis, signs):
        uw = np.vstack([signs * arc * np.cos(phis), arc * np.sin(phis)])
        return M @ uw

    def stop_fn(s, t, a):
        uw = _coords(M, s[0], s[1])
        r = np.hypot(s[0], s[1])
        return np.where(r <= cfg.r_stop, 3, np.where(np.abs(uw[1]) > cfg.cone * np.abs(uw[0]), 9, 0))

    def end_signs(phis, signs):
        xp = seeds(phis, signs)
        trs = _run(fld, xp[0], xp[1], direction, cfg.integ, stop_fn)
        return np.array([np.sign(_coords(M, tr.x[-1:], tr.p[-1:])[1, 0]) for tr in trs])

    branch_signs = np.array([1.0, -1.0])
    lo = np.full(2, -1.2)
    hi = np.full(2, 1.2)
    s_lo = end_signs(lo, branch_signs)
    s_hi = end_signs(hi, branch_signs)
    if np.any(s_lo * s_hi >= 0):
        raise ConvergenceError("strong-direction shooting: no sign change across the angle bracket")
    used = 0.0
    K = cfg.lanes
    while used < cfg.bisections and np.max(hi - lo) > 1e-12:
        grid = np.linspace(0.0, 1.0, K + 2)[1:-1]
        phis = np.concatenate([lo[i] + grid * (hi[i] - lo[i]) for i in range(2)])
        signs = np.repeat(branch_signs, K)
        s = end_signs(phis, signs).reshape(2, K)
        for i in range(2):
            full_phi = np.concatenate([[lo[i]], phis[i * K:(i + 1) * K], [hi[i]]])
            full_s = np.concatenate([[s_lo[i]], s[i], [s_hi[i]]])
            j = int(np.flatnonzero(full_s[:-1] * full_s[1:] <= 0)[0])
            lo[i], hi[i] = full_phi[j], full_phi[j + 1]
            s_lo[i], s_hi[i] = full_s[j], full_s[j + 1]
            if s_lo[i] == 0:
                hi[i] = lo[i]
            elif s_hi[i] == 0:
                lo[i] = hi[i]
        used += math.log2(K + 1)
    phi = 0.5 * (lo + hi)
    xp = seeds(phi, branch_signs)
    trs = _run(fld, xp[0], xp[1], direction, cfg.integ, _inward(cfg.r_stop))
    for tr, width in zip(trs, hi - lo):
        tr.meta.update(bracket=float(width), bisections=used)
    return trs


ARC_SHRINK = 0.6
ARC_RETRIES = 4


def _node_curve(fld, M, lam_t, lam_o, cfg: CurveConfig):
    """Strong or weak node curve; the seeding circle shrinks while a branch misses O."""
    toward = -np.sign(lam_t)
    last = None
    for _ in range(ARC_RETRIES + 1):
        try:
            if abs(lam_t) > abs(lam_o):
                trs = [tr.reversed() for tr in _shoot_strong(fld, M, toward, cfg)]
                kind, beta = "strong", None
            else:
                beta = abs(lam_o / lam_t)
                trs = _weak_branches(fld, M, beta, toward, cfg)
                kind = "weak"
        except ConvergenceError as exc:
            last = exc
        else:
            missed = [tr.meta["stop_reason"] for tr in trs if tr.meta["stop_reason"] != "reached_origin"]
            if not missed:
                for tr in trs:
                    tr.meta["arc"] = cfg.arc
                return trs, kind, beta
            last = ConvergenceError(f"node curve branch did not reach O ({missed[0]})")
        cfg = CurveConfig(**{**cfg.__dict__, "arc": cfg.arc * ARC_SHRINK})
    raise last


def _weak_branches(fld, M, beta, toward, cfg: CurveConfig):
    seeds = M @ np.array([[cfg.arc, -cfg.arc], [0.0, 0.0]])
    trs = _run(fld, seeds[0], seeds[1], toward, cfg.integ, _inward(cfg.r_stop))
    if any(tr.meta["stop_reason"] != "reached_origin" for tr in trs):
        return [tr.reversed() for tr in trs]
    try:
        poly = _weak_refine(trs, M, beta)
    except FitError:
        poly = None
    if poly is not None:
        us = np.array([cfg.arc, -cfg.arc])
        ws = np.zeros_like(us) + sum(a * us**k for k, a in poly.items())
        seeds = M @ np.vstack([us, ws])
        trs = _run(fld, seeds[0], seeds[1], toward, cfg.integ, _inward(cfg.r_stop))
        for tr in trs:
            tr.meta["refined_seed"] = True
    return [tr.reversed() for tr in trs]


def invariant_curve(ode: ImplicitOde, which: str = "C", arc: float | None = None, config: CurveConfig | None = None) -> InvariantCurve:
    """Integral curve of the chart field through O tangent to an eigendirection.

    ``which="C"`` takes the eigendirection closest to vertical, ``"Cprime"``
    the other one.  Saddle: separatrix seeded at radius delta.  Node, strong
    direction: angle shooting on a circle of radius ``arc``.  Node, weak
    direction: inward integration from the eigenline, re-seeded once on the
    polynomial part of the computed curve.
    """
    if which not in ("C", "Cprime"):
        raise ValueError("which must be 'C' or 'Cprime'")
    cfg = config or CurveConfig()
    if arc is not None:
        cfg = CurveConfig(**{**cfg.__dict__, "arc": arc})
    c = ode.centered()
    c.check_on_surface()
    orient, J, w, V = _linearization(c)
    lam_t, lam_o, e_t, e_o, M = _eigen_frame(which, w, V)
    fld = ChartField(c, orient)

    if lam_t * lam_o < 0:
        seeds = np.column_stack([cfg.delta * e_t, -cfg.delta * e_t])
        trs = _run(fld, seeds[0], seeds[1], np.sign(lam_t), cfg.integ, _outward(cfg.arc))
        kind, beta = "separatrix", None
    else:
        trs, kind, beta = _node_curve(fld, M, lam_t, lam_o, cfg)
    for tr, branch in zip(trs, ("+", "-")):
        tr.meta.update(which=which, kind=kind, branch=branch)
    return InvariantCurve(which, kind, (trs[0], trs[1]), float(lam_t), float(lam_o), e_t, beta)


# --- fits ------------------------------------------------------------------------


def fit_semicubic(curve, mode: str = "chart", window: float = 0.1, beta: float | None = None) -> SemicubicFit:
    """Least-squares x = A p^2 + ..., y = B p^3 + ... near O; m = B^2 / A^3.

    ``mode="chart"`` uses the p samples of a Trajectory; higher powers of p
    (and, for weak node curves, the |p|^beta terms) are fitted as nuisance
    columns.  ``mode="plane"`` fits y = +-K |x|^(3/2) + ... directly on a
    projected curve over |x| <= window and reports A = sign(x), B = K.
    """
    if mode == "chart":
        p, x, y = np.asarray(curve.p), np.asarray(curve.x), np.asarray(curve.y)
        sel = np.isfinite(p) & (np.abs(p) > 0) & (np.abs(p) <= window)
        p, x, y = p[sel], x[sel], y[sel]
        powers = _smooth_powers(beta)
        xcols = [p**k for k in powers]
        ycols = [p ** (k + 1) for k in powers]
        if beta is not None:
            ncols, _ = _nuisance_columns(p, beta)
            xcols += ncols
            ycols += [p * col for col in ncols]
        if len(p) < 2 * len(xcols) + 2:
            raise FitError(f"only {len(p)} samples inside the fit window")
        if 2 not in powers:
            raise FitError("quadratic term coincides with the nuisance exponent")
        cx, rx = _lstsq(xcols, x)
        cy, ry = _lstsq(ycols, y)
        A, B = float(cx[0]), float(cy[0])
        extra = {"x_coeffs": cx.tolist(), "y_coeffs": cy.tolist()}
    elif mode == "plane":
        x, y = np.asarray(curve.x), np.asarray(curve.y)
        sel = np.isfinite(x) & (np.abs(x) > 0) & (np.abs(x) <= window) & (y != 0)
        x, y = x[sel], y[sel]
        if len(x) < 8:
            raise FitError(f"only {len(x)} samples inside the fit window")
        side = np.sign(np.median(x))
        s = np.sign(y)
        ax = np.abs(x)
        cy, ry = _lstsq([s * ax**1.5, x**2, s * ax**2.5], y)
        rx = np.zeros(0)
        A, B = float(side), float(cy[0])
        extra = {"y_coeffs": cy.tolist()}
    else:
        raise ValueError("mode must be 'chart' or 'plane'")
    if abs(A) < 1e-12:
        raise FitError("curve is not quadratically tangent (A ~ 0)")
    resid = np.concatenate([rx, ry])
    residual = float(np.sqrt(np.mean(resid**2))) if resid.size else 0.0
    return SemicubicFit(A, B, B**2 / A**3, residual, window, mode, int(len(x)), extra)


# --- checks on pleated improper points -------------------------------------------


def _pleated(ode: ImplicitOde) -> SingularClass:
    cls = classify_singular_point(ode.centered())
    if cls.kind != "PleatedImproper":
        raise DegenerateError(f"O is not a pleated improper point ({cls.kind}: {cls.reason})")
    return cls


def _curve_beta(curve: InvariantCurve):
    return curve.beta if curve.kind == "weak" else None


def criminant_fit(ode: ImplicitOde, config: CurveConfig | None = None) -> SemicubicFit:
    cfg = config or CurveConfig()
    crim = trace_criminant(ode, (-cfg.arc, cfg.arc), step=min(0.005, cfg.p_fit / 20))
    return fit_semicubic(crim, "chart", cfg.p_fit)


def _normalized(fit: SemicubicFit, sigma: float) -> tuple[float, float, float]:
    """Convert fitted (A, B) to the normalization f_ppp = -2."""
    s3 = sigma**3
    A, B = fit.A / s3, fit.B / s3
    return A, B, B**2 / A**3


def invariance_residual(ode: ImplicitOde, v0: float, window: float = 0.1, samples: int = 201) -> float:
    """max |x' - 2 v0 p p'| along the parabola x = v0 p^2 under the chart field."""
    c = ode.centered()
    fld = ChartField(c)
    p = np.linspace(-window, window, samples)
    x = v0 * p**2
    d, status = fld.rhs(np.vstack([x, p, np.zeros_like(p)]))
    if np.any(status):
        raise ChartBreakdownError("chart field unavailable along the parabola")
    return float(np.max(np.abs(d[0] - 2.0 * v0 * p * d[1])))


def lemma2_check(ode: ImplicitOde, config: CurveConfig | None = None) -> dict:
    """Quadratic coefficient of the vertical-tangent invariant curve vs 1/(3b-2)."""
    cfg = config or CurveConfig()
    cls = _pleated(ode)
    b, sigma = cls.b, cls.normal_form.sigma
    v0_pred = 1.0 / (3 * b - 2)
    B_pred = 2.0 / (3 * (3 * b - 2))
    out = {"b": b, "case": cls.case, "v0_predicted": v0_pred, "B_predicted": B_pred}
    if cls.case == "N2":
        # generic vertical-tangent curves are only C^1 here
        out["mode"] = "invariance"
        out["invariance_residual"] = invariance_residual(ode, v0_pred * sigma**3, cfg.p_fit)
        try:
            curve = invariant_curve(ode, "C", config=cfg)
            fit = fit_semicubic(curve.curve, "chart", cfg.p_fit, _curve_beta(curve))
            A, B, _ = _normalized(fit, sigma)
            out.update(v0_fitted=A, informational=True, rel_err=abs(A - v0_pred) / abs(v0_pred))
        except Exception as exc:  # informational only
            out.update(v0_fitted=None, informational=True, fit_error=str(exc))
        return out
    curve = invariant_curve(ode, "C", config=cfg)
    fit = fit_semicubic(curve.curve, "chart", cfg.p_fit, _curve_beta(curve))
    A, B, _ = _normalized(fit, sigma)
    out.update(
        mode="fit",
        v0_fitted=A,
        rel_err=abs(A - v0_pred) / abs(v0_pred),
        B_fitted=B,
        rel_err_B=abs(B - B_pred) / abs(B_pred),
        curve_kind=curve.kind,
    )
    return out


def arrangement(ode: ImplicitOde, config: CurveConfig | None = None) -> ArrangementReport:
    """Relative position of the cusps pi(K) and pi(C) from fitted m-invariants."""
    cfg = config or CurveConfig()
    cls = _pleated(ode)
    sigma = cls.normal_form.sigma
    AK, _, mK = _normalized(criminant_fit(ode, cfg), sigma)
    curve = invariant_curve(ode, "C", config=cfg)
    AC, _, mC = _normalized(fit_semicubic(curve.curve, "chart", cfg.p_fit, _curve_beta(curve)), sigma)
    same = bool(np.sign(AK) == np.sign(AC))
    tongue = bool(abs(mC) < abs(mK)) if same else None
    return ArrangementReport(same, tongue, mK, mC, AK, AC)


def table1_from_fits(ode: ImplicitOde, config: CurveConfig | None = None) -> tuple[Table1Row, ArrangementReport]:
    """Table 1 row measured from the chart linearization and the fitted cusps.

    Signs compare the fitted quadratic coefficients A_K, A_C; the magnitude
    rows compare |A_K| with |A_C| and |mK| with |mC|.  Blank entries of the
    analytic table (N1, N2) are measured anyway; callers skip them.
    """
    rep = arrangement(ode, config)
    cls = _pleated(ode)
    _, _, w, _ = _linearization(ode.centered())
    lifted = "saddle" if w[0] * w[1] < 0 else "node"
    sign = lambda v: "+" if v > 0 else "-"  # noqa: E731
    row = Table1Row(
        cls.case,
        lifted,
        (sign(rep.A_K), sign(rep.A_C)),
        ">" if abs(rep.A_K) > abs(rep.A_C) else "<",
        ">" if abs(rep.mK) > abs(rep.mC) else "<",
    )
    return row, rep


@dataclass
class Form12Reduction:
    """Change of variables y -> y - u(x) taking the solution y = u(x) to y = 0."""

    ode: ImplicitOde
    spline: CubicHermiteSpline
    x_range: tuple[float, float]
    residual: float
    smoothness: object
    curve: Trajectory

    def u(self, x):
        return self._eval(x, 0)

    def du(self, x):
        return self._eval(x, 1)

    def _eval(self, x, nu):
        x = np.asarray(x, dtype=float)
        lo, hi = self.x_range
        if np.any((x < lo) | (x > hi)):
            raise ValueError(f"u is only defined on [{lo:g}, {hi:g}]")
        return self.spline(x, nu)

    def G(self, x, Y, P):
        """Transformed equation G(x, Y, P) = F(x, Y + u(x), P + u'(x))."""
        x = np.asarray(x, dtype=float)
        return self.ode.value(x, np.asarray(Y) + self.u(x), np.asarray(P) + self.du(x))


def reduce_to_form12(ode: ImplicitOde, window: float = 0.1, config: CurveConfig | None = None, epsilon="unknown") -> Form12Reduction:
    cfg = config or CurveConfig()
    cls = _pleated(ode)
    c = ode.centered()
    arc = max(cfg.arc, 1.5 * window)
    curve = invariant_curve(c, "Cprime", arc=arc, config=cfg).curve
    x, p, y = curve.x, curve.p, curve.y
    order = np.argsort(x)
    x, p, y = x[order], p[order], y[order]
    if np.any(np.diff(x) <= 0):
        raise ConvergenceError("C' is not a graph over x: u is not representable")
    if x[0] > -window or x[-1] < window:
        raise ConvergenceError("C' does not cover the requested x-window")
    spline = CubicHermiteSpline(x, y, p, extrapolate=False)
    red = Form12Reduction(c, spline, (float(x[0]), float(x[-1])), 0.0, smoothness_report(cls.b, epsilon), curve)
    grid = np.linspace(-window, window, 2001)
    red.residual = float(np.max(np.abs(red.G(grid, 0.0, 0.0))))
    return red


def theorem_smoothness(b: float, epsilon="unknown"):
    """Smoothness s of u: n when b = 1/(n+1) with eps != 0, infinity otherwise."""
    rep = smoothness_report(b, epsilon)
    if rep.case == 2:
        return rep.l + 1, rep
    return math.inf, rep


def plane(curve: Trajectory) -> PlaneCurve:
    return PlaneCurve(curve.t, curve.x, curve.y, dict(curve.meta))

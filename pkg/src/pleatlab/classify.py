"""Singular-point taxonomy and the pleated-improper analysis.

All strict genericity inequalities are tested as |value| > TAU on the jet
normalized by -F_y (when F_y is not small); |value| <= TAU counts as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateError
from .jet import Jet3, algebra
from .lift import ImplicitOde, contact_jet

TAU = 1e-6
EXCLUDED_B = (-2.0, 0.0, 0.5, 2.0 / 3.0, 1.0)
RESONANCE_MAX_ORDER = 12
RESONANCE_RTOL = 1e-9

Epsilon = Literal[0, 1, "unknown"]


@dataclass(frozen=True)
class LinearPart:
    matrix: np.ndarray
    eigenvalues: tuple
    eigenvectors: tuple | None = None  # unit vectors in (x, p), real distinct case only

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def is_real(self) -> bool:
        return all(np.isreal(v) for v in self.eigenvalues)


@dataclass(frozen=True)
class Resonance:
    i: int
    k1: int
    k2: int
    form: str = "general"  # "1/(n+1)", "n/(n+1)" or "general"
    n: int | None = None

    def to_json(self) -> dict:
        return {"form": self.form, "n": self.n, "i": self.i, "k1": self.k1, "k2": self.k2}


@dataclass(frozen=True)
class SmoothnessReport:
    k: float  # math.inf for C-infinity
    l: float
    case: int
    epsilon_assumed: Epsilon
    alternatives: tuple = ()

    def to_json(self) -> dict:
        out = {"k": _num(self.k), "l": _num(self.l), "case": self.case, "epsilon": self.epsilon_assumed}
        if self.alternatives:
            out["alternatives"] = [alt.to_json() for alt in self.alternatives]
        return out


@dataclass(frozen=True)
class Table1Row:
    case: str
    lifted_field: str
    signs: tuple[str, str]  # sign(1/b) : sign(1/(3b-2))
    inverse_ratio: str | None  # |1/b| vs |1/(3b-2)|; None where the table is blank
    cube_ratio: str | None  # |b^3| vs |3b-2|

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "lifted_field": self.lifted_field,
            "signs": ":".join(self.signs),
            "inverse_ratio": self.inverse_ratio,
            "cube_ratio": self.cube_ratio,
        }


@dataclass(frozen=True)
class NormalFormCoeffs:
    b: float
    sigma: float  # x -> sigma * x making f_ppp = -2
    shift: float  # y -> y - shift * x^2 kills the x^2 term
    c: float  # x^2 coefficient (as in (1/2) c x^2) before the shift, after scaling
    f_ppp: float  # before scaling
    jet: Jet3  # normalized jet after both changes, divided by -F_y


@dataclass(frozen=True)
class FoldedImproperInfo:
    a: float
    b: float
    c: float
    linear_part: LinearPart
    stability: str
    well_folded: bool
    resonance: Resonance | None
    checks: dict = field(default_factory=dict)


@dataclass
class SingularClass:
    kind: str  # NotSingular | FoldedProper | PleatedProper | FoldedImproper | PleatedImproper | Degenerate
    reason: str | None = None
    b: float | None = None
    case: str | None = None
    stability: str | None = None
    well_folded: bool | None = None
    linear_part: LinearPart | None = None
    resonance: Resonance | None = None
    smoothness: SmoothnessReport | None = None
    normal_form: NormalFormCoeffs | None = None
    table_row: Table1Row | None = None
    folded: FoldedImproperInfo | None = None
    margins: dict = field(default_factory=dict)
    experimental: bool = False

    @property
    def is_degenerate(self) -> bool:
        return self.kind == "Degenerate"

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.reason is not None:
            out["reason"] = self.reason
        if self.b is not None:
            out["b"] = float(self.b)
        if self.case is not None:
            out["case"] = self.case
        if self.linear_part is not None:
            out["eigenvalues"] = [_eig_json(v) for v in self.linear_part.eigenvalues]
        if self.stability is not None:
            out["stability"] = self.stability
        if self.well_folded is not None:
            out["well_folded"] = bool(self.well_folded)
        if self.kind in ("FoldedImproper", "PleatedImproper"):
            out["resonance"] = None if self.resonance is None else self.resonance.to_json()
        if self.smoothness is not None:
            out["smoothness"] = self.smoothness.to_json()
        if self.table_row is not None:
            out["table1"] = self.table_row.to_json()
        out["margins"] = {k: float(v) for k, v in self.margins.items()}
        return out


def _num(v: float):
    return "inf" if v == math.inf else int(v)


def _eig_json(v):
    v = complex(v)
    if v.imag == 0:
        return float(v.real)
    return {"re": float(v.real), "im": float(v.imag)}


def normalized_jet(ode: ImplicitOde) -> tuple[Jet3, float]:
    """Contact-adapted jet at O divided by -F_y (when |F_y| > TAU)."""
    j = contact_jet(ode)
    Fy = j.F_y
    if abs(Fy) > TAU:
        return j.scaled(-1.0 / Fy), -Fy
    return j, 1.0


def classify_singular_point(ode: ImplicitOde, epsilon: Epsilon = "unknown", tau: float = TAU) -> SingularClass:
    ode.check_on_surface()
    j, _ = normalized_jet(ode)
    Fp, Fpp, Fppp, Fxp, Fy = j.F_p, j.F_pp, j.F_ppp, j.F_xp, j.F_y
    third = j.F_x  # F_x + p F_y at O in contact-adapted coordinates
    margins = {
        "F_p": abs(Fp),
        "F_pp": abs(Fpp),
        "F_ppp": abs(Fppp),
        "F_xp": abs(Fxp),
        "F_x+pF_y": abs(third),
        "F_y": abs(Fy),
        "tau": tau,
    }
    if abs(Fp) > tau:
        return SingularClass("NotSingular", margins=margins)

    big = lambda v: abs(v) > tau  # noqa: E731
    if big(Fpp) and big(third):
        return SingularClass("FoldedProper", margins=margins)
    if not big(Fpp) and big(Fppp) and big(Fxp) and big(third):
        return SingularClass("PleatedProper", margins=margins)
    if big(Fpp) and not big(third) and big(Fy):
        try:
            info = folded_improper_analysis(ode, tau)
        except DegenerateError as exc:
            return SingularClass("Degenerate", reason=exc.reason, margins=margins)
        return SingularClass(
            "FoldedImproper",
            stability=info.stability,
            well_folded=info.well_folded,
            linear_part=info.linear_part,
            resonance=info.resonance,
            folded=info,
            margins=margins,
            experimental=info.stability == "focus",
        )
    if not big(Fpp) and big(Fppp) and not big(third) and big(Fy):
        try:
            nf = pleated_improper_normalize(ode, tau)
        except DegenerateError as exc:
            return SingularClass("Degenerate", reason=exc.reason, b=Fxp, margins=margins)
        b = nf.b
        row = table1_case(b)
        lam = (b, 1.0 - b)
        linear = LinearPart(
            np.diag(lam),
            lam,
            (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
        )
        return SingularClass(
            "PleatedImproper",
            b=b,
            case=row.case,
            stability=row.lifted_field,
            linear_part=linear,
            resonance=node_resonance(b),
            smoothness=smoothness_report(b, epsilon),
            normal_form=nf,
            table_row=row,
            margins=margins,
        )

    # name the first violated condition
    if not big(Fpp) and not big(Fppp):
        reason = "F_pp=0 and F_ppp=0"
    elif not big(Fpp) and big(third) and not big(Fxp):
        reason = "F_xp=0"
    elif not big(third) and not big(Fy):
        reason = "F_x+pF_y=0 and F_y=0"
    else:
        reason = "genericity conditions violated"
    return SingularClass("Degenerate", reason=reason, margins=margins)


def _transversal(u: np.ndarray, v: np.ndarray, tau: float) -> bool:
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return abs(u[0] * v[1] - u[1] * v[0]) > tau


def folded_improper_analysis(ode: ImplicitOde, tau: float = TAU) -> FoldedImproperInfo:
    j, _ = normalized_jet(ode)
    a, b, c = j.F_pp, j.F_xp, j.F_xx
    lam = np.array([[b, a], [-c, 1.0 - b]])
    det = b * (1.0 - b) + a * c
    disc = 1.0 - 4.0 * det
    if abs(det) <= tau:
        raise DegenerateError("zero eigenvalue (det=0)")
    if det < 0:
        stability = "saddle"
    elif det <= 0.25:
        stability = "node"
    else:
        stability = "focus"

    checks = {"det": det, "trace": 1.0, "discriminant": disc}
    resonance = None
    if disc > tau:
        root = math.sqrt(disc)
        l1, l2 = (1.0 + root) / 2.0, (1.0 - root) / 2.0
        vecs = []
        for lv in (l1, l2):
            m = lam - lv * np.eye(2)
            # null vector of a rank-one 2x2 matrix: take the larger row
            row = m[0] if np.linalg.norm(m[0]) >= np.linalg.norm(m[1]) else m[1]
            v = np.array([-row[1], row[0]])
            vecs.append(v / np.linalg.norm(v))
        linear = LinearPart(lam, (l1, l2), tuple(vecs))
        criminant_tangent = np.array([a, -b])
        vertical = np.array([0.0, 1.0])
        nonzero = abs(l1) > tau and abs(l2) > tau
        unequal = abs(abs(l1) - abs(l2)) > tau
        transversal = all(_transversal(v, criminant_tangent, tau) for v in vecs)
        nonvertical = all(_transversal(v, vertical, tau) for v in vecs)
        checks.update(nonzero=nonzero, unequal=unequal, transversal=transversal, nonvertical=nonvertical)
        well_folded = nonzero and unequal and transversal and nonvertical
        resonance = resonance_of(l1, l2)
    elif disc < -tau:
        root = math.sqrt(-disc)
        linear = LinearPart(lam, (complex(0.5, root / 2), complex(0.5, -root / 2)))
        # no real eigendirections; only the nondegeneracy condition applies
        well_folded = True
        checks.update(nonzero=True, unequal=None, transversal=None, nonvertical=None)
    else:
        linear = LinearPart(lam, (0.5, 0.5))
        well_folded = False
        checks.update(nonzero=True, unequal=False, transversal=None, nonvertical=None)
    return FoldedImproperInfo(a, b, c, linear, stability, well_folded, resonance, checks)


def resonance_of(l1: float, l2: float, max_order: int = RESONANCE_MAX_ORDER, rtol: float = RESONANCE_RTOL):
    """Lowest-order relation l_i = k1*l1 + k2*l2 with k1 + k2 >= 2, or None."""
    scale = max(abs(l1), abs(l2))
    if scale == 0:
        return None
    lams = (l1, l2)
    for total in range(2, max_order + 1):
        for i in (1, 2):
            for k1 in range(total, -1, -1):
                k2 = total - k1
                if abs(lams[i - 1] - (k1 * l1 + k2 * l2)) <= rtol * scale:
                    return Resonance(i, k1, k2)
    return None


def node_resonance(b: float) -> Resonance | None:
    """Resonance of the eigenvalues (b, 1-b) of a pleated-improper node."""
    if not 0.0 < b < 1.0:
        return None
    res = resonance_of(b, 1.0 - b)
    if res is None:
        return None
    if res.i == 2 and res.k2 == 0:
        return Resonance(res.i, res.k1, res.k2, "1/(n+1)", res.k1)
    if res.i == 1 and res.k1 == 0:
        return Resonance(res.i, res.k1, res.k2, "n/(n+1)", res.k2)
    return res


def check_admissible_b(b: float, tau: float = TAU):
    nearest = min(EXCLUDED_B, key=lambda v: abs(b - v))
    if abs(b - nearest) <= tau:
        label = {0.5: "1/2", 2.0 / 3.0: "2/3"}.get(nearest, f"{nearest:g}")
        raise DegenerateError(f"b={b:.9g} is within margin of excluded value {label}")


def pleated_improper_normalize(ode: ImplicitOde, tau: float = TAU) -> NormalFormCoeffs:
    j, _ = normalized_jet(ode)
    b, c, f_ppp = j.F_xp, j.F_xx, j.F_ppp
    check_admissible_b(b, tau)
    if abs(f_ppp) <= tau:
        raise DegenerateError("f_ppp=0")
    sigma = float(np.cbrt(f_ppp / -2.0))
    c_scaled = c * sigma**2
    shift = c_scaled / (2.0 * (2.0 * b - 1.0))

    alg = algebra(3)
    X, Y, P = (alg.variable(i, 0.0) for i in range(3))
    x0, y0, p0 = ode.origin
    x_seed = sigma * X
    y_seed = p0 * sigma * X + Y - shift * alg.mul(X, X)
    p_seed = (P - 2.0 * shift * X) / sigma
    # constants shift only the value coefficient
    x_seed[0] += x0
    y_seed[0] += y0
    p_seed[0] += p0
    with np.errstate(all="ignore"):
        coeff = ode.compiled.run((x_seed, y_seed, p_seed), 3, strict=True)
    transformed = Jet3((0.0, 0.0, 0.0), np.asarray(coeff, dtype=float))
    transformed = transformed.scaled(-1.0 / transformed.F_y)
    return NormalFormCoeffs(b, sigma, shift, c_scaled, f_ppp, transformed)


_TABLE1 = [
    # (upper bound, case, lifted field)
    (-2.0, "S1", "saddle"),
    (0.0, "S2", "saddle"),
    (0.5, "N1", "node"),
    (2.0 / 3.0, "N2", "node"),
    (1.0, "N3", "node"),
    (math.inf, "S3", "saddle"),
]


def table1_case(b: float, tau: float = TAU) -> Table1Row:
    check_admissible_b(b, tau)
    for upper, case, kind in _TABLE1:
        if b < upper:
            break
    signs = ("+" if b > 0 else "-", "+" if 3 * b - 2 > 0 else "-")
    if case in ("N1", "N2"):
        inverse_ratio = cube_ratio = None
    else:
        inverse_ratio = ">" if abs(1 / b) > abs(1 / (3 * b - 2)) else "<"
        cube_ratio = ">" if abs(b**3) > abs(3 * b - 2) else "<"
    return Table1Row(case, kind, signs, inverse_ratio, cube_ratio)


def smoothness_report(b: float, epsilon: Epsilon = "unknown") -> SmoothnessReport:
    """Smoothness classes (k, l) of the invariant curves through O."""
    if epsilon not in (0, 1, "unknown"):
        raise ValueError("epsilon must be 0, 1 or 'unknown'")
    inf = math.inf
    res = node_resonance(b)
    if res is None or res.form == "general" or epsilon == 0:
        return SmoothnessReport(inf, inf, 1, epsilon)
    n = res.n
    if res.form == "1/(n+1)":
        resonant = SmoothnessReport(inf, n - 1, 2, 1)
    else:
        resonant = SmoothnessReport(n - 1, inf, 3, 1)
    if epsilon == 1:
        return resonant
    plain = SmoothnessReport(inf, inf, 1, 0)
    return SmoothnessReport(resonant.k, resonant.l, resonant.case, "unknown", (plain, resonant))

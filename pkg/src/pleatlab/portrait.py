"""Phase portraits on the (x, p) chart and their projections to the (x, y) plane.

A portrait is a bundle of chart-field trajectories from a boundary-biased
seed grid, overlaid with the criminant (dashed), the invariant curves C and
C' through O (bold) and a marker at O.  Both panes are written as plain SVG
with fixed-precision coordinates so that reruns are byte-identical.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import shapely
from scipy.interpolate import CubicHermiteSpline

from .classify import SingularClass, classify_singular_point
from .curves import CurveConfig, invariant_curve, trace_criminant
from .errors import PleatlabError
from .lift import ArclengthField, ChartField, ImplicitOde, Trajectory, contact_jet
from .rk45 import IntegSpec, integrate_batch

DENSITY_ENV = "PLEATLAB_SEED_DENSITY"
DEFAULT_DENSITY = 3


def default_density() -> int:
    raw = os.environ.get(DENSITY_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DENSITY
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{DENSITY_ENV} must be an integer, got {raw!r}") from None


@dataclass
class Style:
    canvas: int = 480  # px, square panes
    margin: int = 20
    thin_width: float = 0.6
    bold_width: float = 2.4
    locus_width: float = 1.3
    dash: str = "6,4"
    thin_color: str = "#707070"
    bold_color: str = "#000000"
    locus_color: str = "#000000"
    decimals: int = 2


@dataclass
class PortraitSpec:
    x_half: float = 0.25
    p_half: float = 0.5
    density: int = field(default_factory=default_density)
    integ: IntegSpec = field(default_factory=lambda: IntegSpec(max_step=0.005, max_arc=4.0, max_steps=4000))
    delta_stop: float = 1e-5
    style: Style = field(default_factory=Style)
    curves: CurveConfig = field(default_factory=CurveConfig)

    def __post_init__(self):
        if not (self.x_half > 0 and self.p_half > 0):
            raise ValueError("the window must contain O in its interior")
        if self.density < 1:
            raise ValueError("seed density must be at least 1")

    @property
    def window(self) -> tuple[float, float]:
        return (self.x_half, self.p_half)

    @property
    def y_half(self) -> float:
        # semicubic cusps y ~ |x|^(3/2) stay visible at this scale
        return self.x_half**1.5

    def to_json(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else "-inf"
            if isinstance(v, dict):
                return {k: clean(w) for k, w in v.items()}
            return v

        return clean(asdict(self))


@dataclass(frozen=True)
class Seed:
    id: int
    x: float
    p: float
    where: str  # boundary | interior


def seed_grid(window=(1.0, 1.0), density: int = 1, delta_stop: float = 1e-5) -> list[Seed]:
    """4*density seeds per window side plus a (2*density-1)^2 interior lattice.

    Boundary seeds sit at cell centres along each side (corners excluded).
    The interior lattice is shifted by a quarter cell in x so that it never
    lands on O; seeds within 5*delta_stop of O are dropped.
    """
    if density < 1:
        raise ValueError("density must be at least 1")
    xh, ph = window
    n_side = 4 * density
    frac = (np.arange(n_side) + 0.5) / n_side * 2.0 - 1.0
    pts = []
    pts += [(xh * f, -ph, "boundary") for f in frac]
    pts += [(xh, ph * f, "boundary") for f in frac]
    pts += [(-xh * f, ph, "boundary") for f in frac]
    pts += [(-xh, -ph * f, "boundary") for f in frac]
    m = 2 * density - 1
    cell = 2.0 / (m + 1)
    lattice = np.arange(1, m + 1) * cell - 1.0
    for fp in lattice:
        for fx in lattice:
            pts.append((xh * (fx + 0.25 * cell), ph * fp, "interior"))
    seeds, exclusion = [], 5.0 * delta_stop
    for x, p, where in pts:
        if math.hypot(x, p) > exclusion:
            seeds.append(Seed(len(seeds), float(x), float(p), where))
    return seeds


def _window_stop(spec: PortraitSpec):
    xh, ph = spec.x_half * (1 + 1e-9), spec.p_half * (1 + 1e-9)

    def stop(s, t, a):
        out = (np.abs(s[0]) > xh) | (np.abs(s[1]) > ph)
        near = np.hypot(s[0], s[1]) <= spec.delta_stop
        return np.where(near, 3, np.where(out, 1, 0))

    return stop


def _batch(fld: ChartField, xs, ps, ys, directions, spec: PortraitSpec) -> list[Trajectory]:
    xs, ps = np.asarray(xs, dtype=float), np.asarray(ps, dtype=float)
    y, _ = fld.surface_y(xs, ps, np.asarray(ys, dtype=float))
    results = integrate_batch(ArclengthField(fld), np.vstack([xs, ps, y]), directions, spec.integ, _window_stop(spec))
    out = []
    for r in results:
        x, p, yp = r.states
        y, _ = fld.surface_y(x, p, yp)
        out.append(Trajectory(r.t, x, p, y, {"stop_reason": r.stop_reason}))
    return out


def integrate(fld: ChartField, seed, spec: PortraitSpec, direction: float = 1.0) -> Trajectory:
    """One trajectory from ``seed = (x, p)`` until window exit, arc budget or O."""
    x, p = seed
    if abs(x) > spec.x_half or abs(p) > spec.p_half:
        raise ValueError("seed lies outside the portrait window")
    tr = _batch(fld, [x], [p], [0.0], direction, spec)[0]
    tr.meta.update(seed=(float(x), float(p)), direction=float(np.sign(direction)))
    return tr


def trajectory_bundle(fld: ChartField, seeds: list[Seed], spec: PortraitSpec) -> list[Trajectory]:
    """Integrate every seed both ways in one batch; each result runs backward-to-forward."""
    n = len(seeds)
    if n == 0:
        return []
    xs = np.array([s.x for s in seeds] * 2)
    ps = np.array([s.p for s in seeds] * 2)
    dirs = np.concatenate([np.ones(n), -np.ones(n)])
    trs = _batch(fld, xs, ps, np.zeros(2 * n), dirs, spec)
    out = []
    for s, fwd, bwd in zip(seeds, trs[:n], trs[n:]):
        back = bwd.reversed()
        full = Trajectory.concat(
            [back, Trajectory(fwd.t[1:], fwd.x[1:], fwd.p[1:], fwd.y[1:])],
            {"seed": s.id, "stop_forward": fwd.meta["stop_reason"], "stop_backward": bwd.meta["stop_reason"]},
        )
        out.append(full)
    return out


@dataclass
class Portrait:
    case: str
    cls: SingularClass
    spec: PortraitSpec
    seeds: list[Seed]
    trajectories: list[Trajectory]
    overlays: dict[str, Trajectory]
    skipped: dict[str, str]
    chart: ChartField | None = None
    svg_chart: str = ""
    svg_plane: str = ""
    manifest: dict = field(default_factory=dict)

    def write(self, outdir) -> dict[str, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "chart": outdir / f"{self.case}.chart.svg",
            "plane": outdir / f"{self.case}.plane.svg",
            "manifest": outdir / f"{self.case}.manifest.json",
        }
        paths["chart"].write_text(self.svg_chart)
        paths["plane"].write_text(self.svg_plane)
        paths["manifest"].write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        return paths


def case_label(cls: SingularClass) -> str:
    if cls.kind == "PleatedImproper":
        return cls.case
    if cls.kind == "FoldedImproper":
        return f"FI-{cls.stability}"
    return cls.kind


def _criminant_overlay(c: ImplicitOde, spec: PortraitSpec) -> Trajectory:
    p_max = spec.p_half
    for _ in range(6):
        try:
            return trace_criminant(c, (-p_max, p_max), step=p_max / 100)
        except PleatlabError:
            p_max *= 0.5
    raise PleatlabError("criminant could not be traced near O")


def _extend(fld: ChartField, tr: Trajectory, direction: float, spec: PortraitSpec) -> Trajectory:
    """Continue a branch (ordered outward) from its far end until it leaves the window."""
    x, p, y = tr.x[-1], tr.p[-1], tr.y[-1]
    if abs(x) > spec.x_half or abs(p) > spec.p_half:
        return tr
    more = _batch(fld, [x], [p], [y], direction, spec)[0]
    return Trajectory.concat([tr, Trajectory(more.t[1:], more.x[1:], more.p[1:], more.y[1:])], tr.meta)


def _curve_overlays(c: ImplicitOde, fld: ChartField, spec: PortraitSpec):
    overlays, skipped = {}, {}
    for which in ("C", "Cprime"):
        try:
            curve = invariant_curve(c, which, config=spec.curves)
        except PleatlabError as exc:
            skipped[which] = f"{type(exc).__name__}: {exc}"
            continue
        away = float(np.sign(curve.eigenvalue))
        for branch, sign in zip(curve.branches, ("+", "-")):
            overlays[which + sign] = _extend(fld, branch, away, spec)
    return overlays, skipped


def build_portrait(ode: ImplicitOde, spec: PortraitSpec | None = None) -> Portrait:
    """Integrate the bundle and overlays; :func:`render` then fills in the SVG."""
    spec = spec or PortraitSpec()
    c = ode.centered()
    c.check_on_surface()
    cls = classify_singular_point(c)
    orient = 1.0 if contact_jet(c).F_y <= 0 else -1.0
    fld = ChartField(c, orient)
    seeds = seed_grid(spec.window, spec.density, spec.delta_stop)
    trajectories = trajectory_bundle(fld, seeds, spec)
    overlays, skipped = {}, {}
    try:
        overlays["criminant"] = _criminant_overlay(c, spec)
    except PleatlabError as exc:
        skipped["criminant"] = str(exc)
    if cls.kind in ("PleatedImproper", "FoldedImproper") and cls.stability != "focus":
        more, why = _curve_overlays(c, fld, spec)
        overlays.update(more)
        skipped.update(why)
    else:
        skipped["invariant_curves"] = f"no invariant curves drawn for {cls.kind}" + (
            f" ({cls.stability})" if cls.stability else ""
        )
    return Portrait(case_label(cls), cls, spec, seeds, trajectories, overlays, skipped, fld)


# --- SVG -----------------------------------------------------------------------


class _Pane:
    def __init__(self, xr: float, yr: float, style: Style):
        self.xr, self.yr, self.style = xr, yr, style
        self.inner = style.canvas - 2 * style.margin
        self.fmt = f"{{:.{style.decimals}f}}"

    def px(self, x, y):
        s = self.style
        X = s.margin + (np.asarray(x) + self.xr) / (2 * self.xr) * self.inner
        Y = s.margin + (self.yr - np.asarray(y)) / (2 * self.yr) * self.inner
        return X, Y

    def pieces(self, x, y):
        """Pixel polylines; breaks at non-finite samples or far outside the canvas."""
        X, Y = self.px(x, y)
        lim = 4 * self.style.canvas
        ok = np.isfinite(X) & np.isfinite(Y) & (np.abs(X) < lim) & (np.abs(Y) < lim)
        out, cur = [], []
        for keep, a, b in zip(ok, X, Y):
            if not keep:
                if len(cur) > 1:
                    out.append(cur)
                cur = []
                continue
            if cur and abs(a - cur[-1][0]) < 0.25 and abs(b - cur[-1][1]) < 0.25:
                continue
            cur.append((a, b))
        if len(cur) > 1:
            out.append(cur)
        return out

    def polyline(self, x, y, attrs: str) -> list[str]:
        f = self.fmt
        return [
            f'<polyline points="{" ".join(f.format(a) + "," + f.format(b) for a, b in piece)}" {attrs}/>'
            for piece in self.pieces(x, y)
        ]


def _svg(pane: _Pane, body: list[str], title: str, xlabel: str, ylabel: str) -> str:
    s = pane.style
    size, m = s.canvas, s.margin
    f = pane.fmt
    ox, oy = pane.px(0.0, 0.0)
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>{title}</title>",
        f'<defs><clipPath id="win"><rect x="{m}" y="{m}" width="{pane.inner}" height="{pane.inner}"/></clipPath></defs>',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>',
        f'<rect x="{m}" y="{m}" width="{pane.inner}" height="{pane.inner}" fill="none" stroke="#000000" stroke-width="0.8"/>',
        f'<line x1="{m}" y1="{f.format(oy)}" x2="{m + pane.inner}" y2="{f.format(oy)}" stroke="#c8c8c8" stroke-width="0.5"/>',
        f'<line x1="{f.format(ox)}" y1="{m}" x2="{f.format(ox)}" y2="{m + pane.inner}" stroke="#c8c8c8" stroke-width="0.5"/>',
        f'<text x="{size - m}" y="{size - 5}" font-size="12" text-anchor="end">{xlabel}</text>',
        f'<text x="5" y="{m - 6}" font-size="12">{ylabel}</text>',
        '<g clip-path="url(#win)" fill="none" stroke-linejoin="round" stroke-linecap="round">',
    ]
    tail = [
        "</g>",
        f'<circle cx="{f.format(ox)}" cy="{f.format(oy)}" r="3" fill="#000000"/>',
        "</svg>",
    ]
    return "\n".join(head + body + tail) + "\n"


def render(ode: ImplicitOde, spec: PortraitSpec | None = None, portrait: Portrait | None = None) -> Portrait:
    """Chart and plane SVG documents plus a manifest of every drawn element."""
    pt = portrait or build_portrait(ode, spec)
    spec, s = pt.spec, pt.spec.style
    chart = _Pane(spec.x_half, spec.p_half, s)
    plane = _Pane(spec.x_half, spec.y_half, s)
    thin = f'stroke="{s.thin_color}" stroke-width="{s.thin_width}"'
    dashed = f'stroke="{s.locus_color}" stroke-width="{s.locus_width}" stroke-dasharray="{s.dash}"'
    bold = f'stroke="{s.bold_color}" stroke-width="{s.bold_width}"'
    body = {"chart": [], "plane": []}
    elements = []

    def draw(kind, style, attrs, source, tr: Trajectory):
        for pane_name, pane, second in (("chart", chart, tr.p), ("plane", plane, tr.y)):
            lines = pane.polyline(tr.x, second, attrs)
            body[pane_name].extend(lines)
            pane_kind = "discriminant" if (kind == "criminant" and pane_name == "plane") else kind
            elements.append({"kind": pane_kind, "pane": pane_name, "style": style, "source": source, "pieces": len(lines)})

    for tr in pt.trajectories:
        draw("trajectory", "thin", thin, f"seed:{tr.meta['seed']}", tr)
    if "criminant" in pt.overlays:
        draw("criminant", "dashed", dashed, "locus:criminant", pt.overlays["criminant"])
    for name in ("C+", "C-", "Cprime+", "Cprime-"):
        if name in pt.overlays:
            draw(name[:-1], "bold", bold, f"curve:{name}", pt.overlays[name])
    for pane_name in ("chart", "plane"):
        elements.append({"kind": "origin", "pane": pane_name, "style": "marker", "source": "O", "pieces": 1})

    title = f"{pt.case}"
    pt.svg_chart = _svg(chart, body["chart"], f"{title} (x, p) chart", "x", "p")
    pt.svg_plane = _svg(plane, body["plane"], f"{title} (x, y) projection", "x", "y")
    cls = pt.cls
    pt.manifest = {
        "case": pt.case,
        "kind": cls.kind,
        "b": cls.b,
        "stability": cls.stability,
        "coordinates": "centered at O",
        "origin": list(ode.origin),
        "elements": elements,
        "seeds": len(pt.seeds),
        "skipped": pt.skipped,
        "y_scale": {"rule": "y_half = x_half^1.5", "y_half": spec.y_half},
        "window": {"x_half": spec.x_half, "p_half": spec.p_half},
        "defaults": spec.to_json(),
        "experimental": bool(cls.experimental or (cls.kind == "FoldedImproper" and cls.stability == "focus")),
    }
    return pt


def bold_branches(manifest: dict, pane: str = "chart") -> int:
    return sum(1 for e in manifest["elements"] if e["pane"] == pane and e["style"] == "bold" and e["pieces"] > 0)


# --- geometric checks on a built portrait ------------------------------------------


def _near_origin(tr: Trajectory, radius: float):
    return np.hypot(tr.x, tr.p) <= radius


def cusp_sides(pt: Portrait, p_fit: float = 0.1) -> tuple[float, float]:
    """Side (sign of x) on which pi(K) and pi(C) open near O."""
    out = []
    for tr in (pt.overlays["criminant"], pt.overlays["C+"], pt.overlays["C-"]):
        sel = (np.abs(tr.p) <= p_fit) & (np.abs(tr.p) > 0)
        out.append(float(np.sign(np.median(tr.x[sel]))))
    k, c_plus, c_minus = out
    return k, (c_plus if c_plus == c_minus else 0.0)


def tongue_polygon(crim: Trajectory, p_fit: float = 0.1):
    """Region between the two discriminant branches for |p| <= p_fit, closed by a chord."""
    sel = np.abs(crim.p) <= p_fit
    x, y = crim.x[sel], crim.y[sel]
    return shapely.Polygon(np.column_stack([x, y]))


def tongue_containment(pt: Portrait, p_fit: float = 0.1, r_min: float = 1e-3) -> float:
    """Fraction of pi(C) samples near O (inside the tongue's x-extent) lying in the tongue."""
    crim = pt.overlays["criminant"]
    poly = tongue_polygon(crim, p_fit)
    x_end = np.min(np.abs(crim.x[np.isclose(np.abs(crim.p), np.max(np.abs(crim.p[np.abs(crim.p) <= p_fit])))]))
    xs, ys = [], []
    for name in ("C+", "C-"):
        tr = pt.overlays[name]
        sel = (np.abs(tr.x) < 0.9 * x_end) & (np.hypot(tr.x, tr.p) > r_min)
        xs.append(tr.x[sel])
        ys.append(tr.y[sel])
    xs, ys = np.concatenate(xs), np.concatenate(ys)
    if xs.size == 0:
        return 0.0
    return float(np.mean(shapely.contains_xy(poly, xs, ys)))


def densify(tr: Trajectory, fld: ChartField, per_segment: int = 8) -> Trajectory:
    """Cubic Hermite refinement of a portrait trajectory (t is arclength)."""
    if len(tr) < 2:
        return tr
    d, _ = ArclengthField(fld).rhs(np.vstack([tr.x, tr.p, tr.y]))
    t = tr.t
    frac = np.arange(per_segment) / per_segment
    tt = np.append((t[:-1, None] + np.diff(t)[:, None] * frac).ravel(), t[-1])
    x = CubicHermiteSpline(t, tr.x, d[0])(tt)
    p = CubicHermiteSpline(t, tr.p, d[1])(tt)
    y = CubicHermiteSpline(t, tr.y, d[2])(tt)
    return Trajectory(tt, x, p, y, dict(tr.meta))


CROSS_CELL = 1e-3  # one angle test per pair and cell


def _segment_angle(line: np.ndarray, q) -> float:
    d = np.hypot(line[:-1, 0] - q[0], line[:-1, 1] - q[1]) + np.hypot(line[1:, 0] - q[0], line[1:, 1] - q[1])
    k = int(np.argmin(d))
    v = line[k + 1] - line[k]
    return math.atan2(v[1], v[0])


def crossings(
    trajectories: list[Trajectory],
    exclude_radius: float,
    min_angle: float = 1e-2,
    fld: ChartField | None = None,
    refine: int = 8,
) -> list[tuple[int, int, tuple[float, float], float]]:
    """Pairwise chart-polyline crossings outside ``exclude_radius`` of O.

    Returns (i, j, point, angle).  Overlaps (two seeds on one orbit) are not
    crossings, and neither are point intersections at an angle below
    ``min_angle``: orbits funnelling into a node are closer together than
    the integration error and touch at angles around 1e-4.  Passing the
    chart field first densifies each polyline by Hermite interpolation
    (exact tangents) so that chords do not cross where the curves do not.
    """
    if fld is not None:
        trajectories = [densify(t, fld, refine) for t in trajectories]
    coords = [np.column_stack([t.x, t.p]) for t in trajectories]
    idx = [i for i, c in enumerate(coords) if len(c) > 1]
    geoms = [shapely.LineString(coords[i]) for i in idx]
    tree = shapely.STRtree(geoms)
    hits = []
    left, right = tree.query(geoms, predicate="intersects")
    for a, b in zip(left, right):
        if a >= b:
            continue
        inter = geoms[a].intersection(geoms[b])
        cells = set()
        for pt in (g for g in getattr(inter, "geoms", [inter]) if g.geom_type == "Point"):
            q = (pt.x, pt.y)
            cell = (math.floor(q[0] / CROSS_CELL), math.floor(q[1] / CROSS_CELL))
            if math.hypot(*q) <= exclude_radius or cell in cells:
                continue
            cells.add(cell)
            d = abs(_segment_angle(coords[idx[a]], q) - _segment_angle(coords[idx[b]], q)) % math.pi
            angle = min(d, math.pi - d)
            if angle > min_angle:
                hits.append((idx[a], idx[b], (float(q[0]), float(q[1])), angle))
    return hits


def cusp_offsets(trajectories: list[Trajectory], crim: Trajectory) -> list[tuple[float, float]]:
    """(distance to the discriminant, local sample spacing) at every x-turn of every solution.

    The spacing adds the solution's local step in the plane to the length of
    the nearest discriminant segment, since both polylines are sampled.
    """
    disc = shapely.LineString(np.column_stack([crim.x, crim.y]))
    seg = np.hypot(np.diff(crim.x), np.diff(crim.y))
    mids = np.column_stack([(crim.x[1:] + crim.x[:-1]) / 2, (crim.y[1:] + crim.y[:-1]) / 2])
    out = []
    for tr in trajectories:
        dx = np.diff(tr.x)
        turns = np.flatnonzero(np.sign(dx[:-1]) * np.sign(dx[1:]) < 0) + 1
        for i in turns:
            spacing = max(math.hypot(tr.x[i + 1] - tr.x[i], tr.y[i + 1] - tr.y[i]),
                          math.hypot(tr.x[i] - tr.x[i - 1], tr.y[i] - tr.y[i - 1]))
            near = int(np.argmin(np.hypot(mids[:, 0] - tr.x[i], mids[:, 1] - tr.y[i])))
            out.append((float(disc.distance(shapely.Point(tr.x[i], tr.y[i]))), spacing + float(seg[near])))
    return out

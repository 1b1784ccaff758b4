import json
import math

import numpy as np
import pytest

from conftest import cubic
from pleatlab import portrait as pr
from pleatlab.lift import ImplicitOde, Trajectory


@pytest.fixture(scope="module")
def portraits():
    spec = pr.PortraitSpec(density=2)
    return {case: pr.render(cubic(b), spec) for case, b in (("S2", -1.0), ("N1", 0.25), ("N3", 0.8), ("S3", 2.0))}


@pytest.mark.parametrize("density, boundary, interior", [(1, 16, 1), (2, 32, 9), (3, 48, 25)])
def test_seed_grid_counts(density, boundary, interior):
    seeds = pr.seed_grid((0.25, 0.5), density)
    assert sum(s.where == "boundary" for s in seeds) == boundary
    assert sum(s.where == "interior" for s in seeds) == interior
    assert [s.id for s in seeds] == list(range(len(seeds)))
    assert all(abs(s.x) <= 0.25 and abs(s.p) <= 0.5 for s in seeds)
    assert all(math.hypot(s.x, s.p) > 0 for s in seeds)


def test_seed_grid_drops_seeds_at_origin():
    seeds = pr.seed_grid((1e-5, 1e-5), 1, delta_stop=1e-5)
    assert all(math.hypot(s.x, s.p) > 5e-5 for s in seeds)


def test_spec_validation(monkeypatch):
    with pytest.raises(ValueError):
        pr.PortraitSpec(x_half=0.0)
    with pytest.raises(ValueError):
        pr.PortraitSpec(density=0)
    assert pr.PortraitSpec(x_half=0.1).y_half == pytest.approx(0.1**1.5)
    monkeypatch.setenv(pr.DENSITY_ENV, "5")
    assert pr.PortraitSpec().density == 5
    monkeypatch.setenv(pr.DENSITY_ENV, "dense")
    with pytest.raises(ValueError):
        pr.default_density()


def test_integrate_stops_at_window():
    spec = pr.PortraitSpec(density=1)
    pt = pr.build_portrait(cubic(2.0), pr.PortraitSpec(density=1))
    tr = pr.integrate(pt.chart, (0.1, 0.2), spec)
    assert tr.meta["stop_reason"] in ("window_exit", "reached_origin", "max_arc")
    with pytest.raises(ValueError):
        pr.integrate(pt.chart, (1.0, 0.0), spec)


def test_manifest(portraits):
    man = portraits["S3"].manifest
    assert man["case"] == "S3" and man["kind"] == "PleatedImproper" and man["b"] == pytest.approx(2.0)
    kinds = {(e["pane"], e["kind"]) for e in man["elements"]}
    assert ("chart", "criminant") in kinds and ("plane", "discriminant") in kinds
    assert ("plane", "criminant") not in kinds
    assert man["seeds"] == 41
    json.dumps(man)


@pytest.mark.parametrize("case", ["S2", "N1", "N3", "S3"])
def test_four_bold_branches(portraits, case):
    assert pr.bold_branches(portraits[case].manifest, "chart") == 4
    assert pr.bold_branches(portraits[case].manifest, "plane") == 4


def test_cusp_sides(portraits):
    k, c = pr.cusp_sides(portraits["N1"])
    assert k * c < 0
    k, c = pr.cusp_sides(portraits["S3"])
    assert k * c > 0


def test_tongue(portraits):
    assert pr.tongue_containment(portraits["S3"]) == 1.0
    assert pr.tongue_containment(portraits["N3"]) == 1.0
    # -2 < b < 0: pi(C) lies in the larger region
    assert pr.tongue_containment(portraits["S2"]) < 0.5


@pytest.mark.parametrize("case", ["S2", "N1", "N3", "S3"])
def test_solutions_do_not_cross(portraits, case):
    pt = portraits[case]
    assert pr.crossings(pt.trajectories, exclude_radius=1e-3, fld=pt.chart) == []


@pytest.mark.parametrize("case", ["N1", "S3"])
def test_cusps_sit_on_the_discriminant(portraits, case):
    pt = portraits[case]
    offsets = pr.cusp_offsets(pt.trajectories, pt.overlays["criminant"])
    assert offsets
    assert all(dist <= spacing for dist, spacing in offsets)


def test_crossings_detects_a_real_crossing():
    t = np.linspace(-1, 1, 21)
    a = Trajectory(t, t, t, t)
    b = Trajectory(t, t, -t + 0.1, t)
    hits = pr.crossings([a, b], exclude_radius=0.0)
    assert len(hits) == 1
    i, j, (x, p), angle = hits[0]
    assert (i, j) == (0, 1) and x == pytest.approx(0.05) and angle == pytest.approx(math.pi / 2)
    assert pr.crossings([a, b], exclude_radius=0.1) == []


def test_deterministic_output(tmp_path):
    spec = pr.PortraitSpec(density=1)
    first = pr.render(cubic(0.8), spec).write(tmp_path / "a")
    second = pr.render(cubic(0.8), spec).write(tmp_path / "b")
    for key in ("chart", "plane", "manifest"):
        assert first[key].read_bytes() == second[key].read_bytes()
    assert first["chart"].name == "N3.chart.svg"
    assert "<svg" in first["chart"].read_text()[:200]


def test_focus_is_experimental():
    pt = pr.render(ImplicitOde.from_text("(p + 0.25*x)^2 - y"), pr.PortraitSpec(density=1))
    assert pt.case == "FI-focus"
    assert pt.manifest["experimental"] is True
    assert "invariant_curves" in pt.skipped


def test_folded_saddle_has_separatrices():
    pt = pr.render(ImplicitOde.from_text("(p - x)^2 - y"), pr.PortraitSpec(density=1))
    assert pt.case == "FI-saddle"
    assert pr.bold_branches(pt.manifest) == 4

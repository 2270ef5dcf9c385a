import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lemniscate.geometry import (CompactSet, Disk, GeometryError, Polygon, SmoothCurve,
                                 boundary_sample, contains, dist_to_continuum, ellipse,
                                 load_spec, spec_from_dict, spec_to_dict)

SQUARE = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])


def _same_set(a, b, tol=1e-12):
    return all(np.abs(b - x).min() < tol for x in a) and len(a) == len(b)


def test_disk_four_points():
    pts = boundary_sample(Disk(0j, 1.0), 4)
    assert _same_set(pts, np.array([1, 1j, -1, -1j]))


def test_square_eight_points_corners_and_midpoints():
    pts = boundary_sample(Polygon(SQUARE), 8)
    expect = np.concatenate([SQUARE, [1, 1j, -1, -1j]])
    assert _same_set(pts, expect)


def test_polygon_reoriented_counterclockwise():
    cw = Polygon(SQUARE[::-1])
    z = cw.boundary_sample(64)
    area = 0.5 * np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag)
    assert area > 0


def test_smooth_curve_arclength_resampling():
    # Oracle: arclength by dense linear interpolation of the spline.
    c = ellipse(2.0, 1.0)
    pts = c.boundary_sample(400)
    closed = c.boundary(np.array([0.0, 1.0]))
    assert abs(closed[0] - closed[1]) < 1e-12
    dense = c.boundary(np.linspace(0, 1, 200001))
    seg = np.abs(np.diff(dense))
    s = np.concatenate([[0], np.cumsum(seg)])
    # arclength position of each sample, from its nearest dense point
    idx = np.array([np.argmin(np.abs(dense - p)) for p in pts])
    spacing = np.diff(s[idx])
    assert np.allclose(spacing, s[-1] / 400, rtol=1e-3)
    # perimeter of the 2x1 ellipse
    assert s[-1] == pytest.approx(9.688448220547675, rel=1e-6)


def test_distances():
    d = Disk(0j, 1.0)
    assert dist_to_continuum(3.0, d) == pytest.approx(2.0)
    assert dist_to_continuum(0.0, d) == 0.0
    sq = Polygon(SQUARE)
    assert dist_to_continuum(2 + 2j, sq) == pytest.approx(np.sqrt(2), abs=1e-14)
    # brute force over a dense boundary sample
    z = np.array([3 + 0.5j, -2.5 - 0.1j, 0.2 + 4j])
    brute = np.abs(z[:, None] - sq.boundary_sample(80000)[None, :]).min(axis=1)
    assert np.allclose(sq.distance(z), brute, atol=1e-4)


def test_smooth_curve_distance_matches_brute_force():
    c = ellipse(2.0, 1.0)
    z = np.array([3.0, 2.5j, -2.2 + 0.7j, 1 + 1.5j])
    brute = np.abs(z[:, None] - c.boundary(np.linspace(0, 1, 400001))[None, :]).min(axis=1)
    assert np.allclose(c.distance(z), brute, atol=1e-8)


def test_contains():
    k = CompactSet((Disk(0j, 1.0),))
    assert contains(0j, k) == (True, 0)
    assert contains(5 + 0j, k) == (False, None)
    # closed set: boundary points count as inside
    assert contains(1.0 + 1e-15, k)[0]
    assert contains(np.exp(0.3j) * (1 + 1e-15), k)[0]
    two = CompactSet((Disk(-4 + 0j, 1.0), Disk(4 + 0j, 1.0)))
    assert contains(4.5 + 0j, two) == (True, 1)
    assert contains(0j, two) == (False, None)


def test_polygon_and_curve_boundary_points_inside():
    sq = Polygon(SQUARE)
    assert sq.contains(np.array([1.0 + 0.3j, 1 + 1e-15 + 0.2j]) ).all()
    c = ellipse(2.0, 1.0)
    assert c.contains(c.boundary_sample(37)).all()


@pytest.mark.parametrize("bad", [
    lambda: Disk(0j, 0.0),
    lambda: Polygon(np.array([0, 1, 2])),
    lambda: Polygon(np.array([0, 1, 1 + 1j, 1j, 1j])),
    lambda: Polygon(np.array([0, 2, 2j, 2 + 2j])),  # bow tie
    lambda: SmoothCurve(np.exp(2j * np.pi * np.arange(10) / 10)),
    lambda: CompactSet((Disk(0j, 1.0), Disk(1.5 + 0j, 1.0))),
    lambda: CompactSet((Disk(0j, 3.0), Disk(0.5 + 0j, 1.0))),
    lambda: CompactSet(()),
])
def test_invalid_geometry(bad):
    with pytest.raises(GeometryError):
        bad()


def test_spec_json_round_trip(tmp_path):
    k = CompactSet((Disk(-4 + 0j, 1.0), Polygon(SQUARE + 0.5), ellipse(1.0, 0.5, 64, 5j)),
                   (True, False, True))
    path = tmp_path / "k.json"
    path.write_text(json.dumps(spec_to_dict(k)))
    k2 = load_spec(path)
    assert k2.quasidisk == k.quasidisk
    t = np.linspace(0, 1, 50)
    for a, b in zip(k, k2):
        assert np.allclose(a.boundary(t), b.boundary(t), atol=1e-14)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"continua": [\n  {"kind": "disk",, }]}')
    with pytest.raises(json.JSONDecodeError) as info:
        load_spec(path)
    assert info.value.lineno == 2


def test_unknown_kind():
    with pytest.raises(GeometryError, match="unknown kind"):
        spec_from_dict({"continua": [{"kind": "blob"}]})
    with pytest.raises(GeometryError, match="missing field"):
        spec_from_dict({"continua": [{"kind": "disk", "center": [0, 0]}]})


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3), st.floats(-20, 20), st.floats(-20, 20))
def test_disk_distance_property(cx, cy, r, x, y):
    d = Disk(complex(cx, cy), r)
    z = complex(x, y)
    expect = max(abs(z - d.center) - r, 0.0)
    assert dist_to_continuum(z, d) == pytest.approx(expect, abs=1e-12)
    assert bool(d.contains(np.array([z]))[0]) == (abs(z - d.center) <= r * (1 + 1e-12))


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_polygon_distance_property(x, y):
    sq = Polygon(SQUARE)
    z = complex(x, y)
    dx = max(abs(x) - 1, 0.0)
    dy = max(abs(y) - 1, 0.0)
    assert dist_to_continuum(z, sq) == pytest.approx(np.hypot(dx, dy), abs=1e-12)

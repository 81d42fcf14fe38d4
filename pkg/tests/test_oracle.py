import math

import pytest

from texscene.generator import GenConfig
from texscene.geometry import Point2
from texscene.inverse import ViewingGeometry, estimate_plane, trapezoid_lines
from texscene.oracle import (
    OraclePlaneSpec,
    OutOfFrustumError,
    angular_difference,
    render_forward,
    render_within_frustum,
    run_sweep,
)
from texscene.geometry import intersect_lines

VIEWING = ViewingGeometry.from_config(GenConfig())


def project(point3, d0=1000.0):
    x, y, z = point3
    return (d0 * x / z, d0 * y / z)


def test_fronto_parallel_patch_projects_to_rectangle():
    spec = OraclePlaneSpec(slant=0.0, tilt=0.0)
    seg, truth = render_forward(spec, VIEWING)
    band0, band1, rail0, rail1 = trapezoid_lines(seg)
    assert not intersect_lines(band0, band1).is_finite
    assert not intersect_lines(rail0, rail1).is_finite
    assert truth.slant == 0.0


def test_45_degree_tilt_180_vanishing_at_minus_d0():
    spec = OraclePlaneSpec(
        slant=math.radians(45),
        tilt=math.pi,
        band_vanishing_offset=0.0,
        rail_vanishing_offset=500.0,
        band_aperture=0.01,
        rail_aperture=0.01,
    )
    seg, _ = render_forward(spec, VIEWING)
    est = estimate_plane(seg, VIEWING)
    # The band-edge pair converges on the picture x-axis at eye-distance
    # offset, on the receding side.
    assert est.band_vanishing.is_finite
    assert est.band_vanishing.x == pytest.approx(
        VIEWING.picture_center.x - VIEWING.eye_distance, abs=1e-6
    )
    assert est.band_vanishing.y == pytest.approx(VIEWING.picture_center.y, abs=1e-6)
    assert est.slant == pytest.approx(math.pi / 4, abs=1e-9)
    assert est.tilt == pytest.approx(math.pi, abs=1e-9)


def test_matched_distance_lands_center_on_reciprocity_ray():
    spec = OraclePlaneSpec(slant=math.radians(25), tilt=math.radians(200))
    seg, truth = render_forward(spec, VIEWING)
    est = estimate_plane(seg, VIEWING)
    assert est.distance == pytest.approx(truth.distance, rel=1e-9)
    ray_len = math.hypot(
        truth.center.x - VIEWING.picture_center.x,
        truth.center.y - VIEWING.picture_center.y,
        VIEWING.eye_distance,
    )
    assert truth.center_distance == pytest.approx(ray_len + truth.distance)


def test_band_midpoints_warp_under_perspective():
    # Midpoint of a 3D rail projects to the projected rail's 2D midpoint only
    # for fronto-parallel patches.
    flat_seg, _ = render_forward(OraclePlaneSpec(slant=0.0, tilt=0.0), VIEWING)
    poly = flat_seg.creation_polygon
    p, q = poly.edge(flat_seg.roles.rail_a)

    def midpoint_gap(spec):
        seg, truth = render_within_frustum(spec, VIEWING)
        a3 = truth.corners3[0]
        b3 = truth.corners3[3]  # both ends of the rail through corner pairing
        mid3 = tuple((u + v) / 2 for u, v in zip(a3, b3))
        mid_proj = project(mid3, VIEWING.eye_distance)
        pa = project(a3, VIEWING.eye_distance)
        pb = project(b3, VIEWING.eye_distance)
        mid2 = ((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2)
        return math.hypot(mid_proj[0] - mid2[0], mid_proj[1] - mid2[1])

    assert midpoint_gap(OraclePlaneSpec(slant=0.0, tilt=0.0)) < 1e-9
    for degrees in (20, 35, 50):
        gap = midpoint_gap(
            OraclePlaneSpec(slant=math.radians(degrees), tilt=math.radians(10))
        )
        assert gap > 1e-3


def test_too_wide_aperture_leaves_frustum():
    spec = OraclePlaneSpec(
        slant=math.radians(50), tilt=0.3, band_aperture=0.5, rail_aperture=0.5
    )
    with pytest.raises(OutOfFrustumError):
        render_forward(spec, VIEWING)


def test_slant_validation():
    with pytest.raises(Exception):
        OraclePlaneSpec(slant=math.radians(80), tilt=0.0)


def test_sweep_smoke_closure():
    report = run_sweep(VIEWING, trials=100, seed=7)
    assert report.samples == 100
    assert report.within(1e-6, 1e-6, 1e-6)


def test_angular_difference_wraps():
    assert angular_difference(0.01, 2 * math.pi - 0.01) == pytest.approx(0.02)

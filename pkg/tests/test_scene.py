import math

import numpy as np
import pytest

from texscene.generator import GenConfig, generate_bands, run_sequence, TextureSegment
from texscene.geometry import ConvexPolygon2, Point2, ProjectivePoint2, select_texture_edges
from texscene.inverse import PlaneEstimate, ViewingGeometry, estimate_state
from texscene.oracle import OraclePlaneSpec, render_within_frustum
from texscene.scene import (
    Box3,
    Plane3,
    Point3,
    SceneModel,
    ScenePlane,
    TAG_BOX,
    TAG_CREASE,
    assemble,
    back_project,
    default_box,
    export_obj,
    place_plane,
    planarity_residual,
    scene_from_state,
)

CONFIG = GenConfig()  # 800 x 600, eye 1000, reference extent 500
VIEWING = ViewingGeometry.from_config(CONFIG)
AT_INF_X = ProjectivePoint2.at_infinity(1, 0)
AT_INF_Y = ProjectivePoint2.at_infinity(0, 1)
MIDLINE_H = None


def fabricate_estimate(
    center, gradient=(0.0, 0.0), extent=None, segment_id=0
):
    from texscene.geometry import Line2

    gx, gy = gradient
    slant = math.atan(math.hypot(gx, gy))
    tilt = math.atan2(gy, gx) % (2 * math.pi) if slant > 0 else 0.0
    if extent is None:
        extent = VIEWING.reference_extent
    distance = max(0.0, VIEWING.eye_distance * (VIEWING.reference_extent / extent - 1))
    return PlaneEstimate(
        segment_id=segment_id,
        center=center,
        band_vanishing=AT_INF_X,
        rail_vanishing=AT_INF_Y,
        band_bisector=Line2.from_coefficients(0, 1, -center.y),
        rail_bisector=Line2.from_coefficients(1, 0, -center.x),
        band_axis_angle=0.0,
        rail_axis_angle=0.0,
        gradient_x=gx,
        gradient_y=gy,
        slant=slant,
        tilt=tilt,
        extent=extent,
        distance=distance,
    )


def rect_segment(x0, y0, x1, y1, segment_id=0):
    poly = ConvexPolygon2((Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)))
    roles = select_texture_edges(poly, CONFIG.picture_center)
    bands = generate_bands(poly, roles, 1, 0)
    return TextureSegment(segment_id, 0, poly, roles, 1, 0, bands.band_lines, poly)


class TestPlacePlane:
    def test_fronto_parallel_on_axis(self):
        est = fabricate_estimate(CONFIG.picture_center)
        plane = place_plane(est, VIEWING)
        assert plane.normal == pytest.approx((0, 0, 1))
        assert (plane.anchor.x, plane.anchor.y, plane.anchor.z) == pytest.approx(
            (0, 0, 1000)
        )

    def test_half_reference_extent_doubles_ray(self):
        est = fabricate_estimate(
            CONFIG.picture_center, extent=VIEWING.reference_extent / 2
        )
        plane = place_plane(est, VIEWING)
        assert plane.anchor.z == pytest.approx(2 * VIEWING.eye_distance)

    def test_oracle_anchor_recovered(self):
        spec = OraclePlaneSpec(slant=math.radians(40), tilt=math.radians(120))
        seg, truth = render_within_frustum(spec, VIEWING)
        est = estimate_state([seg], VIEWING)[0]
        plane = place_plane(est, VIEWING)
        got = (plane.anchor.x, plane.anchor.y, plane.anchor.z)
        assert got == pytest.approx(truth.anchor3, abs=1e-6 * VIEWING.eye_distance)
        assert plane.normal == pytest.approx(truth.normal, abs=1e-9)


class TestBackProject:
    def test_fronto_plane_at_twice_depth_scales_by_two(self):
        plane = Plane3((0.0, 0.0, 1.0), Point3(0.0, 0.0, 2000.0))
        square = [Point2(390, 290), Point2(410, 290), Point2(410, 310), Point2(390, 310)]
        out = back_project(square, plane, VIEWING)
        for p2, p3 in zip(square, out):
            assert p3.x == pytest.approx(2 * (p2.x - 400))
            assert p3.y == pytest.approx(2 * (p2.y - 300))
            assert p3.z == pytest.approx(2000)

    def test_picture_plane_is_identity(self):
        plane = Plane3((0.0, 0.0, 1.0), Point3(0.0, 0.0, 1000.0))
        square = [Point2(400, 300), Point2(401, 300), Point2(401, 301), Point2(400, 301)]
        out = back_project(square, plane, VIEWING)
        for p2, p3 in zip(square, out):
            assert (p3.x, p3.y, p3.z) == pytest.approx(
                (p2.x - 400, p2.y - 300, 1000)
            )

    def test_oracle_outline_reproduces_patch(self):
        spec = OraclePlaneSpec(slant=math.radians(35), tilt=math.radians(250))
        seg, truth = render_within_frustum(spec, VIEWING)
        est = estimate_state([seg], VIEWING)[0]
        plane = place_plane(est, VIEWING)
        out = back_project(seg.creation_polygon, plane, VIEWING)
        want = {tuple(round(v, 4) for v in c) for c in truth.corners3}
        got = {(round(p.x, 4), round(p.y, 4), round(p.z, 4)) for p in out}
        assert got == want


class TestAssemble:
    def test_single_fronto_plane_boundary_is_box_cross_section(self):
        seg = rect_segment(300, 200, 500, 400)
        est = fabricate_estimate(CONFIG.picture_center)
        scene = assemble([seg], [est], VIEWING)
        assert len(scene.planes) == 1
        sp = scene.planes[0]
        assert set(sp.trim_provenance) == {TAG_BOX}
        assert len(sp.boundary) == 4
        xs = sorted({round(p.x, 6) for p in sp.boundary})
        ys = sorted({round(p.y, 6) for p in sp.boundary})
        assert xs == [
            round(scene.box.min_corner.x, 6),
            round(scene.box.max_corner.x, 6),
        ]
        assert ys == [
            round(scene.box.min_corner.y, 6),
            round(scene.box.max_corner.y, 6),
        ]
        assert planarity_residual(sp) < 1e-9 * scene.box.diagonal

    def test_adjacent_tilted_planes_meet_on_common_crease(self):
        # Two cells sharing the x = 400 edge, planes tilted toward each
        # other like an open book; both boundaries must carry collinear
        # plane-intersection edges.
        k = math.tan(math.radians(30))
        seg_a = rect_segment(100, 200, 400, 400, segment_id=0)
        seg_b = rect_segment(400, 200, 700, 400, segment_id=1)
        est_a = fabricate_estimate(Point2(250, 300), gradient=(k, 0.0), segment_id=0)
        est_b = fabricate_estimate(Point2(550, 300), gradient=(-k, 0.0), segment_id=1)
        scene = assemble([seg_a, seg_b], [est_a, est_b], VIEWING)
        assert len(scene.planes) == 2
        crease_edges = []
        for sp in scene.planes:
            n = len(sp.boundary)
            for i, tag in enumerate(sp.trim_provenance):
                if tag == TAG_CREASE:
                    crease_edges.append((sp.boundary[i], sp.boundary[(i + 1) % n]))
        assert len(crease_edges) >= 2
        # All crease edge endpoints lie on one common 3D line.
        p0 = crease_edges[0][0].as_array()
        p1 = crease_edges[0][1].as_array()
        direction = (p1 - p0) / np.linalg.norm(p1 - p0)
        tol = 1e-9 * scene.box.diagonal
        for a, b in crease_edges:
            for point in (a.as_array(), b.as_array()):
                offset = point - p0
                residual = offset - (offset @ direction) * direction
                assert float(np.linalg.norm(residual)) < tol

    def test_seeded_scene_planes_stable_across_iterations(self):
        state3 = run_sequence(CONFIG, seed=505, iterations=3)
        state5 = run_sequence(CONFIG, seed=505, iterations=5)
        _, scene3 = scene_from_state(state3)
        _, scene5 = scene_from_state(state5)
        planes3 = {sp.segment_id: sp.plane for sp in scene3.planes}
        planes5 = {sp.segment_id: sp.plane for sp in scene5.planes}
        for seg_id, plane in planes3.items():
            assert planes5[seg_id] == plane

    def test_planarity_and_containment_on_seeded_scenes(self):
        for seed in (11, 222, 3333):
            state = run_sequence(CONFIG, seed=seed, iterations=5)
            _, scene = scene_from_state(state)
            eps = 1e-9 * scene.box.diagonal
            for sp in scene.planes:
                assert planarity_residual(sp) < eps
                for p in sp.boundary:
                    assert scene.box.contains(p, eps=1e-6 * scene.box.diagonal)


class TestExportObj:
    def test_empty_scene_is_header_only(self):
        box = Box3(Point3(-1, -1, 1), Point3(1, 1, 2))
        scene = SceneModel(VIEWING, box, ())
        assert export_obj(scene) == "# texscene planar scene\n"

    def test_single_square_plane(self):
        box = Box3(Point3(-10, -10, 1), Point3(10, 10, 20))
        plane = Plane3((0.0, 0.0, 1.0), Point3(0.0, 0.0, 5.0))
        square = (
            Point3(-1.0, -1.0, 5.0),
            Point3(1.0, -1.0, 5.0),
            Point3(1.0, 1.0, 5.0),
            Point3(-1.0, 1.0, 5.0),
        )
        sp = ScenePlane(0, plane, square, square, (TAG_BOX,) * 4)
        text = export_obj(SceneModel(VIEWING, box, (sp,)))
        lines = text.splitlines()
        assert lines[0] == "# texscene planar scene"
        assert lines.count("f 1 2 3 4") == 1
        assert sum(1 for l in lines if l.startswith("v ")) == 4
        assert "v -1.000000 -1.000000 5.000000" in lines

    def test_byte_identical_reexport(self):
        state = run_sequence(CONFIG, seed=99, iterations=4)
        _, scene_a = scene_from_state(state)
        _, scene_b = scene_from_state(run_sequence(CONFIG, seed=99, iterations=4))
        assert export_obj(scene_a) == export_obj(scene_b)

    def test_header_carries_seed_and_iteration(self):
        state = run_sequence(CONFIG, seed=4242, iterations=2)
        _, scene = scene_from_state(state)
        assert "# seed 4242 iteration 2" in export_obj(scene)


class TestDefaultBox:
    def test_box_encloses_base_patches(self):
        state = run_sequence(CONFIG, seed=17, iterations=4)
        viewing = ViewingGeometry.from_config(CONFIG)
        estimates = estimate_state(state.segments, viewing)
        box = default_box(state.segments, estimates, viewing)
        for seg, est in zip(state.segments, estimates):
            patch = back_project(seg.creation_polygon, place_plane(est, viewing), viewing)
            for p in patch:
                assert box.contains(p, eps=1e-9 * box.diagonal)
        assert box.min_corner.z < viewing.eye_distance

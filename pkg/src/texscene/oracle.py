"""Forward-projection ground truth for testing the inversion.

Given a wanted slant and tilt, the vanishing line in the picture is known in
closed form. The oracle picks the two vanishing points on it, builds the
band-edge pencil and the rail pencil symmetrically about bisectors through a
chosen anchor point, and intersects them into a projected quad. That quad is
the exact image of a planar parallelogram in 3D, the anchor is the exact
bisector intersection, and the extent chord is two line intersections of
plain algebra, so every ground-truth quantity is analytic rather than
measured back through the code under test.

Band division lines are projections of equal 3D divisions, which is what a
real slanted grating would show (unequal in the picture unless the patch is
fronto-parallel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .generator import GenConfig, TextureSegment, run_sequence
from .geometry import ConvexPolygon2, EdgeRoles, Line2, Point2, ordered_ccw
from .inverse import ViewingGeometry, distance_from_extent

MAX_SLANT = math.radians(75.0)


class OracleError(Exception):
    pass


class OutOfFrustumError(OracleError):
    pass


@dataclass(frozen=True)
class OraclePlaneSpec:
    slant: float
    tilt: float
    anchor: Optional[Point2] = None  # picture coords; None = picture center
    center_distance: Optional[float] = None  # None = reciprocity-matched
    band_aperture: float = 0.02  # half-angle of the band-edge pencil
    rail_aperture: float = 0.02
    band_vanishing_offset: float = 0.0  # along the vanishing line
    rail_vanishing_offset: float = 900.0
    fronto_half_band: float = 60.0  # rectangle half-extents when slant == 0
    fronto_half_rail: float = 40.0
    frequency: int = 2
    order: int = 0

    def __post_init__(self):
        if not 0.0 <= self.slant <= MAX_SLANT:
            raise OracleError(f"slant {self.slant} outside [0, 75 degrees]")
        if self.band_aperture <= 0 or self.rail_aperture <= 0:
            raise OracleError("apertures must be positive")
        if not 1 <= self.frequency:
            raise OracleError("frequency must be >= 1")


@dataclass(frozen=True)
class OracleTruth:
    slant: float
    tilt: float
    center: Point2  # picture coords
    extent: float
    distance: float  # reciprocity distance for the extent
    center_distance: float  # eye to anchor3, as rendered
    anchor3: tuple[float, float, float]
    normal: tuple[float, float, float]
    corners3: tuple[tuple[float, float, float], ...]


def _cross_point(l1: Line2, l2: Line2) -> Point2:
    det = l1.a * l2.b - l1.b * l2.a
    if det == 0.0:
        raise OutOfFrustumError("pencil lines are parallel")
    return Point2((l1.b * l2.c - l1.c * l2.b) / det, (l1.c * l2.a - l1.a * l2.c) / det)


def _line_through_dir(p: Point2, dx: float, dy: float) -> Line2:
    return Line2.from_coefficients(-dy, dx, dy * p.x - dx * p.y)


def _rotated(base_dx: float, base_dy: float, angle: float) -> tuple[float, float]:
    ca, sa = math.cos(angle), math.sin(angle)
    return base_dx * ca - base_dy * sa, base_dx * sa + base_dy * ca


def _inset_bounds(viewing: ViewingGeometry) -> tuple[float, float]:
    # Conservative frustum bound in centered coordinates: the largest
    # rectangle certain to be inside any picture with this reference extent.
    half = viewing.reference_extent / math.sqrt(2.0)
    return 0.8 * half, 0.8 * half


def render_forward(
    spec: OraclePlaneSpec, viewing: ViewingGeometry, segment_id: int = 0
) -> tuple[TextureSegment, OracleTruth]:
    """Project a known planar grating patch into a synthetic segment record
    plus its ground truth."""
    d0 = viewing.eye_distance
    cx, cy = viewing.picture_center.x, viewing.picture_center.y
    anchor_pic = spec.anchor if spec.anchor is not None else viewing.picture_center
    au, av = anchor_pic.x - cx, anchor_pic.y - cy

    if spec.slant == 0.0:
        nx, ny, nz = 0.0, 0.0, 1.0
        hb, hr = spec.fronto_half_band, spec.fronto_half_rail
        band0 = Line2.from_coefficients(0.0, 1.0, -(av - hr))
        band1 = Line2.from_coefficients(0.0, 1.0, -(av + hr))
        rail0 = Line2.from_coefficients(1.0, 0.0, -(au - hb))
        rail1 = Line2.from_coefficients(1.0, 0.0, -(au + hb))
    else:
        grad = math.tan(spec.slant)
        p = grad * math.cos(spec.tilt)
        q = grad * math.sin(spec.tilt)
        normal = np.array([-p, -q, 1.0])
        normal /= np.linalg.norm(normal)
        nx, ny, nz = (float(v) for v in normal)
        # Vanishing line of the plane: -p*u - q*v + d0 = 0.
        la, lb, lc = -p, -q, d0
        nrm = math.hypot(la, lb)
        foot = Point2(-la * lc / nrm**2, -lb * lc / nrm**2)
        ldx, ldy = -lb / nrm, la / nrm
        band_vp = Point2(
            foot.x + spec.band_vanishing_offset * ldx,
            foot.y + spec.band_vanishing_offset * ldy,
        )
        rail_vp = Point2(
            foot.x + spec.rail_vanishing_offset * ldx,
            foot.y + spec.rail_vanishing_offset * ldy,
        )
        if spec.band_vanishing_offset == spec.rail_vanishing_offset:
            raise OracleError("vanishing points must differ")
        bdx, bdy = au - band_vp.x, av - band_vp.y
        band0 = _line_through_dir(band_vp, *_rotated(bdx, bdy, -spec.band_aperture))
        band1 = _line_through_dir(band_vp, *_rotated(bdx, bdy, +spec.band_aperture))
        rdx, rdy = au - rail_vp.x, av - rail_vp.y
        rail0 = _line_through_dir(rail_vp, *_rotated(rdx, rdy, -spec.rail_aperture))
        rail1 = _line_through_dir(rail_vp, *_rotated(rdx, rdy, +spec.rail_aperture))

    c00 = _cross_point(band0, rail0)
    c01 = _cross_point(band0, rail1)
    c11 = _cross_point(band1, rail1)
    c10 = _cross_point(band1, rail0)
    corners2 = [c00, c01, c11, c10]

    half_u, half_v = _inset_bounds(viewing)
    for corner in corners2:
        if abs(corner.x) > half_u or abs(corner.y) > half_v:
            raise OutOfFrustumError(f"projected corner {corner} outside the inset")

    # Rail bisector: the line through the rail vanishing point and the
    # anchor (the vertical midline when fronto-parallel); the extent is its
    # chord between the band edges.
    rail_bisector = (
        Line2.from_coefficients(1.0, 0.0, -au)
        if spec.slant == 0.0
        else _line_through_dir(Point2(au, av), au - rail_vp.x, av - rail_vp.y)
    )
    q0 = _cross_point(rail_bisector, band0)
    q1 = _cross_point(rail_bisector, band1)
    extent = math.hypot(q1.x - q0.x, q1.y - q0.y)
    distance = distance_from_extent(extent, viewing)

    ray = np.array([au, av, d0])
    ray_len = float(np.linalg.norm(ray))
    center_distance = (
        spec.center_distance if spec.center_distance is not None else ray_len + distance
    )
    if center_distance <= 0:
        raise OracleError("center distance must be positive")
    unit_ray = ray / ray_len
    anchor3 = unit_ray * center_distance
    n3 = np.array([nx, ny, nz])
    plane_d = float(n3 @ anchor3)

    def lift(pt: Point2) -> np.ndarray:
        direction = np.array([pt.x, pt.y, d0])
        denom = float(n3 @ direction)
        if abs(denom) < 1e-12 * d0:
            raise OutOfFrustumError("corner ray parallel to the plane")
        t = plane_d / denom
        if t <= 0:
            raise OutOfFrustumError("corner lifts behind the viewer")
        return t * direction

    corners3 = tuple(tuple(float(v) for v in lift(c)) for c in corners2)

    # Band division lines: equal 3D divisions of the rails, projected.
    a_start, a_end = lift(c00), lift(c10)
    b_start, b_end = lift(c01), lift(c11)
    n_div = 2 * spec.frequency
    band_lines = []
    for k in range(1, n_div):
        s = k / n_div
        pa = a_start + s * (a_end - a_start)
        pb = b_start + s * (b_end - b_start)
        proj_a = Point2(d0 * pa[0] / pa[2] + cx, d0 * pa[1] / pa[2] + cy)
        proj_b = Point2(d0 * pb[0] / pb[2] + cx, d0 * pb[1] / pb[2] + cy)
        band_lines.append(Line2.through(proj_a, proj_b))

    ring = ordered_ccw([Point2(c.x + cx, c.y + cy) for c in corners2])
    try:
        polygon = ConvexPolygon2(ring)
    except Exception as exc:
        raise OutOfFrustumError(f"projected patch is degenerate: {exc}") from exc

    def edge_on(line: Line2) -> int:
        tol = 1e-6 * (1.0 + viewing.reference_extent)
        pic_line = Line2.from_coefficients(
            line.a, line.b, line.c - line.a * cx - line.b * cy
        )
        for i in range(4):
            p, q = polygon.edge(i)
            if abs(pic_line.eval(p)) < tol and abs(pic_line.eval(q)) < tol:
                return i
        raise OracleError("role edge not found on the projected quad")

    roles = EdgeRoles(
        longest=edge_on(band0),
        opposite=edge_on(band1),
        rail_a=edge_on(rail0),
        rail_b=edge_on(rail1),
        chain_a=(),
        chain_b=(),
    )
    segment = TextureSegment(
        id=segment_id,
        created_at=0,
        creation_polygon=polygon,
        roles=roles,
        frequency=spec.frequency,
        order=spec.order,
        band_lines=tuple(band_lines),
        clip_polygon=polygon,
    )
    truth = OracleTruth(
        slant=spec.slant,
        tilt=spec.tilt % (2.0 * math.pi) if spec.slant > 0 else 0.0,
        center=anchor_pic,
        extent=extent,
        distance=distance,
        center_distance=center_distance,
        anchor3=tuple(float(v) for v in anchor3),
        normal=(nx, ny, nz),
        corners3=corners3,
    )
    return segment, truth


def render_within_frustum(
    spec: OraclePlaneSpec,
    viewing: ViewingGeometry,
    segment_id: int = 0,
    max_halvings: int = 12,
) -> tuple[TextureSegment, OracleTruth]:
    """render_forward with the apertures halved until the patch fits."""
    for _ in range(max_halvings):
        try:
            return render_forward(spec, viewing, segment_id)
        except OutOfFrustumError:
            spec = replace(
                spec,
                band_aperture=spec.band_aperture / 2,
                rail_aperture=spec.rail_aperture / 2,
            )
    raise OutOfFrustumError("no aperture small enough for the frustum")


def angular_difference(a: float, b: float) -> float:
    return abs((a - b + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class SweepReport:
    samples: int
    max_slant_error: float
    max_tilt_error: float
    max_center_error: float
    max_distance_rel_error: float

    def within(self, angle_tol: float, center_tol: float, distance_tol: float) -> bool:
        return (
            self.max_slant_error < angle_tol
            and self.max_tilt_error < angle_tol
            and self.max_center_error < center_tol
            and self.max_distance_rel_error < distance_tol
        )


def run_sweep(
    viewing: ViewingGeometry,
    trials: int,
    seed: int = 0,
    slant_range: tuple[float, float] = (math.radians(5), math.radians(60)),
) -> SweepReport:
    """Round-trip closure sweep: render, invert, compare against truth."""
    from .inverse import estimate_plane
    from .scene import place_plane

    rng = np.random.default_rng(seed)
    max_slant = max_tilt = max_center = max_dist = 0.0
    produced = 0
    while produced < trials:
        slant = float(rng.uniform(*slant_range))
        tilt = float(rng.uniform(0.0, 2.0 * math.pi))
        anchor = Point2(
            viewing.picture_center.x + float(rng.uniform(-80, 80)),
            viewing.picture_center.y + float(rng.uniform(-80, 80)),
        )
        spec = OraclePlaneSpec(
            slant=slant,
            tilt=tilt,
            anchor=anchor,
            band_aperture=float(rng.uniform(0.004, 0.02)),
            rail_aperture=float(rng.uniform(0.004, 0.02)),
            rail_vanishing_offset=float(rng.uniform(400, 1200)),
            frequency=int(rng.integers(1, 11)),
        )
        try:
            segment, truth = render_within_frustum(spec, viewing)
        except OutOfFrustumError:
            continue
        produced += 1
        est = estimate_plane(segment, viewing)
        max_slant = max(max_slant, abs(est.slant - truth.slant))
        max_tilt = max(max_tilt, angular_difference(est.tilt, truth.tilt))
        center_err = math.hypot(
            est.center.x - truth.center.x, est.center.y - truth.center.y
        )
        max_center = max(max_center, center_err / (2.0 * viewing.reference_extent))
        denom = truth.distance if truth.distance > 0 else viewing.eye_distance
        max_dist = max(max_dist, abs(est.distance - truth.distance) / denom)
        # Exercise placement too: the rendered anchor matches the scene ray.
        anchor = place_plane(est, viewing).anchor
        for got, want in zip((anchor.x, anchor.y, anchor.z), truth.anchor3):
            max_dist = max(max_dist, abs(got - want) / viewing.eye_distance)
    return SweepReport(produced, max_slant, max_tilt, max_center, max_dist)

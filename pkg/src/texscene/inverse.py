"""Monocular perspective inversion of texture segments.

Each segment's creation-time trapezoid yields two vanishing points (one per
edge pair), the vanishing line through them fixes the surface orientation,
the bisector intersection anchors the sight ray, and the apparent extent of
the texture along the rail bisector fixes the distance by similar triangles.

Everything here depends only on a segment's creation snapshot: re-clipping a
segment across iterations never changes its estimate.

Picture coordinates are the generator's top-left pixel frame; the inversion
re-centers them internally so the optical axis pierces picture_center. With
the eye at the origin and the picture plane at depth d, directions t lying
in a surface with normal n vanish on the image line
``n_x*u + n_y*v + n_z*d = 0``, so the fitted vanishing line (a, b, c) gives
``n ~ (a, b, c/d)`` oriented with positive z. The depth gradient is
``(-n_x/n_z, -n_y/n_z)``, slant its magnitude's arctangent, tilt its image
direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .generator import GenConfig, TextureSegment
from .geometry import (
    CoincidentLinesError,
    Line2,
    Point2,
    ProjectivePoint2,
    angle_bisector,
    intersect_lines,
)

TWO_PI = 2.0 * math.pi


class InverseError(Exception):
    pass


class IdenticalVanishingPointsError(InverseError):
    pass


class NoFiniteCenterError(InverseError):
    pass


class UnboundedMeasureError(InverseError):
    pass


class NonpositiveExtentError(InverseError):
    pass


class EdgeOnPlaneError(InverseError):
    """The vanishing line passes through the picture center: the recovered
    plane would contain the line of sight (slant 90 degrees)."""


@dataclass(frozen=True)
class ViewingGeometry:
    """Eye at the origin looking down +z through picture_center at depth
    eye_distance; reference_extent is half the picture diagonal, the largest
    pattern extent the screen can show."""

    eye_distance: float
    reference_extent: float
    picture_center: Point2

    def __post_init__(self):
        if self.eye_distance <= 0:
            raise InverseError("eye_distance must be positive")
        if self.reference_extent <= 0:
            raise InverseError("reference_extent must be positive")

    @staticmethod
    def from_config(config: GenConfig) -> "ViewingGeometry":
        return ViewingGeometry(
            eye_distance=config.eye_distance,
            reference_extent=0.5 * config.diagonal,
            picture_center=config.picture_center,
        )


@dataclass(frozen=True)
class PlaneEstimate:
    segment_id: int
    center: Point2
    band_vanishing: ProjectivePoint2
    rail_vanishing: ProjectivePoint2
    band_bisector: Line2
    rail_bisector: Line2
    band_axis_angle: float
    rail_axis_angle: float
    gradient_x: float
    gradient_y: float
    slant: float
    tilt: float
    extent: float
    distance: float
    center_fallback: bool = False


def trapezoid_lines(segment: TextureSegment) -> tuple[Line2, Line2, Line2, Line2]:
    """Carrier lines of the four role edges, from the creation snapshot."""
    poly = segment.creation_polygon
    roles = segment.roles
    band0 = poly.edge_line(roles.longest)
    if roles.opposite is None:
        band1 = roles.opposite_line
    else:
        band1 = poly.edge_line(roles.opposite)
    rail0 = poly.edge_line(roles.rail_a)
    rail1 = poly.edge_line(roles.rail_b)
    return band0, band1, rail0, rail1


def vanishing_points(
    band0: Line2, band1: Line2, rail0: Line2, rail1: Line2
) -> tuple[ProjectivePoint2, ProjectivePoint2]:
    return intersect_lines(band0, band1), intersect_lines(rail0, rail1)


def symmetry_center(
    band0: Line2, band1: Line2, rail0: Line2, rail1: Line2, interior_hint: Point2
) -> tuple[Line2, Line2, Point2]:
    """Bisector of each edge pair, selected by the interior hint, and their
    finite intersection."""
    band_bisector = angle_bisector(band0, band1, interior_hint)
    rail_bisector = angle_bisector(rail0, rail1, interior_hint)
    crossing = intersect_lines(band_bisector, rail_bisector)
    if not crossing.is_finite:
        raise NoFiniteCenterError("bisectors are parallel")
    return band_bisector, rail_bisector, crossing.point()


def _centered_homogeneous(p: ProjectivePoint2, center: Point2) -> tuple[float, float, float]:
    if p.is_finite:
        return (p.x - center.x, p.y - center.y, 1.0)
    return (p.x, p.y, 0.0)


def orientation_from_vanishing(
    band_vanishing: ProjectivePoint2,
    rail_vanishing: ProjectivePoint2,
    viewing: ViewingGeometry,
) -> tuple[float, float, float, float]:
    """(gradient_x, gradient_y, slant, tilt) from the vanishing line.

    Both points at infinity means there is no finite vanishing line: the
    surface is fronto-parallel (slant 0, tilt 0 by convention).
    """
    h2 = _centered_homogeneous(band_vanishing, viewing.picture_center)
    h3 = _centered_homogeneous(rail_vanishing, viewing.picture_center)
    a = h2[1] * h3[2] - h2[2] * h3[1]
    b = h2[2] * h3[0] - h2[0] * h3[2]
    c = h2[0] * h3[1] - h2[1] * h3[0]
    norm2 = math.hypot(*h2)
    norm3 = math.hypot(*h3)
    if math.hypot(a, b, c) <= 1e-12 * norm2 * norm3:
        raise IdenticalVanishingPointsError(
            f"vanishing points coincide: {band_vanishing} / {rail_vanishing}"
        )
    if math.hypot(a, b) <= 1e-12 * math.hypot(a, b, c):
        # Line at infinity: both vanishing points at infinity.
        return 0.0, 0.0, 0.0, 0.0
    nz = c / viewing.eye_distance
    if nz == 0.0:
        raise EdgeOnPlaneError("vanishing line passes through the picture center")
    nx, ny = a, b
    if nz < 0.0:
        nx, ny, nz = -nx, -ny, -nz
    gradient_x = -nx / nz
    gradient_y = -ny / nz
    slant = math.atan(math.hypot(gradient_x, gradient_y))
    tilt = math.atan2(gradient_y, gradient_x) % TWO_PI
    return gradient_x, gradient_y, slant, tilt


def grating_extent(rail_bisector: Line2, band0: Line2, band1: Line2) -> float:
    """Apparent extent of the texture: chord of the rail bisector between the
    two band edges."""
    p0 = intersect_lines(rail_bisector, band0)
    p1 = intersect_lines(rail_bisector, band1)
    if not (p0.is_finite and p1.is_finite):
        raise UnboundedMeasureError("rail bisector is parallel to a band edge")
    return math.hypot(p1.x - p0.x, p1.y - p0.y)


def distance_from_extent(extent: float, viewing: ViewingGeometry) -> float:
    """Similar-triangles distance behind the picture plane.

    An apparent extent equal to the reference would sit on the picture plane
    itself; smaller extents sit proportionally farther. Clamped at zero for
    extents larger than the reference.
    """
    if extent <= 0.0:
        raise NonpositiveExtentError(f"extent must be positive, got {extent}")
    return max(0.0, viewing.eye_distance * (viewing.reference_extent / extent - 1.0))


def _axis_angle(line: Line2, axis_x: float, axis_y: float) -> float:
    dx, dy = line.direction()
    cross = abs(dx * axis_y - dy * axis_x)
    dot = abs(dx * axis_x + dy * axis_y)
    return math.atan2(cross, dot)


def estimate_plane(segment: TextureSegment, viewing: ViewingGeometry) -> PlaneEstimate:
    """Full inversion of one segment: vanishing points, bisector center,
    orientation, and reciprocity distance."""
    band0, band1, rail0, rail1 = trapezoid_lines(segment)
    band_vp, rail_vp = vanishing_points(band0, band1, rail0, rail1)
    hint = segment.creation_polygon.centroid()
    center_fallback = False
    try:
        band_bisector, rail_bisector, center = symmetry_center(
            band0, band1, rail0, rail1, hint
        )
    except NoFiniteCenterError:
        band_bisector = angle_bisector(band0, band1, hint)
        rail_bisector = angle_bisector(rail0, rail1, hint)
        center = hint
        center_fallback = True
    gradient_x, gradient_y, slant, tilt = orientation_from_vanishing(
        band_vp, rail_vp, viewing
    )
    extent = grating_extent(rail_bisector, band0, band1)
    distance = distance_from_extent(extent, viewing)
    return PlaneEstimate(
        segment_id=segment.id,
        center=center,
        band_vanishing=band_vp,
        rail_vanishing=rail_vp,
        band_bisector=band_bisector,
        rail_bisector=rail_bisector,
        band_axis_angle=_axis_angle(band_bisector, 1.0, 0.0),
        rail_axis_angle=_axis_angle(rail_bisector, 0.0, 1.0),
        gradient_x=gradient_x,
        gradient_y=gradient_y,
        slant=slant,
        tilt=tilt,
        extent=extent,
        distance=distance,
        center_fallback=center_fallback,
    )


def estimate_state(segments, viewing: ViewingGeometry) -> list[PlaneEstimate]:
    return [estimate_plane(seg, viewing) for seg in segments]


def _projective_obj(p: ProjectivePoint2) -> dict:
    return {"kind": p.kind, "x": p.x, "y": p.y}


def _parse_projective(v) -> ProjectivePoint2:
    return ProjectivePoint2(str(v["kind"]), float(v["x"]), float(v["y"]))


def estimate_to_obj(est: PlaneEstimate) -> dict:
    return {
        "segment_id": est.segment_id,
        "center": [est.center.x, est.center.y],
        "band_vanishing": _projective_obj(est.band_vanishing),
        "rail_vanishing": _projective_obj(est.rail_vanishing),
        "band_bisector": [est.band_bisector.a, est.band_bisector.b, est.band_bisector.c],
        "rail_bisector": [est.rail_bisector.a, est.rail_bisector.b, est.rail_bisector.c],
        "band_axis_angle": est.band_axis_angle,
        "rail_axis_angle": est.rail_axis_angle,
        "gradient_x": est.gradient_x,
        "gradient_y": est.gradient_y,
        "slant": est.slant,
        "tilt": est.tilt,
        "extent": est.extent,
        "distance": est.distance,
        "center_fallback": est.center_fallback,
    }


def write_estimates(path, seed, iteration, viewing: ViewingGeometry, segments, estimates) -> None:
    """Estimates file: a header line, then one object per segment carrying
    the estimate plus the 2D polygons the scene assembly needs."""
    from .dataset import dumps

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "schema_version": 1,
            "kind": "estimates",
            "seed": seed,
            "iteration": iteration,
            "viewing": {
                "eye_distance": viewing.eye_distance,
                "reference_extent": viewing.reference_extent,
                "picture_center": [viewing.picture_center.x, viewing.picture_center.y],
            },
        }
        fh.write(dumps(header) + "\n")
        for seg, est in zip(segments, estimates):
            row = estimate_to_obj(est)
            row["kind"] = "estimate"
            row["creation_polygon"] = [[v.x, v.y] for v in seg.creation_polygon.vertices]
            row["clip_polygon"] = [[v.x, v.y] for v in seg.clip_polygon.vertices]
            fh.write(dumps(row) + "\n")


def read_estimates(path):
    """Returns (header, rows); each row is (estimate, creation_polygon,
    clip_polygon)."""
    import json

    from .geometry import ConvexPolygon2

    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise InverseError("empty estimates file")
    header = json.loads(lines[0])
    if header.get("kind") != "estimates":
        raise InverseError("not an estimates file")
    rows = []
    for line in lines[1:]:
        raw = json.loads(line)
        est = estimate_from_obj(raw)
        creation = ConvexPolygon2(
            tuple(Point2(float(x), float(y)) for x, y in raw["creation_polygon"])
        )
        clip = ConvexPolygon2(
            tuple(Point2(float(x), float(y)) for x, y in raw["clip_polygon"])
        )
        rows.append((est, creation, clip))
    return header, rows


def viewing_from_header(header) -> ViewingGeometry:
    v = header["viewing"]
    return ViewingGeometry(
        eye_distance=float(v["eye_distance"]),
        reference_extent=float(v["reference_extent"]),
        picture_center=Point2(
            float(v["picture_center"][0]), float(v["picture_center"][1])
        ),
    )


def estimate_from_obj(v) -> PlaneEstimate:
    return PlaneEstimate(
        segment_id=int(v["segment_id"]),
        center=Point2(float(v["center"][0]), float(v["center"][1])),
        band_vanishing=_parse_projective(v["band_vanishing"]),
        rail_vanishing=_parse_projective(v["rail_vanishing"]),
        band_bisector=Line2(*[float(x) for x in v["band_bisector"]]),
        rail_bisector=Line2(*[float(x) for x in v["rail_bisector"]]),
        band_axis_angle=float(v["band_axis_angle"]),
        rail_axis_angle=float(v["rail_axis_angle"]),
        gradient_x=float(v["gradient_x"]),
        gradient_y=float(v["gradient_y"]),
        slant=float(v["slant"]),
        tilt=float(v["tilt"]),
        extent=float(v["extent"]),
        distance=float(v["distance"]),
        center_fallback=bool(v["center_fallback"]),
    )

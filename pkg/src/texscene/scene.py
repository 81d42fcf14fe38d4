"""3D assembly of estimated planes and Wavefront export.

Each estimate is placed along its sight ray, clipped to an enclosing box,
then trimmed pairwise against planes of cells that are adjacent in the 2D
diagram: non-parallel pairs meet along their intersection line (a crease),
while pairs whose crease would slice a base patch, or parallel pairs, are
treated as occlusion cases where the occluding plane stops at the sight
plane through the shared 2D edge. Every boundary edge carries the provenance
of the cut that made it: box, plane-intersection, or sight-boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .generator import TextureSegment
from .geometry import ConvexPolygon2, Line2, Point2
from .inverse import PlaneEstimate, ViewingGeometry

TAG_BOX = "box"
TAG_CREASE = "plane-intersection"
TAG_SIGHT = "sight-boundary"


class SceneError(Exception):
    pass


class RayParallelToPlaneError(SceneError):
    pass


class BehindViewerError(SceneError):
    pass


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class Plane3:
    """Unit normal with positive z (pointing away from the viewer) and an
    anchor point on the plane."""

    normal: tuple[float, float, float]
    anchor: Point3

    def __post_init__(self):
        n = np.array(self.normal)
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-9:
            raise SceneError("plane normal must be unit length")
        if self.normal[2] <= 0:
            raise SceneError("plane normal must have positive z")

    @property
    def offset(self) -> float:
        return float(np.array(self.normal) @ self.anchor.as_array())


@dataclass(frozen=True)
class Box3:
    min_corner: Point3
    max_corner: Point3

    def __post_init__(self):
        if not (
            self.min_corner.x < self.max_corner.x
            and self.min_corner.y < self.max_corner.y
            and self.min_corner.z < self.max_corner.z
        ):
            raise SceneError("degenerate box")

    @property
    def diagonal(self) -> float:
        return math.dist(
            (self.min_corner.x, self.min_corner.y, self.min_corner.z),
            (self.max_corner.x, self.max_corner.y, self.max_corner.z),
        )

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_corner.as_array() + self.max_corner.as_array())

    def contains(self, p: Point3, eps: float) -> bool:
        return (
            self.min_corner.x - eps <= p.x <= self.max_corner.x + eps
            and self.min_corner.y - eps <= p.y <= self.max_corner.y + eps
            and self.min_corner.z - eps <= p.z <= self.max_corner.z + eps
        )


@dataclass(frozen=True)
class ScenePlane:
    segment_id: int
    plane: Plane3
    base_patch: tuple[Point3, ...]
    boundary: tuple[Point3, ...]
    trim_provenance: tuple[str, ...]


@dataclass(frozen=True)
class SceneModel:
    viewing: ViewingGeometry
    box: Box3
    planes: tuple[ScenePlane, ...]
    dropped: tuple[int, ...] = ()
    seed: Optional[int] = None
    iteration: Optional[int] = None


def place_plane(est: PlaneEstimate, viewing: ViewingGeometry) -> Plane3:
    """Put the plane on the sight ray through the estimate's center, at the
    reciprocity distance beyond the picture plane."""
    u = est.center.x - viewing.picture_center.x
    v = est.center.y - viewing.picture_center.y
    ray = np.array([u, v, viewing.eye_distance])
    ray_len = float(np.linalg.norm(ray))
    anchor = ray * ((ray_len + est.distance) / ray_len)
    n = np.array([-est.gradient_x, -est.gradient_y, 1.0])
    n /= float(np.linalg.norm(n))
    return Plane3(tuple(float(x) for x in n), Point3(*(float(x) for x in anchor)))


def back_project(
    polygon: ConvexPolygon2 | Sequence[Point2],
    plane: Plane3,
    viewing: ViewingGeometry,
) -> tuple[Point3, ...]:
    """Intersect the sight ray of every vertex with the plane, preserving
    vertex order."""
    points = polygon.vertices if isinstance(polygon, ConvexPolygon2) else polygon
    n = np.array(plane.normal)
    d = plane.offset
    out = []
    for p in points:
        direction = np.array(
            [p.x - viewing.picture_center.x, p.y - viewing.picture_center.y, viewing.eye_distance]
        )
        denom = float(n @ direction)
        if abs(denom) <= 1e-12 * float(np.linalg.norm(direction)):
            raise RayParallelToPlaneError(f"vertex ray through {p} parallel to plane")
        t = d / denom
        if t <= 0:
            raise BehindViewerError(f"vertex {p} projects behind the viewer")
        out.append(Point3(*(float(x) for x in t * direction)))
    return tuple(out)


def default_box(
    segments: Sequence[TextureSegment],
    estimates: Sequence[PlaneEstimate],
    viewing: ViewingGeometry,
) -> Box3:
    """Front face on the picture plane, rear face covering the farthest
    reciprocity distance, cross-section matching the picture frustum, grown
    to hold every base patch."""
    d0 = viewing.eye_distance
    extent_min = min(est.extent for est in estimates)
    back_z = d0 + d0 * (viewing.reference_extent / extent_min)
    half_w = viewing.picture_center.x * back_z / d0
    half_h = viewing.picture_center.y * back_z / d0
    lo = np.array([-half_w, -half_h, d0])
    hi = np.array([half_w, half_h, back_z])
    for seg, est in zip(segments, estimates):
        try:
            patch = back_project(seg.creation_polygon, place_plane(est, viewing), viewing)
        except (RayParallelToPlaneError, BehindViewerError):
            continue  # the plane gets dropped by assemble too
        for p in patch:
            lo = np.minimum(lo, p.as_array())
            hi = np.maximum(hi, p.as_array())
    pad = 0.01 * float(np.linalg.norm(hi - lo))
    return Box3(
        Point3(*(float(x) for x in lo - pad)),
        Point3(*(float(x) for x in hi + pad)),
    )


def shared_cell_edges(
    cells: Sequence[ConvexPolygon2], scale: float
) -> list[tuple[int, int, Point2, Point2]]:
    """Pairs of cells sharing a boundary segment, with the overlap endpoints."""
    line_tol = 1e-7
    out = []
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            found = None
            for ei in range(len(cells[i].vertices)):
                li = cells[i].edge_line(ei)
                for ej in range(len(cells[j].vertices)):
                    lj = cells[j].edge_line(ej)
                    if (
                        abs(li.a - lj.a) < line_tol
                        and abs(li.b - lj.b) < line_tol
                        and abs(li.c - lj.c) < line_tol * scale
                    ):
                        dx, dy = li.direction()
                        pi, qi = cells[i].edge(ei)
                        pj, qj = cells[j].edge(ej)
                        ts = sorted([pi.x * dx + pi.y * dy, qi.x * dx + qi.y * dy])
                        tj = sorted([pj.x * dx + pj.y * dy, qj.x * dx + qj.y * dy])
                        lo = max(ts[0], tj[0])
                        hi = min(ts[1], tj[1])
                        if hi - lo > 1e-6 * scale:
                            base = Point2(-li.a * li.c, -li.b * li.c)
                            found = (
                                i,
                                j,
                                Point2(base.x + lo * dx, base.y + lo * dy),
                                Point2(base.x + hi * dx, base.y + hi * dy),
                            )
                            break
                if found:
                    break
            if found:
                out.append(found)
    return out


class _TaggedRing:
    """Convex polygon in plane coordinates whose edges carry provenance tags.

    Edge k runs from vertex k to vertex k+1 (cyclic).
    """

    def __init__(self, verts: list[tuple[float, float]], tags: list[str]):
        self.verts = verts
        self.tags = tags

    def clip(self, a: float, b: float, c: float, new_tag: str) -> None:
        """Keep the side a*s + b*t + c <= 0."""
        verts, tags = self.verts, self.tags
        out_v: list[tuple[float, float]] = []
        out_t: list[str] = []
        n = len(verts)
        for i in range(n):
            p, q = verts[i], verts[(i + 1) % n]
            sp = a * p[0] + b * p[1] + c
            sq = a * q[0] + b * q[1] + c
            if sp <= 0.0:
                out_v.append(p)
                out_t.append(tags[i])
                if sq > 0.0:
                    t = sp / (sp - sq)
                    out_v.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
                    out_t.append(new_tag)
            elif sq <= 0.0:
                t = sp / (sp - sq)
                out_v.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
                out_t.append(tags[i])
        self.verts, self.tags = out_v, out_t

    def dedupe(self, eps: float) -> None:
        verts, tags = self.verts, self.tags
        keep_v: list[tuple[float, float]] = []
        keep_t: list[str] = []
        n = len(verts)
        for i in range(n):
            j = (i + 1) % n
            if abs(verts[i][0] - verts[j][0]) <= eps and abs(verts[i][1] - verts[j][1]) <= eps:
                continue  # zero-length edge i collapses away
            keep_v.append(verts[i])
            keep_t.append(tags[i])
        self.verts, self.tags = keep_v, keep_t

    @property
    def empty(self) -> bool:
        return len(self.verts) < 3


class _PlaneFrame:
    """Orthonormal in-plane coordinates for one placed plane."""

    def __init__(self, plane: Plane3):
        n = np.array(plane.normal)
        e1 = np.cross(n, np.array([0.0, 0.0, 1.0]))
        if float(np.linalg.norm(e1)) < 1e-12:
            e1 = np.array([1.0, 0.0, 0.0])
        else:
            e1 /= float(np.linalg.norm(e1))
        e2 = np.cross(n, e1)
        self.n = n
        self.d = plane.offset
        self.origin = plane.anchor.as_array()
        self.e1 = e1
        self.e2 = e2

    def to_2d(self, x: np.ndarray) -> tuple[float, float]:
        rel = x - self.origin
        return float(rel @ self.e1), float(rel @ self.e2)

    def to_3d(self, s: float, t: float) -> Point3:
        p = self.origin + s * self.e1 + t * self.e2
        return Point3(*(float(v) for v in p))

    def halfspace_to_line(
        self, h: np.ndarray, bound: float
    ) -> Optional[tuple[float, float, float]]:
        """h . X <= bound as an in-plane line; None when the face is parallel
        to the plane (caller checks which side the whole plane is on)."""
        a = float(h @ self.e1)
        b = float(h @ self.e2)
        c = float(h @ self.origin) - bound
        if math.hypot(a, b) < 1e-15:
            return None
        return a, b, c


def _occludes(plane: Plane3, patch: Sequence[Point3]) -> bool:
    """True when the (infinite) plane passes in front of any patch point as
    seen from the eye."""
    n = np.array(plane.normal)
    d = plane.offset
    pts = [p.as_array() for p in patch]
    pts.append(np.mean(pts, axis=0))
    for x in pts:
        denom = float(n @ x)
        if abs(denom) < 1e-15:
            continue
        t = d / denom
        if 0.0 < t < 1.0 - 1e-9:
            return True
    return False


def assemble(
    segments: Sequence[TextureSegment],
    estimates: Sequence[PlaneEstimate],
    viewing: ViewingGeometry,
    box: Optional[Box3] = None,
    seed: Optional[int] = None,
    iteration: Optional[int] = None,
) -> SceneModel:
    """Clip each placed plane to the box, then cut adjacent pairs along their
    crease or sight boundary."""
    if not estimates:
        raise SceneError("need at least one estimate")
    order = sorted(range(len(estimates)), key=lambda k: estimates[k].segment_id)
    segments = [segments[k] for k in order]
    estimates = [estimates[k] for k in order]

    if box is None:
        box = default_box(segments, estimates, viewing)
    eps = 1e-12 * box.diagonal

    planes = [place_plane(est, viewing) for est in estimates]
    frames = [_PlaneFrame(p) for p in planes]
    # A cell reaching toward its own plane's vanishing line cannot be
    # back-projected (rays parallel or behind the viewer); such planes are
    # dropped, not fatal.
    bases3: list[Optional[tuple[Point3, ...]]] = []
    for seg, plane in zip(segments, planes):
        try:
            bases3.append(back_project(seg.creation_polygon, plane, viewing))
        except (RayParallelToPlaneError, BehindViewerError):
            bases3.append(None)
    bases2 = [
        None
        if base is None
        else [frame.to_2d(p.as_array()) for p in base]
        for frame, base in zip(frames, bases3)
    ]
    centroids2 = [
        None
        if b is None
        else (sum(s for s, _ in b) / len(b), sum(t for _, t in b) / len(b))
        for b in bases2
    ]

    rings: list[Optional[_TaggedRing]] = []
    half = 2.0 * box.diagonal
    faces = [
        (np.array([1.0, 0.0, 0.0]), box.max_corner.x),
        (np.array([-1.0, 0.0, 0.0]), -box.min_corner.x),
        (np.array([0.0, 1.0, 0.0]), box.max_corner.y),
        (np.array([0.0, -1.0, 0.0]), -box.min_corner.y),
        (np.array([0.0, 0.0, 1.0]), box.max_corner.z),
        (np.array([0.0, 0.0, -1.0]), -box.min_corner.z),
    ]
    for k, frame in enumerate(frames):
        if bases3[k] is None:
            rings.append(_TaggedRing([], []))
            continue
        cs, ct = frame.to_2d(box.center)
        ring = _TaggedRing(
            [
                (cs - half, ct - half),
                (cs + half, ct - half),
                (cs + half, ct + half),
                (cs - half, ct + half),
            ],
            [TAG_BOX] * 4,
        )
        for h, bound in faces:
            line = frame.halfspace_to_line(h, bound)
            if line is None:
                if float(h @ frame.origin) > bound:
                    ring.verts, ring.tags = [], []
                    break
                continue
            ring.clip(*line, TAG_BOX)
            if ring.empty:
                break
        rings.append(ring)

    cells = [seg.clip_polygon for seg in segments]
    adjacency = shared_cell_edges(cells, 2.0 * viewing.reference_extent)
    adjacency.sort(key=lambda t: (t[0], t[1]))

    def crease_cut(side: int, other: int) -> bool:
        """Cut `side`'s ring along its plane's intersection with `other`'s
        plane, unless the crease splits the base patch. Returns True when a
        cut was applied."""
        ring = rings[side]
        if ring.empty or bases2[side] is None or bases3[other] is None:
            return False
        ni, nj = np.array(planes[side].normal), np.array(planes[other].normal)
        direction = np.cross(ni, nj)
        norm = float(np.linalg.norm(direction))
        if norm < 1e-9:
            return False  # parallel planes: occlusion case, gap allowed
        point = np.linalg.solve(
            np.vstack([ni, nj, direction]),
            np.array([planes[side].offset, planes[other].offset, 0.0]),
        )
        frame = frames[side]
        x0, y0 = frame.to_2d(point)
        dx = float(direction @ frame.e1)
        dy = float(direction @ frame.e2)
        a, b, c = -dy, dx, dy * x0 - dx * y0
        svals = [a * s + b * t + c for s, t in bases2[side]]
        tol = 1e-9 * box.diagonal
        if min(svals) < -tol and max(svals) > tol:
            return False  # crease slices the base patch: occlusion case
        cs, ct = centroids2[side]
        sc = a * cs + b * ct + c
        if abs(sc) <= tol:
            return False
        if sc > 0:
            a, b, c = -a, -b, -c
        ring.clip(a, b, c, TAG_CREASE)
        return True

    creased: set[tuple[int, int]] = set()
    for i, j, _, _ in adjacency:
        cut_i = crease_cut(i, j)
        cut_j = crease_cut(j, i)
        if cut_i and cut_j:
            creased.add((i, j))

    for i, j, p2, q2 in adjacency:
        if (i, j) in creased:
            continue
        dp = np.array(
            [p2.x - viewing.picture_center.x, p2.y - viewing.picture_center.y, viewing.eye_distance]
        )
        dq = np.array(
            [q2.x - viewing.picture_center.x, q2.y - viewing.picture_center.y, viewing.eye_distance]
        )
        m = np.cross(dp, dq)
        norm = float(np.linalg.norm(m))
        if norm < 1e-12:
            continue
        m /= norm
        for side, other in ((i, j), (j, i)):
            ring = rings[side]
            if ring.empty or bases3[other] is None or centroids2[side] is None:
                continue
            if not _occludes(planes[side], bases3[other]):
                continue
            frame = frames[side]
            a = float(m @ frame.e1)
            b = float(m @ frame.e2)
            c = float(m @ frame.origin)
            if math.hypot(a, b) < 1e-15:
                continue
            cs, ct = centroids2[side]
            sc = a * cs + b * ct + c
            if abs(sc) <= 1e-9 * box.diagonal:
                continue
            if sc > 0:
                a, b, c = -a, -b, -c
            ring.clip(a, b, c, TAG_SIGHT)

    scene_planes = []
    dropped = []
    for k, ring in enumerate(rings):
        ring.dedupe(eps)
        if ring.empty or bases3[k] is None:
            dropped.append(estimates[k].segment_id)
            continue
        boundary = tuple(frames[k].to_3d(s, t) for s, t in ring.verts)
        scene_planes.append(
            ScenePlane(
                segment_id=estimates[k].segment_id,
                plane=planes[k],
                base_patch=bases3[k],
                boundary=boundary,
                trim_provenance=tuple(ring.tags),
            )
        )
    return SceneModel(
        viewing=viewing,
        box=box,
        planes=tuple(scene_planes),
        dropped=tuple(dropped),
        seed=seed,
        iteration=iteration,
    )


def scene_from_state(
    state,
    viewing: Optional[ViewingGeometry] = None,
    box: Optional[Box3] = None,
) -> tuple[list[PlaneEstimate], SceneModel]:
    """Invert every segment of a sequence state and assemble the scene."""
    from .inverse import estimate_state

    if viewing is None:
        viewing = ViewingGeometry.from_config(state.config)
    estimates = estimate_state(state.segments, viewing)
    model = assemble(
        state.segments,
        estimates,
        viewing,
        box=box,
        seed=state.token.seed,
        iteration=state.token.iteration,
    )
    return estimates, model


def planarity_residual(scene_plane: ScenePlane) -> float:
    n = np.array(scene_plane.plane.normal)
    d = scene_plane.plane.offset
    return max(abs(float(n @ p.as_array()) - d) for p in scene_plane.boundary)


def export_obj(scene: SceneModel) -> str:
    """Wavefront-style text: vertices with 6 decimals in segment order, one
    polygon face per plane. Byte-deterministic for a given scene."""
    lines = ["# texscene planar scene"]
    if scene.seed is not None:
        lines.append(f"# seed {scene.seed} iteration {scene.iteration}")
    index = 1
    for sp in sorted(scene.planes, key=lambda s: s.segment_id):
        lines.append(f"# segment {sp.segment_id}")
        face = []
        for p in sp.boundary:
            lines.append(f"v {p.x:.6f} {p.y:.6f} {p.z:.6f}")
            face.append(str(index))
            index += 1
        lines.append("f " + " ".join(face))
    return "\n".join(lines) + "\n"


def scene_record(scene: SceneModel) -> dict:
    """Scene in the dataset's object format."""
    return {
        "schema_version": 1,
        "kind": "scene",
        "seed": scene.seed,
        "iteration": scene.iteration,
        "viewing": {
            "eye_distance": scene.viewing.eye_distance,
            "reference_extent": scene.viewing.reference_extent,
            "picture_center": [scene.viewing.picture_center.x, scene.viewing.picture_center.y],
        },
        "box": {
            "min": [scene.box.min_corner.x, scene.box.min_corner.y, scene.box.min_corner.z],
            "max": [scene.box.max_corner.x, scene.box.max_corner.y, scene.box.max_corner.z],
        },
        "dropped": list(scene.dropped),
        "planes": [
            {
                "segment_id": sp.segment_id,
                "normal": list(sp.plane.normal),
                "anchor": [sp.plane.anchor.x, sp.plane.anchor.y, sp.plane.anchor.z],
                "base_patch": [[p.x, p.y, p.z] for p in sp.base_patch],
                "boundary": [[p.x, p.y, p.z] for p in sp.boundary],
                "trim_provenance": list(sp.trim_provenance),
            }
            for sp in scene.planes
        ],
    }

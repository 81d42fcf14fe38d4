"""Exact-as-practical 2D primitives: homogeneous lines, intersections with
at-infinity results, angle bisectors, convex polygon clipping, closed Voronoi
diagrams, and the texture edge-role selection.

Conventions
-----------
Lines are stored in canonical homogeneous form ``a*x + b*y + c = 0`` with
``a**2 + b**2 == 1`` and the first nonzero of ``(a, b)`` positive, so two
constructions of the same line compare equal coefficient-for-coefficient.
Polygons are counterclockwise by the shoelace sign. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

# Angular tolerance for parallelism tests (radians) and the dimensionless
# collinearity tolerance for polygon validation.
EPS_PAR = 1e-9
EPS_COL = 1e-9


class GeometryError(Exception):
    pass


class CoincidentLinesError(GeometryError):
    pass


class DegenerateSitesError(GeometryError):
    pass


class UnboundedCellError(GeometryError):
    pass


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class Line2:
    """Canonical homogeneous line a*x + b*y + c = 0."""

    a: float
    b: float
    c: float

    @staticmethod
    def from_coefficients(a: float, b: float, c: float) -> "Line2":
        norm = math.hypot(a, b)
        if norm == 0.0:
            raise GeometryError("line with zero normal")
        a, b, c = a / norm, b / norm, c / norm
        # First nonzero of (a, b) positive. Exact-zero test keeps the sign
        # flip symmetric under exact negation of the inputs.
        if a < 0.0 or (a == 0.0 and b < 0.0):
            a, b, c = -a, -b, -c
        return Line2(a, b, c)

    @staticmethod
    def through(p: Point2, q: Point2) -> "Line2":
        a = q.y - p.y
        b = p.x - q.x
        c = q.x * p.y - p.x * q.y
        return Line2.from_coefficients(a, b, c)

    def eval(self, p: Point2) -> float:
        """Signed distance of p from the line (normal is unit length)."""
        return self.a * p.x + self.b * p.y + self.c

    def direction(self) -> tuple[float, float]:
        return (-self.b, self.a)


@dataclass(frozen=True)
class ProjectivePoint2:
    """A finite point or a direction at infinity.

    At-infinity directions are unit length and canonicalized so the first
    nonzero component is positive.
    """

    kind: str  # "finite" | "at_infinity"
    x: float
    y: float

    @staticmethod
    def finite(p: Point2) -> "ProjectivePoint2":
        return ProjectivePoint2("finite", p.x, p.y)

    @staticmethod
    def at_infinity(dx: float, dy: float) -> "ProjectivePoint2":
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            raise GeometryError("zero direction for at-infinity point")
        dx, dy = dx / norm, dy / norm
        if dx < 0.0 or (dx == 0.0 and dy < 0.0):
            dx, dy = -dx, -dy
        return ProjectivePoint2("at_infinity", dx, dy)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def point(self) -> Point2:
        if not self.is_finite:
            raise GeometryError("at-infinity point has no position")
        return Point2(self.x, self.y)

    def homogeneous(self) -> tuple[float, float, float]:
        w = 1.0 if self.is_finite else 0.0
        return (self.x, self.y, w)


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@dataclass(frozen=True)
class ConvexPolygon2:
    """Counterclockwise convex polygon (shoelace sign positive)."""

    vertices: tuple[Point2, ...]

    def __post_init__(self):
        verts = self.vertices
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        scale = max(max(abs(v.x), abs(v.y)) for v in verts) or 1.0
        eps = 1e-9 * scale
        n = len(verts)
        for i in range(n):
            j = (i + 1) % n
            if abs(verts[i].x - verts[j].x) <= eps and abs(verts[i].y - verts[j].y) <= eps:
                raise GeometryError("repeated polygon vertex")
        if self.signed_area() <= 0.0:
            raise GeometryError("polygon not counterclockwise")
        for i in range(n):
            p, q, r = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
            cr = _cross(p.x, p.y, q.x, q.y, r.x, r.y)
            lp = math.hypot(q.x - p.x, q.y - p.y)
            lq = math.hypot(r.x - q.x, r.y - q.y)
            if cr < -EPS_COL * lp * lq:
                raise GeometryError("polygon not convex")

    def signed_area(self) -> float:
        s = 0.0
        verts = self.vertices
        for i in range(len(verts)):
            j = (i + 1) % len(verts)
            s += verts[i].x * verts[j].y - verts[j].x * verts[i].y
        return 0.5 * s

    def area(self) -> float:
        return abs(self.signed_area())

    def centroid(self) -> Point2:
        verts = self.vertices
        sx = sy = sa = 0.0
        for i in range(len(verts)):
            j = (i + 1) % len(verts)
            w = verts[i].x * verts[j].y - verts[j].x * verts[i].y
            sx += (verts[i].x + verts[j].x) * w
            sy += (verts[i].y + verts[j].y) * w
            sa += w
        return Point2(sx / (3.0 * sa), sy / (3.0 * sa))

    def edge(self, i: int) -> tuple[Point2, Point2]:
        return self.vertices[i], self.vertices[(i + 1) % len(self.vertices)]

    def edge_line(self, i: int) -> Line2:
        p, q = self.edge(i)
        return Line2.through(p, q)

    def contains(self, p: Point2, eps: float = 0.0) -> bool:
        verts = self.vertices
        for i in range(len(verts)):
            q, r = verts[i], verts[(i + 1) % len(verts)]
            if _cross(q.x, q.y, r.x, r.y, p.x, p.y) < -eps:
                return False
        return True


@dataclass(frozen=True)
class VoronoiDiagram:
    """Sites (interior first, then the 8 outer) and one bounded cell per
    interior site."""

    sites: tuple[Point2, ...]
    cells: tuple[ConvexPolygon2, ...]


def ordered_ccw(points: Sequence[Point2]) -> tuple[Point2, ...]:
    """Return the points reversed if their shoelace sign is negative."""
    s = 0.0
    for i in range(len(points)):
        j = (i + 1) % len(points)
        s += points[i].x * points[j].y - points[j].x * points[i].y
    return tuple(points) if s >= 0.0 else tuple(reversed(points))


def dedupe_ring(points: Sequence[Point2], eps: float) -> list[Point2]:
    out: list[Point2] = []
    for p in points:
        if out and abs(p.x - out[-1].x) <= eps and abs(p.y - out[-1].y) <= eps:
            continue
        out.append(p)
    while len(out) >= 2 and abs(out[0].x - out[-1].x) <= eps and abs(out[0].y - out[-1].y) <= eps:
        out.pop()
    return out


def intersect_lines(l1: Line2, l2: Line2) -> ProjectivePoint2:
    """Intersection of two canonical lines; at-infinity when parallel.

    Raises CoincidentLinesError when the lines are the same line within
    tolerance.
    """
    w = l1.a * l2.b - l1.b * l2.a
    # |w| is the sine of the angle between the lines (unit normals).
    if abs(w) < EPS_PAR:
        # Parallel within tolerance; coincident if they agree at any point.
        px, py = -l1.a * l1.c, -l1.b * l1.c  # foot of l1 from origin
        if abs(l2.a * px + l2.b * py + l2.c) < EPS_PAR * (1.0 + math.hypot(px, py)):
            raise CoincidentLinesError(f"coincident lines {l1} and {l2}")
        dx, dy = l1.direction()
        return ProjectivePoint2.at_infinity(dx, dy)
    x = (l1.b * l2.c - l1.c * l2.b) / w
    y = (l1.c * l2.a - l1.a * l2.c) / w
    return ProjectivePoint2.finite(Point2(x, y))


def angle_bisector(l1: Line2, l2: Line2, interior_hint: Point2) -> Line2:
    """The bisector of l1, l2 whose line runs through the wedge containing
    interior_hint; the midline when the inputs are parallel."""
    w = l1.a * l2.b - l1.b * l2.a
    if abs(w) < EPS_PAR:
        px, py = -l1.a * l1.c, -l1.b * l1.c
        if abs(l2.a * px + l2.b * py + l2.c) < EPS_PAR * (1.0 + math.hypot(px, py)):
            raise CoincidentLinesError("cannot bisect coincident lines")
        # Canonical parallel lines share (a, b) orientation, so the sum is
        # the midline.
        return Line2.from_coefficients(l1.a + l2.a, l1.b + l2.b, l1.c + l2.c)
    s1 = l1.eval(interior_hint)
    s2 = l2.eval(interior_hint)
    # Points with s1 == s2 form one bisector, s1 == -s2 the other. The hint's
    # wedge contains the bisector matching its sign pattern.
    if (s1 >= 0.0) == (s2 >= 0.0):
        return Line2.from_coefficients(l1.a - l2.a, l1.b - l2.b, l1.c - l2.c)
    return Line2.from_coefficients(l1.a + l2.a, l1.b + l2.b, l1.c + l2.c)


def clip_halfplane(
    vertices: Sequence[Point2], a: float, b: float, c: float
) -> list[Point2]:
    """Keep the side a*x + b*y + c <= 0 of a convex ring (Sutherland-Hodgman
    against a single plane). Returns an open ring, possibly empty."""
    out: list[Point2] = []
    n = len(vertices)
    for i in range(n):
        p = vertices[i]
        q = vertices[(i + 1) % n]
        sp = a * p.x + b * p.y + c
        sq = a * q.x + b * q.y + c
        if sp <= 0.0:
            out.append(p)
            if sq > 0.0:
                t = sp / (sp - sq)
                out.append(Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
        elif sq <= 0.0:
            t = sp / (sp - sq)
            out.append(Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
    return out


def clip_polygon(
    subject: ConvexPolygon2, clip: ConvexPolygon2, eps_area: float = 1e-12
) -> Optional[ConvexPolygon2]:
    """Convex intersection of two polygons; None when the overlap is below
    eps_area (an absolute area threshold in squared input units)."""
    ring: Sequence[Point2] = subject.vertices
    n = len(clip.vertices)
    for i in range(n):
        p, q = clip.edge(i)
        # For a CCW polygon the interior satisfies a*x + b*y + c <= 0 with
        # the raw two-point carrier coefficients.
        a = q.y - p.y
        b = p.x - q.x
        c = q.x * p.y - p.x * q.y
        ring = clip_halfplane(ring, a, b, c)
        if not ring:
            return None
    scale = max(max(abs(v.x), abs(v.y)) for v in ring) or 1.0
    ring = dedupe_ring(ring, 1e-12 * scale)
    if len(ring) < 3:
        return None
    poly_area = 0.0
    for i in range(len(ring)):
        j = (i + 1) % len(ring)
        poly_area += ring[i].x * ring[j].y - ring[j].x * ring[i].y
    if abs(0.5 * poly_area) < eps_area:
        return None
    return ConvexPolygon2(ordered_ccw(ring))


def _nearer_halfplane(s: Point2, t: Point2) -> tuple[float, float, float]:
    """Half-plane a*x + b*y + c <= 0 of points nearer to s than to t."""
    a = 2.0 * (t.x - s.x)
    b = 2.0 * (t.y - s.y)
    c = (s.x * s.x + s.y * s.y) - (t.x * t.x + t.y * t.y)
    return a, b, c


def voronoi_closed(
    interior_sites: Sequence[Point2],
    outer_sites: Sequence[Point2],
    eps_dist: Optional[float] = None,
) -> VoronoiDiagram:
    """Bounded Voronoi cells of the interior sites, closed by the outer ring.

    Each cell is the half-plane intersection against every other site. Raises
    DegenerateSitesError on duplicate sites and UnboundedCellError when the
    outer sites fail to close an interior cell.
    """
    if len(outer_sites) != 8:
        raise GeometryError(f"expected 8 outer sites, got {len(outer_sites)}")
    sites = list(interior_sites) + list(outer_sites)
    xs = [p.x for p in sites]
    ys = [p.y for p in sites]
    spread = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    if eps_dist is None:
        eps_dist = 1e-9 * math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            if math.hypot(sites[i].x - sites[j].x, sites[i].y - sites[j].y) <= eps_dist:
                raise DegenerateSitesError(f"sites {i} and {j} coincide")

    cx = sum(xs) / len(xs)
    cy = sum(ys) / len(ys)
    half = 8.0 * spread
    seed_ring = [
        Point2(cx - half, cy - half),
        Point2(cx + half, cy - half),
        Point2(cx + half, cy + half),
        Point2(cx - half, cy + half),
    ]

    cells: list[ConvexPolygon2] = []
    for idx, site in enumerate(interior_sites):
        ring: Sequence[Point2] = seed_ring
        for j, other in enumerate(sites):
            if j == idx:
                continue
            a, b, c = _nearer_halfplane(site, other)
            ring = clip_halfplane(ring, a, b, c)
            if not ring:
                raise UnboundedCellError(f"cell of site {idx} vanished")
        boundary_eps = 1e-6 * half
        for v in ring:
            if (
                abs(abs(v.x - cx) - half) < boundary_eps
                or abs(abs(v.y - cy) - half) < boundary_eps
            ):
                raise UnboundedCellError(
                    f"cell of interior site {idx} is not closed by the outer sites"
                )
        ring = dedupe_ring(ring, eps_dist)
        if len(ring) < 3:
            raise UnboundedCellError(f"cell of site {idx} degenerated")
        cells.append(ConvexPolygon2(ordered_ccw(ring)))
    return VoronoiDiagram(tuple(sites), tuple(cells))


@dataclass(frozen=True)
class EdgeRoles:
    """Edge indices of a cell, by texture role.

    longest: the longest edge, orienting the bands; opposite: its opposing
    most-parallel edge (None when synthesized for a triangle, see
    opposite_line); rail_a: the longest edge connected to either of those;
    rail_b: the edge opposed to rail_a (the rails get divided into band
    sub-segments); chain_a/chain_b: the remaining edge chains that clip the
    bands.
    """

    longest: int
    opposite: Optional[int]
    rail_a: int
    rail_b: int
    chain_a: tuple[int, ...]
    chain_b: tuple[int, ...]
    opposite_line: Optional[Line2] = None


def _quadrant_rank(mid: Point2, center: Point2) -> int:
    xpos = (mid.x - center.x) >= 0.0
    ypos = (mid.y - center.y) >= 0.0
    if xpos and ypos:
        return 0
    if xpos:
        return 1
    if ypos:
        return 2
    return 3


def _edge_len(cell: ConvexPolygon2, i: int) -> float:
    p, q = cell.edge(i)
    return math.hypot(q.x - p.x, q.y - p.y)


def _edge_mid(cell: ConvexPolygon2, i: int) -> Point2:
    p, q = cell.edge(i)
    return Point2(0.5 * (p.x + q.x), 0.5 * (p.y + q.y))


def _undirected_angle(cell: ConvexPolygon2, i: int, j: int) -> float:
    """Angle in [0, pi/2] between the carrier directions of edges i and j."""
    pi_, qi = cell.edge(i)
    pj, qj = cell.edge(j)
    dix, diy = qi.x - pi_.x, qi.y - pi_.y
    djx, djy = qj.x - pj.x, qj.y - pj.y
    cross = abs(dix * djy - diy * djx)
    dot = abs(dix * djx + diy * djy)
    return math.atan2(cross, dot)


def _pick(
    cell: ConvexPolygon2,
    candidates: Sequence[int],
    key,
    center: Point2,
    minimize: bool,
    tol: float,
) -> int:
    """Best candidate by key, ties within tol broken by quadrant rank of the
    edge midpoint relative to the picture center, then lexicographic midpoint."""
    values = {i: key(i) for i in candidates}
    best = min(values.values()) if minimize else max(values.values())
    tied = [i for i in candidates if abs(values[i] - best) <= tol]
    return min(
        tied,
        key=lambda i: (
            _quadrant_rank(_edge_mid(cell, i), center),
            _edge_mid(cell, i).x,
            _edge_mid(cell, i).y,
        ),
    )


def _separated(n: int, i: int, j: int) -> bool:
    """True when at least one edge lies between i and j in both cyclic
    directions."""
    if i == j:
        return False
    fwd = (j - i) % n
    bwd = (i - j) % n
    return fwd >= 2 and bwd >= 2


def select_texture_edges(cell: ConvexPolygon2, picture_center: Point2) -> EdgeRoles:
    """Assign the texture roles L0..L5 to a cell's edges.

    Pure function of (cell, picture_center): identical inputs give identical
    roles. Triangles get a synthesized L1 parallel to L0 through the opposite
    vertex.
    """
    n = len(cell.vertices)
    scale = max(max(abs(v.x), abs(v.y)) for v in cell.vertices) or 1.0
    len_tol = 1e-9 * scale
    ang_tol = EPS_PAR
    all_edges = list(range(n))
    longest = _pick(cell, all_edges, lambda i: _edge_len(cell, i), picture_center, False, len_tol)

    if n == 3:
        # Offset the longest edge to the opposite vertex; the two other
        # edges become the dividing pair.
        p, q = cell.edge(longest)
        far_vertex = cell.vertices[(longest + 2) % 3]
        base = Line2.through(p, q)
        opposite_line = Line2.from_coefficients(
            base.a, base.b, -(base.a * far_vertex.x + base.b * far_vertex.y)
        )
        rest = [i for i in all_edges if i != longest]
        rail_a = _pick(cell, rest, lambda i: _edge_len(cell, i), picture_center, False, len_tol)
        rail_b = next(i for i in rest if i != rail_a)
        return EdgeRoles(longest, None, rail_a, rail_b, (), (), opposite_line)

    separated = [i for i in all_edges if _separated(n, longest, i)]
    opposite = _pick(
        cell, separated, lambda i: _undirected_angle(cell, longest, i), picture_center, True, ang_tol
    )

    connected = [
        i
        for i in all_edges
        if i not in (longest, opposite)
        and (
            (i - longest) % n in (1, n - 1)
            or (i - opposite) % n in (1, n - 1)
        )
    ]
    rail_a = _pick(cell, connected, lambda i: _edge_len(cell, i), picture_center, False, len_tol)

    rail_candidates = [
        i for i in all_edges if _separated(n, rail_a, i) and i not in (longest, opposite)
    ]
    if not rail_candidates:
        rail_candidates = [i for i in all_edges if i not in (longest, opposite, rail_a)]
    rail_b = _pick(
        cell, rail_candidates, lambda i: _undirected_angle(cell, rail_a, i), picture_center, True, ang_tol
    )

    assigned = {longest, opposite, rail_a, rail_b}
    chains: list[list[int]] = []
    current: list[int] = []
    for k in range(1, n + 1):
        i = (rail_a + k) % n
        if i in assigned:
            if current:
                chains.append(current)
                current = []
        else:
            current.append(i)
    if current:
        chains.append(current)
    chain_a = tuple(chains[0]) if chains else ()
    chain_b = tuple(i for chain in chains[1:] for i in chain)
    return EdgeRoles(longest, opposite, rail_a, rail_b, chain_a, chain_b, None)


def reflect_point(p: Point2, line: Line2) -> Point2:
    s = line.eval(p)
    return Point2(p.x - 2.0 * s * line.a, p.y - 2.0 * s * line.b)

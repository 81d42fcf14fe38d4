"""Seeded, iterative stimulus generation.

A sequence starts from a 64-bit seed: 8 outer sites close the Voronoi
diagram, then each iteration adds one interior site, recomputes the diagram,
re-clips the existing texture segments, and builds one new square-wave
segment for the new cell. Creation-time fields of a segment never change
afterwards; only its clip polygon follows the diagram.

Randomness comes from counter-based Philox streams keyed by (seed,
iteration), so any iteration's draws are independent of the other
iterations' draw counts. Draw order per iteration is part of the dataset
contract: init consumes 16 uniforms (x, y for the 8 outer subdomains in
fixed order); iteration k >= 1 consumes (x, y) pairs until a site is
accepted, then f, then O.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (
    ConvexPolygon2,
    EdgeRoles,
    GeometryError,
    Line2,
    Point2,
    VoronoiDiagram,
    select_texture_edges,
    voronoi_closed,
)

N_MAX_REJECTIONS = 10_000


class GeneratorError(Exception):
    pass


class SamplingExhaustedError(GeneratorError):
    pass


class DegenerateRolesError(GeneratorError):
    pass


@dataclass(frozen=True)
class GenConfig:
    picture_width: int = 800
    picture_height: int = 600
    inset_ratio: float = 0.1
    generative_ratio: float = 3.0
    min_site_offset: Optional[float] = None
    f_min: int = 1
    f_max: int = 10
    background_luminance: int = 255
    eye_distance: float = 1000.0

    def __post_init__(self):
        if self.picture_width <= 0 or self.picture_height <= 0:
            raise GeneratorError("picture dimensions must be positive")
        if not 0.0 < self.inset_ratio < 0.5:
            raise GeneratorError("inset_ratio must be in (0, 0.5)")
        if self.generative_ratio <= 1.0:
            raise GeneratorError("generative_ratio must exceed 1")
        if self.min_site_offset is None:
            object.__setattr__(
                self, "min_site_offset", 0.1 * min(self.picture_width, self.picture_height)
            )
        if self.min_site_offset <= 0:
            raise GeneratorError("min_site_offset must be positive")
        if not 1 <= self.f_min <= self.f_max:
            raise GeneratorError("need 1 <= f_min <= f_max")
        if not 0 <= self.background_luminance <= 255:
            raise GeneratorError("background_luminance must be a byte")
        if self.eye_distance <= 0:
            raise GeneratorError("eye_distance must be positive")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.picture_width, self.picture_height)

    @property
    def picture_center(self) -> Point2:
        return Point2(self.picture_width / 2.0, self.picture_height / 2.0)

    @property
    def eps_dist(self) -> float:
        return 1e-9 * self.diagonal


@dataclass(frozen=True)
class SeedToken:
    seed: int
    iteration: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise GeneratorError("seed must be a 64-bit unsigned integer")
        if self.iteration < 0:
            raise GeneratorError("iteration must be non-negative")


class SeededStream:
    """Raw Philox(key=seed, counter=[0,0,0,iteration]) draws with the
    uniform/integer constructions fixed as part of the dataset contract."""

    def __init__(self, seed: int, iteration: int):
        key = np.array([seed, 0], dtype=np.uint64)
        counter = np.array([0, 0, 0, iteration], dtype=np.uint64)
        self._bits = np.random.Philox(key=key, counter=counter)

    def next_raw(self) -> int:
        return int(self._bits.random_raw())

    def uniform(self, lo: float, hi: float) -> float:
        # 53-bit mantissa uniform in [0, 1).
        u = (self.next_raw() >> 11) * 2.0**-53
        return lo + u * (hi - lo)

    def integer(self, lo: int, hi: int) -> int:
        """Unbiased uniform integer in [lo, hi] via rejection."""
        n = hi - lo + 1
        limit = (2**64 // n) * n
        while True:
            r = self.next_raw()
            if r < limit:
                return lo + r % n


@dataclass(frozen=True)
class BandGeometry:
    """Division of a cell into 2f alternating bands.

    rail_a/rail_b hold the 2*frequency + 1 division points of the dividing edges,
    oriented from the longest-edge side toward its opposite; band_lines are
    the internal carrier lines; luminances has one byte (0 or 255) per band.
    """

    rail_a: tuple[Point2, ...]
    rail_b: tuple[Point2, ...]
    band_lines: tuple[Line2, ...]
    luminances: tuple[int, ...]


@dataclass(frozen=True)
class TextureSegment:
    id: int
    created_at: int
    creation_polygon: ConvexPolygon2
    roles: EdgeRoles
    frequency: int
    order: int
    band_lines: tuple[Line2, ...]
    clip_polygon: ConvexPolygon2


@dataclass(frozen=True)
class SequenceState:
    config: GenConfig
    token: SeedToken
    outer_sites: tuple[Point2, ...]
    interior_sites: tuple[Point2, ...]
    diagram: VoronoiDiagram
    segments: tuple[TextureSegment, ...]


def generative_subdomains(config: GenConfig) -> list[tuple[float, float, float, float]]:
    """The 8 outer subdomains of the generative domain, row-major order,
    skipping the central picture domain."""
    w, h = float(config.picture_width), float(config.picture_height)
    gw = config.generative_ratio * w
    gh = config.generative_ratio * h
    x_bands = [((w - gw) / 2.0, 0.0), (0.0, w), (w, (w + gw) / 2.0)]
    y_bands = [((h - gh) / 2.0, 0.0), (0.0, h), (h, (h + gh) / 2.0)]
    out = []
    for row in range(3):
        for col in range(3):
            if row == 1 and col == 1:
                continue
            x0, x1 = x_bands[col]
            y0, y1 = y_bands[row]
            out.append((x0, y0, x1, y1))
    return out


def inset_rect(config: GenConfig) -> tuple[float, float, float, float]:
    inset = config.inset_ratio * min(config.picture_width, config.picture_height)
    return (
        inset,
        inset,
        config.picture_width - inset,
        config.picture_height - inset,
    )


def draw_texture_params(stream: SeededStream, f_min: int = 1, f_max: int = 10) -> tuple[int, int]:
    """Band frequency f uniform in [f_min, f_max], then the order bit O."""
    f = stream.integer(f_min, f_max)
    order = stream.integer(0, 1)
    return f, order


def _rail_points(
    cell: ConvexPolygon2, roles: EdgeRoles, frequency: int, eps: float
) -> tuple[list[Point2], list[Point2]]:
    """Equal-length division points on the two rail edges, both oriented to
    start at the endpoint nearer the longest edge's carrier line."""
    base_line = cell.edge_line(roles.longest)

    def oriented(i: int) -> tuple[Point2, Point2]:
        p, q = cell.edge(i)
        if abs(base_line.eval(p)) <= abs(base_line.eval(q)):
            return p, q
        return q, p

    a0, a1 = oriented(roles.rail_a)
    b0, b1 = oriented(roles.rail_b)
    if math.hypot(a1.x - a0.x, a1.y - a0.y) < eps or math.hypot(b1.x - b0.x, b1.y - b0.y) < eps:
        raise DegenerateRolesError("dividing edge shorter than tolerance")
    n = 2 * frequency
    rail_a = [
        Point2(a0.x + (a1.x - a0.x) * k / n, a0.y + (a1.y - a0.y) * k / n)
        for k in range(n + 1)
    ]
    rail_b = [
        Point2(b0.x + (b1.x - b0.x) * k / n, b0.y + (b1.y - b0.y) * k / n)
        for k in range(n + 1)
    ]
    return rail_a, rail_b


def generate_bands(
    cell: ConvexPolygon2,
    roles: EdgeRoles,
    frequency: int,
    order: int,
    eps: float = 1e-9,
) -> BandGeometry:
    """Divide the rail edges into 2*frequency equal parts and join matching
    division points; bands alternate luminance starting black for order 0."""
    rail_a, rail_b = _rail_points(cell, roles, frequency, eps)
    lines = []
    for k in range(1, 2 * frequency):
        a, b = rail_a[k], rail_b[k]
        if math.hypot(a.x - b.x, a.y - b.y) < eps:
            raise DegenerateRolesError("coincident division points")
        lines.append(Line2.through(a, b))
    luminances = tuple(255 if (k + order) % 2 == 1 else 0 for k in range(2 * frequency))
    return BandGeometry(tuple(rail_a), tuple(rail_b), tuple(lines), luminances)


def init_sequence(config: GenConfig, seed: int) -> SequenceState:
    """Iteration 0: one uniform outer site per generative subdomain."""
    stream = SeededStream(seed, 0)
    outer = []
    for x0, y0, x1, y1 in generative_subdomains(config):
        x = stream.uniform(x0, x1)
        y = stream.uniform(y0, y1)
        outer.append(Point2(x, y))
    diagram = VoronoiDiagram(tuple(outer), ())
    return SequenceState(
        config=config,
        token=SeedToken(seed, 0),
        outer_sites=tuple(outer),
        interior_sites=(),
        diagram=diagram,
        segments=(),
    )


def _sample_site(
    stream: SeededStream, config: GenConfig, existing: list[Point2]
) -> Point2:
    x0, y0, x1, y1 = inset_rect(config)
    offset = config.min_site_offset
    for _ in range(N_MAX_REJECTIONS):
        x = stream.uniform(x0, x1)
        y = stream.uniform(y0, y1)
        if all(math.hypot(x - s.x, y - s.y) >= offset for s in existing):
            return Point2(x, y)
    raise SamplingExhaustedError(
        f"no admissible site after {N_MAX_REJECTIONS} attempts "
        f"(offset {offset}, {len(existing)} sites)"
    )


def step(state: SequenceState) -> SequenceState:
    """Add one interior site, recompute the diagram, re-clip existing
    segments and create the new one. Pure: returns a new state."""
    config = state.config
    k = state.token.iteration + 1
    stream = SeededStream(state.token.seed, k)

    existing = list(state.interior_sites) + list(state.outer_sites)
    site = _sample_site(stream, config, existing)
    f, order = draw_texture_params(stream, config.f_min, config.f_max)

    interior = tuple(state.interior_sites) + (site,)
    diagram = voronoi_closed(interior, state.outer_sites, config.eps_dist)

    segments = []
    for seg in state.segments:
        segments.append(
            dataclasses.replace(seg, clip_polygon=diagram.cells[seg.id])
        )

    new_cell = diagram.cells[len(interior) - 1]
    roles = select_texture_edges(new_cell, config.picture_center)
    bands = generate_bands(new_cell, roles, f, order, config.eps_dist)
    segments.append(
        TextureSegment(
            id=len(interior) - 1,
            created_at=k,
            creation_polygon=new_cell,
            roles=roles,
            frequency=f,
            order=order,
            band_lines=bands.band_lines,
            clip_polygon=new_cell,
        )
    )
    return SequenceState(
        config=config,
        token=SeedToken(state.token.seed, k),
        outer_sites=state.outer_sites,
        interior_sites=interior,
        diagram=diagram,
        segments=tuple(segments),
    )


def run_sequence(config: GenConfig, seed: int, iterations: int) -> SequenceState:
    state = init_sequence(config, seed)
    for _ in range(iterations):
        state = step(state)
    return state


def segment_bands(segment: TextureSegment, eps: float = 1e-9) -> BandGeometry:
    """Recompute the creation-time band geometry of a segment (pure in its
    creation fields)."""
    return generate_bands(
        segment.creation_polygon, segment.roles, segment.frequency, segment.order, eps
    )


def check_state(state: SequenceState) -> None:
    """Assert the structural invariants of a sequence state."""
    config = state.config
    if len(state.interior_sites) != state.token.iteration:
        raise GeneratorError("site count must equal the iteration index")
    if len(state.segments) != len(state.interior_sites):
        raise GeneratorError("one segment per interior site")
    x0, y0, x1, y1 = inset_rect(config)
    sites = list(state.interior_sites) + list(state.outer_sites)
    for i, s in enumerate(state.interior_sites):
        if not (x0 <= s.x <= x1 and y0 <= s.y <= y1):
            raise GeneratorError(f"site {i} outside the inset")
        for j, t in enumerate(sites):
            if t is s:
                continue
            if math.hypot(s.x - t.x, s.y - t.y) < config.min_site_offset - 1e-9:
                raise GeneratorError(f"sites {i}, {j} closer than min_site_offset")
    for i, seg in enumerate(state.segments):
        if seg.id != i:
            raise GeneratorError("segment ids must match site order")
        if seg.clip_polygon != state.diagram.cells[i]:
            raise GeneratorError("segment clip polygon must equal its cell")
        if len(seg.band_lines) != 2 * seg.frequency - 1:
            raise GeneratorError("band line count must be 2*frequency - 1")
        if not state.diagram.cells[i].contains(state.interior_sites[i], eps=-1e-12):
            raise GeometryError("site must lie in its own cell")

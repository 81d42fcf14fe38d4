"""Newline-delimited dataset records, one self-describing object per
iteration.

Floats are emitted with 17 significant digits (lossless for doubles) by a
small emitter of our own, because the byte-identical replay guarantee needs
full control over number formatting. Records parse back with plain
json.loads.
"""

from __future__ import annotations

import json
import math
from typing import Iterable

from .generator import GenConfig, SeedToken, SequenceState, TextureSegment
from .geometry import ConvexPolygon2, EdgeRoles, Line2, Point2, VoronoiDiagram

SCHEMA_VERSION = 1


class DatasetError(Exception):
    pass


class SchemaMismatchError(DatasetError):
    pass


class CorruptRecordError(DatasetError):
    pass


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise DatasetError(f"non-finite number in record: {x!r}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def dumps(obj) -> str:
    """Compact JSON with deterministic float formatting and key order as
    built."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return repr(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{dumps(v)}" for k, v in obj.items()) + "}"
    raise DatasetError(f"cannot serialize {type(obj).__name__}")


def _point(p: Point2) -> list:
    return [p.x, p.y]


def _polygon(poly: ConvexPolygon2) -> list:
    return [_point(v) for v in poly.vertices]


def _line(line: Line2) -> list:
    return [line.a, line.b, line.c]


def _roles(roles: EdgeRoles) -> dict:
    return {
        "longest": roles.longest,
        "opposite": roles.opposite,
        "rail_a": roles.rail_a,
        "rail_b": roles.rail_b,
        "chain_a": list(roles.chain_a),
        "chain_b": list(roles.chain_b),
        "opposite_line": _line(roles.opposite_line) if roles.opposite_line is not None else None,
    }


def _segment(seg: TextureSegment) -> dict:
    return {
        "id": seg.id,
        "created_at": seg.created_at,
        "creation_polygon": _polygon(seg.creation_polygon),
        "roles": _roles(seg.roles),
        "frequency": seg.frequency,
        "order": seg.order,
        "band_lines": [_line(l) for l in seg.band_lines],
        "clip_polygon": _polygon(seg.clip_polygon),
    }


def _config(config: GenConfig) -> dict:
    return {
        "picture_width": config.picture_width,
        "picture_height": config.picture_height,
        "inset_ratio": config.inset_ratio,
        "generative_ratio": config.generative_ratio,
        "min_site_offset": config.min_site_offset,
        "f_min": config.f_min,
        "f_max": config.f_max,
        "background_luminance": config.background_luminance,
        "eye_distance": config.eye_distance,
    }


def save_record(state: SequenceState) -> str:
    """One dataset line describing a full sequence state."""
    record = {
        "schema_version": SCHEMA_VERSION,
        "seed": state.token.seed,
        "iteration": state.token.iteration,
        "config": _config(state.config),
        "outer_sites": [_point(p) for p in state.outer_sites],
        "interior_sites": [_point(p) for p in state.interior_sites],
        "segments": [_segment(s) for s in state.segments],
    }
    return dumps(record)


def _parse_point(v) -> Point2:
    return Point2(float(v[0]), float(v[1]))


def _parse_polygon(v) -> ConvexPolygon2:
    return ConvexPolygon2(tuple(_parse_point(p) for p in v))


def _parse_line(v) -> Line2:
    return Line2(float(v[0]), float(v[1]), float(v[2]))


def _parse_roles(v) -> EdgeRoles:
    return EdgeRoles(
        longest=int(v["longest"]),
        opposite=None if v["opposite"] is None else int(v["opposite"]),
        rail_a=int(v["rail_a"]),
        rail_b=int(v["rail_b"]),
        chain_a=tuple(int(i) for i in v["chain_a"]),
        chain_b=tuple(int(i) for i in v["chain_b"]),
        opposite_line=None if v["opposite_line"] is None else _parse_line(v["opposite_line"]),
    )


def load_record(line: str) -> SequenceState:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRecordError(f"unparseable record: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorruptRecordError("record is not an object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatchError(f"schema_version {version!r}, expected {SCHEMA_VERSION}")
    try:
        cfg = raw["config"]
        config = GenConfig(
            picture_width=int(cfg["picture_width"]),
            picture_height=int(cfg["picture_height"]),
            inset_ratio=float(cfg["inset_ratio"]),
            generative_ratio=float(cfg["generative_ratio"]),
            min_site_offset=float(cfg["min_site_offset"]),
            f_min=int(cfg["f_min"]),
            f_max=int(cfg["f_max"]),
            background_luminance=int(cfg["background_luminance"]),
            eye_distance=float(cfg["eye_distance"]),
        )
        outer = tuple(_parse_point(p) for p in raw["outer_sites"])
        interior = tuple(_parse_point(p) for p in raw["interior_sites"])
        segments = tuple(
            TextureSegment(
                id=int(s["id"]),
                created_at=int(s["created_at"]),
                creation_polygon=_parse_polygon(s["creation_polygon"]),
                roles=_parse_roles(s["roles"]),
                frequency=int(s["frequency"]),
                order=int(s["order"]),
                band_lines=tuple(_parse_line(l) for l in s["band_lines"]),
                clip_polygon=_parse_polygon(s["clip_polygon"]),
            )
            for s in raw["segments"]
        )
        diagram = VoronoiDiagram(
            interior + outer, tuple(s.clip_polygon for s in segments)
        )
        return SequenceState(
            config=config,
            token=SeedToken(int(raw["seed"]), int(raw["iteration"])),
            outer_sites=outer,
            interior_sites=interior,
            diagram=diagram,
            segments=segments,
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise CorruptRecordError(f"malformed record: {exc}") from exc


def write_dataset(path, states: Iterable[SequenceState]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for state in states:
            fh.write(save_record(state) + "\n")


def read_dataset(path) -> list[SequenceState]:
    states = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                states.append(load_record(line))
    if not states:
        raise CorruptRecordError("empty dataset")
    return states
